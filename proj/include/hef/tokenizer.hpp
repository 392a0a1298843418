#pragma once

#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "hef/common.hpp"

namespace hef {

enum class TokenKind : uint8_t {
    identifier,
    keyword,
    literal,
    punctuation,
    newline,
    indent,
    dedent,
    comment,
};

struct Token {
    std::string_view text; // view into the tokenized source
    TokenKind kind;
    size_t byte_offset;
};

inline const char* token_kind_name(TokenKind k) {
    switch (k) {
    case TokenKind::identifier: return "identifier";
    case TokenKind::keyword: return "keyword";
    case TokenKind::literal: return "literal";
    case TokenKind::punctuation: return "punctuation";
    case TokenKind::newline: return "newline";
    case TokenKind::indent: return "indent";
    case TokenKind::dedent: return "dedent";
    case TokenKind::comment: return "comment";
    }
    return "?";
}

namespace detail {

inline const std::unordered_set<std::string_view>& keyword_set() {
    static const std::unordered_set<std::string_view> kw = {
        "def",    "class",  "return", "if",     "elif",     "else",   "for",   "while",
        "import", "from",   "as",     "pass",   "break",    "continue", "lambda", "try",
        "except", "finally", "with",  "yield",  "in",       "is",     "not",   "and",
        "or",     "None",   "True",   "False",  "raise",    "global", "nonlocal", "del",
        "assert", "async",  "await",
    };
    return kw;
}

inline bool is_ident_start(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c >= 0x80;
}
inline bool is_ident_char(unsigned char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }
inline bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }
inline bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r'; }

/// Minimal UTF-8 validity scan.
inline bool valid_utf8(std::string_view s) {
    size_t i = 0;
    while (i < s.size()) {
        unsigned char c = static_cast<unsigned char>(s[i]);
        size_t extra;
        if (c < 0x80)
            extra = 0;
        else if ((c >> 5) == 0x6)
            extra = 1;
        else if ((c >> 4) == 0xe)
            extra = 2;
        else if ((c >> 3) == 0x1e)
            extra = 3;
        else
            return false;
        for (size_t k = 1; k <= extra; ++k)
            if (i + k >= s.size() || (static_cast<unsigned char>(s[i + k]) >> 6) != 0x2)
                return false;
        i += extra + 1;
    }
    return true;
}

} // namespace detail

/// Deterministic line-oriented tokenizer.
///
/// Rules:
///  - identifiers  [A-Za-z_][A-Za-z0-9_]*; bytes >= 0x80 count as identifier chars;
///    members of a fixed keyword set become keyword tokens
///  - literals     numbers (digit start, consumes [A-Za-z0-9_.]) and quoted strings
///    ('...', "...", and triple-quoted forms; an unterminated single-line string
///    runs to the end of its line, an unterminated triple quote to end of input)
///  - comments     '#' to end of line
///  - punctuation  any other non-space byte, one token per byte
///  - newline      one token per '\n' outside string literals; when the adjacent
///    next non-blank line reduces the indent level, that '\n' is emitted as a
///    single dedent token instead (text "\n"), keeping byte offsets strictly
///    increasing
///  - indent       emitted at a line whose indent exceeds the enclosing level
///    (offset = start of the leading whitespace, empty text)
///
/// Indentation is the count of leading whitespace characters; blank lines do
/// not affect it. No synthetic tokens are emitted at end of input.
inline std::vector<Token> tokenize(std::string_view source) {
    require(detail::valid_utf8(source), ErrorKind::contract, "tokenize: input is not valid UTF-8");

    std::vector<Token> out;
    const size_t n = source.size();
    std::vector<size_t> indent_stack = {0};
    size_t i = 0;
    bool at_line_start = true;

    while (i < n) {
        if (at_line_start) {
            size_t ls = i;
            size_t ind = 0;
            while (ls + ind < n && detail::is_space(source[ls + ind]))
                ++ind;
            bool has_content = ls + ind < n && source[ls + ind] != '\n';
            if (has_content && ind > indent_stack.back()) {
                out.push_back({source.substr(ls, 0), TokenKind::indent, ls});
                indent_stack.push_back(ind);
            }
            i = ls + ind;
            at_line_start = false;
            continue;
        }

        char c = source[i];
        if (c == '\n') {
            // Dedent when the line that starts right after this '\n' is
            // non-blank and closes one or more indent levels.
            bool dedent = false;
            size_t q = i + 1;
            if (q < n) {
                size_t j = q;
                while (j < n && detail::is_space(source[j]))
                    ++j;
                bool nonblank = j < n && source[j] != '\n';
                size_t next_indent = j - q;
                if (nonblank && next_indent < indent_stack.back()) {
                    dedent = true;
                    while (indent_stack.size() > 1 && indent_stack.back() > next_indent)
                        indent_stack.pop_back();
                }
            }
            out.push_back({source.substr(i, 1), dedent ? TokenKind::dedent : TokenKind::newline, i});
            ++i;
            at_line_start = true;
            continue;
        }
        if (detail::is_space(c)) {
            ++i;
            continue;
        }

        size_t start = i;
        unsigned char uc = static_cast<unsigned char>(c);
        if (c == '#') {
            while (i < n && source[i] != '\n')
                ++i;
            out.push_back({source.substr(start, i - start), TokenKind::comment, start});
        } else if (detail::is_ident_start(uc)) {
            while (i < n && detail::is_ident_char(static_cast<unsigned char>(source[i])))
                ++i;
            std::string_view text = source.substr(start, i - start);
            TokenKind kind =
                detail::keyword_set().count(text) ? TokenKind::keyword : TokenKind::identifier;
            out.push_back({text, kind, start});
        } else if (detail::is_digit(uc)) {
            while (i < n) {
                unsigned char d = static_cast<unsigned char>(source[i]);
                if (detail::is_ident_char(d) || d == '.')
                    ++i;
                else
                    break;
            }
            out.push_back({source.substr(start, i - start), TokenKind::literal, start});
        } else if (c == '\'' || c == '"') {
            char q = c;
            if (i + 2 < n && source[i + 1] == q && source[i + 2] == q) {
                size_t close = source.find(std::string(3, q), i + 3);
                i = (close == std::string_view::npos) ? n : close + 3;
            } else {
                ++i;
                while (i < n && source[i] != q && source[i] != '\n') {
                    if (source[i] == '\\' && i + 1 < n && source[i + 1] != '\n')
                        ++i;
                    ++i;
                }
                if (i < n && source[i] == q)
                    ++i;
            }
            out.push_back({source.substr(start, i - start), TokenKind::literal, start});
        } else {
            ++i;
            out.push_back({source.substr(start, 1), TokenKind::punctuation, start});
        }
    }

    return out;
}

/// True for tokens that carry source text (used for n-gram features and
/// language-model streams).
inline bool is_content_token(const Token& t) {
    switch (t.kind) {
    case TokenKind::identifier:
    case TokenKind::keyword:
    case TokenKind::literal:
    case TokenKind::punctuation:
    case TokenKind::comment:
        return true;
    default:
        return false;
    }
}

/// Content-token texts of a source string, in order.
inline std::vector<std::string> content_token_texts(std::string_view source) {
    std::vector<std::string> out;
    for (const Token& t : tokenize(source))
        if (is_content_token(t))
            out.emplace_back(t.text);
    return out;
}

} // namespace hef
