#pragma once

#include <algorithm>
#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "hef/common.hpp"
#include "hef/tokenizer.hpp"

namespace hef {

struct ByteSpan {
    uint64_t start = 0;
    uint64_t end = 0; // exclusive
    bool operator==(const ByteSpan&) const = default;
};

struct SpanRef {
    std::string file_path;
    ByteSpan span;
    bool operator==(const SpanRef&) const = default;
};

struct Chunk {
    uint64_t chunk_id = 0;
    std::string file_path;
    ByteSpan span;
    uint32_t token_count = 0;
    std::string text;
};

inline uint64_t chunk_id_of(std::string_view repo_id, std::string_view file_path,
                            uint64_t start, uint64_t end) {
    return StableHash().add_str(repo_id).add_str(file_path).add_u64(start).add_u64(end).digest();
}

namespace detail {

struct LineInfo {
    size_t start = 0;        // byte offset of line start
    size_t indent = 0;       // leading whitespace chars
    bool blank = true;       // no content tokens of its own
    bool after_blank = false;// first content line following >=1 blank line
    size_t first_token = 0;  // index into the token stream (valid if !blank)
    bool def_like = false;   // first content token is def/class (or async def)
    std::string def_name;    // identifier following def/class, if any
};

/// Per-line structure derived from the token stream. Lines swallowed by a
/// multi-line string literal produce no entries.
inline std::vector<LineInfo> scan_lines(std::string_view source, const std::vector<Token>& tokens) {
    std::vector<LineInfo> lines;
    size_t i = 0;
    bool pending_blank = false;
    bool at_start = true;
    size_t line_begin = 0;
    while (i <= tokens.size()) {
        if (i == tokens.size())
            break;
        const Token& t = tokens[i];
        if (at_start) {
            LineInfo info;
            info.start = t.byte_offset;
            line_begin = i;
            // leading indent token, if any
            size_t j = i;
            if (tokens[j].kind == TokenKind::indent)
                ++j;
            if (j < tokens.size() && is_content_token(tokens[j])) {
                info.blank = false;
                info.first_token = line_begin;
                info.after_blank = pending_blank;
                pending_blank = false;
                const Token& first = tokens[j];
                size_t name_at = j + 1;
                if (first.kind == TokenKind::keyword && first.text == "async" &&
                    j + 1 < tokens.size() && tokens[j + 1].text == "def") {
                    info.def_like = true;
                    name_at = j + 2;
                } else if (first.kind == TokenKind::keyword &&
                           (first.text == "def" || first.text == "class")) {
                    info.def_like = true;
                }
                if (info.def_like && name_at < tokens.size() &&
                    tokens[name_at].kind == TokenKind::identifier)
                    info.def_name = std::string(tokens[name_at].text);
                // indent from source (tokens do not retain widths)
                size_t ls = info.start;
                while (ls > 0 && source[ls - 1] != '\n')
                    --ls;
                size_t ind = 0;
                while (ls + ind < source.size() && is_space(source[ls + ind]))
                    ++ind;
                info.start = ls;
                info.indent = ind;
                lines.push_back(info);
            } else {
                pending_blank = true; // blank line: only its newline token
            }
            at_start = false;
        }
        if (t.kind == TokenKind::newline || t.kind == TokenKind::dedent)
            at_start = true;
        ++i;
    }
    return lines;
}

} // namespace detail

/// Split one file into chunks of at most `max_tokens` tokens.
///
/// Every top-level def/class line starts a new chunk; the preamble before the
/// first definition forms its own chunk. A chunk that still exceeds the budget
/// is cut greedily, preferring the farthest nested def/class boundary inside
/// the window, then the farthest post-blank-line boundary, and finally a hard
/// cut at exactly `max_tokens`.
inline std::vector<Chunk> chunk_file(const std::string& file_path, std::string_view source,
                                     uint32_t max_tokens = 512, std::string_view repo_id = "") {
    require(max_tokens >= 1, ErrorKind::contract, "chunk_file: max_tokens must be >= 1");

    std::vector<Token> tokens = tokenize(source);
    std::vector<Chunk> chunks;
    if (tokens.empty())
        return chunks;

    std::vector<detail::LineInfo> lines = detail::scan_lines(source, tokens);

    // Token indices that may start a chunk, by preference tier.
    std::vector<size_t> unit_starts;   // top-level def/class lines
    std::vector<size_t> nested_starts; // def/class at any indent
    std::vector<size_t> blank_starts;  // first content line after a blank run
    for (const auto& line : lines) {
        if (line.def_like) {
            nested_starts.push_back(line.first_token);
            if (line.indent == 0)
                unit_starts.push_back(line.first_token);
        }
        if (line.after_blank)
            blank_starts.push_back(line.first_token);
    }

    auto emit = [&](size_t begin, size_t end) {
        if (begin >= end)
            return;
        uint64_t span_start = tokens[begin].byte_offset;
        const Token& last = tokens[end - 1];
        uint64_t span_end = last.byte_offset + last.text.size();
        Chunk c;
        c.file_path = file_path;
        c.span = {span_start, span_end};
        c.token_count = static_cast<uint32_t>(end - begin);
        c.text = std::string(source.substr(span_start, span_end - span_start));
        c.chunk_id = chunk_id_of(repo_id, file_path, span_start, span_end);
        chunks.push_back(std::move(c));
    };

    // Greatest boundary in (begin, limit], or 0 when none.
    auto best_cut = [](const std::vector<size_t>& points, size_t begin, size_t limit) -> size_t {
        auto it = std::upper_bound(points.begin(), points.end(), limit);
        if (it == points.begin())
            return 0;
        size_t p = *(it - 1);
        return p > begin ? p : 0;
    };

    auto split_oversize = [&](size_t begin, size_t end) {
        size_t cur = begin;
        while (end - cur > max_tokens) {
            size_t limit = cur + max_tokens;
            size_t cut = best_cut(nested_starts, cur, limit);
            if (cut == 0)
                cut = best_cut(blank_starts, cur, limit);
            if (cut == 0)
                cut = limit; // hard cut at exactly max_tokens
            emit(cur, cut);
            cur = cut;
        }
        emit(cur, end);
    };

    std::vector<size_t> cuts = unit_starts;
    cuts.push_back(tokens.size());
    size_t begin = 0;
    for (size_t cut : cuts) {
        if (cut > begin) {
            if (cut - begin <= max_tokens)
                emit(begin, cut);
            else
                split_oversize(begin, cut);
        }
        begin = std::max(begin, cut);
    }
    return chunks;
}

struct EntityList {
    std::vector<std::string> names;
    uint32_t token_budget_used = 0;
};

/// Collect fully qualified names of def/class entities via an indentation
/// scope walk. Collection stops before the name whose token cost would push
/// the total past the budget (hard cap 64).
inline EntityList extract_entities(std::string_view source, uint32_t budget_tokens = 64) {
    constexpr uint32_t kBudgetCap = 64;
    budget_tokens = std::min(budget_tokens, kBudgetCap);

    EntityList out;
    std::vector<Token> tokens = tokenize(source);
    if (tokens.empty())
        return out;
    std::vector<detail::LineInfo> lines = detail::scan_lines(source, tokens);

    std::vector<std::pair<size_t, std::string>> scope; // (indent, name)
    std::unordered_set<std::string> seen;
    for (const auto& line : lines) {
        if (!line.def_like || line.def_name.empty())
            continue;
        while (!scope.empty() && scope.back().first >= line.indent)
            scope.pop_back();
        std::string qualified;
        for (const auto& [ind, name] : scope) {
            (void)ind;
            qualified += name;
            qualified += '.';
        }
        qualified += line.def_name;
        scope.emplace_back(line.indent, line.def_name);

        if (seen.count(qualified))
            continue;
        uint32_t cost = static_cast<uint32_t>(tokenize(qualified).size());
        if (out.token_budget_used + cost > budget_tokens)
            break;
        seen.insert(qualified);
        out.names.push_back(std::move(qualified));
        out.token_budget_used += cost;
    }
    return out;
}

} // namespace hef
