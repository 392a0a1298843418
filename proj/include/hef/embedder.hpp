#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hef/common.hpp"
#include "hef/tokenizer.hpp"

#include "json.hpp"

namespace hef {

struct EmbedderConfig {
    uint32_t dim = 256;
    std::vector<uint32_t> orders = {1, 2, 3}; // n-gram orders over content tokens
    uint64_t seed = 0x9e3779b97f4a7c15ull;

    void validate() const {
        require(dim >= 16 && dim <= 65536 && (dim & (dim - 1)) == 0, ErrorKind::config,
                "embedder: dim must be a power of two in [16, 65536]");
        require(!orders.empty(), ErrorKind::config, "embedder: at least one n-gram order");
        for (uint32_t n : orders)
            require(n >= 1 && n <= 8, ErrorKind::config, "embedder: orders must be in [1, 8]");
    }
};

/// Deterministic signed feature hashing over token n-grams. The same text
/// embeds to the same unit vector on every platform; text hashing to a zero
/// accumulator falls back to the basis vector e_0.
class Embedder {
  public:
    explicit Embedder(EmbedderConfig cfg = {}) : cfg_(std::move(cfg)) { cfg_.validate(); }

    const EmbedderConfig& config() const { return cfg_; }

    Vec embed_tokens(const std::vector<std::string>& toks) const {
        std::vector<double> acc(cfg_.dim, 0.0);
        for (uint32_t n : cfg_.orders) {
            if (toks.size() < n)
                continue;
            for (size_t i = 0; i + n <= toks.size(); ++i) {
                StableHash h;
                h.add_u64(cfg_.seed).add_u64(n);
                for (size_t j = 0; j < n; ++j)
                    h.add_str(toks[i + j]);
                uint64_t d = h.digest();
                size_t bucket = static_cast<size_t>(d % cfg_.dim);
                double sign = (d >> 63) ? -1.0 : 1.0;
                acc[bucket] += sign;
            }
        }
        double norm_sq = 0.0;
        for (double v : acc)
            norm_sq += v * v;
        Vec out(cfg_.dim, 0.0f);
        if (norm_sq <= 0.0) {
            out[0] = 1.0f;
            return out;
        }
        double inv = 1.0 / std::sqrt(norm_sq);
        for (uint32_t i = 0; i < cfg_.dim; ++i)
            out[i] = static_cast<float>(acc[i] * inv);
        return out;
    }

    Vec embed(std::string_view text) const { return embed_tokens(content_token_texts(text)); }

  private:
    EmbedderConfig cfg_;
};

/// Table of externally computed chunk vectors keyed by chunk id. Lets a
/// pretrained embedder's output replace the hashing embedder at build time.
class VectorImport {
  public:
    VectorImport() = default;

    void add(uint64_t chunk_id, Vec v) { table_[chunk_id] = std::move(v); }

    const Vec* find(uint64_t chunk_id) const {
        auto it = table_.find(chunk_id);
        return it == table_.end() ? nullptr : &it->second;
    }

    size_t size() const { return table_.size(); }

  private:
    std::unordered_map<uint64_t, Vec> table_;
};

/// Reads line-delimited JSON records {chunk_id, values} and re-normalizes
/// every vector to unit length. Malformed lines and dimension mismatches are
/// rejected with the offending line number or chunk id.
inline VectorImport import_vectors(const std::string& path, uint32_t expected_dim) {
    std::ifstream in(path);
    require(in.good(), ErrorKind::io, "cannot open vector file: " + path);
    VectorImport out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty())
            continue;
        nlohmann::json rec = nlohmann::json::parse(line, nullptr, false);
        if (rec.is_discarded() || !rec.is_object() || !rec.contains("chunk_id") ||
            !rec.contains("values") || !rec["values"].is_array())
            fail(ErrorKind::format,
                 "vector import: malformed record at line " + std::to_string(line_no));
        uint64_t chunk_id = 0;
        try {
            chunk_id = rec["chunk_id"].get<uint64_t>();
        } catch (const nlohmann::json::exception&) {
            fail(ErrorKind::format,
                 "vector import: malformed chunk_id at line " + std::to_string(line_no));
        }
        Vec v;
        v.reserve(rec["values"].size());
        for (const auto& x : rec["values"]) {
            if (!x.is_number())
                fail(ErrorKind::format,
                     "vector import: non-numeric value at line " + std::to_string(line_no));
            v.push_back(x.get<float>());
        }
        if (v.size() != expected_dim)
            fail(ErrorKind::format, "vector import: dim mismatch for chunk_id " +
                                        std::to_string(chunk_id) + " (got " +
                                        std::to_string(v.size()) + ", expected " +
                                        std::to_string(expected_dim) + ")");
        out.add(chunk_id, normalized(v));
    }
    return out;
}

} // namespace hef
