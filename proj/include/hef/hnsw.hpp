#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <queue>
#include <span>
#include <vector>

#include "hef/cache.hpp"
#include "hef/common.hpp"

namespace hef {

struct HnswConfig {
    uint32_t M = 16;
    uint32_t ef_construction = 200;
    uint32_t ef_search = 128;
    uint64_t seed = 1;

    void validate() const {
        require(M >= 2, ErrorKind::config, "hnsw: M must be >= 2");
        require(ef_construction >= 1 && ef_search >= 1, ErrorKind::config,
                "hnsw: ef parameters must be >= 1");
    }
};

struct RetrievalHit {
    uint64_t node_id = 0;
    double score = 0.0; // cosine similarity of unit vectors
    uint32_t level = 0;
};

struct IndexItem {
    uint64_t node_id = 0;
    uint32_t level = 0;
    Vec vector;
};

namespace detail {

/// Result ordering: score descending, node_id ascending on ties.
inline bool hit_before(const RetrievalHit& a, const RetrievalHit& b) {
    if (a.score != b.score)
        return a.score > b.score;
    return a.node_id < b.node_id;
}

} // namespace detail

/// HNSW over unit vectors under cosine similarity (dot product). Level draws,
/// insertion order, and every tie-break are deterministic, so a seeded build is
/// reproducible bit for bit.
class HnswIndex {
  public:
    HnswIndex() = default;

    static HnswIndex build(std::vector<IndexItem> items, uint32_t dim, HnswConfig cfg) {
        cfg.validate();
        require(!items.empty(), ErrorKind::contract, "hnsw: empty item set");
        HnswIndex ix;
        ix.cfg_ = cfg;
        ix.dim_ = dim;
        ix.ids_.reserve(items.size());
        ix.levels_.reserve(items.size());
        ix.flat_.reserve(items.size() * size_t(dim));
        for (IndexItem& it : items) {
            require(it.vector.size() == dim, ErrorKind::contract, "hnsw: vector dim mismatch");
            require(is_unit(it.vector, 1e-5f), ErrorKind::contract, "hnsw: non-unit vector");
            ix.ids_.push_back(it.node_id);
            ix.levels_.push_back(it.level);
            ix.flat_.insert(ix.flat_.end(), it.vector.begin(), it.vector.end());
        }
        Rng rng(mix64(cfg.seed ^ 0x686e7377u));
        const double mult = 1.0 / std::log(static_cast<double>(cfg.M));
        ix.node_level_.resize(ix.size());
        ix.links_.resize(ix.size());
        for (size_t i = 0; i < ix.size(); ++i) {
            double u = 1.0 - rng.real01(); // (0, 1], keeps log finite
            ix.node_level_[i] = static_cast<uint32_t>(-std::log(u) * mult);
            ix.links_[i].resize(ix.node_level_[i] + 1);
        }
        for (size_t i = 0; i < ix.size(); ++i)
            ix.insert(static_cast<uint32_t>(i));
        return ix;
    }

    size_t size() const { return ids_.size(); }
    uint32_t dim() const { return dim_; }
    const HnswConfig& config() const { return cfg_; }
    uint64_t id_at(size_t i) const { return ids_[i]; }
    uint32_t level_at(size_t i) const { return levels_[i]; }
    std::span<const float> vector_at(size_t i) const {
        return {flat_.data() + i * size_t(dim_), size_t(dim_)};
    }

    /// Top-K by cosine, ties by ascending node_id. May come from any hierarchy
    /// level. When ef covers the whole set the walk degenerates to the exact
    /// scan shared with brute_force, so the outputs match bitwise.
    std::vector<RetrievalHit> search(const Vec& q, uint32_t K) const {
        return search_ef(q, K, cfg_.ef_search);
    }

    std::vector<RetrievalHit> search_ef(const Vec& q, uint32_t K, uint32_t ef) const {
        require(K >= 1, ErrorKind::contract, "hnsw: K must be >= 1");
        require(q.size() == dim_, ErrorKind::contract, "hnsw: query dim mismatch");
        require(is_unit(q, 1e-4f), ErrorKind::contract, "hnsw: query must be unit length");
        ef = std::max(ef, K);
        if (ef >= size())
            return exact_topk(q, K);

        uint32_t ep = entry_point_;
        for (uint32_t l = max_level_; l > 0; --l)
            ep = greedy_step(q, ep, l);
        std::vector<Cand> w = search_layer(q, ep, ef, 0);
        std::vector<RetrievalHit> hits;
        hits.reserve(w.size());
        for (const Cand& c : w)
            hits.push_back({ids_[c.idx], c.sim, levels_[c.idx]});
        std::sort(hits.begin(), hits.end(), detail::hit_before);
        if (hits.size() > K)
            hits.resize(K);
        return hits;
    }

    /// Exact top-K oracle over the index contents; identical scoring kernel and
    /// tie rule as search.
    std::vector<RetrievalHit> exact_topk(const Vec& q, uint32_t K) const {
        require(q.size() == dim_, ErrorKind::contract, "hnsw: query dim mismatch");
        std::vector<RetrievalHit> hits;
        hits.reserve(size());
        for (size_t i = 0; i < size(); ++i)
            hits.push_back({ids_[i], dot(vector_at(i), q), levels_[i]});
        std::sort(hits.begin(), hits.end(), detail::hit_before);
        if (hits.size() > K)
            hits.resize(K);
        return hits;
    }

    // --- topology serialization (vectors live in the cache node table) ------
    void write_topology(ByteWriter& w) const {
        w.u32(cfg_.M).u32(cfg_.ef_construction).u32(cfg_.ef_search).u64(cfg_.seed);
        w.u32(dim_).u64(size()).u32(entry_point_).u32(max_level_);
        for (size_t i = 0; i < size(); ++i) {
            w.u32(node_level_[i]);
            for (uint32_t l = 0; l <= node_level_[i]; ++l) {
                w.u32(static_cast<uint32_t>(links_[i][l].size()));
                for (uint32_t n : links_[i][l])
                    w.u32(n);
            }
        }
    }

    static HnswIndex read_topology(ByteReader& r, const std::vector<IndexItem>& items) {
        HnswIndex ix;
        ix.cfg_.M = r.u32();
        ix.cfg_.ef_construction = r.u32();
        ix.cfg_.ef_search = r.u32();
        ix.cfg_.seed = r.u64();
        ix.dim_ = r.u32();
        uint64_t count = r.u64();
        require(count == items.size(), ErrorKind::corruption,
                "hnsw: topology count does not match node table");
        ix.entry_point_ = r.u32();
        ix.max_level_ = r.u32();
        ix.ids_.reserve(count);
        ix.levels_.reserve(count);
        ix.flat_.reserve(count * size_t(ix.dim_));
        for (const IndexItem& it : items) {
            require(it.vector.size() == ix.dim_, ErrorKind::corruption,
                    "hnsw: topology dim mismatch");
            ix.ids_.push_back(it.node_id);
            ix.levels_.push_back(it.level);
            ix.flat_.insert(ix.flat_.end(), it.vector.begin(), it.vector.end());
        }
        ix.node_level_.resize(count);
        ix.links_.resize(count);
        for (size_t i = 0; i < count; ++i) {
            ix.node_level_[i] = r.u32();
            ix.links_[i].resize(ix.node_level_[i] + 1);
            for (uint32_t l = 0; l <= ix.node_level_[i]; ++l) {
                uint32_t deg = r.u32();
                ix.links_[i][l].resize(deg);
                for (uint32_t& n : ix.links_[i][l]) {
                    n = r.u32();
                    require(n < count, ErrorKind::corruption, "hnsw: neighbor out of range");
                }
            }
        }
        require(ix.entry_point_ < count, ErrorKind::corruption, "hnsw: entry point out of range");
        return ix;
    }

    bool topology_equal(const HnswIndex& other) const {
        return cfg_.M == other.cfg_.M && cfg_.seed == other.cfg_.seed &&
               entry_point_ == other.entry_point_ && max_level_ == other.max_level_ &&
               node_level_ == other.node_level_ && links_ == other.links_;
    }

  private:
    struct Cand {
        double sim;
        uint32_t idx;
    };

    // total orders; node_id breaks similarity ties
    bool closer(const Cand& a, const Cand& b) const {
        if (a.sim != b.sim)
            return a.sim > b.sim;
        return ids_[a.idx] < ids_[b.idx];
    }

    double sim_to(const Vec& q, uint32_t idx) const { return dot(vector_at(idx), q); }

    uint32_t greedy_step(const Vec& q, uint32_t ep, uint32_t layer) const {
        Cand best{sim_to(q, ep), ep};
        bool improved = true;
        while (improved) {
            improved = false;
            for (uint32_t n : links_[best.idx][layer]) {
                Cand c{sim_to(q, n), n};
                if (closer(c, best)) {
                    best = c;
                    improved = true;
                }
            }
        }
        return best.idx;
    }

    std::vector<Cand> search_layer(const Vec& q, uint32_t ep, uint32_t ef, uint32_t layer) const {
        auto worse = [this](const Cand& a, const Cand& b) { return closer(a, b); };
        auto better = [this](const Cand& a, const Cand& b) { return closer(b, a); };
        // candidates: best first; result: worst first (bounded to ef)
        std::priority_queue<Cand, std::vector<Cand>, decltype(better)> cand(better);
        std::priority_queue<Cand, std::vector<Cand>, decltype(worse)> result(worse);
        std::vector<uint8_t> visited(size(), 0);
        Cand first{sim_to(q, ep), ep};
        cand.push(first);
        result.push(first);
        visited[ep] = 1;
        while (!cand.empty()) {
            Cand c = cand.top();
            if (result.size() >= ef && closer(result.top(), c))
                break;
            cand.pop();
            for (uint32_t n : links_[c.idx][layer]) {
                if (visited[n])
                    continue;
                visited[n] = 1;
                Cand nc{sim_to(q, n), n};
                if (result.size() < ef || closer(nc, result.top())) {
                    cand.push(nc);
                    result.push(nc);
                    if (result.size() > ef)
                        result.pop();
                }
            }
        }
        std::vector<Cand> out;
        out.reserve(result.size());
        while (!result.empty()) {
            out.push_back(result.top());
            result.pop();
        }
        std::reverse(out.begin(), out.end());
        return out;
    }

    void insert(uint32_t idx) {
        if (idx == 0) {
            entry_point_ = 0;
            max_level_ = node_level_[0];
            return;
        }
        const Vec q(vector_at(idx).begin(), vector_at(idx).end());
        uint32_t lvl = node_level_[idx];
        uint32_t ep = entry_point_;
        for (uint32_t l = max_level_; l > lvl; --l)
            ep = greedy_step(q, ep, l);
        for (uint32_t l = std::min(lvl, max_level_);; --l) {
            std::vector<Cand> w = search_layer(q, ep, cfg_.ef_construction, l);
            uint32_t m = std::min<uint32_t>(cfg_.M, static_cast<uint32_t>(w.size()));
            for (uint32_t t = 0; t < m; ++t) {
                uint32_t n = w[t].idx;
                links_[idx][l].push_back(n);
                links_[n][l].push_back(idx);
                shrink(n, l);
            }
            ep = w.front().idx;
            if (l == 0)
                break;
        }
        if (lvl > max_level_) {
            max_level_ = lvl;
            entry_point_ = idx;
        }
    }

    /// Keeps the closest max_degree neighbors when a list overflows.
    void shrink(uint32_t node, uint32_t layer) {
        uint32_t cap = layer == 0 ? 2 * cfg_.M : cfg_.M;
        auto& lst = links_[node][layer];
        if (lst.size() <= cap)
            return;
        const Vec v(vector_at(node).begin(), vector_at(node).end());
        std::vector<Cand> cands;
        cands.reserve(lst.size());
        for (uint32_t n : lst)
            cands.push_back({sim_to(v, n), n});
        std::sort(cands.begin(), cands.end(), [this](const Cand& a, const Cand& b) {
            return closer(a, b);
        });
        lst.clear();
        for (uint32_t t = 0; t < cap; ++t)
            lst.push_back(cands[t].idx);
    }

    HnswConfig cfg_;
    uint32_t dim_ = 0;
    std::vector<uint64_t> ids_;
    std::vector<uint32_t> levels_;
    std::vector<float> flat_;
    std::vector<uint32_t> node_level_;
    std::vector<std::vector<std::vector<uint32_t>>> links_; // [node][layer] -> neighbors
    uint32_t entry_point_ = 0;
    uint32_t max_level_ = 0;
};

inline std::vector<IndexItem> index_items_of(const RepoCache& cache) {
    std::vector<IndexItem> items;
    items.reserve(cache.nodes.size());
    for (const HierarchyNode& n : cache.nodes)
        items.push_back({n.node_id, n.level, n.vector});
    return items;
}

/// Index over every node at every level of the hierarchy.
inline HnswIndex build_index(const RepoCache& cache, const HnswConfig& cfg) {
    return HnswIndex::build(index_items_of(cache), cache.build_meta.dim, cfg);
}

/// Exact top-K oracle over an arbitrary item collection; same scoring kernel
/// and tie rule as HnswIndex::search.
inline std::vector<RetrievalHit> brute_force(const std::vector<IndexItem>& items, const Vec& q,
                                             uint32_t K) {
    std::vector<RetrievalHit> hits;
    hits.reserve(items.size());
    for (const IndexItem& it : items) {
        require(it.vector.size() == q.size(), ErrorKind::contract, "brute_force: dim mismatch");
        hits.push_back({it.node_id, dot(it.vector, q), it.level});
    }
    std::sort(hits.begin(), hits.end(), detail::hit_before);
    if (hits.size() > K)
        hits.resize(K);
    return hits;
}

inline std::vector<RetrievalHit> brute_force(const RepoCache& cache, const Vec& q, uint32_t K) {
    return brute_force(index_items_of(cache), q, K);
}

} // namespace hef
