#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "json.hpp"

#include "hef/cache.hpp"
#include "hef/common.hpp"
#include "hef/embedder.hpp"
#include "hef/hnsw.hpp"
#include "hef/projector.hpp"

namespace hef {

/// Embeds the last 512 tokens of the prefix: the kept tokens' reconstructed
/// text is the prefix suffix starting at the first kept token's byte offset.
inline Vec form_query(std::string_view prefix, const EmbedderConfig& cfg) {
    Embedder embedder(cfg);
    std::vector<Token> tokens = tokenize(prefix);
    if (tokens.empty())
        return embedder.embed("");
    size_t first = tokens.size() > 512 ? tokens.size() - 512 : 0;
    return embedder.embed(prefix.substr(tokens[first].byte_offset));
}

struct StageLatency {
    double embed_ms = 0.0;
    double search_ms = 0.0;
    double project_ms = 0.0;
    double total_ms = 0.0;
};

struct QueryOptions {
    uint32_t K = 32;
    uint32_t ef_search = 0; // 0: use the index config
    bool with_entities = false;
    bool dedup = false; // drop hits whose region is covered by a better-ranked hit
};

using SourceLookup = std::function<std::optional<std::string>(const std::string& path)>;

namespace detail {

/// Ancestor chain of a node, root included, as a set of ids.
inline std::unordered_set<uint64_t> ancestor_set(const RepoCache& cache,
                                                 const std::unordered_map<uint64_t, size_t>& by_id,
                                                 uint64_t id) {
    std::unordered_set<uint64_t> out;
    const HierarchyNode* n = &cache.nodes[by_id.at(id)];
    while (n->parent) {
        out.insert(*n->parent);
        n = &cache.nodes[by_id.at(*n->parent)];
    }
    return out;
}

inline std::vector<RetrievalHit> dedup_hits(const std::vector<RetrievalHit>& hits,
                                            const RepoCache& cache,
                                            const std::unordered_map<uint64_t, size_t>& by_id) {
    std::vector<RetrievalHit> kept;
    std::vector<std::unordered_set<uint64_t>> kept_anc;
    for (const RetrievalHit& h : hits) {
        auto anc = ancestor_set(cache, by_id, h.node_id);
        bool clash = false;
        for (size_t i = 0; i < kept.size() && !clash; ++i)
            clash = anc.count(kept[i].node_id) > 0 || kept_anc[i].count(h.node_id) > 0;
        if (!clash) {
            kept.push_back(h);
            kept_anc.push_back(std::move(anc));
        }
    }
    return kept;
}

} // namespace detail

/// Online completion path: form the query, retrieve top-K nodes from any
/// hierarchy level, project each hit independently into a pseudo-token row.
/// Row count is min(K, node_count) regardless of repository size (dedup, when
/// enabled, may drop covered rows below that).
inline PseudoTokenBlock complete_context(std::string_view prefix, const RepoCache& cache,
                                         const HnswIndex& index, const ProjectorParams& projector,
                                         const QueryOptions& opts = {},
                                         StageLatency* latency = nullptr,
                                         const SourceLookup& sources = nullptr) {
    require(opts.K >= 1, ErrorKind::contract, "complete_context: K must be >= 1");
    require(projector.d == cache.build_meta.dim, ErrorKind::contract,
            "complete_context: projector input dim != cache dim");
    projector.validate();
    Stopwatch total;

    Stopwatch stage;
    Vec q = form_query(prefix, cache.embedder_cfg);
    double embed_ms = stage.ms();

    stage = Stopwatch();
    uint32_t ef = opts.ef_search ? opts.ef_search : index.config().ef_search;
    std::vector<RetrievalHit> hits = index.search_ef(q, opts.K, ef);
    auto by_id = cache.index_by_id();
    if (opts.dedup)
        hits = detail::dedup_hits(hits, cache, by_id);
    double search_ms = stage.ms();

    stage = Stopwatch();
    PseudoTokenBlock block;
    block.m = static_cast<uint32_t>(hits.size());
    block.d_g = projector.d_g;
    block.tokens.reserve(size_t(block.m) * projector.d_g);
    for (const RetrievalHit& h : hits) {
        const HierarchyNode& node = cache.nodes[by_id.at(h.node_id)];
        DVec p = project_forward(to_dvec(node.vector), projector);
        for (double x : p)
            block.tokens.push_back(static_cast<float>(x));
        block.provenance.push_back({h.node_id, h.level, h.score, node.span_refs});
    }
    if (opts.with_entities && !hits.empty()) {
        EntityList combined;
        std::unordered_set<std::string> files_seen, names_seen;
        const HierarchyNode& top = cache.nodes[by_id.at(hits.front().node_id)];
        for (const SpanRef& ref : top.span_refs) {
            if (!files_seen.insert(ref.file_path).second)
                continue;
            if (!sources)
                continue;
            std::optional<std::string> src = sources(ref.file_path);
            if (!src)
                continue;
            uint32_t remaining = 64 - combined.token_budget_used;
            if (remaining == 0)
                break;
            EntityList part = extract_entities(*src, remaining);
            for (size_t i = 0; i < part.names.size(); ++i) {
                if (!names_seen.insert(part.names[i]).second)
                    continue;
                combined.names.push_back(part.names[i]);
            }
            combined.token_budget_used += part.token_budget_used;
        }
        block.entity_suffix = std::move(combined);
    }
    double project_ms = stage.ms();

    if (latency) {
        latency->embed_ms = embed_ms;
        latency->search_ms = search_ms;
        latency->project_ms = project_ms;
        latency->total_ms = total.ms();
    }
    return block;
}

// --- block export: the integration boundary for a downstream generator ------

/// Binary layout: m (u32 LE), d_g (u32 LE), then m*d_g row-major 32-bit floats.
inline std::string block_to_bytes(const PseudoTokenBlock& block) {
    ByteWriter w;
    w.u32(block.m).u32(block.d_g);
    for (float x : block.tokens)
        w.f32(x);
    return w.take();
}

inline nlohmann::json span_refs_json(const std::vector<SpanRef>& refs) {
    nlohmann::json arr = nlohmann::json::array();
    for (const SpanRef& r : refs)
        arr.push_back({{"file", r.file_path}, {"start", r.span.start}, {"end", r.span.end}});
    return arr;
}

inline nlohmann::json block_sidecar_json(const PseudoTokenBlock& block,
                                         const StageLatency* latency = nullptr) {
    nlohmann::json j;
    j["m"] = block.m;
    j["d_g"] = block.d_g;
    nlohmann::json prov = nlohmann::json::array();
    for (const auto& p : block.provenance) {
        prov.push_back({{"node_id", p.node_id},
                        {"level", p.level},
                        {"score", p.score},
                        {"spans", span_refs_json(p.span_refs)}});
    }
    j["provenance"] = std::move(prov);
    if (block.entity_suffix) {
        j["entities"] = block.entity_suffix->names;
        j["entity_tokens"] = block.entity_suffix->token_budget_used;
    }
    if (latency) {
        j["latency_ms"] = {{"embed", latency->embed_ms},
                           {"search", latency->search_ms},
                           {"project", latency->project_ms},
                           {"total", latency->total_ms}};
    }
    return j;
}

inline void write_block_files(const PseudoTokenBlock& block, const std::string& bin_path,
                              const std::string& json_path,
                              const StageLatency* latency = nullptr) {
    {
        std::ofstream out(bin_path, std::ios::binary);
        require(out.good(), ErrorKind::io, "cannot open block output: " + bin_path);
        std::string bytes = block_to_bytes(block);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        require(out.good(), ErrorKind::io, "failed writing block output: " + bin_path);
    }
    std::ofstream js(json_path);
    require(js.good(), ErrorKind::io, "cannot open block sidecar: " + json_path);
    js << block_sidecar_json(block, latency).dump(2) << '\n';
    require(js.good(), ErrorKind::io, "failed writing block sidecar: " + json_path);
}

} // namespace hef
