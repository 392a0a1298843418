#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "hef/chunker.hpp"
#include "hef/common.hpp"
#include "hef/embedder.hpp"
#include "hef/fuser.hpp"

namespace hef {

/// One dense vector in the fused tree. Level 0 nodes are chunk leaves; levels
/// above summarize file runs, files, and directories.
struct HierarchyNode {
    uint64_t node_id = 0;
    uint32_t level = 0;
    Vec vector;
    std::optional<uint64_t> parent;
    std::vector<uint64_t> children;   // ordered, <= b
    std::vector<SpanRef> span_refs;   // union of descendant leaf spans, in sibling order
    std::string group_key;            // file path in the file phase, directory path above
};

struct BuildMeta {
    uint32_t branching = 8;
    uint32_t dim = 0;
    double build_seconds = 0.0; // in-memory only, never serialized
    uint32_t node_count = 0;
    uint32_t level_count = 0;
};

struct RepoCache {
    std::string repo_id;
    std::vector<HierarchyNode> nodes; // deterministic construction order, root last
    uint64_t root_id = 0;
    EmbedderConfig embedder_cfg;
    FuserKind fuser_kind = FuserKind::mean;
    FuserParams fuser_params; // empty unless fuser_kind == attn
    uint64_t fuser_params_hash = 0;
    BuildMeta build_meta;
    std::map<std::string, uint64_t> file_hashes; // path -> content hash

    std::unordered_map<uint64_t, size_t> index_by_id() const {
        std::unordered_map<uint64_t, size_t> m;
        m.reserve(nodes.size());
        for (size_t i = 0; i < nodes.size(); ++i)
            m.emplace(nodes[i].node_id, i);
        return m;
    }

    const HierarchyNode* find(uint64_t id) const {
        for (const HierarchyNode& n : nodes)
            if (n.node_id == id)
                return &n;
        return nullptr;
    }
};

// --- grouping plan -----------------------------------------------------------
//
// The plan captures the pure tree structure (Algorithm: group chunks by file
// into byte-ordered runs of <= b, reduce until one file vector; then group by
// directory in path-lexicographic order, reducing runs per populated level).
// Build, incremental update, and contrastive training all evaluate the same
// plan, which is what makes incremental results bit-identical to rebuilds.

struct ChunkMeta {
    uint64_t chunk_id = 0;
    ByteSpan span;
};

struct PlanFile {
    std::string path;
    uint64_t content_hash = 0;
    std::vector<ChunkMeta> chunks; // byte order
};

struct PlanNode {
    uint32_t level = 0;
    int64_t chunk_index = -1; // leaves: index into the flat chunk array
    std::vector<size_t> children; // plan indices, all < own index
    std::vector<SpanRef> span_refs;
    std::string group_key;
};

struct TreePlan {
    std::vector<PlanNode> nodes; // topological order, root last
    size_t root = 0;
};

namespace detail {

inline size_t plan_fuse(TreePlan& plan, const std::vector<size_t>& children, uint32_t /*b*/,
                        const std::string& group_key) {
    PlanNode node;
    node.children = children;
    uint32_t max_level = 0;
    for (size_t c : children) {
        max_level = std::max(max_level, plan.nodes[c].level);
        for (const SpanRef& s : plan.nodes[c].span_refs)
            node.span_refs.push_back(s);
    }
    node.level = max_level + 1;
    node.group_key = group_key;
    plan.nodes.push_back(std::move(node));
    return plan.nodes.size() - 1;
}

/// Reduces a sibling list by fusing consecutive runs of <= b until one node
/// remains. With force_fuse, a singleton list is still fused once (files always
/// get a node above their leaves; directories pass a lone entry through).
inline size_t plan_reduce(TreePlan& plan, std::vector<size_t> current, uint32_t b,
                          const std::string& group_key, bool force_fuse) {
    if (force_fuse && current.size() == 1)
        return plan_fuse(plan, current, b, group_key);
    while (current.size() > 1) {
        std::vector<size_t> next;
        for (size_t i = 0; i < current.size(); i += b) {
            size_t end = std::min(current.size(), i + b);
            next.push_back(plan_fuse(plan, {current.begin() + i, current.begin() + end}, b,
                                     group_key));
        }
        current = std::move(next);
    }
    return current[0];
}

struct DirEntry {
    std::string path; // full path of the subdir or file, for ordering
    size_t rep;
};

struct DirTree {
    // dir path -> sorted child components; "" is the virtual root
    std::map<std::string, std::vector<std::string>> subdirs;
    std::map<std::string, std::vector<std::string>> files;
};

inline std::string dirname_of(std::string_view path) {
    size_t slash = path.rfind('/');
    return slash == std::string_view::npos ? std::string() : std::string(path.substr(0, slash));
}

} // namespace detail

/// Builds the grouping plan for a repository. Files must be sorted by path and
/// hold their chunks in byte order; the flat chunk index of leaf i follows that
/// same ordering.
inline TreePlan build_plan(const std::vector<PlanFile>& files, uint32_t b) {
    require(b >= 2, ErrorKind::contract, "build_plan: b must be >= 2");
    require(!files.empty(), ErrorKind::contract, "build_plan: empty repository");

    TreePlan plan;
    std::map<std::string, size_t> file_rep;
    int64_t flat_index = 0;
    for (size_t f = 0; f < files.size(); ++f) {
        const PlanFile& file = files[f];
        require(!file.path.empty() && file.path.front() != '/', ErrorKind::contract,
                "build_plan: paths must be relative");
        require(f == 0 || files[f - 1].path < file.path, ErrorKind::contract,
                "build_plan: files must be sorted by path, without duplicates");
        require(!file.chunks.empty(), ErrorKind::contract, "build_plan: file without chunks");
        std::vector<size_t> leaves;
        for (const ChunkMeta& cm : file.chunks) {
            PlanNode leaf;
            leaf.level = 0;
            leaf.chunk_index = flat_index++;
            leaf.span_refs = {{file.path, cm.span}};
            leaf.group_key = file.path;
            plan.nodes.push_back(std::move(leaf));
            leaves.push_back(plan.nodes.size() - 1);
        }
        file_rep[file.path] = detail::plan_reduce(plan, std::move(leaves), b, file.path, true);
    }

    // directory structure over the file set
    detail::DirTree tree;
    std::unordered_set<std::string> seen_dir;
    for (const auto& [path, rep] : file_rep) {
        (void)rep;
        tree.files[detail::dirname_of(path)].push_back(path);
        std::string cur = detail::dirname_of(path);
        while (!cur.empty() && seen_dir.insert(cur).second) {
            tree.subdirs[detail::dirname_of(cur)].push_back(cur);
            cur = detail::dirname_of(cur);
        }
    }
    for (auto& [dir, subs] : tree.subdirs) {
        (void)dir;
        std::sort(subs.begin(), subs.end());
    }

    // post-order reduction per directory; a lone entry passes through untouched
    auto reduce_dir = [&](auto&& self, const std::string& dir) -> size_t {
        std::vector<detail::DirEntry> entries;
        auto sub_it = tree.subdirs.find(dir);
        if (sub_it != tree.subdirs.end())
            for (const std::string& sub : sub_it->second)
                entries.push_back({sub, self(self, sub)});
        auto file_it = tree.files.find(dir);
        if (file_it != tree.files.end())
            for (const std::string& fp : file_it->second)
                entries.push_back({fp, file_rep.at(fp)});
        std::sort(entries.begin(), entries.end(),
                  [](const detail::DirEntry& a, const detail::DirEntry& b) { return a.path < b.path; });
        require(!entries.empty(), ErrorKind::internal, "build_plan: empty directory entry list");
        std::vector<size_t> reps;
        reps.reserve(entries.size());
        for (const detail::DirEntry& e : entries)
            reps.push_back(e.rep);
        return detail::plan_reduce(plan, std::move(reps), b, dir, false);
    };
    plan.root = reduce_dir(reduce_dir, "");
    return plan;
}

/// Content-derived node identities (Merkle style): a leaf hashes its chunk id
/// and the owning file's content hash; an internal node hashes child ids. Ids
/// of untouched subtrees survive incremental updates unchanged.
inline std::vector<uint64_t> plan_identities(const TreePlan& plan,
                                             const std::vector<ChunkMeta>& flat_chunks,
                                             const std::map<std::string, uint64_t>& file_hashes) {
    std::vector<uint64_t> ids(plan.nodes.size(), 0);
    for (size_t i = 0; i < plan.nodes.size(); ++i) {
        const PlanNode& n = plan.nodes[i];
        StableHash h;
        if (n.chunk_index >= 0) {
            h.add_str("L");
            h.add_u64(flat_chunks[static_cast<size_t>(n.chunk_index)].chunk_id);
            h.add_u64(file_hashes.at(n.span_refs.front().file_path));
        } else {
            h.add_str("I");
            for (size_t c : n.children)
                h.add_u64(ids[c]);
        }
        ids[i] = h.digest();
    }
    return ids;
}

struct UpdateStats {
    size_t nodes_recomputed = 0;
    size_t nodes_reused = 0;
};

namespace detail {

struct RepoSnapshot {
    std::vector<PlanFile> files;                 // sorted by path
    std::vector<ChunkMeta> flat_chunks;          // plan leaf order
    std::vector<std::string> flat_texts;         // only when sources are known
    std::map<std::string, uint64_t> file_hashes;
};

inline RepoSnapshot snapshot_from_sources(const std::vector<std::pair<std::string, std::string>>& repo,
                                          std::string_view repo_id) {
    RepoSnapshot snap;
    std::vector<std::pair<std::string, const std::string*>> sorted;
    for (const auto& [path, source] : repo)
        sorted.emplace_back(path, &source);
    std::sort(sorted.begin(), sorted.end());
    for (size_t i = 1; i < sorted.size(); ++i)
        require(sorted[i - 1].first != sorted[i].first, ErrorKind::contract,
                "build_cache: duplicate file path");
    for (const auto& [path, source] : sorted) {
        std::vector<Chunk> chunks = chunk_file(path, *source, 512, repo_id);
        if (chunks.empty())
            continue; // a file that chunks to nothing is skipped
        PlanFile pf;
        pf.path = path;
        pf.content_hash = stable_hash(*source);
        for (Chunk& c : chunks) {
            pf.chunks.push_back({c.chunk_id, c.span});
            snap.flat_texts.push_back(std::move(c.text));
        }
        snap.file_hashes[path] = pf.content_hash;
        snap.files.push_back(std::move(pf));
    }
    for (const PlanFile& f : snap.files)
        for (const ChunkMeta& cm : f.chunks)
            snap.flat_chunks.push_back(cm);
    return snap;
}

/// Materializes a RepoCache from a plan plus per-node vectors and identities.
inline RepoCache assemble_cache(std::string repo_id, const TreePlan& plan,
                                std::vector<Vec> vectors, const std::vector<uint64_t>& ids,
                                const RepoSnapshot& snap, const EmbedderConfig& ecfg,
                                const Fuser& fuser, uint32_t b, double build_seconds) {
    RepoCache cache;
    cache.repo_id = std::move(repo_id);
    cache.embedder_cfg = ecfg;
    cache.fuser_kind = fuser.kind;
    cache.fuser_params = fuser.params;
    cache.fuser_params_hash = fuser.digest();
    cache.file_hashes = snap.file_hashes;

    cache.nodes.resize(plan.nodes.size());
    uint32_t max_level = 0;
    for (size_t i = 0; i < plan.nodes.size(); ++i) {
        HierarchyNode& n = cache.nodes[i];
        const PlanNode& pn = plan.nodes[i];
        n.node_id = ids[i];
        n.level = pn.level;
        n.vector = std::move(vectors[i]);
        n.span_refs = pn.span_refs;
        n.group_key = pn.group_key;
        for (size_t c : pn.children)
            n.children.push_back(ids[c]);
        max_level = std::max(max_level, pn.level);
    }
    for (size_t i = 0; i < plan.nodes.size(); ++i)
        for (size_t c : plan.nodes[i].children)
            cache.nodes[c].parent = ids[i];
    cache.root_id = ids[plan.root];

    cache.build_meta.branching = b;
    cache.build_meta.dim = ecfg.dim;
    cache.build_meta.build_seconds = build_seconds;
    cache.build_meta.node_count = static_cast<uint32_t>(cache.nodes.size());
    cache.build_meta.level_count = max_level + 1;
    return cache;
}

} // namespace detail

/// Offline hierarchy construction: chunk, embed at level 0, fuse file runs and
/// directory groups until a single root remains.
inline RepoCache build_cache(const std::vector<std::pair<std::string, std::string>>& repo,
                             const EmbedderConfig& embedder_cfg, const Fuser& fuser,
                             uint32_t b = 8, std::string repo_id = "repo") {
    Stopwatch timer;
    require(b >= 2, ErrorKind::contract, "build_cache: b must be >= 2");
    require(!repo.empty(), ErrorKind::contract, "build_cache: empty repository");
    embedder_cfg.validate();

    detail::RepoSnapshot snap = detail::snapshot_from_sources(repo, repo_id);
    require(!snap.files.empty(), ErrorKind::contract, "build_cache: no file produced any chunk");

    TreePlan plan = build_plan(snap.files, b);
    std::vector<uint64_t> ids = plan_identities(plan, snap.flat_chunks, snap.file_hashes);

    Embedder embedder(embedder_cfg);
    std::vector<Vec> vectors(plan.nodes.size());
    for (size_t i = 0; i < plan.nodes.size(); ++i) {
        const PlanNode& pn = plan.nodes[i];
        if (pn.chunk_index >= 0) {
            vectors[i] = embedder.embed(snap.flat_texts[static_cast<size_t>(pn.chunk_index)]);
        } else {
            std::vector<Vec> kids;
            kids.reserve(pn.children.size());
            for (size_t c : pn.children)
                kids.push_back(vectors[c]);
            vectors[i] = fuser.fuse(kids);
        }
    }
    return detail::assemble_cache(std::move(repo_id), plan, std::move(vectors), ids, snap,
                                  embedder_cfg, fuser, b, timer.seconds());
}

/// One file change handed to update_cache; an empty new_source optional means
/// the file was deleted.
struct FileChange {
    std::string path;
    std::optional<std::string> new_source;
};

/// Incremental rebuild: re-chunks and re-embeds only changed files, recomputes
/// ancestors along the paths to the root, and reuses every node whose content
/// identity is unchanged. The result is bit-identical to a full rebuild of the
/// new repository state.
inline RepoCache update_cache(const RepoCache& cache, const std::vector<FileChange>& changes,
                              const EmbedderConfig& embedder_cfg, const Fuser& fuser,
                              UpdateStats* stats = nullptr) {
    Stopwatch timer;
    require(fuser.digest() == cache.fuser_params_hash, ErrorKind::config,
            "update_cache: stale fuser params, rebuild required");
    require(embedder_cfg.dim == cache.embedder_cfg.dim &&
                embedder_cfg.orders == cache.embedder_cfg.orders &&
                embedder_cfg.seed == cache.embedder_cfg.seed,
            ErrorKind::config, "update_cache: embedder config differs from cache");

    // Per-file chunk metadata of the current state, reconstructed from leaves.
    std::map<std::string, PlanFile> files;
    for (const HierarchyNode& n : cache.nodes) {
        if (n.level != 0)
            continue;
        require(n.span_refs.size() == 1, ErrorKind::invariant, "update_cache: malformed leaf");
        const SpanRef& ref = n.span_refs.front();
        PlanFile& pf = files[ref.file_path];
        pf.path = ref.file_path;
        pf.chunks.push_back(
            {chunk_id_of(cache.repo_id, ref.file_path, ref.span.start, ref.span.end), ref.span});
    }
    for (auto& [path, pf] : files) {
        auto it = cache.file_hashes.find(path);
        require(it != cache.file_hashes.end(), ErrorKind::invariant,
                "update_cache: missing file hash");
        pf.content_hash = it->second;
        std::sort(pf.chunks.begin(), pf.chunks.end(),
                  [](const ChunkMeta& a, const ChunkMeta& b) { return a.span.start < b.span.start; });
    }

    // Apply the change list; changed files carry their chunk texts for embedding.
    std::map<std::string, std::vector<std::string>> changed_texts;
    for (const FileChange& ch : changes) {
        if (!ch.new_source) {
            files.erase(ch.path);
            changed_texts.erase(ch.path);
            continue;
        }
        std::vector<Chunk> chunks = chunk_file(ch.path, *ch.new_source, 512, cache.repo_id);
        if (chunks.empty()) {
            files.erase(ch.path);
            changed_texts.erase(ch.path);
            continue;
        }
        PlanFile pf;
        pf.path = ch.path;
        pf.content_hash = stable_hash(*ch.new_source);
        std::vector<std::string> texts;
        for (Chunk& c : chunks) {
            pf.chunks.push_back({c.chunk_id, c.span});
            texts.push_back(std::move(c.text));
        }
        files[ch.path] = std::move(pf);
        changed_texts[ch.path] = std::move(texts);
    }
    require(!files.empty(), ErrorKind::contract, "update_cache: repository has no files left");

    detail::RepoSnapshot snap;
    for (auto& [path, pf] : files) {
        (void)path;
        snap.file_hashes[pf.path] = pf.content_hash;
        snap.files.push_back(pf);
    }
    for (const PlanFile& f : snap.files)
        for (const ChunkMeta& cm : f.chunks)
            snap.flat_chunks.push_back(cm);

    TreePlan plan = build_plan(snap.files, cache.build_meta.branching);
    std::vector<uint64_t> ids = plan_identities(plan, snap.flat_chunks, snap.file_hashes);

    std::unordered_map<uint64_t, const Vec*> old_vectors;
    old_vectors.reserve(cache.nodes.size());
    for (const HierarchyNode& n : cache.nodes)
        old_vectors.emplace(n.node_id, &n.vector);

    // Flat chunk index -> (file, position) for changed-file leaf embedding.
    std::vector<std::pair<const std::string*, size_t>> chunk_owner;
    for (const PlanFile& f : snap.files)
        for (size_t k = 0; k < f.chunks.size(); ++k)
            chunk_owner.emplace_back(&f.path, k);

    Embedder embedder(embedder_cfg);
    UpdateStats st;
    std::vector<Vec> vectors(plan.nodes.size());
    for (size_t i = 0; i < plan.nodes.size(); ++i) {
        const PlanNode& pn = plan.nodes[i];
        auto hit = old_vectors.find(ids[i]);
        if (hit != old_vectors.end()) {
            vectors[i] = *hit->second;
            ++st.nodes_reused;
            continue;
        }
        ++st.nodes_recomputed;
        if (pn.chunk_index >= 0) {
            auto [path, pos] = chunk_owner[static_cast<size_t>(pn.chunk_index)];
            auto texts = changed_texts.find(*path);
            require(texts != changed_texts.end(), ErrorKind::internal,
                    "update_cache: unexpected re-embed of an unchanged file");
            vectors[i] = embedder.embed(texts->second[pos]);
        } else {
            std::vector<Vec> kids;
            kids.reserve(pn.children.size());
            for (size_t c : pn.children)
                kids.push_back(vectors[c]);
            vectors[i] = fuser.fuse(kids);
        }
    }
    if (stats)
        *stats = st;
    return detail::assemble_cache(cache.repo_id, plan, std::move(vectors), ids, snap,
                                  embedder_cfg, fuser, cache.build_meta.branching,
                                  timer.seconds());
}

// --- validation --------------------------------------------------------------

/// Tree well-formedness: unique ids, one root, parent/child symmetry, child
/// counts in [1, b], level(parent) = max(level(children)) + 1, exact span
/// closure, unit vectors.
inline void validate_cache(const RepoCache& cache) {
    const uint32_t b = cache.build_meta.branching;
    require(!cache.nodes.empty(), ErrorKind::invariant, "cache: no nodes");
    auto by_id = cache.index_by_id();
    require(by_id.size() == cache.nodes.size(), ErrorKind::invariant, "cache: duplicate node ids");
    require(by_id.count(cache.root_id), ErrorKind::invariant, "cache: root id unknown");

    size_t roots = 0;
    for (const HierarchyNode& n : cache.nodes) {
        if (!n.parent) {
            ++roots;
            require(n.node_id == cache.root_id, ErrorKind::invariant,
                    "cache: parentless node is not the root");
        }
        require(is_unit(n.vector, 1e-5f), ErrorKind::invariant, "cache: non-unit node vector");
        require(n.vector.size() == cache.build_meta.dim, ErrorKind::invariant,
                "cache: node vector dim mismatch");
        if (n.level == 0) {
            require(n.children.empty(), ErrorKind::invariant, "cache: leaf with children");
            require(n.span_refs.size() == 1, ErrorKind::invariant,
                    "cache: leaf must have exactly one span");
        } else {
            require(!n.children.empty() && n.children.size() <= b, ErrorKind::invariant,
                    "cache: child count out of [1, b]");
            uint32_t max_child = 0;
            std::vector<SpanRef> joined;
            for (uint64_t cid : n.children) {
                auto it = by_id.find(cid);
                require(it != by_id.end(), ErrorKind::invariant, "cache: dangling child id");
                const HierarchyNode& child = cache.nodes[it->second];
                require(child.parent && *child.parent == n.node_id, ErrorKind::invariant,
                        "cache: parent link mismatch");
                max_child = std::max(max_child, child.level);
                joined.insert(joined.end(), child.span_refs.begin(), child.span_refs.end());
            }
            require(n.level == max_child + 1, ErrorKind::invariant,
                    "cache: level is not max(child levels) + 1");
            require(joined == n.span_refs, ErrorKind::invariant,
                    "cache: span_refs are not the union of child spans");
        }
    }
    require(roots == 1, ErrorKind::invariant, "cache: exactly one root required");

    // reachability (acyclicity follows from strict child ordering + full cover)
    std::vector<uint64_t> stack = {cache.root_id};
    std::unordered_set<uint64_t> seen;
    while (!stack.empty()) {
        uint64_t id = stack.back();
        stack.pop_back();
        require(seen.insert(id).second, ErrorKind::invariant, "cache: node visited twice");
        for (uint64_t c : cache.nodes[by_id.at(id)].children)
            stack.push_back(c);
    }
    require(seen.size() == cache.nodes.size(), ErrorKind::invariant,
            "cache: unreachable nodes");
    require(cache.build_meta.node_count == cache.nodes.size(), ErrorKind::invariant,
            "cache: node_count metadata mismatch");
}

/// Node count bound N * b/(b-1) + levels, meaningful on corpora whose files
/// carry enough chunks to amortize the per-file node (see synthetic generator).
inline void validate_node_bound(const RepoCache& cache) {
    size_t leaves = 0;
    for (const HierarchyNode& n : cache.nodes)
        if (n.level == 0)
            ++leaves;
    double b = cache.build_meta.branching;
    double bound = static_cast<double>(leaves) * (b / (b - 1.0)) + cache.build_meta.level_count;
    require(static_cast<double>(cache.nodes.size()) <= bound, ErrorKind::invariant,
            "cache: node count exceeds N*b/(b-1) + levels");
}

} // namespace hef
