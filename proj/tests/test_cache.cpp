#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "hef/cache.hpp"
#include "hef/cache_io.hpp"
#include "hef/synthetic.hpp"

using namespace hef;

namespace {

using Sources = std::vector<std::pair<std::string, std::string>>;

/// n top-level defs, one chunk each; `salt` varies the function bodies.
std::string defs(uint32_t n, uint32_t salt = 0) {
    std::string s;
    for (uint32_t i = 0; i < n; ++i) {
        s += "def fn_" + std::to_string(salt) + "_" + std::to_string(i) + "(x):\n";
        s += "    return x + " + std::to_string(salt + i) + "\n";
    }
    return s;
}

EmbedderConfig small_cfg() {
    EmbedderConfig cfg;
    cfg.dim = 32;
    return cfg;
}

std::map<uint32_t, size_t> level_histogram(const RepoCache& cache) {
    std::map<uint32_t, size_t> hist;
    for (const HierarchyNode& n : cache.nodes)
        ++hist[n.level];
    return hist;
}

} // namespace

TEST_CASE("single chunk file builds a two node tree") {
    RepoCache cache = build_cache({{"a.py", defs(1)}}, small_cfg(), Fuser::make_mean());
    validate_cache(cache);
    REQUIRE(cache.nodes.size() == 2);
    CHECK(cache.build_meta.node_count == 2);
    CHECK(cache.build_meta.level_count == 2);

    const HierarchyNode& leaf = cache.nodes[0];
    const HierarchyNode& file_node = cache.nodes[1];
    CHECK(leaf.level == 0);
    CHECK(file_node.level == 1);
    CHECK(file_node.group_key == "a.py");
    REQUIRE(file_node.children.size() == 1);
    CHECK(file_node.children[0] == leaf.node_id);
    CHECK(leaf.parent == file_node.node_id);
    CHECK(!file_node.parent.has_value());
    CHECK(cache.root_id == file_node.node_id);
    CHECK(file_node.vector == leaf.vector); // mean of one child passes through
}

TEST_CASE("twenty chunks in one file reduce to 24 nodes") {
    RepoCache cache = build_cache({{"a.py", defs(20)}}, small_cfg(), Fuser::make_mean());
    validate_cache(cache);
    CHECK(cache.nodes.size() == 24);
    auto hist = level_histogram(cache);
    CHECK(hist[0] == 20);
    CHECK(hist[1] == 3); // runs of 8, 8, 4
    CHECK(hist[2] == 1);

    // runs keep byte order and the root closes over every chunk span in order
    const HierarchyNode* root = cache.find(cache.root_id);
    REQUIRE(root != nullptr);
    REQUIRE(root->span_refs.size() == 20);
    for (size_t i = 1; i < root->span_refs.size(); ++i)
        CHECK(root->span_refs[i - 1].span.end <= root->span_refs[i].span.start);
}

TEST_CASE("64 single chunk files in one directory give 137 nodes") {
    SyntheticSpec spec;
    spec.files_per_repo = 64;
    spec.chunks_per_file = 1;
    RepoCache cache =
        build_cache(synth_repo_files(spec, 0), small_cfg(), Fuser::make_mean(), 8, "r64");
    validate_cache(cache);
    CHECK(cache.nodes.size() == 137); // 64 + 64 + 8 + 1
    auto hist = level_histogram(cache);
    CHECK(hist[0] == 64);
    CHECK(hist[1] == 64);
    CHECK(hist[2] == 8);
    CHECK(hist[3] == 1);
    CHECK(cache.build_meta.level_count == 4);
}

TEST_CASE("eight files of eight chunks stay within the node bound") {
    SyntheticSpec spec;
    spec.files_per_repo = 8;
    spec.chunks_per_file = 8;
    RepoCache cache =
        build_cache(synth_repo_files(spec, 0), small_cfg(), Fuser::make_mean(), 8, "r8x8");
    validate_cache(cache);
    CHECK(cache.nodes.size() == 73); // 64 leaves + 8 file nodes + root
    validate_node_bound(cache);
}

TEST_CASE("directory grouping is path-lexicographic with lone-entry pass-through") {
    Sources repo = {{"b/z.py", defs(1, 3)}, {"a/y.py", defs(1, 2)}, {"a/x.py", defs(1, 1)}};
    RepoCache cache = build_cache(repo, small_cfg(), Fuser::make_mean());
    validate_cache(cache);
    // 3 leaves, 3 file nodes, one node for a/, one root; b/ passes through
    REQUIRE(cache.nodes.size() == 8);

    auto find_by_key = [&](const std::string& key, uint32_t level) -> const HierarchyNode* {
        for (const HierarchyNode& n : cache.nodes)
            if (n.group_key == key && n.level == level)
                return &n;
        return nullptr;
    };
    const HierarchyNode* a_dir = find_by_key("a", 2);
    const HierarchyNode* root = cache.find(cache.root_id);
    const HierarchyNode* z_file = find_by_key("b/z.py", 1);
    REQUIRE(a_dir != nullptr);
    REQUIRE(root != nullptr);
    REQUIRE(z_file != nullptr);

    CHECK(root->group_key == "");
    REQUIRE(root->children.size() == 2);
    CHECK(root->children[0] == a_dir->node_id); // "a" sorts before "b/z.py"
    CHECK(root->children[1] == z_file->node_id);

    const HierarchyNode* x_file = find_by_key("a/x.py", 1);
    const HierarchyNode* y_file = find_by_key("a/y.py", 1);
    REQUIRE(a_dir->children.size() == 2);
    CHECK(a_dir->children[0] == x_file->node_id);
    CHECK(a_dir->children[1] == y_file->node_id);

    REQUIRE(root->span_refs.size() == 3);
    CHECK(root->span_refs[0].file_path == "a/x.py");
    CHECK(root->span_refs[1].file_path == "a/y.py");
    CHECK(root->span_refs[2].file_path == "b/z.py");
}

TEST_CASE("files that chunk to nothing are skipped") {
    RepoCache cache =
        build_cache({{"a.py", defs(1)}, {"empty.py", ""}}, small_cfg(), Fuser::make_mean());
    CHECK(cache.nodes.size() == 2);
    CHECK(cache.file_hashes.count("empty.py") == 0);
    CHECK(hef_test::throws_kind(
        [&] { build_cache({{"e.py", ""}}, small_cfg(), Fuser::make_mean()); },
        ErrorKind::contract));

    // whitespace-only files still carry indent/newline tokens, whose byte
    // ranges chunk coverage must include, so they do contribute a leaf
    RepoCache ws = build_cache({{"a.py", defs(1)}, {"ws.py", "   \n\n"}}, small_cfg(),
                               Fuser::make_mean());
    CHECK(ws.nodes.size() == 5);
    CHECK(ws.file_hashes.count("ws.py") == 1);
}

TEST_CASE("validate_cache rejects structural damage") {
    RepoCache cache = build_cache({{"a.py", defs(4)}}, small_cfg(), Fuser::make_mean());
    SUBCASE("duplicate node id") {
        cache.nodes[1].node_id = cache.nodes[0].node_id;
        CHECK(hef_test::throws_kind([&] { validate_cache(cache); }, ErrorKind::invariant));
    }
    SUBCASE("broken parent link") {
        cache.nodes[0].parent = 0xdeadbeef;
        CHECK(hef_test::throws_kind([&] { validate_cache(cache); }, ErrorKind::invariant));
    }
    SUBCASE("level rule violated") {
        cache.nodes.back().level = 9;
        CHECK(hef_test::throws_kind([&] { validate_cache(cache); }, ErrorKind::invariant));
    }
    SUBCASE("non-unit vector") {
        cache.nodes[0].vector[0] += 1.0f;
        CHECK(hef_test::throws_kind([&] { validate_cache(cache); }, ErrorKind::invariant));
    }
    SUBCASE("second root") {
        cache.nodes[0].parent.reset();
        CHECK(hef_test::throws_kind([&] { validate_cache(cache); }, ErrorKind::invariant));
    }
}

namespace {

Sources five_file_repo(uint32_t edit_salt = 0) {
    Sources repo;
    for (uint32_t f = 0; f < 5; ++f) {
        uint32_t salt = 10 * f + (f == 2 ? edit_salt : 0);
        repo.emplace_back("src/m" + std::to_string(f) + ".py", defs(3, salt));
    }
    return repo;
}

} // namespace

TEST_CASE("incremental update is bit-identical to a full rebuild") {
    EmbedderConfig ecfg = small_cfg();
    Fuser mean = Fuser::make_mean();
    Fuser attn = Fuser::make_attn(FuserParams::init(32, 8, 2, 4));
    for (const Fuser& fuser : {mean, attn}) {
        RepoCache before = build_cache(five_file_repo(0), ecfg, fuser, 8, "edit");

        Sources after_state = five_file_repo(777);
        std::vector<FileChange> changes = {{"src/m2.py", after_state[2].second}};
        UpdateStats stats;
        RepoCache updated = update_cache(before, changes, ecfg, fuser, &stats);
        RepoCache rebuilt = build_cache(after_state, ecfg, fuser, 8, "edit");

        validate_cache(updated);
        CHECK(cache_to_bytes(updated) == cache_to_bytes(rebuilt));
        // 21 nodes total: the edit recomputes 3 leaves, the file node, the root
        CHECK(stats.nodes_recomputed == 5);
        CHECK(stats.nodes_reused == 16);
    }
}

TEST_CASE("update applies additions and deletions like a rebuild") {
    EmbedderConfig ecfg = small_cfg();
    Fuser fuser = Fuser::make_mean();
    Sources base = five_file_repo();
    RepoCache cache = build_cache(base, ecfg, fuser, 8, "mut");

    SUBCASE("new file") {
        Sources grown = base;
        grown.emplace_back("src/new.py", defs(2, 99));
        RepoCache updated = update_cache(cache, {{"src/new.py", grown.back().second}}, ecfg, fuser);
        CHECK(cache_to_bytes(updated) == cache_to_bytes(build_cache(grown, ecfg, fuser, 8, "mut")));
    }
    SUBCASE("deleted file") {
        Sources shrunk(base.begin(), base.end() - 1);
        RepoCache updated = update_cache(cache, {{base.back().first, std::nullopt}}, ecfg, fuser);
        CHECK(cache_to_bytes(updated) ==
              cache_to_bytes(build_cache(shrunk, ecfg, fuser, 8, "mut")));
    }
    SUBCASE("edit emptying a file removes it") {
        Sources shrunk(base.begin() + 1, base.end());
        RepoCache updated = update_cache(cache, {{base.front().first, std::string()}}, ecfg, fuser);
        CHECK(cache_to_bytes(updated) ==
              cache_to_bytes(build_cache(shrunk, ecfg, fuser, 8, "mut")));
    }
    SUBCASE("deleting every file is an error") {
        std::vector<FileChange> wipe;
        for (const auto& [path, src] : base) {
            (void)src;
            wipe.push_back({path, std::nullopt});
        }
        CHECK(hef_test::throws_kind([&] { update_cache(cache, wipe, ecfg, fuser); },
                                    ErrorKind::contract));
    }
}

TEST_CASE("update refuses stale fuser params or a different embedder") {
    EmbedderConfig ecfg = small_cfg();
    Fuser fuser = Fuser::make_attn(FuserParams::init(32, 8, 2, 1));
    RepoCache cache = build_cache(five_file_repo(), ecfg, fuser, 8, "stale");

    Fuser other = Fuser::make_attn(FuserParams::init(32, 8, 2, 2));
    CHECK(hef_test::throws_kind([&] { update_cache(cache, {}, ecfg, other); }, ErrorKind::config));

    EmbedderConfig other_cfg = ecfg;
    other_cfg.seed = ecfg.seed + 1;
    CHECK(hef_test::throws_kind([&] { update_cache(cache, {}, other_cfg, fuser); },
                                ErrorKind::config));
}

TEST_CASE("build rejects bad inputs") {
    CHECK(hef_test::throws_kind([&] { build_cache({}, small_cfg(), Fuser::make_mean()); },
                                ErrorKind::contract));
    CHECK(hef_test::throws_kind(
        [&] { build_cache({{"a.py", defs(1)}}, small_cfg(), Fuser::make_mean(), 1); },
        ErrorKind::contract));
    CHECK(hef_test::throws_kind(
        [&] {
            build_cache({{"a.py", defs(1)}, {"a.py", defs(2)}}, small_cfg(), Fuser::make_mean());
        },
        ErrorKind::contract));
    CHECK(hef_test::throws_kind(
        [&] { build_cache({{"/abs.py", defs(1)}}, small_cfg(), Fuser::make_mean()); },
        ErrorKind::contract));
}
