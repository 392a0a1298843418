// hef: hierarchical embedding cache pipeline CLI.
//
// Exit codes: 0 ok, 1 internal, 2 usage, 3 io, 4 bad file data,
// 5 invariant/contract violation, 6 bad configuration.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "hef/hef.hpp"

#include "CLI11.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int exit_code_for(hef::ErrorKind kind) {
    using K = hef::ErrorKind;
    switch (kind) {
        case K::usage: return 2;
        case K::io: return 3;
        case K::format:
        case K::truncated:
        case K::corruption: return 4;
        case K::invariant:
        case K::contract: return 5;
        case K::config: return 6;
        default: return 1;
    }
}

bool hidden_component(const fs::path& rel) {
    for (const fs::path& part : rel) {
        std::string s = part.string();
        if (!s.empty() && s[0] == '.')
            return true;
    }
    return false;
}

/// Reads every non-hidden regular file under root as (relative path, bytes).
std::vector<std::pair<std::string, std::string>> read_repo_dir(const fs::path& root) {
    hef::require(fs::is_directory(root), hef::ErrorKind::io,
                 "not a directory: " + root.string());
    std::vector<std::pair<std::string, std::string>> files;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file())
            continue;
        fs::path rel = fs::relative(entry.path(), root);
        if (hidden_component(rel))
            continue;
        std::ifstream in(entry.path(), std::ios::binary);
        hef::require(in.good(), hef::ErrorKind::io, "cannot open: " + entry.path().string());
        std::ostringstream ss;
        ss << in.rdbuf();
        files.emplace_back(rel.generic_string(), ss.str());
    }
    std::sort(files.begin(), files.end());
    return files;
}

void emit_chunks_jsonl(const std::vector<std::pair<std::string, std::string>>& files,
                       const std::string& repo_id, const std::string& path) {
    std::ofstream out(path);
    hef::require(out.good(), hef::ErrorKind::io, "cannot open chunk output: " + path);
    for (const auto& [file_path, source] : files) {
        for (const hef::Chunk& c : hef::chunk_file(file_path, source, 512, repo_id)) {
            nlohmann::ordered_json line;
            line["chunk_id"] = c.chunk_id;
            line["file_path"] = c.file_path;
            line["byte_span"] = {c.span.start, c.span.end};
            line["token_count"] = c.token_count;
            line["text"] = c.text;
            out << line.dump() << '\n';
        }
    }
    hef::require(out.good(), hef::ErrorKind::io, "failed writing chunks: " + path);
}

hef::Fuser make_fuser(const std::string& kind, const std::string& params_path, uint32_t dim,
                      uint32_t d_f, uint32_t heads, uint64_t seed) {
    if (kind == "mean") {
        hef::require(params_path.empty(), hef::ErrorKind::config,
                     "--fuser-params is only valid with --fuser attn");
        return hef::Fuser::make_mean();
    }
    if (!params_path.empty()) {
        hef::FuserParams p = hef::fuser_params_from_bytes(hef::read_file(params_path));
        hef::require(p.d == dim, hef::ErrorKind::config,
                     "fuser params dim " + std::to_string(p.d) + " != --dim " +
                         std::to_string(dim));
        return hef::Fuser::make_attn(std::move(p));
    }
    return hef::Fuser::make_attn(hef::FuserParams::init(dim, d_f, heads, seed));
}

struct CommonOpts {
    std::string repo, cache;
    uint32_t dim = 256;
    uint32_t branching = 8;
    uint32_t K = 32;
    uint32_t ef_search = 0;
    uint64_t seed = 1;
    double threshold = 0.55;
    bool entities = false;
    uint32_t workers = 1;
    std::string format = "both";
};

int run(int argc, char** argv) {
    CLI::App app{"hierarchical embedding fusion cache pipeline"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key=value config file; command-line flags win");

    CommonOpts o;

    // generate
    auto* gen = app.add_subcommand("generate", "write a seeded synthetic repository tree");
    std::string gen_out;
    hef::SyntheticSpec spec;
    gen->add_option("--out", gen_out, "output directory")->required();
    gen->add_option("--repos", spec.repos, "repository count")->capture_default_str();
    gen->add_option("--files", spec.files_per_repo, "files per repository")
        ->capture_default_str();
    gen->add_option("--chunks-per-file", spec.chunks_per_file, "functions per file")
        ->capture_default_str();
    gen->add_option("--disjointness", spec.disjointness,
                    "probability an identifier is repo-private, in [0,1]")
        ->capture_default_str();
    gen->add_option("--seed", spec.seed, "generator seed")->capture_default_str();
    gen->callback([&] {
        hef::write_synthetic_tree(spec, gen_out);
        std::cout << "wrote " << spec.repos << " repos under " << gen_out << "\n";
    });

    // build
    auto* build = app.add_subcommand("build", "build a hierarchy cache from a repository");
    std::string build_fuser = "mean", build_fuser_params, build_emit_chunks, build_repo_id;
    uint32_t build_df = 64, build_heads = 4, build_M = 16, build_efc = 200, build_efs = 128;
    bool build_with_index = false;
    build->add_option("--repo", o.repo, "repository directory")->required();
    build->add_option("--cache", o.cache, "output cache file")->required();
    build->add_option("--repo-id", build_repo_id, "repository identity (default: directory name)");
    build->add_option("--dim", o.dim, "embedding dimension")->capture_default_str();
    build->add_option("--branching", o.branching, "max children per node")->capture_default_str();
    build->add_option("--seed", o.seed, "seed for attn fuser init")->capture_default_str();
    build->add_option("--fuser", build_fuser, "fuser kind")
        ->check(CLI::IsMember({"mean", "attn"}))
        ->capture_default_str();
    build->add_option("--fuser-params", build_fuser_params, "trained attn fuser params file");
    build->add_option("--d-f", build_df, "attn fuser width")->capture_default_str();
    build->add_option("--heads", build_heads, "attn fuser heads")->capture_default_str();
    build->add_flag("--with-index", build_with_index, "embed an HNSW index in the cache");
    build->add_option("--hnsw-m", build_M, "HNSW M")->capture_default_str();
    build->add_option("--ef-construction", build_efc, "HNSW ef_construction")
        ->capture_default_str();
    build->add_option("--ef-search", build_efs, "HNSW default ef_search")->capture_default_str();
    build->add_option("--emit-chunks", build_emit_chunks, "also write the chunk stream JSONL");
    build->callback([&] {
        std::string repo_id =
            build_repo_id.empty() ? fs::path(o.repo).filename().string() : build_repo_id;
        auto files = read_repo_dir(o.repo);
        hef::EmbedderConfig ecfg;
        ecfg.dim = o.dim;
        hef::Fuser fuser =
            make_fuser(build_fuser, build_fuser_params, o.dim, build_df, build_heads, o.seed);
        if (!build_emit_chunks.empty())
            emit_chunks_jsonl(files, repo_id, build_emit_chunks);
        hef::Stopwatch timer;
        hef::RepoCache cache = hef::build_cache(files, ecfg, fuser, o.branching, repo_id);
        hef::validate_cache(cache);
        if (build_with_index) {
            hef::HnswConfig hcfg;
            hcfg.M = build_M;
            hcfg.ef_construction = build_efc;
            hcfg.ef_search = build_efs;
            hcfg.seed = o.seed;
            hef::HnswIndex index = hef::build_index(cache, hcfg);
            hef::save_cache(cache, o.cache, &index);
        } else {
            hef::save_cache(cache, o.cache);
        }
        std::cout << "built " << cache.nodes.size() << " nodes, "
                  << cache.build_meta.level_count << " levels in " << timer.seconds() << " s -> "
                  << o.cache << "\n";
    });

    // update
    auto* update = app.add_subcommand("update", "incrementally update a cache from the repo dir");
    std::string update_out;
    update->add_option("--repo", o.repo, "repository directory")->required();
    update->add_option("--cache", o.cache, "cache file to update")->required();
    update->add_option("--out", update_out, "output cache file (default: overwrite input)");
    update->callback([&] {
        hef::LoadResult loaded = hef::load_cache(o.cache);
        auto files = read_repo_dir(o.repo);
        std::map<std::string, std::string> on_disk(files.begin(), files.end());
        std::vector<hef::FileChange> changes;
        for (const auto& [path, source] : on_disk) {
            auto it = loaded.cache.file_hashes.find(path);
            if (it == loaded.cache.file_hashes.end() || it->second != hef::stable_hash(source))
                changes.push_back({path, source});
        }
        for (const auto& [path, hash] : loaded.cache.file_hashes) {
            (void)hash;
            if (!on_disk.count(path))
                changes.push_back({path, std::nullopt});
        }
        hef::UpdateStats stats;
        hef::RepoCache updated = hef::update_cache(
            loaded.cache, changes, loaded.cache.embedder_cfg,
            hef::Fuser{loaded.cache.fuser_kind, loaded.cache.fuser_params}, &stats);
        const std::string out_path = update_out.empty() ? o.cache : update_out;
        if (loaded.index) {
            hef::HnswIndex index = hef::build_index(updated, loaded.index->config());
            hef::save_cache(updated, out_path, &index);
        } else {
            hef::save_cache(updated, out_path);
        }
        std::cout << "updated: " << changes.size() << " changed files, "
                  << stats.nodes_recomputed << " nodes recomputed, " << stats.nodes_reused
                  << " reused -> " << out_path << "\n";
    });

    // query
    auto* query = app.add_subcommand("query", "retrieve and project a pseudo-token block");
    std::string q_prefix, q_prefix_file, q_out = "block", q_projector;
    uint32_t q_dg = 64, q_hidden = 128;
    bool q_dedup = false;
    query->add_option("--cache", o.cache, "cache file (index section required)")->required();
    query->add_option("--prefix", q_prefix, "prefix text");
    query->add_option("--prefix-file", q_prefix_file, "file containing the prefix");
    query->add_option("--repo", o.repo, "repository directory (for --entities suffixes)");
    query->add_option("-K,--topk", o.K, "retrieved node count")->capture_default_str();
    query->add_option("--ef-search", o.ef_search, "HNSW ef override (0 = index default)")
        ->capture_default_str();
    query->add_flag("--entities", o.entities, "append a cross-file entity suffix");
    query->add_flag("--dedup", q_dedup, "drop hits covered by a retained ancestor/descendant");
    query->add_option("--projector", q_projector, "projector params file (default: seeded init)");
    query->add_option("--d-g", q_dg, "generator embedding width for seeded projector")
        ->capture_default_str();
    query->add_option("--d-hidden", q_hidden, "projector hidden width for seeded init")
        ->capture_default_str();
    query->add_option("--seed", o.seed, "seed for projector init")->capture_default_str();
    query->add_option("--out", q_out, "output basename (.bin and .json)")
        ->capture_default_str();
    query->callback([&] {
        hef::require(q_prefix.empty() != q_prefix_file.empty(), hef::ErrorKind::usage,
                     "provide exactly one of --prefix / --prefix-file");
        std::string prefix = q_prefix;
        if (!q_prefix_file.empty())
            prefix = hef::read_file(q_prefix_file);
        hef::LoadResult loaded = hef::load_cache(o.cache);
        hef::HnswIndex index = loaded.index ? std::move(*loaded.index)
                                            : hef::build_index(loaded.cache, {});
        hef::ProjectorParams proj =
            q_projector.empty()
                ? hef::ProjectorParams::init(loaded.cache.build_meta.dim, q_hidden, q_dg, o.seed)
                : hef::projector_from_bytes(hef::read_file(q_projector));
        hef::QueryOptions opts;
        opts.K = o.K;
        opts.ef_search = o.ef_search;
        opts.with_entities = o.entities;
        opts.dedup = q_dedup;
        hef::SourceLookup sources = nullptr;
        if (!o.repo.empty()) {
            fs::path root = o.repo;
            sources = [root](const std::string& p) -> std::optional<std::string> {
                std::ifstream in(root / p, std::ios::binary);
                if (!in.good())
                    return std::nullopt;
                std::ostringstream ss;
                ss << in.rdbuf();
                return ss.str();
            };
        }
        hef::StageLatency lat;
        hef::PseudoTokenBlock block =
            hef::complete_context(prefix, loaded.cache, index, proj, opts, &lat, sources);
        hef::write_block_files(block, q_out + ".bin", q_out + ".json", &lat);
        std::printf("latency_ms embed=%.3f search=%.3f project=%.3f total=%.3f\n", lat.embed_ms,
                    lat.search_ms, lat.project_ms, lat.total_ms);
        std::cout << "block m=" << block.m << " d_g=" << block.d_g << " -> " << q_out
                  << ".bin\n";
    });

    // train-fuser
    auto* train = app.add_subcommand("train-fuser", "contrastively pretrain the attn fuser");
    std::string t_corpus, t_out, t_loss_csv;
    hef::FuserTrainConfig tcfg;
    uint32_t t_df = 64, t_heads = 4;
    train->add_option("--corpus", t_corpus, "directory of repository subdirectories")
        ->required();
    train->add_option("--out", t_out, "output fuser params file")->required();
    train->add_option("--dim", o.dim, "embedding dimension")->capture_default_str();
    train->add_option("--branching", o.branching, "max children per node")
        ->capture_default_str();
    train->add_option("--d-f", t_df, "fuser width")->capture_default_str();
    train->add_option("--heads", t_heads, "attention heads")->capture_default_str();
    train->add_option("--steps", tcfg.steps, "optimizer steps")->capture_default_str();
    train->add_option("--batch", tcfg.batch_size, "batch size")->capture_default_str();
    train->add_option("--lr", tcfg.lr, "peak learning rate")->capture_default_str();
    train->add_option("--temperature", tcfg.temperature, "InfoNCE temperature")
        ->capture_default_str();
    train->add_option("--warmup", tcfg.warmup_steps, "linear warmup steps")
        ->capture_default_str();
    train->add_option("--seed", tcfg.seed, "training seed")->capture_default_str();
    train->add_option("--loss-csv", t_loss_csv, "write the loss curve CSV here");
    train->callback([&] {
        std::vector<fs::path> repo_dirs;
        hef::require(fs::is_directory(t_corpus), hef::ErrorKind::io,
                     "not a directory: " + t_corpus);
        for (const auto& entry : fs::directory_iterator(t_corpus))
            if (entry.is_directory())
                repo_dirs.push_back(entry.path());
        std::sort(repo_dirs.begin(), repo_dirs.end());
        hef::EmbedderConfig ecfg;
        ecfg.dim = o.dim;
        std::vector<hef::TrainRepo> corpus;
        for (const fs::path& dir : repo_dirs)
            corpus.push_back(hef::make_train_repo(read_repo_dir(dir), ecfg, o.branching));
        hef::FuserParams init = hef::FuserParams::init(o.dim, t_df, t_heads, tcfg.seed);
        hef::TrainResult result = hef::train_contrastive(corpus, tcfg, init);
        hef::write_file(t_out, hef::fuser_params_to_bytes(result.params));
        if (!t_loss_csv.empty())
            hef::write_loss_csv(result.curve, t_loss_csv);
        std::cout << "trained " << corpus.size() << " repos, " << tcfg.steps
                  << " steps; best val loss " << result.best_val_loss << " at step "
                  << result.best_val_step << " -> " << t_out << "\n";
    });

    // uwl-filter
    auto* uwl = app.add_subcommand("uwl-filter", "score and filter training pairs");
    std::string u_pairs, u_report, u_kept, u_lm_corpus;
    uint32_t u_order = 3;
    double u_add_k = 0.5;
    uwl->add_option("--pairs", u_pairs, "JSONL of {prefix_id, chunk_id, completion_id, "
                                        "prefix, context, completion}")
        ->required();
    uwl->add_option("--report", u_report, "output score report JSONL")->required();
    uwl->add_option("--kept", u_kept, "output kept-pairs JSONL");
    uwl->add_option("--threshold", o.threshold, "keep threshold on sigmoid(delta)")
        ->capture_default_str();
    uwl->add_option("--order", u_order, "reference n-gram order")->capture_default_str();
    uwl->add_option("--add-k", u_add_k, "additive smoothing constant")->capture_default_str();
    uwl->add_option("--lm-corpus", u_lm_corpus,
                    "fit the reference model on this directory instead of the pairs");
    uwl->callback([&] {
        std::ifstream in(u_pairs);
        hef::require(in.good(), hef::ErrorKind::io, "cannot open pairs: " + u_pairs);
        std::vector<hef::UwlPair> pairs;
        std::string line;
        size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty())
                continue;
            json rec = json::parse(line, nullptr, false);
            hef::require(rec.is_object(), hef::ErrorKind::format,
                         "pairs: malformed record at line " + std::to_string(line_no));
            hef::UwlPair p;
            p.prefix_id = rec.value("prefix_id", "");
            p.chunk_id = rec.value("chunk_id", "");
            p.completion_id = rec.value("completion_id", "");
            p.prefix = rec.value("prefix", "");
            p.context = rec.value("context", "");
            p.completion = rec.value("completion", "");
            pairs.push_back(std::move(p));
        }
        std::vector<std::vector<std::string>> lm_corpus;
        if (!u_lm_corpus.empty()) {
            for (const auto& [path, source] : read_repo_dir(u_lm_corpus)) {
                (void)path;
                lm_corpus.push_back(hef::content_token_texts(source));
            }
        } else {
            for (const hef::UwlPair& p : pairs)
                lm_corpus.push_back(
                    hef::content_token_texts(p.prefix + "\n" + p.completion));
        }
        hef::NgramLm lm = hef::fit_lm(lm_corpus, u_order, u_add_k);
        hef::FilterResult result = hef::filter_pairs(pairs, lm, o.threshold);
        hef::write_uwl_report(result.records, u_report);
        if (!u_kept.empty()) {
            std::ofstream out(u_kept);
            hef::require(out.good(), hef::ErrorKind::io, "cannot open kept output: " + u_kept);
            for (const hef::UwlPair& p : result.kept) {
                nlohmann::ordered_json rec;
                rec["prefix_id"] = p.prefix_id;
                rec["chunk_id"] = p.chunk_id;
                rec["completion_id"] = p.completion_id;
                rec["prefix"] = p.prefix;
                rec["context"] = p.context;
                rec["completion"] = p.completion;
                out << rec.dump() << '\n';
            }
        }
        std::cout << "kept " << result.kept.size() << " of " << pairs.size() << " pairs -> "
                  << u_report << "\n";
    });

    // bench
    auto* bench = app.add_subcommand("bench", "offline cost and online latency benchmark");
    std::string b_out = "bench";
    hef::SyntheticSpec bspec;
    hef::BenchConfig bcfg;
    bool b_no_recall = false;
    bench->add_option("--out", b_out, "output basename (.json / .csv)")->capture_default_str();
    bench->add_option("--repos", bspec.repos, "synthetic repositories")->capture_default_str();
    bench->add_option("--files", bspec.files_per_repo, "files per repository")
        ->capture_default_str();
    bench->add_option("--chunks-per-file", bspec.chunks_per_file, "functions per file")
        ->capture_default_str();
    bench->add_option("--disjointness", bspec.disjointness, "identifier disjointness")
        ->capture_default_str();
    bench->add_option("--dim", o.dim, "embedding dimension")->capture_default_str();
    bench->add_option("--branching", o.branching, "max children per node")
        ->capture_default_str();
    bench->add_option("--queries", bcfg.queries, "query count")->capture_default_str();
    bench->add_option("-K,--topk", bcfg.K, "retrieved node count")->capture_default_str();
    bench->add_option("--ef-search", bcfg.ef_search, "HNSW ef override")->capture_default_str();
    bench->add_option("--ef-construction", o.ef_search, "HNSW build ef")->default_val(200u);
    bench->add_option("--workers", bcfg.workers, "query worker threads")->capture_default_str();
    bench->add_option("--seed", bspec.seed, "corpus seed")->capture_default_str();
    bench->add_flag("--no-recall", b_no_recall, "skip the brute-force recall oracle");
    bench->add_option("--format", o.format, "report files to write")
        ->check(CLI::IsMember({"json", "csv", "both"}))
        ->capture_default_str();
    bench->callback([&] {
        bcfg.with_recall = !b_no_recall;
        hef::EmbedderConfig ecfg;
        ecfg.dim = o.dim;
        std::vector<hef::RepoCache> caches;
        std::vector<hef::HnswIndex> indices;
        std::vector<double> offline;
        std::vector<std::string> prefixes;
        for (uint32_t r = 0; r < bspec.repos; ++r) {
            auto files = hef::synth_repo_files(bspec, r);
            hef::Stopwatch timer;
            hef::RepoCache cache = hef::build_cache(files, ecfg, hef::Fuser::make_mean(),
                                                    o.branching, hef::synth_repo_id(r));
            hef::HnswConfig hcfg;
            hcfg.ef_construction = o.ef_search ? o.ef_search : 200;
            hcfg.seed = bspec.seed + r;
            indices.push_back(hef::build_index(cache, hcfg));
            offline.push_back(timer.seconds());
            for (const auto& [path, source] : files) {
                for (const hef::Chunk& c :
                     hef::chunk_file(path, source, 512, hef::synth_repo_id(r)))
                    prefixes.push_back(c.text);
            }
            caches.push_back(std::move(cache));
        }
        std::vector<const hef::RepoCache*> cache_ptrs;
        std::vector<const hef::HnswIndex*> index_ptrs;
        for (size_t i = 0; i < caches.size(); ++i) {
            cache_ptrs.push_back(&caches[i]);
            index_ptrs.push_back(&indices[i]);
        }
        hef::ProjectorParams proj = hef::ProjectorParams::init(o.dim, 128, 64, bspec.seed);
        hef::BenchReport report = hef::run_bench(cache_ptrs, index_ptrs, proj, prefixes, bcfg);
        report.offline_seconds = offline;
        if (o.format != "csv")
            hef::write_bench_json(report, b_out + ".json");
        if (o.format != "json")
            hef::write_bench_csv(report, b_out + ".csv");
        std::printf("nodes=%llu median_ms=%.3f p90_ms=%.3f p99_ms=%.3f recall@%u=%.4f\n",
                    static_cast<unsigned long long>(report.nodes), report.median_ms,
                    report.p90_ms, report.p99_ms, report.K, report.recall);
    });

    // inspect
    auto* inspect = app.add_subcommand("inspect", "summarize a cache file");
    uint32_t i_depth = 2;
    inspect->add_option("--cache", o.cache, "cache file")->required();
    inspect->add_option("--depth", i_depth, "tree preview depth")->capture_default_str();
    inspect->callback([&] {
        hef::LoadResult loaded = hef::load_cache(o.cache);
        const hef::RepoCache& c = loaded.cache;
        std::cout << "repo_id:    " << c.repo_id << "\n";
        std::cout << "dim:        " << c.build_meta.dim << "\n";
        std::cout << "branching:  " << c.build_meta.branching << "\n";
        std::cout << "fuser:      " << hef::fuser_kind_name(c.fuser_kind) << "\n";
        std::cout << "nodes:      " << c.nodes.size() << "\n";
        std::cout << "levels:     " << c.build_meta.level_count << "\n";
        std::cout << "index:      " << (loaded.index ? "embedded" : "none") << "\n";
        std::map<uint32_t, size_t> per_level;
        for (const hef::HierarchyNode& n : c.nodes)
            ++per_level[n.level];
        for (const auto& [level, count] : per_level)
            std::cout << "  level " << level << ": " << count << " nodes\n";
        auto by_id = c.index_by_id();
        std::function<void(uint64_t, uint32_t)> show = [&](uint64_t id, uint32_t depth) {
            const hef::HierarchyNode& n = c.nodes[by_id.at(id)];
            std::string pad(2 * size_t(depth), ' ');
            std::cout << pad << "- node " << n.node_id << " (level " << n.level;
            if (!n.group_key.empty())
                std::cout << ", " << n.group_key;
            std::cout << ", " << n.span_refs.size() << " spans)\n";
            if (depth < i_depth)
                for (uint64_t ch : n.children)
                    show(ch, depth + 1);
        };
        show(c.root_id, 0);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const hef::Error& e) {
        std::cerr << "error (" << hef::error_kind_name(e.kind()) << "): " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
}
