#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "hef/cache.hpp"
#include "hef/common.hpp"
#include "hef/hnsw.hpp"
#include "hef/query.hpp"

#include "json.hpp"

namespace hef {

/// Nearest-rank percentile over an ascending-sorted list: the smallest value
/// whose rank is at least q*n. Median is the true 50th percentile, so every
/// summary number is recomputable from the persisted raw list.
inline double percentile(const std::vector<double>& sorted, double q) {
    require(!sorted.empty(), ErrorKind::contract, "percentile: empty sample");
    require(q > 0.0 && q <= 1.0, ErrorKind::contract, "percentile: q must be in (0, 1]");
    double rank = std::ceil(q * static_cast<double>(sorted.size()));
    size_t idx = rank < 1.0 ? 0 : static_cast<size_t>(rank) - 1;
    if (idx >= sorted.size())
        idx = sorted.size() - 1;
    return sorted[idx];
}

inline std::string hardware_string() {
    std::string model = "unknown cpu";
    std::ifstream cpuinfo("/proc/cpuinfo");
    std::string line;
    while (std::getline(cpuinfo, line)) {
        if (line.rfind("model name", 0) == 0) {
            size_t colon = line.find(':');
            if (colon != std::string::npos) {
                model = line.substr(colon + 1);
                while (!model.empty() && model.front() == ' ')
                    model.erase(model.begin());
            }
            break;
        }
    }
    unsigned cores = std::thread::hardware_concurrency();
    return model + ", " + std::to_string(cores ? cores : 1) + " hw threads";
}

struct BenchConfig {
    uint32_t queries = 100;
    uint32_t K = 32;
    uint32_t ef_search = 0; // 0 = index default
    uint32_t workers = 1;   // single worker is the reference mode
    bool with_recall = true;

    void validate() const {
        require(queries >= 1, ErrorKind::config, "bench: queries must be >= 1");
        require(K >= 1, ErrorKind::config, "bench: K must be >= 1");
        require(workers >= 1, ErrorKind::config, "bench: workers must be >= 1");
    }
};

struct BenchReport {
    uint32_t schema_version = 1;
    // corpus descriptor
    uint32_t repos = 0;
    uint64_t files = 0;
    uint64_t chunks = 0;
    uint32_t dim = 0;
    uint64_t nodes = 0;
    std::vector<double> offline_seconds; // per repo
    // per-query latency embed+search+project, ascending
    std::vector<double> latencies_ms;
    double median_ms = 0.0;
    double p90_ms = 0.0;
    double p99_ms = 0.0;
    // stage means over all queries
    double embed_ms = 0.0;
    double search_ms = 0.0;
    double project_ms = 0.0;
    double recall = 0.0;
    uint32_t K = 0;
    uint32_t ef_search = 0;
    uint32_t workers = 1;
    std::string hardware;
};

/// Runs cfg.queries prefix completions round-robin over the caches and
/// collects per-query stage latencies. Latency counts embed + search +
/// project only; block serialization and oracle scans stay outside the timed
/// region. Workers split the query list; each query is timed individually
/// with the monotonic clock.
inline BenchReport run_bench(const std::vector<const RepoCache*>& caches,
                             const std::vector<const HnswIndex*>& indices,
                             const ProjectorParams& projector,
                             const std::vector<std::string>& prefixes, const BenchConfig& cfg) {
    cfg.validate();
    require(!caches.empty() && caches.size() == indices.size(), ErrorKind::contract,
            "bench: need matching cache/index lists");
    require(!prefixes.empty(), ErrorKind::contract, "bench: need at least one prefix");

    BenchReport report;
    report.repos = static_cast<uint32_t>(caches.size());
    report.dim = caches[0]->embedder_cfg.dim;
    for (const RepoCache* c : caches) {
        report.files += c->file_hashes.size();
        for (const HierarchyNode& n : c->nodes)
            if (n.children.empty())
                ++report.chunks;
        report.nodes += c->nodes.size();
    }
    report.K = cfg.K;
    report.ef_search = cfg.ef_search ? cfg.ef_search : indices[0]->config().ef_search;
    report.workers = cfg.workers;
    report.hardware = hardware_string();

    QueryOptions opts;
    opts.K = cfg.K;
    opts.ef_search = cfg.ef_search;

    const uint32_t q_total = cfg.queries;
    std::vector<double> total_ms(q_total), embed_ms(q_total), search_ms(q_total),
        project_ms(q_total);
    std::vector<double> recalls(q_total, 0.0);

    auto run_range = [&](uint32_t begin, uint32_t end) {
        for (uint32_t i = begin; i < end; ++i) {
            size_t which = i % caches.size();
            const RepoCache& cache = *caches[which];
            const HnswIndex& index = *indices[which];
            const std::string& prefix = prefixes[i % prefixes.size()];
            StageLatency lat;
            PseudoTokenBlock block = complete_context(prefix, cache, index, projector, opts, &lat);
            embed_ms[i] = lat.embed_ms;
            search_ms[i] = lat.search_ms;
            project_ms[i] = lat.project_ms;
            total_ms[i] = lat.embed_ms + lat.search_ms + lat.project_ms;
            if (cfg.with_recall) {
                Vec q = form_query(prefix, cache.embedder_cfg);
                auto exact = brute_force(cache, q, cfg.K);
                size_t hit = 0;
                for (const PseudoTokenBlock::Provenance& p : block.provenance)
                    for (const RetrievalHit& e : exact)
                        if (e.node_id == p.node_id) {
                            ++hit;
                            break;
                        }
                recalls[i] = exact.empty()
                                 ? 1.0
                                 : static_cast<double>(hit) / static_cast<double>(exact.size());
            }
        }
    };

    if (cfg.workers == 1) {
        run_range(0, q_total);
    } else {
        std::vector<std::thread> pool;
        uint32_t per = (q_total + cfg.workers - 1) / cfg.workers;
        for (uint32_t w = 0; w < cfg.workers; ++w) {
            uint32_t begin = w * per, end = std::min(q_total, begin + per);
            if (begin < end)
                pool.emplace_back(run_range, begin, end);
        }
        for (auto& t : pool)
            t.join();
    }

    report.latencies_ms = total_ms;
    std::sort(report.latencies_ms.begin(), report.latencies_ms.end());
    report.median_ms = percentile(report.latencies_ms, 0.5);
    report.p90_ms = percentile(report.latencies_ms, 0.9);
    report.p99_ms = percentile(report.latencies_ms, 0.99);
    double n = static_cast<double>(q_total);
    for (uint32_t i = 0; i < q_total; ++i) {
        report.embed_ms += embed_ms[i] / n;
        report.search_ms += search_ms[i] / n;
        report.project_ms += project_ms[i] / n;
        report.recall += recalls[i] / n;
    }
    return report;
}

inline nlohmann::ordered_json bench_report_json(const BenchReport& r) {
    nlohmann::ordered_json j;
    j["schema_version"] = r.schema_version;
    j["corpus"] = {{"repos", r.repos}, {"files", r.files}, {"chunks", r.chunks}, {"dim", r.dim},
                   {"nodes", r.nodes}};
    j["offline_seconds"] = r.offline_seconds;
    j["latency_ms"] = {{"median", r.median_ms}, {"p90", r.p90_ms}, {"p99", r.p99_ms},
                       {"raw", r.latencies_ms}};
    j["stage_ms"] = {{"embed", r.embed_ms}, {"search", r.search_ms}, {"project", r.project_ms}};
    j["recall"] = {{"k", r.K}, {"ef_search", r.ef_search}, {"value", r.recall}};
    j["workers"] = r.workers;
    j["hardware"] = r.hardware;
    return j;
}

inline void write_bench_json(const BenchReport& r, const std::string& path) {
    std::ofstream out(path);
    require(out.good(), ErrorKind::io, "cannot open bench report output: " + path);
    out << bench_report_json(r).dump(2) << '\n';
    require(out.good(), ErrorKind::io, "failed writing bench report: " + path);
}

/// Per-query rows of the raw sorted latency list, for external plotting.
inline void write_bench_csv(const BenchReport& r, const std::string& path) {
    std::ofstream out(path);
    require(out.good(), ErrorKind::io, "cannot open bench csv output: " + path);
    out << "query,latency_ms\n";
    for (size_t i = 0; i < r.latencies_ms.size(); ++i)
        out << i << ',' << r.latencies_ms[i] << '\n';
    require(out.good(), ErrorKind::io, "failed writing bench csv: " + path);
}

} // namespace hef
