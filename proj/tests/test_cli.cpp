#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "hef/cache.hpp"
#include "hef/cache_io.hpp"

#include "json.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string cli_path() {
#ifdef HEF_CLI_PATH
    return HEF_CLI_PATH;
#else
    const char* env = std::getenv("HEF_CLI_PATH");
    hef::require(env != nullptr, hef::ErrorKind::config,
                 "set HEF_CLI_PATH to the hef_cli binary");
    return env;
#endif
}

struct CliResult {
    int code = -1;
    std::string out;

    bool contains(const std::string& needle) const {
        return out.find(needle) != std::string::npos;
    }
};

CliResult run_cli(const std::string& args) {
    std::string cmd = cli_path() + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    hef::require(pipe != nullptr, hef::ErrorKind::io, "popen failed: " + cmd);
    CliResult r;
    char buf[4096];
    size_t n;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0)
        r.out.append(buf, n);
    int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::vector<json> read_jsonl(const fs::path& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::vector<json> lines;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty())
            lines.push_back(json::parse(line));
    return lines;
}

} // namespace

TEST_CASE("usage problems exit with code 2") {
    CHECK(run_cli("").code == 2);
    CHECK(run_cli("no-such-command").code == 2);
    CHECK(run_cli("build").code == 2);              // missing required flags
    CHECK(run_cli("query --cache x").code == 2);    // neither prefix form
    CHECK(run_cli("--help").code == 0);
    CHECK(run_cli("build --help").code == 0);
}

TEST_CASE("generate, build, inspect, query round trip") {
    fs::path dir = hef_test::scratch_dir("cli_flow");
    std::string corpus = (dir / "corpus").string();
    std::string cache = (dir / "repo.hefc").string();
    std::string chunks = (dir / "chunks.jsonl").string();

    CliResult gen = run_cli("generate --out " + corpus +
                            " --repos 1 --files 5 --chunks-per-file 7 --seed 3");
    REQUIRE(gen.code == 0);
    REQUIRE(fs::is_directory(dir / "corpus" / "repo_00"));

    CliResult build = run_cli("build --repo " + corpus + "/repo_00 --cache " + cache +
                              " --dim 64 --with-index --ef-construction 64 --emit-chunks " +
                              chunks);
    REQUIRE(build.code == 0);
    CHECK(build.contains("built 41 nodes"));
    REQUIRE(fs::is_regular_file(cache));

    // 5 files x 7 functions, one chunk per function.
    std::vector<json> chunk_lines = read_jsonl(chunks);
    CHECK(chunk_lines.size() == 35);
    for (const json& c : chunk_lines) {
        CHECK(c.contains("chunk_id"));
        CHECK(c.contains("file_path"));
        CHECK(c.contains("byte_span"));
        CHECK(c.contains("token_count"));
        CHECK(c.contains("text"));
        CHECK(c["token_count"].get<uint32_t>() <= 512);
    }

    CliResult ins = run_cli("inspect --cache " + cache);
    REQUIRE(ins.code == 0);
    CHECK(ins.contains("repo_id:    repo_00"));
    CHECK(ins.contains("nodes:      41"));
    CHECK(ins.contains("levels:     3"));
    CHECK(ins.contains("index:      embedded"));

    std::string block = (dir / "block").string();
    CliResult q = run_cli("query --cache " + cache + " --prefix \"def fn_r0_f0_c0\" -K 8 --out " +
                          block);
    REQUIRE(q.code == 0);
    CHECK(q.contains("block m=8 d_g=64"));
    REQUIRE(fs::is_regular_file(block + ".bin"));
    std::ifstream jin(block + ".json");
    REQUIRE(jin.good());
    json sidecar = json::parse(jin);
    CHECK(sidecar["m"] == 8);
    CHECK(sidecar["d_g"] == 64);
    CHECK(sidecar["provenance"].size() == 8);
    CHECK(sidecar["latency_ms"].contains("embed"));
    CHECK(sidecar["latency_ms"].contains("total"));

    // 41 nodes support the full default block width.
    CliResult q32 = run_cli("query --cache " + cache + " --prefix \"x = 1\" -K 32 --out " +
                            (dir / "block32").string());
    REQUIRE(q32.code == 0);
    CHECK(q32.contains("block m=32"));
}

TEST_CASE("update matches a fresh build on the edited tree") {
    fs::path dir = hef_test::scratch_dir("cli_update");
    std::string corpus = (dir / "corpus").string();
    REQUIRE(run_cli("generate --out " + corpus + " --repos 1 --files 3 --chunks-per-file 2")
                .code == 0);
    fs::path repo = dir / "corpus" / "repo_00";
    std::string cache = (dir / "a.hefc").string();
    REQUIRE(run_cli("build --repo " + repo.string() + " --cache " + cache +
                    " --dim 32 --repo-id fixed")
                .code == 0);

    // Append one function and add a brand new file.
    {
        std::ofstream out(repo / "mod_000.py", std::ios::app);
        out << "\ndef added_fn(z):\n    return z + 1\n";
    }
    {
        std::ofstream out(repo / "extra.py");
        out << "def extra_fn(q):\n    return q * 2\n";
    }

    std::string updated = (dir / "b.hefc").string();
    CliResult up = run_cli("update --repo " + repo.string() + " --cache " + cache + " --out " +
                           updated);
    REQUIRE(up.code == 0);
    CHECK(up.contains("2 changed files"));
    CHECK(up.contains("nodes recomputed"));

    std::string fresh = (dir / "c.hefc").string();
    REQUIRE(run_cli("build --repo " + repo.string() + " --cache " + fresh +
                    " --dim 32 --repo-id fixed")
                .code == 0);

    hef::LoadResult a = hef::load_cache(updated);
    hef::LoadResult b = hef::load_cache(fresh);
    CHECK(hef::cache_to_bytes(a.cache) == hef::cache_to_bytes(b.cache));
}

TEST_CASE("failures map to documented exit codes") {
    fs::path dir = hef_test::scratch_dir("cli_codes");
    fs::create_directories(dir / "empty_repo");

    // io: missing inputs
    CHECK(run_cli("build --repo " + (dir / "missing").string() + " --cache " +
                  (dir / "x.hefc").string())
              .code == 3);
    CHECK(run_cli("inspect --cache " + (dir / "missing.hefc").string()).code == 3);

    // bad file data: not a cache / truncated cache
    std::string garbage = (dir / "garbage.hefc").string();
    {
        std::ofstream out(garbage, std::ios::binary);
        out << "this is not a cache file";
    }
    CHECK(run_cli("inspect --cache " + garbage).code == 4);

    std::string corpus = (dir / "corpus").string();
    REQUIRE(run_cli("generate --out " + corpus + " --repos 1 --files 1").code == 0);
    std::string cache = (dir / "ok.hefc").string();
    REQUIRE(run_cli("build --repo " + corpus + "/repo_00 --cache " + cache + " --dim 32")
                .code == 0);
    std::string data = hef::read_file(cache);
    hef::write_file((dir / "trunc.hefc").string(), data.substr(0, data.size() / 2));
    CHECK(run_cli("inspect --cache " + (dir / "trunc.hefc").string()).code == 4);

    // contract: an empty repository cannot be compressed
    CHECK(run_cli("build --repo " + (dir / "empty_repo").string() + " --cache " +
                  (dir / "y.hefc").string())
              .code == 5);

    // config: bad dimensions and inconsistent flags
    CHECK(run_cli("build --repo " + corpus + "/repo_00 --cache " + (dir / "z.hefc").string() +
                  " --dim 63")
              .code == 6);
    CHECK(run_cli("generate --out " + (dir / "g2").string() + " --disjointness 1.5").code == 6);
    CHECK(run_cli("build --repo " + corpus + "/repo_00 --cache " + (dir / "z.hefc").string() +
                  " --fuser mean --fuser-params " + cache)
              .code == 6);
}

TEST_CASE("bench writes recomputable reports with a stable corpus descriptor") {
    fs::path dir = hef_test::scratch_dir("cli_bench");
    std::string base = (dir / "bench").string();
    std::string args = "bench --repos 1 --files 2 --chunks-per-file 2 --dim 32 --queries 4 "
                       "-K 4 --ef-construction 64 --out ";
    CliResult b1 = run_cli(args + base);
    REQUIRE(b1.code == 0);
    CHECK(b1.contains("median_ms="));
    CHECK(b1.contains("recall@4="));
    REQUIRE(fs::is_regular_file(base + ".json"));
    REQUIRE(fs::is_regular_file(base + ".csv"));

    std::ifstream jin(base + ".json");
    json report = json::parse(jin);
    CHECK(report["schema_version"] == 1);
    CHECK(report["corpus"]["chunks"] == 4);
    CHECK(report["corpus"]["dim"] == 32);
    CHECK(report["latency_ms"]["raw"].size() == 4);
    CHECK(report["offline_seconds"].size() == 1);

    // Same seed, same corpus and retrieval quality; only timings move.
    CliResult b2 = run_cli(args + (dir / "again").string());
    REQUIRE(b2.code == 0);
    std::ifstream jin2((dir / "again.json").string());
    json report2 = json::parse(jin2);
    CHECK(report["corpus"] == report2["corpus"]);
    CHECK(report["recall"] == report2["recall"]);

    CHECK(run_cli("bench --queries 0").code == 6);
}

TEST_CASE("train-fuser emits loadable params and a loss curve") {
    fs::path dir = hef_test::scratch_dir("cli_train");
    std::string corpus = (dir / "corpus").string();
    REQUIRE(run_cli("generate --out " + corpus + " --repos 2 --files 1 --chunks-per-file 4")
                .code == 0);

    std::string params = (dir / "fuser.heff").string();
    std::string csv = (dir / "loss.csv").string();
    CliResult tr = run_cli("train-fuser --corpus " + corpus + " --out " + params +
                           " --dim 32 --d-f 8 --heads 2 --steps 6 --batch 4 --warmup 2 "
                           "--loss-csv " + csv);
    REQUIRE(tr.code == 0);
    CHECK(tr.contains("trained 2 repos"));
    REQUIRE(fs::is_regular_file(params));

    std::ifstream cin_(csv);
    REQUIRE(cin_.good());
    std::string line;
    REQUIRE(std::getline(cin_, line));
    CHECK(line == "step,loss,lr");
    size_t rows = 0;
    while (std::getline(cin_, line))
        if (!line.empty())
            ++rows;
    CHECK(rows == 6);

    // The trained file drives an attn build; a dim mismatch is refused.
    std::string cache = (dir / "t.hefc").string();
    CHECK(run_cli("build --repo " + corpus + "/repo_00 --cache " + cache +
                  " --dim 32 --fuser attn --fuser-params " + params)
              .code == 0);
    CHECK(run_cli("build --repo " + corpus + "/repo_00 --cache " + cache +
                  " --dim 64 --fuser attn --fuser-params " + params)
              .code == 6);
}

TEST_CASE("uwl-filter scores pairs and keeps the report schema tight") {
    fs::path dir = hef_test::scratch_dir("cli_uwl");
    std::string pairs = (dir / "pairs.jsonl").string();
    {
        std::ofstream out(pairs);
        json a = {{"prefix_id", "p0"}, {"chunk_id", "c0"}, {"completion_id", "y0"},
                  {"prefix", "alpha beta"}, {"context", "alpha beta gamma"},
                  {"completion", "gamma"}};
        json b = {{"prefix_id", "p1"}, {"chunk_id", "c1"}, {"completion_id", "y1"},
                  {"prefix", "alpha beta"}, {"context", "delta epsilon zeta"},
                  {"completion", "gamma"}};
        json c = {{"prefix_id", "p2"}, {"chunk_id", "c2"}, {"completion_id", "y2"},
                  {"prefix", "alpha beta"}, {"context", ""}, {"completion", "gamma"}};
        out << a.dump() << '\n' << b.dump() << '\n' << c.dump() << '\n';
    }

    std::string report = (dir / "report.jsonl").string();
    std::string kept = (dir / "kept.jsonl").string();
    CliResult r = run_cli("uwl-filter --pairs " + pairs + " --report " + report + " --kept " +
                          kept);
    REQUIRE(r.code == 0);
    CHECK(r.contains("of 3 pairs"));

    std::vector<json> records = read_jsonl(report);
    REQUIRE(records.size() == 3);
    for (const json& rec : records) {
        CHECK(rec.size() == 5);
        CHECK(rec.contains("prefix_id"));
        CHECK(rec.contains("chunk_id"));
        CHECK(rec.contains("delta"));
        CHECK(rec.contains("uwl"));
        CHECK(rec.contains("kept"));
    }
    // Empty context scores an exact zero delta and is filtered at 0.55.
    CHECK(records[2]["prefix_id"] == "p2");
    CHECK(records[2]["delta"].get<double>() == 0.0);
    CHECK(records[2]["kept"] == false);

    std::vector<json> kept_lines = read_jsonl(kept);
    size_t kept_in_report = 0;
    for (const json& rec : records)
        if (rec["kept"].get<bool>())
            ++kept_in_report;
    CHECK(kept_lines.size() == kept_in_report);

    CHECK(run_cli("uwl-filter --pairs " + (dir / "nope.jsonl").string() + " --report " + report)
              .code == 3);
}
