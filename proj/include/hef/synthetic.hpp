#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "hef/common.hpp"

namespace hef {

/// Deterministic pseudo-code corpus generator. Each top-level function is
/// sized to tokenize well under the chunk budget, so one function expands to
/// exactly one chunk and counts are predictable.
struct SyntheticSpec {
    uint32_t repos = 1;
    uint32_t files_per_repo = 4;
    uint32_t chunks_per_file = 8;
    double disjointness = 0.9; // probability an identifier comes from the repo-private pool
    uint64_t seed = 1;
    uint32_t shared_vocab = 64;
    uint32_t private_vocab = 64;

    void validate() const {
        require(repos >= 1, ErrorKind::config, "synthetic: repos must be >= 1");
        require(files_per_repo >= 1, ErrorKind::config, "synthetic: files_per_repo must be >= 1");
        require(chunks_per_file >= 1, ErrorKind::config,
                "synthetic: chunks_per_file must be >= 1");
        require(disjointness >= 0.0 && disjointness <= 1.0, ErrorKind::config,
                "synthetic: disjointness must be in [0, 1]");
        require(shared_vocab >= 1 && private_vocab >= 1, ErrorKind::config,
                "synthetic: vocabulary pools must be non-empty");
    }
};

namespace detail {

inline std::string zero_pad(uint32_t v, int width) {
    std::string s = std::to_string(v);
    while (static_cast<int>(s.size()) < width)
        s.insert(s.begin(), '0');
    return s;
}

/// disjointness 1.0 never touches the shared pool, so repos share no
/// identifiers at all; 0.0 draws everything from the shared pool.
inline std::string pick_identifier(Rng& rng, const SyntheticSpec& spec, uint32_t repo) {
    if (rng.real01() < spec.disjointness)
        return "r" + std::to_string(repo) + "_id_" + std::to_string(rng.below(spec.private_vocab));
    return "shared_id_" + std::to_string(rng.below(spec.shared_vocab));
}

inline std::string synth_function(Rng& rng, const SyntheticSpec& spec, uint32_t repo,
                                  uint32_t file, uint32_t chunk) {
    auto id = [&] { return pick_identifier(rng, spec, repo); };
    auto lit = [&] { return std::to_string(10 + rng.below(90)); };
    std::string a = id(), b = id(), v0 = id(), v1 = id(), v2 = id();
    std::string name = "fn_r" + std::to_string(repo) + "_f" + std::to_string(file) + "_c" +
                       std::to_string(chunk);
    std::string s;
    s += "def " + name + "(" + a + ", " + b + "):\n";
    s += "    " + v0 + " = " + a + " + " + b + " * " + lit() + "\n";
    s += "    " + v1 + " = " + v0 + " - " + id() + "\n";
    s += "    " + v2 + " = " + id() + " * " + lit() + "\n";
    s += "    if " + v1 + " > " + lit() + ":\n";
    s += "        return " + v0 + " + " + v2 + "\n";
    s += "    return " + v1 + " - " + lit() + "\n";
    return s;
}

} // namespace detail

/// In-memory file list (path, source) for one repository; byte-identical for
/// the same spec and repo index. Files sit flat at the repo root.
inline std::vector<std::pair<std::string, std::string>>
synth_repo_files(const SyntheticSpec& spec, uint32_t repo) {
    spec.validate();
    require(repo < spec.repos, ErrorKind::contract, "synthetic: repo index out of range");
    Rng rng(mix64(spec.seed ^ 0x73796e74ull) ^ mix64(0x7265706full + repo));
    std::vector<std::pair<std::string, std::string>> files;
    files.reserve(spec.files_per_repo);
    for (uint32_t f = 0; f < spec.files_per_repo; ++f) {
        std::string source;
        for (uint32_t c = 0; c < spec.chunks_per_file; ++c) {
            if (c)
                source += "\n";
            source += detail::synth_function(rng, spec, repo, f, c);
        }
        files.emplace_back("mod_" + detail::zero_pad(f, 3) + ".py", std::move(source));
    }
    return files;
}

inline std::string synth_repo_id(uint32_t repo) { return "repo_" + std::to_string(repo); }

/// Writes out_dir/repo_NN/mod_NNN.py for every repo in the spec.
inline void write_synthetic_tree(const SyntheticSpec& spec, const std::filesystem::path& out_dir) {
    spec.validate();
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    require(!ec, ErrorKind::io, "synthetic: cannot create " + out_dir.string());
    for (uint32_t r = 0; r < spec.repos; ++r) {
        std::filesystem::path repo_dir = out_dir / ("repo_" + detail::zero_pad(r, 2));
        std::filesystem::create_directories(repo_dir, ec);
        require(!ec, ErrorKind::io, "synthetic: cannot create " + repo_dir.string());
        for (const auto& [path, source] : synth_repo_files(spec, r)) {
            std::ofstream out(repo_dir / path, std::ios::binary);
            require(out.good(), ErrorKind::io,
                    "synthetic: cannot open " + (repo_dir / path).string());
            out.write(source.data(), static_cast<std::streamsize>(source.size()));
            require(out.good(), ErrorKind::io,
                    "synthetic: write failed for " + (repo_dir / path).string());
        }
    }
}

} // namespace hef
