#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "hef/cache.hpp"
#include "hef/common.hpp"
#include "hef/fuser.hpp"
#include "hef/hnsw.hpp"
#include "hef/projector.hpp"

namespace hef {

// Cache file layout: magic "HEFC", version u16, section count u16, then per
// section: tag u32, payload size u64, payload bytes, CRC-32 of the payload.
// Sections: header, fuser params (attn only), node table, optional HNSW
// topology. Every byte of the file is covered by a fixed field or a CRC, so
// any single-byte corruption is detected.

inline constexpr char kCacheMagic[4] = {'H', 'E', 'F', 'C'};
inline constexpr uint16_t kCacheVersion = 1;
inline constexpr uint32_t kSectHeader = 1;
inline constexpr uint32_t kSectParams = 2;
inline constexpr uint32_t kSectNodes = 3;
inline constexpr uint32_t kSectIndex = 4;
inline constexpr uint64_t kNoParent = ~0ull;

namespace detail {

struct StringTable {
    std::vector<std::string> strings;
    std::unordered_map<std::string, uint32_t> lookup;

    uint32_t intern(const std::string& s) {
        auto it = lookup.find(s);
        if (it != lookup.end())
            return it->second;
        uint32_t idx = static_cast<uint32_t>(strings.size());
        strings.push_back(s);
        lookup.emplace(s, idx);
        return idx;
    }

    const std::string& at(uint32_t idx) const {
        require(idx < strings.size(), ErrorKind::corruption, "cache: string index out of range");
        return strings[idx];
    }
};

inline void append_section(ByteWriter& out, uint32_t tag, const std::string& payload) {
    out.u32(tag).u64(payload.size()).bytes(payload.data(), payload.size());
    out.u32(crc32(payload.data(), payload.size()));
}

inline void write_param_blocks(ByteWriter& w, const FuserParams& p) {
    p.visit([&](const char*, const DVec& v, bool) {
        for (double x : v)
            w.f64(x);
    });
}

inline void read_param_blocks(ByteReader& r, FuserParams& p) {
    p.visit([&](const char*, DVec& v, bool) {
        for (double& x : v)
            x = r.f64();
    });
}

} // namespace detail

/// Serializes a cache (and optionally its index topology) to the HEFC byte
/// layout. Deterministic: node order, string interning order, and every map
/// iteration are fixed, so identical caches produce identical bytes.
inline std::string cache_to_bytes(const RepoCache& cache, const HnswIndex* index = nullptr) {
    detail::StringTable table;
    for (const HierarchyNode& n : cache.nodes) {
        table.intern(n.group_key);
        for (const SpanRef& s : n.span_refs)
            table.intern(s.file_path);
    }

    ByteWriter header;
    header.str(cache.repo_id);
    header.u32(cache.build_meta.dim).u32(cache.build_meta.branching);
    header.u32(cache.fuser_params.d_f).u32(cache.fuser_params.heads);
    header.u32(cache.build_meta.node_count).u32(cache.build_meta.level_count);
    header.u64(cache.root_id);
    header.u8(static_cast<uint8_t>(cache.fuser_kind));
    header.u64(cache.fuser_params_hash);
    header.u32(cache.embedder_cfg.dim);
    header.u32(static_cast<uint32_t>(cache.embedder_cfg.orders.size()));
    for (uint32_t o : cache.embedder_cfg.orders)
        header.u32(o);
    header.u64(cache.embedder_cfg.seed);
    header.u32(static_cast<uint32_t>(table.strings.size()));
    for (const std::string& s : table.strings)
        header.str(s);
    header.u32(static_cast<uint32_t>(cache.file_hashes.size()));
    for (const auto& [path, hash] : cache.file_hashes)
        header.u32(table.lookup.at(path)).u64(hash);

    ByteWriter nodes;
    for (const HierarchyNode& n : cache.nodes) {
        nodes.u64(n.node_id).u32(n.level);
        nodes.u64(n.parent ? *n.parent : kNoParent);
        nodes.u32(table.lookup.at(n.group_key));
        nodes.u32(static_cast<uint32_t>(n.children.size()));
        for (uint64_t c : n.children)
            nodes.u64(c);
        nodes.u32(static_cast<uint32_t>(n.span_refs.size()));
        for (const SpanRef& s : n.span_refs)
            nodes.u32(table.lookup.at(s.file_path)).u64(s.span.start).u64(s.span.end);
        for (float x : n.vector)
            nodes.f32(x);
    }

    uint16_t sections = 2;
    std::string params_payload;
    if (cache.fuser_kind == FuserKind::attn) {
        ByteWriter pw;
        pw.u32(cache.fuser_params.d).u32(cache.fuser_params.d_f).u32(cache.fuser_params.heads);
        detail::write_param_blocks(pw, cache.fuser_params);
        params_payload = pw.take();
        ++sections;
    }
    std::string index_payload;
    if (index) {
        require(index->size() == cache.nodes.size(), ErrorKind::contract,
                "cache_to_bytes: index does not cover the node table");
        ByteWriter iw;
        index->write_topology(iw);
        index_payload = iw.take();
        ++sections;
    }

    ByteWriter out;
    out.bytes(kCacheMagic, 4);
    out.u16(kCacheVersion).u16(sections);
    detail::append_section(out, kSectHeader, header.take());
    if (!params_payload.empty())
        detail::append_section(out, kSectParams, params_payload);
    detail::append_section(out, kSectNodes, nodes.take());
    if (index)
        detail::append_section(out, kSectIndex, index_payload);
    return out.take();
}

struct LoadResult {
    RepoCache cache;
    std::optional<HnswIndex> index; // absent section means: rebuild if needed
};

/// Parses and validates HEFC bytes. Error kinds are distinct per failure mode:
/// format (magic/version/structure), truncated, corruption (CRC), invariant
/// (tree checks after a clean parse).
inline LoadResult cache_from_bytes(std::string_view bytes) {
    ByteReader top(bytes);
    std::string_view magic = top.raw(4);
    require(std::string_view(kCacheMagic, 4) == magic, ErrorKind::format,
            "cache: bad magic bytes");
    uint16_t version = top.u16();
    require(version == kCacheVersion, ErrorKind::format, "cache: unsupported version");
    uint16_t sections = top.u16();
    require(sections >= 2 && sections <= 4, ErrorKind::format, "cache: invalid section count");

    std::map<uint32_t, std::string_view> payloads;
    for (uint16_t s = 0; s < sections; ++s) {
        uint32_t tag = top.u32();
        uint64_t size = top.u64();
        require(tag >= kSectHeader && tag <= kSectIndex, ErrorKind::format,
                "cache: unknown section tag");
        require(size <= top.remaining(), ErrorKind::truncated, "cache: section exceeds file");
        std::string_view payload = top.raw(size);
        uint32_t stored_crc = top.u32();
        require(crc32(payload.data(), payload.size()) == stored_crc, ErrorKind::corruption,
                "cache: section checksum mismatch");
        require(payloads.emplace(tag, payload).second, ErrorKind::format,
                "cache: duplicate section");
    }
    require(top.at_end(), ErrorKind::format, "cache: trailing bytes after sections");
    require(payloads.count(kSectHeader) && payloads.count(kSectNodes), ErrorKind::format,
            "cache: missing mandatory section");

    RepoCache cache;
    detail::StringTable table;
    uint32_t d_f_header = 0, heads_header = 0;
    {
        ByteReader r(payloads[kSectHeader]);
        cache.repo_id = r.str();
        cache.build_meta.dim = r.u32();
        cache.build_meta.branching = r.u32();
        d_f_header = r.u32();
        heads_header = r.u32();
        cache.build_meta.node_count = r.u32();
        cache.build_meta.level_count = r.u32();
        cache.root_id = r.u64();
        uint8_t kind = r.u8();
        require(kind <= 1, ErrorKind::format, "cache: unknown fuser kind");
        cache.fuser_kind = static_cast<FuserKind>(kind);
        cache.fuser_params_hash = r.u64();
        cache.embedder_cfg.dim = r.u32();
        uint32_t order_count = r.u32();
        require(order_count <= 8, ErrorKind::corruption, "cache: implausible order count");
        cache.embedder_cfg.orders.clear();
        for (uint32_t i = 0; i < order_count; ++i)
            cache.embedder_cfg.orders.push_back(r.u32());
        cache.embedder_cfg.seed = r.u64();
        uint32_t strings = r.u32();
        for (uint32_t i = 0; i < strings; ++i)
            table.strings.push_back(r.str());
        uint32_t hashes = r.u32();
        for (uint32_t i = 0; i < hashes; ++i) {
            uint32_t idx = r.u32();
            uint64_t h = r.u64();
            cache.file_hashes[table.at(idx)] = h;
        }
        require(r.at_end(), ErrorKind::corruption, "cache: header has trailing bytes");
    }

    if (cache.fuser_kind == FuserKind::attn) {
        require(payloads.count(kSectParams), ErrorKind::format,
                "cache: attn fuser requires a params section");
        ByteReader r(payloads[kSectParams]);
        uint32_t d = r.u32(), d_f = r.u32(), heads = r.u32();
        require(d == cache.build_meta.dim && d_f == d_f_header && heads == heads_header,
                ErrorKind::corruption, "cache: params dims disagree with header");
        require(heads >= 1 && d_f % heads == 0, ErrorKind::corruption,
                "cache: invalid params dims");
        cache.fuser_params = FuserParams::zeros(d, d_f, heads);
        detail::read_param_blocks(r, cache.fuser_params);
        require(r.at_end(), ErrorKind::corruption, "cache: params section has trailing bytes");
        require(cache.fuser_params.digest() == cache.fuser_params_hash, ErrorKind::corruption,
                "cache: params digest mismatch");
    } else {
        require(!payloads.count(kSectParams), ErrorKind::format,
                "cache: unexpected params section for mean fuser");
        require(cache.fuser_params_hash == Fuser::make_mean().digest(), ErrorKind::corruption,
                "cache: mean fuser digest mismatch");
    }

    {
        ByteReader r(payloads[kSectNodes]);
        const uint32_t d = cache.build_meta.dim;
        cache.nodes.resize(cache.build_meta.node_count);
        for (HierarchyNode& n : cache.nodes) {
            n.node_id = r.u64();
            n.level = r.u32();
            uint64_t parent = r.u64();
            if (parent != kNoParent)
                n.parent = parent;
            n.group_key = table.at(r.u32());
            uint32_t kids = r.u32();
            require(kids <= cache.build_meta.branching, ErrorKind::corruption,
                    "cache: child count exceeds branching factor");
            n.children.resize(kids);
            for (uint64_t& c : n.children)
                c = r.u64();
            uint32_t spans = r.u32();
            require(spans >= 1 && spans <= cache.build_meta.node_count, ErrorKind::corruption,
                    "cache: implausible span count");
            n.span_refs.resize(spans);
            for (SpanRef& s : n.span_refs) {
                s.file_path = table.at(r.u32());
                s.span.start = r.u64();
                s.span.end = r.u64();
            }
            n.vector.resize(d);
            for (float& x : n.vector)
                x = r.f32();
        }
        require(r.at_end(), ErrorKind::corruption, "cache: node table has trailing bytes");
    }

    validate_cache(cache);

    LoadResult out;
    out.cache = std::move(cache);
    if (payloads.count(kSectIndex)) {
        ByteReader r(payloads[kSectIndex]);
        out.index = HnswIndex::read_topology(r, index_items_of(out.cache));
        require(r.at_end(), ErrorKind::corruption, "cache: index section has trailing bytes");
    }
    return out;
}

inline void write_file(const std::string& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.good(), ErrorKind::io, "cannot open for writing: " + path);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    require(out.good(), ErrorKind::io, "failed writing: " + path);
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), ErrorKind::io, "cannot open: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    require(in.good() || in.eof(), ErrorKind::io, "failed reading: " + path);
    return ss.str();
}

inline void save_cache(const RepoCache& cache, const std::string& path,
                       const HnswIndex* index = nullptr) {
    write_file(path, cache_to_bytes(cache, index));
}

inline LoadResult load_cache(const std::string& path) { return cache_from_bytes(read_file(path)); }

// --- standalone parameter files ---------------------------------------------

inline constexpr char kFuserMagic[4] = {'H', 'E', 'F', 'F'};
inline constexpr char kProjMagic[4] = {'H', 'E', 'F', 'P'};

inline std::string fuser_params_to_bytes(const FuserParams& p) {
    ByteWriter payload;
    payload.u32(p.d).u32(p.d_f).u32(p.heads);
    detail::write_param_blocks(payload, p);
    std::string body = payload.take();
    ByteWriter out;
    out.bytes(kFuserMagic, 4).u16(kCacheVersion);
    out.u64(body.size()).bytes(body.data(), body.size()).u32(crc32(body.data(), body.size()));
    return out.take();
}

inline FuserParams fuser_params_from_bytes(std::string_view bytes) {
    ByteReader top(bytes);
    require(std::string_view(kFuserMagic, 4) == top.raw(4), ErrorKind::format,
            "fuser params: bad magic");
    require(top.u16() == kCacheVersion, ErrorKind::format, "fuser params: unsupported version");
    uint64_t size = top.u64();
    require(size <= top.remaining(), ErrorKind::truncated, "fuser params: body exceeds file");
    std::string_view body = top.raw(size);
    require(crc32(body.data(), body.size()) == top.u32(), ErrorKind::corruption,
            "fuser params: checksum mismatch");
    require(top.at_end(), ErrorKind::format, "fuser params: trailing bytes");
    ByteReader r(body);
    uint32_t d = r.u32(), d_f = r.u32(), heads = r.u32();
    require(heads >= 1 && d_f >= 1 && d_f % heads == 0, ErrorKind::corruption,
            "fuser params: invalid dims");
    FuserParams p = FuserParams::zeros(d, d_f, heads);
    detail::read_param_blocks(r, p);
    require(r.at_end(), ErrorKind::corruption, "fuser params: trailing body bytes");
    return p;
}

inline std::string projector_to_bytes(const ProjectorParams& p) {
    ByteWriter payload;
    payload.u32(p.d).u32(p.d_hidden).u32(p.d_g);
    p.visit([&](const char*, const DVec& v, bool) {
        for (double x : v)
            payload.f64(x);
    });
    std::string body = payload.take();
    ByteWriter out;
    out.bytes(kProjMagic, 4).u16(kCacheVersion);
    out.u64(body.size()).bytes(body.data(), body.size()).u32(crc32(body.data(), body.size()));
    return out.take();
}

inline ProjectorParams projector_from_bytes(std::string_view bytes) {
    ByteReader top(bytes);
    require(std::string_view(kProjMagic, 4) == top.raw(4), ErrorKind::format,
            "projector params: bad magic");
    require(top.u16() == kCacheVersion, ErrorKind::format,
            "projector params: unsupported version");
    uint64_t size = top.u64();
    require(size <= top.remaining(), ErrorKind::truncated, "projector params: body exceeds file");
    std::string_view body = top.raw(size);
    require(crc32(body.data(), body.size()) == top.u32(), ErrorKind::corruption,
            "projector params: checksum mismatch");
    require(top.at_end(), ErrorKind::format, "projector params: trailing bytes");
    ByteReader r(body);
    uint32_t d = r.u32(), d_hidden = r.u32(), d_g = r.u32();
    ProjectorParams p = ProjectorParams::zeros(d, d_hidden, d_g);
    p.visit([&](const char*, DVec& v, bool) {
        for (double& x : v)
            x = r.f64();
    });
    require(r.at_end(), ErrorKind::corruption, "projector params: trailing body bytes");
    return p;
}

} // namespace hef
