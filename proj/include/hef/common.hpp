#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hef {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

enum class ErrorKind {
    usage,       // bad flags / arguments
    io,          // missing or unreadable file
    format,      // wrong magic, unsupported version, malformed record
    truncated,   // file ends mid-section
    corruption,  // section checksum mismatch
    invariant,   // loaded or computed state violates a structural invariant
    contract,    // caller violated a precondition
    config,      // configuration cannot produce a valid run (e.g. too few repos)
    internal,
};

inline const char* error_kind_name(ErrorKind k) {
    switch (k) {
        case ErrorKind::usage: return "usage";
        case ErrorKind::io: return "io";
        case ErrorKind::format: return "format";
        case ErrorKind::truncated: return "truncated";
        case ErrorKind::corruption: return "corruption";
        case ErrorKind::invariant: return "invariant";
        case ErrorKind::contract: return "contract";
        case ErrorKind::config: return "config";
        case ErrorKind::internal: return "internal";
    }
    return "internal";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) { throw Error(kind, msg); }

inline void require(bool cond, ErrorKind kind, const std::string& msg) {
    if (!cond)
        fail(kind, msg);
}

// ---------------------------------------------------------------------------
// Stable 64-bit hashing (platform-independent; used for ids, buckets, digests)
// ---------------------------------------------------------------------------

inline uint64_t mix64(uint64_t x) {
    // splitmix64 finalizer
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

/// Incremental FNV-1a over raw bytes with a splitmix finalizer.
class StableHash {
public:
    StableHash() = default;
    explicit StableHash(uint64_t seed) { add_u64(seed); }

    StableHash& add_bytes(const void* data, size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (size_t i = 0; i < n; ++i) {
            state_ ^= p[i];
            state_ *= 0x100000001b3ull;
        }
        return *this;
    }
    StableHash& add_u64(uint64_t v) {
        unsigned char b[8];
        for (int i = 0; i < 8; ++i)
            b[i] = static_cast<unsigned char>(v >> (8 * i));
        return add_bytes(b, 8);
    }
    StableHash& add_str(std::string_view s) {
        add_u64(s.size());
        return add_bytes(s.data(), s.size());
    }
    uint64_t digest() const { return mix64(state_); }

private:
    uint64_t state_ = 0xcbf29ce484222325ull;
};

inline uint64_t stable_hash(std::string_view s) { return StableHash().add_str(s).digest(); }

// ---------------------------------------------------------------------------
// Deterministic RNG with portable derived draws
// ---------------------------------------------------------------------------

/// mt19937_64 core (bit-exact per the standard) with hand-rolled draw helpers,
/// so sequences do not depend on the stdlib's distribution implementations.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t next() { return gen_(); }

    /// Uniform integer in [0, n). n must be > 0.
    uint64_t below(uint64_t n) {
        // rejection sampling on the top range to avoid modulo bias
        uint64_t limit = n * (UINT64_MAX / n);
        uint64_t v;
        do {
            v = gen_();
        } while (v >= limit);
        return v % n;
    }

    /// Uniform double in [0, 1).
    double real01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do {
            u1 = real01();
        } while (u1 <= 0.0);
        u2 = real01();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// ---------------------------------------------------------------------------
// CRC-32 (IEEE, reflected) for cache file sections
// ---------------------------------------------------------------------------

namespace detail {
inline const std::array<uint32_t, 256>& crc32_table() {
    static const std::array<uint32_t, 256> table = [] {
        std::array<uint32_t, 256> t{};
        for (uint32_t i = 0; i < 256; ++i) {
            uint32_t c = i;
            for (int k = 0; k < 8; ++k)
                c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    return table;
}
} // namespace detail

inline uint32_t crc32(const void* data, size_t n, uint32_t crc = 0) {
    const auto& t = detail::crc32_table();
    const auto* p = static_cast<const unsigned char*>(data);
    crc = ~crc;
    for (size_t i = 0; i < n; ++i)
        crc = t[(crc ^ p[i]) & 0xffu] ^ (crc >> 8);
    return ~crc;
}

// ---------------------------------------------------------------------------
// Little-endian byte buffers for the cache format
// ---------------------------------------------------------------------------

class ByteWriter {
public:
    ByteWriter& u8(uint8_t v) {
        buf_.push_back(static_cast<char>(v));
        return *this;
    }
    ByteWriter& u16(uint16_t v) { return append_le(v, 2); }
    ByteWriter& u32(uint32_t v) { return append_le(v, 4); }
    ByteWriter& u64(uint64_t v) { return append_le(v, 8); }
    ByteWriter& f32(float v) {
        uint32_t bits;
        std::memcpy(&bits, &v, 4);
        return u32(bits);
    }
    ByteWriter& f64(double v) {
        uint64_t bits;
        std::memcpy(&bits, &v, 8);
        return u64(bits);
    }
    ByteWriter& bytes(const void* data, size_t n) {
        const char* p = static_cast<const char*>(data);
        buf_.insert(buf_.end(), p, p + n);
        return *this;
    }
    ByteWriter& str(std::string_view s) {
        u32(static_cast<uint32_t>(s.size()));
        return bytes(s.data(), s.size());
    }

    const std::string& data() const { return buf_; }
    std::string take() { return std::move(buf_); }
    size_t size() const { return buf_.size(); }

private:
    ByteWriter& append_le(uint64_t v, int width) {
        for (int i = 0; i < width; ++i)
            buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
        return *this;
    }
    std::string buf_;
};

class ByteReader {
public:
    explicit ByteReader(std::string_view data) : data_(data) {}

    uint8_t u8() { return static_cast<uint8_t>(take(1)[0]); }
    uint16_t u16() { return static_cast<uint16_t>(read_le(2)); }
    uint32_t u32() { return static_cast<uint32_t>(read_le(4)); }
    uint64_t u64() { return read_le(8); }
    float f32() {
        uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
    double f64() {
        uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, 8);
        return v;
    }
    std::string_view raw(size_t n) { return take(n); }
    std::string str() {
        uint32_t n = u32();
        return std::string(take(n));
    }

    size_t pos() const { return pos_; }
    size_t remaining() const { return data_.size() - pos_; }
    bool at_end() const { return pos_ == data_.size(); }

private:
    std::string_view take(size_t n) {
        require(pos_ + n <= data_.size(), ErrorKind::truncated,
                "unexpected end of data at offset " + std::to_string(pos_));
        std::string_view out = data_.substr(pos_, n);
        pos_ += n;
        return out;
    }
    uint64_t read_le(int width) {
        std::string_view b = take(width);
        uint64_t v = 0;
        for (int i = 0; i < width; ++i)
            v |= static_cast<uint64_t>(static_cast<unsigned char>(b[i])) << (8 * i);
        return v;
    }
    std::string_view data_;
    size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Small vector helpers (unit-norm float vectors are the common currency)
// ---------------------------------------------------------------------------

using Vec = std::vector<float>;

/// Dot product with double accumulation. Shared by the ANN index and the
/// brute-force oracle so both sides produce bit-identical scores.
inline float dot(std::span<const float> a, std::span<const float> b) {
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i)
        acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return static_cast<float>(acc);
}

inline double norm(std::span<const float> v) {
    double acc = 0.0;
    for (float x : v)
        acc += static_cast<double>(x) * static_cast<double>(x);
    return std::sqrt(acc);
}

/// Unit basis vector e_0: the deterministic stand-in for a zero accumulation.
inline Vec unit_basis(size_t dim) {
    Vec v(dim, 0.0f);
    if (!v.empty())
        v[0] = 1.0f;
    return v;
}

/// Normalize in double precision; a (near-)zero vector maps to e_0.
inline Vec normalized(std::span<const float> v) {
    double n = norm(v);
    if (n < 1e-30)
        return unit_basis(v.size());
    Vec out(v.size());
    for (size_t i = 0; i < v.size(); ++i)
        out[i] = static_cast<float>(static_cast<double>(v[i]) / n);
    return out;
}

inline bool is_unit(std::span<const float> v, double tol = 1e-5) {
    for (float x : v)
        if (!std::isfinite(x))
            return false;
    return std::abs(norm(v) - 1.0) <= tol;
}

// ---------------------------------------------------------------------------
// Wall-clock timing (monotonic)
// ---------------------------------------------------------------------------

class Stopwatch {
public:
    Stopwatch() { reset(); }
    void reset() { start_ = now(); }
    double ms() const { return (now() - start_) * 1e3; }
    double seconds() const { return now() - start_; }

private:
    static double now() {
        return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
            .count();
    }
    double start_;
};

} // namespace hef
