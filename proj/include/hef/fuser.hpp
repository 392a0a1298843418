#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hef/common.hpp"
#include "hef/linalg.hpp"

namespace hef {

enum class FuserKind : uint8_t { mean = 0, attn = 1 };

inline const char* fuser_kind_name(FuserKind k) { return k == FuserKind::mean ? "mean" : "attn"; }

/// All learnable weights of the fusion network: input/output projections, one
/// causal attention block (no biases), and its feed-forward layer (width 4 d_f).
struct FuserParams {
    uint32_t d = 0;
    uint32_t d_f = 0;
    uint32_t heads = 0;

    DMat w_in; // d_f x d
    DVec b_in; // d_f
    DMat w_q, w_k, w_v, w_o; // d_f x d_f
    DMat w_1f; // 4 d_f x d_f
    DVec b_1f; // 4 d_f
    DMat w_2f; // d_f x 4 d_f
    DVec b_2f; // d_f
    DMat w_out; // d x d_f
    DVec b_out; // d

    static FuserParams zeros(uint32_t d, uint32_t d_f, uint32_t heads) {
        require(d_f >= 1 && heads >= 1 && d_f % heads == 0, ErrorKind::config,
                "fuser: heads must divide d_f");
        FuserParams p;
        p.d = d;
        p.d_f = d_f;
        p.heads = heads;
        p.w_in = DMat(d_f, d);
        p.b_in.assign(d_f, 0.0);
        p.w_q = DMat(d_f, d_f);
        p.w_k = DMat(d_f, d_f);
        p.w_v = DMat(d_f, d_f);
        p.w_o = DMat(d_f, d_f);
        p.w_1f = DMat(4 * d_f, d_f);
        p.b_1f.assign(4 * d_f, 0.0);
        p.w_2f = DMat(d_f, 4 * d_f);
        p.b_2f.assign(d_f, 0.0);
        p.w_out = DMat(d, d_f);
        p.b_out.assign(d, 0.0);
        return p;
    }

    static FuserParams init(uint32_t d, uint32_t d_f, uint32_t heads, uint64_t seed) {
        FuserParams p = zeros(d, d_f, heads);
        Rng rng(mix64(seed ^ 0x66757365u)); // domain-separated stream
        init_scaled_normal(p.w_in, rng);
        init_scaled_normal(p.w_q, rng);
        init_scaled_normal(p.w_k, rng);
        init_scaled_normal(p.w_v, rng);
        init_scaled_normal(p.w_o, rng);
        init_scaled_normal(p.w_1f, rng);
        init_scaled_normal(p.w_2f, rng);
        init_scaled_normal(p.w_out, rng);
        return p;
    }

    /// Visits every parameter block in a fixed order; the same order is used by
    /// the optimizer, the serializer, and the digest.
    template <class F> void visit(F&& f) {
        f("w_in", w_in.a, false);
        f("b_in", b_in, true);
        f("w_q", w_q.a, false);
        f("w_k", w_k.a, false);
        f("w_v", w_v.a, false);
        f("w_o", w_o.a, false);
        f("w_1f", w_1f.a, false);
        f("b_1f", b_1f, true);
        f("w_2f", w_2f.a, false);
        f("b_2f", b_2f, true);
        f("w_out", w_out.a, false);
        f("b_out", b_out, true);
    }

    template <class F> void visit(F&& f) const {
        const_cast<FuserParams*>(this)->visit([&](const char* n, DVec& v, bool b) {
            f(n, static_cast<const DVec&>(v), b);
        });
    }

    size_t param_count() const {
        size_t n = 0;
        visit([&](const char*, const DVec& v, bool) { n += v.size(); });
        return n;
    }

    void validate() const {
        require(d >= 1 && d_f >= 1 && heads >= 1 && d_f % heads == 0, ErrorKind::contract,
                "fuser params: inconsistent dims");
        require(w_in.rows == d_f && w_in.cols == d && w_out.rows == d && w_out.cols == d_f,
                ErrorKind::contract, "fuser params: projection shapes");
        require(w_q.rows == d_f && w_1f.rows == 4 * size_t(d_f) && w_2f.cols == 4 * size_t(d_f),
                ErrorKind::contract, "fuser params: block shapes");
        bool finite = true;
        visit([&](const char*, const DVec& v, bool) { finite = finite && all_finite(v); });
        require(finite, ErrorKind::invariant, "fuser params: non-finite values");
    }

    uint64_t digest() const {
        StableHash h;
        h.add_str("fuser:attn").add_u64(d).add_u64(d_f).add_u64(heads);
        visit([&](const char* name, const DVec& v, bool) {
            h.add_str(name);
            for (double x : v) {
                uint64_t bits;
                std::memcpy(&bits, &x, sizeof bits);
                h.add_u64(bits);
            }
        });
        return h.digest();
    }
};

/// Saved forward activations for one fusion, consumed by the backward pass.
struct FuseTape {
    size_t n = 0;
    std::vector<DVec> c;     // children inputs, d each
    std::vector<DVec> x;     // w_in projections, d_f
    std::vector<DVec> q, k, v;
    std::vector<DVec> alpha; // per position: heads*n attention weights (causal, zero beyond i)
    std::vector<DVec> o_pre; // concatenated head outputs before w_o
    std::vector<DVec> u;     // attention residual output
    std::vector<DVec> g_in;  // ffn pre-activation, 4 d_f
    std::vector<DVec> g_act;
    std::vector<DVec> z;     // ffn residual output
    DVec y_raw;
    double r = 0.0;          // ||y_raw||
    DVec y;                  // normalized output (e_0 when r underflows)
};

namespace detail {

inline void check_finite(const DVec& v, const char* block) {
    if (!all_finite(v))
        fail(ErrorKind::invariant, std::string("fuser: non-finite activation after ") + block);
}

} // namespace detail

/// Causal-attention fusion of an ordered child sequence: project via w_in, one
/// self-attention block with residual, feed-forward with residual, read the
/// last position, project via w_out, L2-normalize. No positional embeddings;
/// causal masking alone provides order sensitivity.
inline DVec fuse_attn_forward(const std::vector<DVec>& children, const FuserParams& p,
                              FuseTape* tape = nullptr) {
    const size_t n = children.size();
    require(n >= 1, ErrorKind::contract, "fuse_attn: needs at least one child");
    for (const DVec& c : children)
        require(c.size() == p.d, ErrorKind::contract, "fuse_attn: child dim mismatch");

    const size_t d_f = p.d_f;
    const size_t h = p.heads;
    const size_t dh = d_f / h;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    FuseTape local;
    FuseTape& t = tape ? *tape : local;
    t.n = n;
    t.c = children;
    t.x.resize(n);
    t.q.resize(n);
    t.k.resize(n);
    t.v.resize(n);
    t.alpha.resize(n);
    t.o_pre.resize(n);
    t.u.resize(n);
    t.g_in.resize(n);
    t.g_act.resize(n);
    t.z.resize(n);

    for (size_t i = 0; i < n; ++i) {
        t.x[i] = matvec(p.w_in, children[i]);
        add_to(t.x[i], p.b_in);
        detail::check_finite(t.x[i], "w_in");
        t.q[i] = matvec(p.w_q, t.x[i]);
        t.k[i] = matvec(p.w_k, t.x[i]);
        t.v[i] = matvec(p.w_v, t.x[i]);
    }

    for (size_t i = 0; i < n; ++i) {
        t.alpha[i].assign(h * n, 0.0);
        t.o_pre[i].assign(d_f, 0.0);
        for (size_t hd = 0; hd < h; ++hd) {
            const size_t off = hd * dh;
            double mx = -1e300;
            DVec s(i + 1, 0.0);
            for (size_t j = 0; j <= i; ++j) {
                double acc = 0.0;
                for (size_t e = 0; e < dh; ++e)
                    acc += t.q[i][off + e] * t.k[j][off + e];
                s[j] = acc * scale;
                mx = std::max(mx, s[j]);
            }
            double zsum = 0.0;
            for (size_t j = 0; j <= i; ++j) {
                s[j] = std::exp(s[j] - mx);
                zsum += s[j];
            }
            for (size_t j = 0; j <= i; ++j) {
                double a = s[j] / zsum;
                t.alpha[i][hd * n + j] = a;
                for (size_t e = 0; e < dh; ++e)
                    t.o_pre[i][off + e] += a * t.v[j][off + e];
            }
        }
        detail::check_finite(t.o_pre[i], "attention");
        DVec attn_out = matvec(p.w_o, t.o_pre[i]);
        t.u[i] = t.x[i];
        add_to(t.u[i], attn_out);
    }

    for (size_t i = 0; i < n; ++i) {
        t.g_in[i] = matvec(p.w_1f, t.u[i]);
        add_to(t.g_in[i], p.b_1f);
        t.g_act[i].resize(t.g_in[i].size());
        for (size_t e = 0; e < t.g_in[i].size(); ++e)
            t.g_act[i][e] = gelu(t.g_in[i][e]);
        DVec f = matvec(p.w_2f, t.g_act[i]);
        add_to(f, p.b_2f);
        detail::check_finite(f, "ffn");
        t.z[i] = t.u[i];
        add_to(t.z[i], f);
    }

    t.y_raw = matvec(p.w_out, t.z[n - 1]);
    add_to(t.y_raw, p.b_out);
    detail::check_finite(t.y_raw, "w_out");
    t.y = normalize_or_e0(t.y_raw, &t.r);
    return t.y;
}

/// Reverse pass of fuse_attn_forward. Accumulates parameter gradients into
/// `grad` (same shapes as the params) and returns gradients w.r.t. children.
/// The e_0 fallback branch is locally constant: everything stays zero.
inline std::vector<DVec> fuse_attn_backward(const FuseTape& t, const FuserParams& p,
                                            const DVec& dy, FuserParams& grad) {
    const size_t n = t.n;
    const size_t d_f = p.d_f;
    const size_t h = p.heads;
    const size_t dh = d_f / h;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
    require(dy.size() == p.d, ErrorKind::contract, "fuse_attn_backward: dy dim mismatch");

    std::vector<DVec> dc(n, DVec(p.d, 0.0));
    if (t.r < 1e-30)
        return dc;

    // y = y_raw / r  =>  d y_raw = (dy - y (y . dy)) / r
    DVec dy_raw(p.d);
    double proj = dot_d(t.y, dy);
    for (size_t e = 0; e < p.d; ++e)
        dy_raw[e] = (dy[e] - t.y[e] * proj) / t.r;

    add_outer(grad.w_out, dy_raw, t.z[n - 1]);
    add_to(grad.b_out, dy_raw);

    std::vector<DVec> dz(n, DVec(d_f, 0.0));
    dz[n - 1] = mat_t_vec(p.w_out, dy_raw);

    // feed-forward with residual: z = u + w_2f gelu(w_1f u + b_1f) + b_2f
    std::vector<DVec> du(n, DVec(d_f, 0.0));
    for (size_t i = 0; i < n; ++i) {
        du[i] = dz[i];
        add_outer(grad.w_2f, dz[i], t.g_act[i]);
        add_to(grad.b_2f, dz[i]);
        DVec dg_act = mat_t_vec(p.w_2f, dz[i]);
        DVec dg_in(dg_act.size());
        for (size_t e = 0; e < dg_in.size(); ++e)
            dg_in[e] = dg_act[e] * gelu_grad(t.g_in[i][e]);
        add_outer(grad.w_1f, dg_in, t.u[i]);
        add_to(grad.b_1f, dg_in);
        add_to(du[i], mat_t_vec(p.w_1f, dg_in));
    }

    // attention with residual: u = x + w_o o_pre
    std::vector<DVec> dx(n, DVec(d_f, 0.0));
    std::vector<DVec> dq(n, DVec(d_f, 0.0));
    std::vector<DVec> dk(n, DVec(d_f, 0.0));
    std::vector<DVec> dv(n, DVec(d_f, 0.0));
    for (size_t i = 0; i < n; ++i) {
        dx[i] = du[i];
        add_outer(grad.w_o, du[i], t.o_pre[i]);
        DVec do_pre = mat_t_vec(p.w_o, du[i]);
        for (size_t hd = 0; hd < h; ++hd) {
            const size_t off = hd * dh;
            DVec da(i + 1, 0.0);
            double asum = 0.0;
            for (size_t j = 0; j <= i; ++j) {
                double acc = 0.0;
                for (size_t e = 0; e < dh; ++e)
                    acc += do_pre[off + e] * t.v[j][off + e];
                da[j] = acc;
                double a = t.alpha[i][hd * n + j];
                asum += a * da[j];
                for (size_t e = 0; e < dh; ++e)
                    dv[j][off + e] += a * do_pre[off + e];
            }
            for (size_t j = 0; j <= i; ++j) {
                double a = t.alpha[i][hd * n + j];
                double ds = a * (da[j] - asum) * scale;
                for (size_t e = 0; e < dh; ++e) {
                    dq[i][off + e] += ds * t.k[j][off + e];
                    dk[j][off + e] += ds * t.q[i][off + e];
                }
            }
        }
    }

    for (size_t i = 0; i < n; ++i) {
        add_outer(grad.w_q, dq[i], t.x[i]);
        add_outer(grad.w_k, dk[i], t.x[i]);
        add_outer(grad.w_v, dv[i], t.x[i]);
        add_to(dx[i], mat_t_vec(p.w_q, dq[i]));
        add_to(dx[i], mat_t_vec(p.w_k, dk[i]));
        add_to(dx[i], mat_t_vec(p.w_v, dv[i]));
    }

    for (size_t i = 0; i < n; ++i) {
        add_outer(grad.w_in, dx[i], t.c[i]);
        add_to(grad.b_in, dx[i]);
        dc[i] = mat_t_vec(p.w_in, dx[i]);
    }
    return dc;
}

/// Arithmetic mean of unit children, re-normalized. A single child passes
/// through unchanged; exact cancellation falls back to e_0.
inline Vec fuse_mean(const std::vector<Vec>& children) {
    require(!children.empty(), ErrorKind::contract, "fuse_mean: empty child list");
    const size_t d = children[0].size();
    if (children.size() == 1)
        return children[0];
    DVec acc(d, 0.0);
    for (const Vec& c : children) {
        require(c.size() == d, ErrorKind::contract, "fuse_mean: child dim mismatch");
        for (size_t e = 0; e < d; ++e)
            acc[e] += c[e];
    }
    for (double& x : acc)
        x /= static_cast<double>(children.size());
    return to_f32(normalize_or_e0(acc));
}

inline Vec fuse_attn(const std::vector<Vec>& children, const FuserParams& p) {
    std::vector<DVec> cd(children.size());
    for (size_t i = 0; i < children.size(); ++i)
        cd[i] = to_dvec(children[i]);
    return to_f32(fuse_attn_forward(cd, p));
}

/// Fusion dispatch used by cache construction: the deterministic mean baseline
/// or the trainable attention fuser.
struct Fuser {
    FuserKind kind = FuserKind::mean;
    FuserParams params; // empty for mean

    static Fuser make_mean() { return Fuser{}; }

    static Fuser make_attn(FuserParams p) {
        p.validate();
        return Fuser{FuserKind::attn, std::move(p)};
    }

    Vec fuse(const std::vector<Vec>& children) const {
        return kind == FuserKind::mean ? fuse_mean(children) : fuse_attn(children, params);
    }

    uint64_t digest() const {
        if (kind == FuserKind::mean)
            return StableHash().add_str("fuser:mean").digest();
        return params.digest();
    }
};

} // namespace hef
