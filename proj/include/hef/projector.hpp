#pragma once

#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "hef/chunker.hpp"
#include "hef/common.hpp"
#include "hef/linalg.hpp"

namespace hef {

/// Two-layer MLP with GELU mapping retrieved node vectors to pseudo-tokens in
/// the generator's embedding dimension d_g.
struct ProjectorParams {
    uint32_t d = 0;        // input dim
    uint32_t d_hidden = 128;
    uint32_t d_g = 64;

    DMat w_1; // d_hidden x d
    DVec b_1; // d_hidden
    DMat w_2; // d_g x d_hidden
    DVec b_2; // d_g

    static ProjectorParams zeros(uint32_t d, uint32_t d_hidden, uint32_t d_g) {
        require(d >= 1 && d_hidden >= 1 && d_g >= 1, ErrorKind::config,
                "projector: dims must be >= 1");
        ProjectorParams p;
        p.d = d;
        p.d_hidden = d_hidden;
        p.d_g = d_g;
        p.w_1 = DMat(d_hidden, d);
        p.b_1.assign(d_hidden, 0.0);
        p.w_2 = DMat(d_g, d_hidden);
        p.b_2.assign(d_g, 0.0);
        return p;
    }

    static ProjectorParams init(uint32_t d, uint32_t d_hidden, uint32_t d_g, uint64_t seed) {
        ProjectorParams p = zeros(d, d_hidden, d_g);
        Rng rng(mix64(seed ^ 0x70726f6au));
        init_scaled_normal(p.w_1, rng);
        init_scaled_normal(p.w_2, rng);
        return p;
    }

    template <class F> void visit(F&& f) {
        f("w_1", w_1.a, false);
        f("b_1", b_1, true);
        f("w_2", w_2.a, false);
        f("b_2", b_2, true);
    }

    template <class F> void visit(F&& f) const {
        const_cast<ProjectorParams*>(this)->visit([&](const char* n, DVec& v, bool b) {
            f(n, static_cast<const DVec&>(v), b);
        });
    }

    void validate() const {
        require(w_1.rows == d_hidden && w_1.cols == d && w_2.rows == d_g && w_2.cols == d_hidden,
                ErrorKind::contract, "projector params: inconsistent shapes");
        bool finite = true;
        visit([&](const char*, const DVec& v, bool) { finite = finite && all_finite(v); });
        require(finite, ErrorKind::invariant, "projector params: non-finite values");
    }

    uint64_t digest() const {
        StableHash h;
        h.add_str("projector").add_u64(d).add_u64(d_hidden).add_u64(d_g);
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

struct ProjectorTape {
    DVec z;     // input
    DVec a_in;  // w_1 z + b_1
    DVec a_act; // gelu(a_in)
    DVec p;     // output
};

/// p = w_2 gelu(w_1 z + b_1) + b_2.
inline DVec project_forward(const DVec& z, const ProjectorParams& params,
                            ProjectorTape* tape = nullptr) {
    require(z.size() == params.d, ErrorKind::contract, "projector: input dim mismatch");
    ProjectorTape local;
    ProjectorTape& t = tape ? *tape : local;
    t.z = z;
    t.a_in = matvec(params.w_1, z);
    add_to(t.a_in, params.b_1);
    t.a_act.resize(t.a_in.size());
    for (size_t i = 0; i < t.a_in.size(); ++i)
        t.a_act[i] = gelu(t.a_in[i]);
    t.p = matvec(params.w_2, t.a_act);
    add_to(t.p, params.b_2);
    return t.p;
}

/// Exact backprop through the MLP given the downstream gradient d L/d p.
/// Accumulates parameter gradients into `grad`, returns d L/d z.
inline DVec project_backward(const ProjectorTape& t, const ProjectorParams& params, const DVec& dp,
                             ProjectorParams& grad) {
    require(dp.size() == params.d_g, ErrorKind::contract, "projector: dp dim mismatch");
    add_outer(grad.w_2, dp, t.a_act);
    add_to(grad.b_2, dp);
    DVec da_act = mat_t_vec(params.w_2, dp);
    DVec da_in(da_act.size());
    for (size_t i = 0; i < da_in.size(); ++i)
        da_in[i] = da_act[i] * gelu_grad(t.a_in[i]);
    add_outer(grad.w_1, da_in, t.z);
    add_to(grad.b_1, da_in);
    return mat_t_vec(params.w_1, da_in);
}

/// Sum of per-row parameter gradients for a batch of (input, incoming gradient)
/// pairs; rows are independent, so the reduction is a plain ordered sum.
inline ProjectorParams projector_gradient(const std::vector<std::pair<DVec, DVec>>& batch,
                                          const ProjectorParams& params) {
    ProjectorParams grad = ProjectorParams::zeros(params.d, params.d_hidden, params.d_g);
    for (const auto& [z, dp] : batch) {
        ProjectorTape tape;
        project_forward(z, params, &tape);
        project_backward(tape, params, dp, grad);
    }
    return grad;
}

/// The fixed-budget result of one query: m pseudo-token rows plus per-row
/// provenance back to hierarchy nodes and their source spans.
struct PseudoTokenBlock {
    uint32_t m = 0;
    uint32_t d_g = 0;
    std::vector<float> tokens; // m x d_g, row-major

    struct Provenance {
        uint64_t node_id = 0;
        uint32_t level = 0;
        double score = 0.0;
        std::vector<SpanRef> span_refs;
    };
    std::vector<Provenance> provenance;
    std::optional<EntityList> entity_suffix;

    std::span<const float> row(size_t i) const {
        return {tokens.data() + i * size_t(d_g), size_t(d_g)};
    }
};

} // namespace hef
