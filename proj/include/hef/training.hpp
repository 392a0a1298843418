#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "hef/cache.hpp"
#include "hef/common.hpp"
#include "hef/embedder.hpp"
#include "hef/fuser.hpp"
#include "hef/linalg.hpp"

namespace hef {

struct FuserTrainConfig {
    double temperature = 0.07;
    double lr = 2e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double weight_decay = 0.01;
    uint32_t warmup_steps = 500;
    uint32_t batch_size = 32;
    uint32_t steps = 1000;
    uint64_t seed = 0;
    double val_fraction = 0.2;
    uint32_t eval_every = 50;

    void validate() const {
        require(temperature > 0.0, ErrorKind::config, "train: temperature must be > 0");
        require(lr >= 0.0, ErrorKind::config, "train: lr must be >= 0");
        require(batch_size >= 2, ErrorKind::config, "train: batch_size must be >= 2");
        require(steps >= 1, ErrorKind::config, "train: steps must be >= 1");
        require(val_fraction >= 0.0 && val_fraction < 1.0, ErrorKind::config,
                "train: val_fraction must be in [0, 1)");
    }
};

/// InfoNCE on unit vectors with cosine scores:
/// -log( exp(s(q,h+)/t) / (exp(s(q,h+)/t) + sum_j exp(s(q,h-_j)/t)) ).
inline double infonce_loss(const Vec& q, const Vec& positive, const std::vector<Vec>& negatives,
                           double tau) {
    require(tau > 0.0, ErrorKind::contract, "infonce: tau must be > 0");
    require(!negatives.empty(), ErrorKind::contract, "infonce: at least one negative required");
    double sp = dot(q, positive) / tau;
    double mx = sp;
    std::vector<double> sn(negatives.size());
    for (size_t i = 0; i < negatives.size(); ++i) {
        sn[i] = dot(q, negatives[i]) / tau;
        mx = std::max(mx, sn[i]);
    }
    double z = std::exp(sp - mx);
    for (double s : sn)
        z += std::exp(s - mx);
    return -(sp - mx) + std::log(z);
}

// --- plan evaluation with tapes ---------------------------------------------

/// A repository prepared for contrastive training: the grouping plan plus
/// frozen chunk vectors in plan leaf order.
struct TrainRepo {
    TreePlan plan;
    std::vector<DVec> leaves;
};

inline TrainRepo make_train_repo(const std::vector<std::pair<std::string, std::string>>& files,
                                 const EmbedderConfig& ecfg, uint32_t b) {
    detail::RepoSnapshot snap = detail::snapshot_from_sources(files, "train");
    require(!snap.files.empty(), ErrorKind::contract, "train repo: no chunks");
    TrainRepo repo;
    repo.plan = build_plan(snap.files, b);
    Embedder embedder(ecfg);
    repo.leaves.reserve(snap.flat_texts.size());
    for (const std::string& text : snap.flat_texts)
        repo.leaves.push_back(to_dvec(embedder.embed(text)));
    return repo;
}

struct PlanTapes {
    std::vector<FuseTape> tapes; // indexed by plan node; leaves unused
    std::vector<DVec> values;
};

/// Evaluates the fusion tree bottom-up with the attention fuser, recording a
/// tape per internal node. Returns the root vector (unit length).
inline DVec eval_plan_tape(const TrainRepo& repo, const FuserParams& params, PlanTapes& out) {
    const auto& nodes = repo.plan.nodes;
    out.tapes.assign(nodes.size(), {});
    out.values.assign(nodes.size(), {});
    for (size_t i = 0; i < nodes.size(); ++i) {
        const PlanNode& pn = nodes[i];
        if (pn.chunk_index >= 0) {
            out.values[i] = repo.leaves.at(static_cast<size_t>(pn.chunk_index));
        } else {
            std::vector<DVec> kids;
            kids.reserve(pn.children.size());
            for (size_t c : pn.children)
                kids.push_back(out.values[c]);
            out.values[i] = fuse_attn_forward(kids, params, &out.tapes[i]);
        }
    }
    return out.values[repo.plan.root];
}

/// Forward-only evaluation (no tapes), shared by loss probes and oracles.
inline DVec eval_plan(const TrainRepo& repo, const FuserParams& params) {
    PlanTapes scratch;
    return eval_plan_tape(repo, params, scratch);
}

/// Backpropagates d L/d root through the whole fusion tree, accumulating
/// parameter gradients. Leaf chunk vectors are constants.
inline void backward_plan(const TrainRepo& repo, const FuserParams& params, const PlanTapes& tapes,
                          const DVec& droot, FuserParams& grad) {
    const auto& nodes = repo.plan.nodes;
    std::vector<DVec> dvalue(nodes.size());
    dvalue[repo.plan.root] = droot;
    for (size_t i = nodes.size(); i-- > 0;) {
        const PlanNode& pn = nodes[i];
        if (pn.chunk_index >= 0 || dvalue[i].empty())
            continue;
        std::vector<DVec> dkids = fuse_attn_backward(tapes.tapes[i], params, dvalue[i], grad);
        for (size_t k = 0; k < pn.children.size(); ++k) {
            size_t c = pn.children[k];
            if (dvalue[c].empty())
                dvalue[c] = std::move(dkids[k]);
            else
                add_to(dvalue[c], dkids[k]);
        }
    }
}

// --- batch contrastive loss and its exact gradient ---------------------------

/// One training sample: a frozen query chunk vector, the query repository's
/// fusion tree (the positive is its root under the current params), and frozen
/// fused vectors of other repositories as negatives.
struct ContrastiveSample {
    DVec query;
    const TrainRepo* own = nullptr;
    std::vector<DVec> negatives;
};

inline double sample_loss_from_root(const DVec& query, const DVec& root,
                                    const std::vector<DVec>& negatives, double tau,
                                    DVec* droot = nullptr) {
    require(!negatives.empty(), ErrorKind::contract, "infonce: at least one negative required");
    double sp = dot_d(query, root) / tau;
    double mx = sp;
    std::vector<double> sn(negatives.size());
    for (size_t i = 0; i < negatives.size(); ++i) {
        sn[i] = dot_d(query, negatives[i]) / tau;
        mx = std::max(mx, sn[i]);
    }
    double z = std::exp(sp - mx);
    for (double s : sn)
        z += std::exp(s - mx);
    if (droot) {
        // d loss / d s_p = softmax_p - 1; only the positive path is learnable
        double coeff = (std::exp(sp - mx) / z - 1.0) / tau;
        droot->assign(query.size(), 0.0);
        for (size_t e = 0; e < query.size(); ++e)
            (*droot)[e] = coeff * query[e];
    }
    return -(sp - mx) + std::log(z);
}

/// Mean InfoNCE over the batch, forward only.
inline double contrastive_loss(const std::vector<ContrastiveSample>& batch,
                               const FuserParams& params, double tau) {
    require(!batch.empty(), ErrorKind::contract, "contrastive: empty batch");
    double total = 0.0;
    for (const ContrastiveSample& s : batch) {
        DVec root = eval_plan(*s.own, params);
        total += sample_loss_from_root(s.query, root, s.negatives, tau);
    }
    return total / static_cast<double>(batch.size());
}

/// Exact analytic gradient of the mean batch InfoNCE loss w.r.t. every fuser
/// parameter. Gradient flows through the positive's whole fusion tree; the
/// negatives are treated as the constants they are handed in as.
inline double contrastive_backward(const std::vector<ContrastiveSample>& batch,
                                   const FuserParams& params, double tau, FuserParams& grad) {
    require(!batch.empty(), ErrorKind::contract, "contrastive: empty batch");
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    double total = 0.0;
    for (const ContrastiveSample& s : batch) {
        PlanTapes tapes;
        DVec root = eval_plan_tape(*s.own, params, tapes);
        DVec droot;
        total += sample_loss_from_root(s.query, root, s.negatives, tau, &droot);
        for (double& x : droot)
            x *= inv_b;
        backward_plan(*s.own, params, tapes, droot, grad);
    }
    return total * inv_b;
}

// --- optimizer ----------------------------------------------------------------

template <class P> inline std::vector<DVec*> param_blocks(P& p) {
    std::vector<DVec*> out;
    p.visit([&](const char*, DVec& v, bool) { out.push_back(&v); });
    return out;
}

template <class P> inline std::vector<bool> param_bias_flags(const P& p) {
    std::vector<bool> out;
    p.visit([&](const char*, const DVec&, bool is_bias) { out.push_back(is_bias); });
    return out;
}

/// AdamW with decoupled weight decay; decay skips bias blocks.
template <class P> class AdamW {
  public:
    AdamW(const P& shape, double beta1, double beta2, double weight_decay, double eps = 1e-8)
        : beta1_(beta1), beta2_(beta2), wd_(weight_decay), eps_(eps), m_(shape), v_(shape) {
        for (DVec* b : param_blocks(m_))
            std::fill(b->begin(), b->end(), 0.0);
        for (DVec* b : param_blocks(v_))
            std::fill(b->begin(), b->end(), 0.0);
    }

    void step(P& params, const P& grad, double lr) {
        ++t_;
        double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        auto pb = param_blocks(params);
        auto gb = param_blocks(const_cast<P&>(grad));
        auto mb = param_blocks(m_);
        auto vb = param_blocks(v_);
        auto bias = param_bias_flags(params);
        for (size_t k = 0; k < pb.size(); ++k) {
            DVec& p = *pb[k];
            const DVec& g = *gb[k];
            DVec& m = *mb[k];
            DVec& v = *vb[k];
            for (size_t i = 0; i < p.size(); ++i) {
                m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
                v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
                double mhat = m[i] / bc1;
                double vhat = v[i] / bc2;
                p[i] -= lr * mhat / (std::sqrt(vhat) + eps_);
                if (!bias[k])
                    p[i] -= lr * wd_ * p[i];
            }
        }
    }

  private:
    double beta1_, beta2_, wd_, eps_;
    uint64_t t_ = 0;
    P m_, v_;
};

/// Linear warmup to the peak lr, then cosine decay to zero.
inline double lr_at(const FuserTrainConfig& cfg, uint32_t step) {
    if (cfg.warmup_steps > 0 && step <= cfg.warmup_steps)
        return cfg.lr * static_cast<double>(step) / static_cast<double>(cfg.warmup_steps);
    if (cfg.steps <= cfg.warmup_steps)
        return cfg.lr;
    double progress = static_cast<double>(step - cfg.warmup_steps) /
                      static_cast<double>(cfg.steps - cfg.warmup_steps);
    return cfg.lr * 0.5 * (1.0 + std::cos(progress * 3.14159265358979323846));
}

struct LossPoint {
    uint32_t step = 0;
    double loss = 0.0;
    double lr = 0.0;
};

struct TrainResult {
    FuserParams params;         // at min validation loss
    FuserParams final_params;   // after the last step
    std::vector<LossPoint> curve;
    double best_val_loss = 0.0;
    uint32_t best_val_step = 0;
};

/// Contrastive pretraining of the attention fuser. Positives are the query
/// repository's fused root recomputed with current params each step; negatives
/// are the in-batch other repositories' roots (held constant per step).
inline TrainResult train_contrastive(const std::vector<TrainRepo>& corpus,
                                     const FuserTrainConfig& cfg, FuserParams init) {
    cfg.validate();
    init.validate();
    require(corpus.size() >= 2, ErrorKind::config,
            "train: need >= 2 repositories to form negatives");
    for (const TrainRepo& r : corpus)
        require(!r.leaves.empty(), ErrorKind::contract, "train: repository without chunks");

    Rng rng(mix64(cfg.seed ^ 0x74726169u));

    // held-out validation queries per repo (seeded, disjoint from training)
    std::vector<std::vector<size_t>> train_ids(corpus.size()), val_ids(corpus.size());
    for (size_t r = 0; r < corpus.size(); ++r) {
        size_t n = corpus[r].leaves.size();
        std::vector<size_t> order(n);
        for (size_t i = 0; i < n; ++i)
            order[i] = i;
        for (size_t i = n; i > 1; --i)
            std::swap(order[i - 1], order[rng.below(i)]);
        size_t n_val = static_cast<size_t>(static_cast<double>(n) * cfg.val_fraction);
        if (n_val >= n)
            n_val = n - 1; // keep at least one training query
        val_ids[r].assign(order.begin(), order.begin() + n_val);
        train_ids[r].assign(order.begin() + n_val, order.end());
    }

    auto validation_loss = [&](const FuserParams& p) {
        std::vector<DVec> roots(corpus.size());
        for (size_t r = 0; r < corpus.size(); ++r)
            roots[r] = eval_plan(corpus[r], p);
        double total = 0.0;
        size_t count = 0;
        for (size_t r = 0; r < corpus.size(); ++r) {
            std::vector<DVec> negs;
            for (size_t o = 0; o < corpus.size(); ++o)
                if (o != r)
                    negs.push_back(roots[o]);
            for (size_t qi : val_ids[r]) {
                total += sample_loss_from_root(corpus[r].leaves[qi], roots[r], negs,
                                               cfg.temperature);
                ++count;
            }
        }
        return count ? total / static_cast<double>(count) : 0.0;
    };

    TrainResult result;
    result.params = init;
    result.best_val_loss = validation_loss(init);
    result.best_val_step = 0;

    FuserParams params = std::move(init);
    AdamW<FuserParams> opt(params, cfg.beta1, cfg.beta2, cfg.weight_decay);

    for (uint32_t step = 1; step <= cfg.steps; ++step) {
        // sample the batch: (repo, train query) pairs
        std::vector<std::pair<size_t, size_t>> picks(cfg.batch_size);
        for (auto& [r, q] : picks) {
            r = rng.below(corpus.size());
            const auto& pool = train_ids[r];
            q = pool[rng.below(pool.size())];
        }
        std::set<size_t> distinct;
        for (const auto& [r, q] : picks) {
            (void)q;
            distinct.insert(r);
        }

        // per-repo tape evaluation, roots shared by positives and negatives
        std::map<size_t, PlanTapes> tapes;
        std::map<size_t, DVec> roots;
        for (size_t r : distinct)
            roots[r] = eval_plan_tape(corpus[r], params, tapes[r]);

        const double inv_b = 1.0 / static_cast<double>(cfg.batch_size);
        std::map<size_t, DVec> droot_by_repo;
        double batch_loss = 0.0;
        for (const auto& [r, q] : picks) {
            std::vector<DVec> negs;
            for (size_t o : distinct)
                if (o != r)
                    negs.push_back(roots[o]);
            if (negs.empty()) {
                // a batch that collapsed onto one repo cannot form negatives;
                // fall back to all other corpus repos for a usable signal
                for (size_t o = 0; o < corpus.size(); ++o)
                    if (o != r)
                        negs.push_back(eval_plan(corpus[o], params));
            }
            DVec droot;
            batch_loss += sample_loss_from_root(corpus[r].leaves[q], roots[r], negs,
                                                cfg.temperature, &droot);
            for (double& x : droot)
                x *= inv_b;
            DVec& acc = droot_by_repo[r];
            if (acc.empty())
                acc = std::move(droot);
            else
                add_to(acc, droot);
        }
        batch_loss *= inv_b;

        FuserParams grad = FuserParams::zeros(params.d, params.d_f, params.heads);
        for (auto& [r, droot] : droot_by_repo)
            backward_plan(corpus[r], params, tapes[r], droot, grad);

        double lr = lr_at(cfg, step);
        opt.step(params, grad, lr);
        result.curve.push_back({step, batch_loss, lr});

        if (step % cfg.eval_every == 0 || step == cfg.steps) {
            double vl = validation_loss(params);
            if (vl < result.best_val_loss) {
                result.best_val_loss = vl;
                result.best_val_step = step;
                result.params = params;
            }
        }
    }
    result.final_params = std::move(params);
    return result;
}

inline void write_loss_csv(const std::vector<LossPoint>& curve, const std::string& path) {
    std::ofstream out(path);
    require(out.good(), ErrorKind::io, "cannot open loss curve output: " + path);
    out << "step,loss,lr\n";
    for (const LossPoint& p : curve)
        out << p.step << ',' << p.loss << ',' << p.lr << '\n';
    require(out.good(), ErrorKind::io, "failed writing loss curve: " + path);
}

} // namespace hef
