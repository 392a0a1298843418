#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "hef/common.hpp"
#include "hef/tokenizer.hpp"

#include "json.hpp"

namespace hef {

/// Add-k-smoothed n-gram reference model. Frozen after fit; every context of
/// every length up to order-1 gets its own count table so the running window
/// at scoring time always has an exact match length.
class NgramLm {
  public:
    static constexpr uint32_t kUnk = 0;

    NgramLm() = default;

    uint32_t order() const { return order_; }
    double add_k() const { return add_k_; }
    size_t vocab_size() const { return vocab_.size() + 1; } // + <unk>
    bool fitted() const { return fitted_; }

    uint32_t token_id(const std::string& token) const {
        auto it = vocab_.find(token);
        return it == vocab_.end() ? kUnk : it->second;
    }

    /// p(token | context window), add-k smoothed. An unseen context has total
    /// count 0 and degenerates to the uniform floor 1/V.
    double prob(const std::vector<uint32_t>& window, uint32_t token) const {
        require(fitted_, ErrorKind::contract, "ngram lm: not fitted");
        double c = 0.0, total = 0.0;
        const auto& table = tables_.at(window.size());
        auto it = table.find(window);
        if (it != table.end()) {
            total = static_cast<double>(it->second.total);
            auto jt = it->second.next.find(token);
            if (jt != it->second.next.end())
                c = static_cast<double>(jt->second);
        }
        double v = static_cast<double>(vocab_size());
        return (c + add_k_) / (total + add_k_ * v);
    }

    /// Sums log p over every context of every table; used by normalization
    /// property checks. Each context distribution must sum to one over vocab.
    double max_normalization_error() const {
        require(fitted_, ErrorKind::contract, "ngram lm: not fitted");
        double worst = 0.0;
        for (const auto& table : tables_) {
            for (const auto& [ctx, entry] : table) {
                (void)entry;
                double sum = 0.0;
                for (uint32_t t = 0; t < vocab_size(); ++t)
                    sum += prob(ctx, t);
                worst = std::max(worst, std::abs(sum - 1.0));
            }
        }
        return worst;
    }

    friend NgramLm fit_lm(const std::vector<std::vector<std::string>>& corpus, uint32_t order,
                          double add_k);

  private:
    struct Entry {
        uint64_t total = 0;
        std::map<uint32_t, uint64_t> next;
    };
    using Table = std::map<std::vector<uint32_t>, Entry>;

    uint32_t order_ = 3;
    double add_k_ = 0.5;
    bool fitted_ = false;
    std::unordered_map<std::string, uint32_t> vocab_; // token -> id, ids from 1
    std::vector<Table> tables_;                       // indexed by context length
};

/// Fits count tables for all context lengths 0..order-1. Vocabulary ids are
/// assigned in first-seen corpus order, so refitting the same corpus yields
/// identical tables. Sequences are not padded; short starts land in the
/// shorter-context tables naturally.
inline NgramLm fit_lm(const std::vector<std::vector<std::string>>& corpus, uint32_t order = 3,
                      double add_k = 0.5) {
    require(!corpus.empty(), ErrorKind::contract, "fit_lm: empty corpus");
    require(order >= 1, ErrorKind::config, "fit_lm: order must be >= 1");
    require(add_k > 0.0, ErrorKind::config, "fit_lm: add_k must be > 0");
    bool any = false;
    for (const auto& seq : corpus)
        any = any || !seq.empty();
    require(any, ErrorKind::contract, "fit_lm: empty corpus");

    NgramLm lm;
    lm.order_ = order;
    lm.add_k_ = add_k;
    lm.tables_.assign(order, {});
    for (const auto& seq : corpus)
        for (const std::string& tok : seq)
            if (!lm.vocab_.count(tok))
                lm.vocab_.emplace(tok, static_cast<uint32_t>(lm.vocab_.size() + 1));

    for (const auto& seq : corpus) {
        std::vector<uint32_t> ids(seq.size());
        for (size_t i = 0; i < seq.size(); ++i)
            ids[i] = lm.vocab_.at(seq[i]);
        for (size_t i = 0; i < ids.size(); ++i) {
            size_t max_len = std::min<size_t>(order - 1, i);
            for (size_t len = 0; len <= max_len; ++len) {
                std::vector<uint32_t> ctx(ids.begin() + (i - len), ids.begin() + i);
                NgramLm::Entry& e = lm.tables_[len][ctx];
                e.total += 1;
                e.next[ids[i]] += 1;
            }
        }
    }
    lm.fitted_ = true;
    return lm;
}

/// Sum of per-token conditional log probabilities of y* given a running
/// context window of size order-1 seeded by the conditioning suffix.
inline double log_likelihood(const NgramLm& lm, const std::vector<std::string>& target,
                             const std::vector<std::string>& conditioning) {
    require(lm.fitted(), ErrorKind::contract, "log_likelihood: lm not fitted");
    if (target.empty())
        return 0.0;
    size_t w = lm.order() - 1;
    std::vector<uint32_t> window;
    size_t start = conditioning.size() > w ? conditioning.size() - w : 0;
    for (size_t i = start; i < conditioning.size(); ++i)
        window.push_back(lm.token_id(conditioning[i]));
    double total = 0.0;
    for (const std::string& tok : target) {
        uint32_t id = lm.token_id(tok);
        total += std::log(lm.prob(window, id));
        window.push_back(id);
        if (window.size() > w)
            window.erase(window.begin());
    }
    return total;
}

inline double sigmoid(double x) {
    if (x >= 0.0)
        return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

struct UwlRecord {
    double delta = 0.0;
    double uwl = 0.0;
    bool kept = false;
    std::string prefix_id;
    std::string chunk_id;
    std::string completion_id;
};

/// Whether the candidate context is concatenated before or after the prefix
/// when conditioning the reference model. Context-first is the default.
enum class ConditioningOrder : uint8_t { context_then_prefix = 0, prefix_then_context = 1 };

/// Delta = log p(y*|x,c) - log p(y*|x); uwl = sigmoid(delta); kept at the
/// threshold. Empty c makes both conditionings identical, so delta is an
/// exact zero, not a near-zero.
inline UwlRecord uwl_score(const NgramLm& lm, const std::vector<std::string>& x,
                           const std::vector<std::string>& c, const std::vector<std::string>& y,
                           double threshold = 0.55,
                           ConditioningOrder order = ConditioningOrder::context_then_prefix) {
    UwlRecord rec;
    double base = log_likelihood(lm, y, x);
    if (c.empty()) {
        rec.delta = 0.0;
    } else {
        std::vector<std::string> joint;
        joint.reserve(c.size() + x.size());
        if (order == ConditioningOrder::context_then_prefix) {
            joint.insert(joint.end(), c.begin(), c.end());
            joint.insert(joint.end(), x.begin(), x.end());
        } else {
            joint.insert(joint.end(), x.begin(), x.end());
            joint.insert(joint.end(), c.begin(), c.end());
        }
        rec.delta = log_likelihood(lm, y, joint) - base;
    }
    rec.uwl = sigmoid(rec.delta);
    rec.kept = rec.uwl >= threshold;
    return rec;
}

/// One candidate training pair: prefix x, candidate context c (a retrieved
/// chunk), and gold completion y*, all as raw text tokenized on demand.
struct UwlPair {
    std::string prefix_id;
    std::string chunk_id;
    std::string completion_id;
    std::string prefix;
    std::string context;
    std::string completion;
};

struct FilterResult {
    std::vector<UwlPair> kept; // input order preserved
    std::vector<UwlRecord> records;
};

inline FilterResult filter_pairs(const std::vector<UwlPair>& pairs, const NgramLm& lm,
                                 double threshold = 0.55,
                                 ConditioningOrder order = ConditioningOrder::context_then_prefix) {
    FilterResult out;
    out.records.reserve(pairs.size());
    for (const UwlPair& p : pairs) {
        UwlRecord rec = uwl_score(lm, content_token_texts(p.prefix),
                                  content_token_texts(p.context),
                                  content_token_texts(p.completion), threshold, order);
        rec.prefix_id = p.prefix_id;
        rec.chunk_id = p.chunk_id;
        rec.completion_id = p.completion_id;
        if (rec.kept)
            out.kept.push_back(p);
        out.records.push_back(std::move(rec));
    }
    return out;
}

inline void write_uwl_report(const std::vector<UwlRecord>& records, const std::string& path) {
    std::ofstream out(path);
    require(out.good(), ErrorKind::io, "cannot open uwl report output: " + path);
    for (size_t i = 0; i < records.size(); ++i) {
        const UwlRecord& r = records[i];
        nlohmann::ordered_json line;
        line["prefix_id"] = r.prefix_id;
        line["chunk_id"] = r.chunk_id;
        line["delta"] = r.delta;
        line["uwl"] = r.uwl;
        line["kept"] = r.kept;
        out << line.dump() << '\n';
        require(out.good(), ErrorKind::io,
                "uwl report: write failed at record " + std::to_string(i));
    }
}

} // namespace hef
