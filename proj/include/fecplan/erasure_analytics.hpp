#pragma once

// Closed-form residual packet-loss statistics for an (N+K, K) block erasure
// code over a Bernoulli channel: the per-block unrecovered-count pmf, the
// residual loss fraction, loss-vector probabilities, and two run-length
// statistics for the decoded stream (see expected_consecutive_unrecovered
// and episode_mean_run_length for the distinction between them).

#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fecplan/combinatorics.hpp"
#include "fecplan/types.hpp"

namespace fecplan {

// Q(i), i = 0..N: probability that a decoded block has i unrecovered packets.
struct BlockLossPmf {
    std::vector<double> q;

    int n_block() const { return static_cast<int>(q.size()) - 1; }

    double operator[](int i) const { return q[static_cast<std::size_t>(i)]; }

    double total() const { return std::accumulate(q.begin(), q.end(), 0.0); }
};

// A block's run structure (s, a_1..a_j, e): boundary recovery indicators and
// the lengths of the maximal runs of consecutive unrecovered packets.
struct LossVector {
    bool first_recovered = true;   // s
    std::vector<int> runs;         // a_1..a_j, each >= 1
    bool last_recovered = true;    // e

    int total_unrecovered() const { return std::accumulate(runs.begin(), runs.end(), 0); }

    int run_count() const { return static_cast<int>(runs.size()); }

    bool valid_for(int n) const {
        if (runs.empty()) return first_recovered && last_recovered;
        int total = 0;
        for (int a : runs) {
            if (a < 1) return false;
            total += a;
        }
        int s = first_recovered ? 1 : 0;
        int e = last_recovered ? 1 : 0;
        return total + run_count() - 1 + s + e <= n;
    }
};

// --- Theorem 1 -------------------------------------------------------------

// Distribution of the number of unrecovered packets per block. A block with
// i >= 1 unrecovered packets is one where i voice packets were lost and fewer
// than i repair packets arrived; recovery is all-or-nothing.
inline BlockLossPmf block_unrecovered_pmf(const CodeParams& code, const LossModel& loss) {
    code.validate();
    loss.validate();
    const int n = code.n_block;
    const int k = code.k_redundancy;
    const double p = loss.p;
    const double q = 1.0 - p;

    BlockLossPmf pmf;
    pmf.q.assign(static_cast<std::size_t>(n) + 1, 0.0);

    double q0 = 0.0;
    for (int i = 0; i <= k; ++i) q0 += binomial_pmf(n + k, i, p);
    pmf.q[0] = q0;

    for (int i = 1; i <= n; ++i) {
        double voice = binomial_pmf(n, i, p);
        if (i <= k) {
            // fewer than i of the K repair packets received
            double repairs_short = 0.0;
            for (int j = 0; j < i; ++j) repairs_short += binomial_pmf(k, j, q);
            pmf.q[static_cast<std::size_t>(i)] = voice * repairs_short;
        } else {
            pmf.q[static_cast<std::size_t>(i)] = voice;
        }
    }
    return pmf;
}

// --- Corollary 1 (Eq. 1) ---------------------------------------------------

// Residual loss as a fraction; reporting layers multiply by 100 for Ppl.
inline double residual_loss(const CodeParams& code, const LossModel& loss) {
    BlockLossPmf pmf = block_unrecovered_pmf(code, loss);
    double mean = 0.0;
    for (int i = 1; i <= code.n_block; ++i) mean += i * pmf[i];
    return mean / code.n_block;
}

// --- Theorem 2 -------------------------------------------------------------

// Number of block patterns realizing run lengths with total A, j runs and
// boundary indicators (s, e): compositions of the N-A recovered packets into
// gaps (first gap empty iff s=0, last empty iff e=0, inner gaps >= 1).
inline double pattern_gap_count(int n, int unrecovered, int runs, bool first_recovered,
                                bool last_recovered) {
    const int a = unrecovered;
    const int j = runs;
    const int s = first_recovered ? 1 : 0;
    const int e = last_recovered ? 1 : 0;
    if (a == 0) return (j == 0 && s == 1 && e == 1) ? 1.0 : 0.0;
    if (a == n) return (j == 1 && s == 0 && e == 0) ? 1.0 : 0.0;
    if (j < 1) return 0.0;
    return binomial(n - a - 1, j - 2 + s + e);
}

inline double pattern_multiplicity(int n, const LossVector& lv) {
    if (!lv.valid_for(n)) return 0.0;
    return pattern_gap_count(n, lv.total_unrecovered(), lv.run_count(), lv.first_recovered,
                             lv.last_recovered);
}

inline double loss_vector_probability(const CodeParams& code, const BlockLossPmf& pmf,
                                      const LossVector& lv) {
    const int n = code.n_block;
    if (!lv.valid_for(n)) return 0.0;
    const int a = lv.total_unrecovered();
    double mult = pattern_multiplicity(n, lv);
    if (mult == 0.0) return 0.0;
    return mult * pmf[a] / binomial(n, a);
}

inline double loss_vector_probability(const CodeParams& code, const LossModel& loss,
                                      const LossVector& lv) {
    return loss_vector_probability(code, block_unrecovered_pmf(code, loss), lv);
}

// --- Loss-vector enumeration (plumbing for Theorem 3 and tests) ------------

inline constexpr int kMaxEnumerationBlockSize = 20;

namespace detail {
inline void compositions(int total, int parts, std::vector<int>& prefix,
                         const std::function<void(const std::vector<int>&)>& emit) {
    if (parts == 1) {
        prefix.push_back(total);
        emit(prefix);
        prefix.pop_back();
        return;
    }
    for (int first = 1; first <= total - (parts - 1); ++first) {
        prefix.push_back(first);
        compositions(total - first, parts - 1, prefix, emit);
        prefix.pop_back();
    }
}
}  // namespace detail

inline std::vector<std::pair<LossVector, double>> enumerate_loss_vectors(const CodeParams& code,
                                                                         const LossModel& loss) {
    code.validate();
    loss.validate();
    const int n = code.n_block;
    if (n > kMaxEnumerationBlockSize)
        throw std::invalid_argument("enumerate_loss_vectors: N too large to enumerate");

    BlockLossPmf pmf = block_unrecovered_pmf(code, loss);
    std::vector<std::pair<LossVector, double>> out;
    out.push_back({LossVector{true, {}, true}, pmf[0]});

    std::vector<int> prefix;
    for (int a = 1; a <= n; ++a) {
        for (int j = 1; j <= a; ++j) {
            for (int s = 0; s <= 1; ++s) {
                for (int e = 0; e <= 1; ++e) {
                    if (a + (j - 1) + s + e > n) continue;
                    if (pattern_gap_count(n, a, j, s == 1, e == 1) == 0.0) continue;
                    detail::compositions(a, j, prefix, [&](const std::vector<int>& runs) {
                        LossVector lv{s == 1, runs, e == 1};
                        out.push_back({lv, loss_vector_probability(code, pmf, lv)});
                    });
                }
            }
        }
    }
    return out;
}

// --- Theorem 3 -------------------------------------------------------------

// Loss vectors sharing (A, j, s, e) have equal probability; aggregating them
// into classes keeps the chain dynamic program polynomial per term.
struct BlockClass {
    int unrecovered = 0;       // A
    int runs = 0;              // j
    bool first_recovered = false;  // s
    bool last_recovered = false;   // e
    double prob = 0.0;         // total probability of the class
};

inline std::vector<BlockClass> lossy_block_classes(const CodeParams& code,
                                                   const BlockLossPmf& pmf) {
    const int n = code.n_block;
    std::vector<BlockClass> classes;
    for (int a = 1; a <= n; ++a) {
        if (pmf[a] == 0.0) continue;
        const double per_pattern = pmf[a] / binomial(n, a);
        for (int j = 1; j <= a; ++j) {
            const double comps = binomial(a - 1, j - 1);
            for (int s = 0; s <= 1; ++s) {
                for (int e = 0; e <= 1; ++e) {
                    double gaps = pattern_gap_count(n, a, j, s == 1, e == 1);
                    if (gaps == 0.0) continue;
                    classes.push_back({a, j, s == 1, e == 1, comps * gaps * per_pattern});
                }
            }
        }
    }
    return classes;
}

// Per-block aggregates that determine the operational run-length statistic.
struct ChainAggregates {
    double lossy_prob = 0.0;        // W = 1 - Q(0)
    double mean_unrecovered = 0.0;  // E[A]  (unconditional per block)
    double mean_runs = 0.0;         // E[j]
    double first_lost_prob = 0.0;   // P(s = 0)
    double last_lost_prob = 0.0;    // P(e = 0)
};

inline ChainAggregates chain_aggregates(const std::vector<BlockClass>& classes) {
    ChainAggregates agg;
    for (const BlockClass& c : classes) {
        agg.lossy_prob += c.prob;
        agg.mean_unrecovered += c.unrecovered * c.prob;
        agg.mean_runs += c.runs * c.prob;
        if (!c.first_recovered) agg.first_lost_prob += c.prob;
        if (!c.last_recovered) agg.last_lost_prob += c.prob;
    }
    return agg;
}

// One term of the chain sum: unnormalized sums over M_i, the sequences of i
// consecutive lossy blocks, weighted by the product of block probabilities.
// runs_weighted subtracts a merged run whenever a block ends unrecovered and
// the next block starts unrecovered.
struct ChainTerm {
    double ratio_weighted = 0.0;        // sum (U/R) * prod P
    double unrecovered_weighted = 0.0;  // sum U * prod P
    double runs_weighted = 0.0;         // sum R * prod P
    double mass = 0.0;                  // sum prod P  ( = W^i )
};

namespace detail {

// Joint distribution of (total unrecovered, merged run count, last-packet
// state) over chains of lossy blocks, advanced one block at a time.
class ChainDp {
public:
    explicit ChainDp(std::vector<BlockClass> classes, double prune_eps = 1e-18)
        : classes_(std::move(classes)), prune_eps_(prune_eps) {
        for (const BlockClass& c : classes_) {
            add(states_, key(c.unrecovered, c.runs, c.last_recovered), c.prob);
        }
    }

    ChainTerm term() const {
        ChainTerm t;
        for (const auto& [k, p] : states_) {
            const double u = static_cast<double>(k >> 21);
            const double r = static_cast<double>((k >> 1) & 0xfffff);
            t.ratio_weighted += p * u / r;
            t.unrecovered_weighted += p * u;
            t.runs_weighted += p * r;
            t.mass += p;
        }
        return t;
    }

    void advance() {
        std::unordered_map<std::uint64_t, double> next;
        next.reserve(states_.size() * 2);
        for (const auto& [k, p] : states_) {
            const int u = static_cast<int>(k >> 21);
            const int r = static_cast<int>((k >> 1) & 0xfffff);
            const bool last_rec = (k & 1) != 0;
            for (const BlockClass& c : classes_) {
                const int merge = (!last_rec && !c.first_recovered) ? 1 : 0;
                add(next, key(u + c.unrecovered, r + c.runs - merge, c.last_recovered),
                    p * c.prob);
            }
        }
        states_.swap(next);
        if (prune_eps_ > 0.0) {
            for (auto it = states_.begin(); it != states_.end();) {
                if (it->second < prune_eps_) {
                    pruned_mass_ += it->second;
                    it = states_.erase(it);
                } else {
                    ++it;
                }
            }
        }
    }

    double pruned_mass() const { return pruned_mass_; }

private:
    static std::uint64_t key(int u, int r, bool last_recovered) {
        return (static_cast<std::uint64_t>(u) << 21) |
               (static_cast<std::uint64_t>(r) << 1) | (last_recovered ? 1u : 0u);
    }

    static void add(std::unordered_map<std::uint64_t, double>& m, std::uint64_t k, double p) {
        m[k] += p;
    }

    std::vector<BlockClass> classes_;
    double prune_eps_;
    std::unordered_map<std::uint64_t, double> states_;
    double pruned_mass_ = 0.0;
};

// Tail of sum_{i>m} i W^{i-1} in closed form.
inline double geometric_tail_i(double w, int m) {
    const double one_minus = 1.0 - w;
    double wm = 1.0;
    for (int i = 0; i < m; ++i) wm *= w;
    return wm * (m + 1 - m * w) / (one_minus * one_minus);
}

}  // namespace detail

// Exact chain-sum terms for the first `count` chain lengths; exposed for
// validation against direct enumeration and the marginal recurrences.
inline std::vector<ChainTerm> chain_terms(const CodeParams& code, const LossModel& loss,
                                          int count) {
    BlockLossPmf pmf = block_unrecovered_pmf(code, loss);
    detail::ChainDp dp(lossy_block_classes(code, pmf), 0.0);
    std::vector<ChainTerm> terms;
    for (int i = 0; i < count; ++i) {
        terms.push_back(dp.term());
        if (i + 1 < count) dp.advance();
    }
    return terms;
}

struct RunLengthResult {
    std::optional<double> value;
    double error_bound = 0.0;
    int terms_used = 0;
    // i_max exceeded 50 before the tail bound met the tolerance; flagged so
    // callers can report slow convergence of the truncated chain sum.
    bool slow_convergence = false;
};

// Operational mean run length E[C]: total unrecovered packets divided by the
// number of maximal runs, in the long-run decoded stream with runs merged
// across block boundaries. Computed as the ratio of the chain sums
// sum_i sum_{M_i} U prod P and sum_i sum_{M_i} R prod P, whose per-term
// marginals reduce to scalar recurrences in the per-block aggregates; the
// outer sum is truncated once a conservative bound on the remaining ratio
// error drops below `tolerance`. This is the statistic a long simulation
// estimates, and it equals 1/(1-p) exactly when K = 0.
inline RunLengthResult expected_consecutive_unrecovered(const CodeParams& code,
                                                        const LossModel& loss,
                                                        double tolerance) {
    if (!(tolerance > 0.0))
        throw std::invalid_argument("expected_consecutive_unrecovered: tolerance must be > 0");
    BlockLossPmf pmf = block_unrecovered_pmf(code, loss);
    ChainAggregates agg = chain_aggregates(lossy_block_classes(code, pmf));
    const double w = agg.lossy_prob;

    RunLengthResult res;
    if (w <= 0.0 || agg.mean_unrecovered <= 0.0) return res;  // no residual loss

    const double merge = agg.last_lost_prob * agg.first_lost_prob;
    constexpr int kMaxTerms = 20000;
    double su = 0.0;  // sum_i  E[A] * i * W^(i-1)
    double sr = 0.0;  // sum_i (E[j] * i * W^(i-1) - merge * (i-1) * W^(i-2))
    double w_im1 = 1.0;  // W^(i-1)
    double w_im2 = 0.0;  // W^(i-2), zero-coefficient at i = 1
    for (int i = 1; i <= kMaxTerms; ++i) {
        su += agg.mean_unrecovered * i * w_im1;
        sr += agg.mean_runs * i * w_im1 - merge * (i - 1) * w_im2;
        const double tail_i = detail::geometric_tail_i(w, i);
        const double tail_im1 = detail::geometric_tail_i(w, i - 1);
        const double tail_u = agg.mean_unrecovered * tail_i;
        const double tail_r = agg.mean_runs * tail_i + merge * tail_im1;
        const double ratio = su / sr;
        const double err = (tail_u + ratio * tail_r) / sr;
        res.terms_used = i;
        res.error_bound = err;
        if (err < tolerance) {
            res.value = ratio;
            break;
        }
        w_im2 = w_im1;
        w_im1 *= w;
    }
    if (!res.value) res.value = su / sr;  // best effort at kMaxTerms
    res.slow_convergence = res.terms_used > 50;
    return res;
}

// --- Corollary 2 (Eq. 2) ---------------------------------------------------

inline ResidualLossStats burst_ratio(const CodeParams& code, const LossModel& loss,
                                     double tolerance) {
    ResidualLossStats stats;
    stats.ppl_fraction = residual_loss(code, loss);
    RunLengthResult ec = expected_consecutive_unrecovered(code, loss, tolerance);
    if (stats.ppl_fraction > 0.0 && ec.value) {
        stats.expected_run_length = ec.value;
        stats.burst_ratio = *ec.value * (1.0 - stats.ppl_fraction);
        stats.truncation_error_bound = ec.error_bound;
    }
    return stats;
}

// --- Per-episode variant (the statistic tabulated by the analytical model) --

// Mean over loss episodes (maximal chains of consecutive lossy blocks) of the
// episode's own average run length: E[U/R] under the chain distribution
// P(chain content = M_i) = Q(0) (1-Q(0))^(i-1) prod P(lv) / (1-Q(0))^i.
// This weights short episodes more heavily than the operational statistic
// and sits ~0.1 above it for the tabulated code points; it is the value the
// published Eq.-(2) figures correspond to, so table-reproduction checks use
// it while simulators and the E-model consume the operational one.
inline RunLengthResult episode_mean_run_length(const CodeParams& code, const LossModel& loss,
                                               double tolerance, int max_terms = 400) {
    if (!(tolerance > 0.0))
        throw std::invalid_argument("episode_mean_run_length: tolerance must be > 0");
    BlockLossPmf pmf = block_unrecovered_pmf(code, loss);
    std::vector<BlockClass> classes = lossy_block_classes(code, pmf);
    ChainAggregates agg = chain_aggregates(classes);
    const double w = agg.lossy_prob;
    const double q0 = pmf[0];
    const int n = code.n_block;

    RunLengthResult res;
    if (w <= 0.0 || agg.mean_unrecovered <= 0.0) return res;

    detail::ChainDp dp(classes);
    double total = 0.0;
    for (int i = 1; i <= max_terms; ++i) {
        total += dp.term().ratio_weighted;
        // each remaining term is at most (i N) W^i / W after normalization
        const double tail = q0 * n * detail::geometric_tail_i(w, i);
        res.terms_used = i;
        res.error_bound = tail + dp.pruned_mass() * n * max_terms * q0 / w;
        if (res.error_bound < tolerance) break;
        dp.advance();
    }
    res.value = (q0 / w) * total;
    res.slow_convergence = res.terms_used > 50;
    return res;
}

inline std::optional<double> burst_ratio_episode_mean(const CodeParams& code,
                                                      const LossModel& loss, double tolerance) {
    double ppl = residual_loss(code, loss);
    if (ppl <= 0.0) return std::nullopt;
    RunLengthResult ec = episode_mean_run_length(code, loss, tolerance);
    if (!ec.value) return std::nullopt;
    return *ec.value * (1.0 - ppl);
}

}  // namespace fecplan
