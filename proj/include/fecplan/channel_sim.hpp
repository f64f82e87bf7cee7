#pragma once

// Monte Carlo simulation of the erasure-coded Bernoulli channel at the
// loss-pattern level. Blocks are independent; per block one Bernoulli draw is
// made for each of the N+K packets in send order (voice 0..N-1, then repairs),
// so a run is reproducible bit-for-bit from its SimConfig. Decoding uses the
// counting rule only (received >= N recovers everything); it shares no code
// with the byte-level Reed-Solomon path in stream_emulator.hpp.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "fecplan/rng.hpp"
#include "fecplan/types.hpp"

namespace fecplan {

struct SimConfig {
    CodeParams code;
    LossModel loss;
    std::uint64_t num_blocks = 1;
    std::uint64_t seed = 0;

    void validate() const {
        code.validate();
        loss.validate();
        if (num_blocks < 1) throw std::invalid_argument("SimConfig: num_blocks must be >= 1");
        if (code.total_packets() > 64)
            throw std::invalid_argument("SimConfig: N+K > 64 not supported by the mask simulator");
    }
};

struct SimConfidence {
    double ppl_stderr = 0.0;         // on the loss fraction
    double run_length_stderr = 0.0;  // batch-means, on the mean run length
    double burst_ratio_stderr = 0.0;
};

struct SimResult {
    ResidualLossStats stats;  // estimates
    std::uint64_t packets_sent = 0;
    std::uint64_t packets_unrecovered = 0;
    std::uint64_t run_count = 0;
    std::map<int, std::uint64_t> run_length_histogram;
    SimConfidence confidence;
};

// All-or-nothing MDS rule on a received mask (true = received). Positions
// 0..N-1 are voice, N..N+K-1 repair.
inline std::vector<bool> decode_block(const std::vector<bool>& received_mask,
                                      const CodeParams& code) {
    code.validate();
    if (static_cast<int>(received_mask.size()) != code.total_packets())
        throw std::invalid_argument("decode_block: mask length must be N+K");
    int received = 0;
    for (bool r : received_mask) received += r ? 1 : 0;
    std::vector<bool> recovered(static_cast<std::size_t>(code.n_block));
    for (int i = 0; i < code.n_block; ++i)
        recovered[static_cast<std::size_t>(i)] = received >= code.n_block || received_mask[static_cast<std::size_t>(i)];
    return recovered;
}

namespace detail {

// Tracks maximal runs of unrecovered packets across block boundaries and
// attributes each run to the batch in which it ends.
class RunAccumulator {
public:
    explicit RunAccumulator(std::uint64_t num_batches) : batch_runs_(num_batches, 0),
                                                         batch_unrecovered_(num_batches, 0) {}

    void feed(bool unrecovered, std::uint64_t batch) {
        if (unrecovered) {
            ++current_;
        } else if (current_ > 0) {
            close_run(batch);
        }
    }

    void finish(std::uint64_t last_batch) {
        if (current_ > 0) close_run(last_batch);
    }

    const std::map<int, std::uint64_t>& histogram() const { return histogram_; }
    std::uint64_t run_count() const { return runs_; }
    std::uint64_t total_unrecovered() const { return total_; }

    // Batch-means standard error of the mean run length.
    double mean_stderr() const {
        std::vector<double> means;
        for (std::size_t b = 0; b < batch_runs_.size(); ++b) {
            if (batch_runs_[b] > 0)
                means.push_back(static_cast<double>(batch_unrecovered_[b]) /
                                static_cast<double>(batch_runs_[b]));
        }
        if (means.size() < 2) return 0.0;
        double mean = 0.0;
        for (double m : means) mean += m;
        mean /= static_cast<double>(means.size());
        double var = 0.0;
        for (double m : means) var += (m - mean) * (m - mean);
        var /= static_cast<double>(means.size() - 1);
        return std::sqrt(var / static_cast<double>(means.size()));
    }

private:
    void close_run(std::uint64_t batch) {
        ++histogram_[current_];
        ++runs_;
        total_ += static_cast<std::uint64_t>(current_);
        if (batch < batch_runs_.size()) {
            ++batch_runs_[batch];
            batch_unrecovered_[batch] += static_cast<std::uint64_t>(current_);
        }
        current_ = 0;
    }

    int current_ = 0;
    std::uint64_t runs_ = 0;
    std::uint64_t total_ = 0;
    std::map<int, std::uint64_t> histogram_;
    std::vector<std::uint64_t> batch_runs_;
    std::vector<std::uint64_t> batch_unrecovered_;
};

}  // namespace detail

inline SimResult simulate_stream(const SimConfig& cfg) {
    cfg.validate();
    const int n = cfg.code.n_block;
    const int total = cfg.code.total_packets();
    const double p = cfg.loss.p;

    Rng rng(cfg.seed);
    constexpr std::uint64_t kBatches = 100;
    const std::uint64_t blocks_per_batch = (cfg.num_blocks + kBatches - 1) / kBatches;
    detail::RunAccumulator runs(kBatches);

    std::uint64_t unrecovered_total = 0;
    double sum_sq_block = 0.0;  // for the Ppl standard error

    for (std::uint64_t b = 0; b < cfg.num_blocks; ++b) {
        std::uint64_t received = 0;
        int received_count = 0;
        for (int i = 0; i < total; ++i) {
            if (!rng.bernoulli(p)) {
                received |= (1ULL << i);
                ++received_count;
            }
        }
        const std::uint64_t batch = b / blocks_per_batch;
        int block_unrecovered = 0;
        if (received_count >= n) {
            // whole block recovered
            for (int i = 0; i < n; ++i) runs.feed(false, batch);
        } else {
            for (int i = 0; i < n; ++i) {
                const bool lost = (received & (1ULL << i)) == 0;
                block_unrecovered += lost ? 1 : 0;
                runs.feed(lost, batch);
            }
        }
        unrecovered_total += static_cast<std::uint64_t>(block_unrecovered);
        sum_sq_block += static_cast<double>(block_unrecovered) * block_unrecovered;
    }
    runs.finish(kBatches - 1);

    SimResult res;
    res.packets_sent = cfg.num_blocks * static_cast<std::uint64_t>(n);
    res.packets_unrecovered = unrecovered_total;
    res.run_count = runs.run_count();
    res.run_length_histogram = runs.histogram();

    const double nb = static_cast<double>(cfg.num_blocks);
    const double mean_block = static_cast<double>(unrecovered_total) / nb;
    res.stats.ppl_fraction = mean_block / n;
    const double var_block = nb > 1 ? (sum_sq_block - nb * mean_block * mean_block) / (nb - 1) : 0.0;
    res.confidence.ppl_stderr = std::sqrt(std::max(var_block, 0.0) / nb) / n;

    if (runs.run_count() > 0) {
        const double mean_run = static_cast<double>(unrecovered_total) /
                                static_cast<double>(runs.run_count());
        res.stats.expected_run_length = mean_run;
        res.stats.burst_ratio = mean_run * (1.0 - res.stats.ppl_fraction);
        const double se_run = runs.mean_stderr();
        res.confidence.run_length_stderr = se_run;
        const double se_b1 = (1.0 - res.stats.ppl_fraction) * se_run;
        const double se_b2 = mean_run * res.confidence.ppl_stderr;
        res.confidence.burst_ratio_stderr = std::sqrt(se_b1 * se_b1 + se_b2 * se_b2);
    }
    return res;
}

inline std::map<int, std::uint64_t> run_length_histogram(const SimConfig& cfg) {
    return simulate_stream(cfg).run_length_histogram;
}

}  // namespace fecplan
