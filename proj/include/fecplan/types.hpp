#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace fecplan {

// (N+K, K) block erasure code: N voice packets per block followed by K
// repair packets. Any N of the N+K packets reconstruct all N sources.
struct CodeParams {
    int n_block = 1;       // N
    int k_redundancy = 0;  // K

    void validate() const {
        if (n_block < 1) throw std::invalid_argument("CodeParams: N must be >= 1");
        if (k_redundancy < 0) throw std::invalid_argument("CodeParams: K must be >= 0");
    }

    // K >= N is legal but wasteful compared to simple repetition; callers
    // surface this as a warning, not an error.
    std::optional<std::string> warning() const {
        if (k_redundancy >= n_block && k_redundancy > 0)
            return "K >= N: repetition coding would be at least as strong per unit bandwidth";
        return std::nullopt;
    }

    int total_packets() const { return n_block + k_redundancy; }
};

// I.i.d. per-packet network loss with probability p.
struct LossModel {
    double p = 0.0;

    void validate() const {
        if (!(p >= 0.0) || !(p < 1.0))
            throw std::invalid_argument("LossModel: p must lie in [0, 1)");
    }
};

// Residual loss statistics after erasure decoding. ppl is kept as a
// fraction internally; reporting layers multiply by 100. expected_run_length
// and burst_ratio are undefined (nullopt) when residual loss is zero.
struct ResidualLossStats {
    double ppl_fraction = 0.0;
    std::optional<double> expected_run_length;
    std::optional<double> burst_ratio;
    double truncation_error_bound = 0.0;
};

}  // namespace fecplan
