#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace fecplan {

// C(n,k) exactly in 64-bit integer arithmetic for n <= 64 (C(64,32) < 2^61),
// falling back to lgamma for anything larger.
inline double binomial(int n, int k) {
    if (k < 0 || k > n || n < 0) return 0.0;
    if (k == 0 || k == n) return 1.0;
    if (k > n - k) k = n - k;
    if (n <= 64) {
        std::uint64_t c = 1;
        for (int i = 1; i <= k; ++i) {
            // c * (n-k+i) never overflows: intermediate stays below C(64,32)*64
            c = c * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
        }
        return static_cast<double>(c);
    }
    return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
}

// C(n,k) p^k (1-p)^(n-k); the k-th Bernoulli(n,p) count probability.
inline double binomial_pmf(int n, int k, double p) {
    if (k < 0 || k > n) return 0.0;
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("binomial_pmf: p outside [0,1]");
    double v = binomial(n, k);
    for (int i = 0; i < k; ++i) v *= p;
    for (int i = 0; i < n - k; ++i) v *= (1.0 - p);
    return v;
}

}  // namespace fecplan
