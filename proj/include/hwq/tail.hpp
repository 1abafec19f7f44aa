#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace hwq {

// Empirical exceedance probabilities over a threshold grid. Thresholds are
// in scaled units (multiples of n^{1/2} for walk functionals, process units
// for the Gaussian limit). Optional columns are empty when not applicable.
struct TailEstimate {
    std::vector<double> x;
    std::vector<std::int64_t> level; // integer walk levels; empty for Gaussian tails
    std::vector<double> p_hat;
    std::vector<double> ci_half;     // 99% normal-approximation half-widths
    std::vector<double> leak;        // drift-based truncation-leak estimate
    std::vector<double> t_argmax;    // maximizing time (pointwise lower bound)
    std::uint64_t reps = 0;
    double T = 0.0;                  // truncation horizon

    double ci_low(std::size_t j) const {
        double v = p_hat[j] - ci_half[j];
        return v > 0.0 ? v : 0.0;
    }
    double ci_high(std::size_t j) const {
        double v = p_hat[j] + ci_half[j];
        return v < 1.0 ? v : 1.0;
    }
};

inline double ci99_half(double p, std::uint64_t reps) {
    double v = p * (1.0 - p) / static_cast<double>(reps);
    return 2.576 * (v > 0.0 ? std::sqrt(v) : 0.0);
}

} // namespace hwq
