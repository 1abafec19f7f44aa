#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hwq/dist.hpp"
#include "hwq/tail.hpp"

namespace hwq {

struct RepairLog {
    bool repaired = false;
    int clipped = 0;        // eigenvalues clipped to zero
    double max_shift = 0.0; // largest spectral shift applied
    double trace = 0.0;
    double jitter = 0.0;
};

// Centered Gaussian limit process on an arithmetic grid: covariance
// Sigma(s,t) = mu c2A min(s,t) + [V(s)+V(t)-V(|t-s|)]/2 with drift -B mu t.
// The t=0 point (where the process is identically 0) is dropped from the
// factorized system. Immutable after construction.
struct GaussGrid {
    std::vector<double> t; // positive grid points
    double dt = 0.0;
    double mu = 0.0;
    double c2A = 0.0;
    double c2S = 0.0;
    double B = 0.0;
    std::vector<double> drift;      // -B mu t_i
    std::vector<double> sigma_diag; // mu c2A t_i + V(t_i)
    std::vector<double> L;          // packed lower-triangular Cholesky factor
    RepairLog repair;

    std::size_t m() const { return t.size(); }
};

// Assembles and factorizes the covariance. V comes from the closed forms
// where available (exponential, deterministic, Erlang service) and from
// Monte Carlo estimation otherwise; a Monte Carlo V whose PSD repair would
// shift the spectrum by more than 1e-6 * trace raises NumericError.
GaussGrid build_grid(double c2A, const DistSpec& service, double B, double mu,
                     const std::vector<double>& grid, std::uint64_t reps_for_V,
                     std::uint64_t seed, int workers = 1);

// One sampled path (values at the grid points), for property tests.
std::vector<double> sample_path(const GaussGrid& grid, RngStream& rng);

// P(max over the grid of the drifted process > x) by Monte Carlo; the grid
// maximum under-estimates the continuous supremum (documented downward
// discretization bias).
TailEstimate sample_sup(const GaussGrid& grid, std::uint64_t reps,
                        const std::vector<double>& thresholds, std::uint64_t seed,
                        int workers = 1);

struct PointwiseTail {
    std::vector<double> x;
    std::vector<double> p;        // max over grid of the exact Gaussian tail
    std::vector<double> t_argmax;
    std::vector<std::string> warning; // non-empty when the grid misses x/(B mu)
};

PointwiseTail pointwise_sup_tail(const GaussGrid& grid, const std::vector<double>& thresholds);

struct ExponentFit {
    double slope = 0.0;
    double slope_se = 0.0;
    double target = 0.0;
    double zscore = 0.0;
    int used_points = 0;
    double x_lo = 0.0;
    double x_hi = 0.0;
};

// Weighted least-squares slope of log p-hat against x over [x_lo, x_hi],
// using only thresholds with p-hat * reps >= 50. Needs >= 4 usable points.
ExponentFit fit_exponent(const TailEstimate& tail, double x_lo, double x_hi, double target);

// Classical lower bounds on the standard normal tail.
double tail_bound_ratio(double y); // (2/pi)^{1/2} exp(-y^2/2) / (y + (y^2+4)^{1/2})
double tail_bound_exp(double y);   // exp(-y^2/2 - y)
bool tail_lower_bound_check(double y);

} // namespace hwq
