#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "hwq/dist.hpp"

namespace hwq {

// Ordinary or equilibrium renewal event-time generator. Equilibrium mode
// draws the first interval from the residual-life law, giving the counting
// process stationary increments. rate_scale multiplies the event rate
// (intervals are divided by it), which is how the arrival process gets its
// lambda_n time scaling.
class RenewalStream {
public:
    enum class Mode { ordinary, equilibrium };

    RenewalStream(DistSpec dist, Mode mode, RngStream rng, double rate_scale = 1.0);

    // Time of the next event, consuming it.
    double next_event();

    // Time of the next event without consuming it.
    double peek() const { return next_time_; }

    // N(t): number of events in [0, t], right-continuous. Only advances.
    std::uint64_t count_at(double t);

    std::uint64_t emitted() const { return emitted_; }
    double last_time() const { return last_time_; }
    const DistSpec& dist() const { return dist_; }

private:
    double draw_interval();

    DistSpec dist_;
    Mode mode_;
    RngStream rng_;
    double rate_scale_;
    std::uint64_t emitted_ = 0;
    double last_time_ = 0.0;
    double next_time_ = 0.0;
};

struct MomentEstimate {
    double estimate = 0.0;
    double stderror = 0.0;
    std::uint64_t reps = 0;
};

// Monte Carlo estimate of E| sum_i N_e,i(t) - mu n t |^r over n i.i.d.
// equilibrium streams.
MomentEstimate centered_moment_mc(const DistSpec& spec, int n, double t, int r,
                                  std::uint64_t reps, std::uint64_t seed, int workers = 1);

struct VarianceTable {
    std::vector<double> t;
    std::vector<double> v_hat;   // E[(N_e(t) - mu t)^2]
    std::vector<double> stderror;
    std::uint64_t reps = 0;
};

// Pointwise Monte Carlo estimate of V(t) = Var(N_e(t)) on a grid starting
// at 0. No smoothing: the true V need not be concave for lattice laws.
VarianceTable variance_function(const DistSpec& spec, const std::vector<double>& grid,
                                std::uint64_t reps, std::uint64_t seed, int workers = 1);

// Closed-form V(t) where available: exponential (Poisson, V = mu t),
// deterministic (fractional-part law), Erlang (thinned-Poisson phase
// representation, exact summation). Empty for the other families.
std::optional<double> exact_equilibrium_variance(const DistSpec& spec, double t);

// Cov(s,t) = [V(s)+V(t)-V(|t-s|)]/2 on an arithmetic grid, valid by the
// stationary increments of the equilibrium process. v[i] must be V(grid[i]),
// grid[0] = 0. Returns a dense row-major m-by-m matrix.
std::vector<double> covariance_matrix(const std::vector<double>& grid,
                                      const std::vector<double>& v);

// Throws ValidationError unless the grid is arithmetic starting at 0.
void require_arithmetic_grid(const std::vector<double>& grid);

} // namespace hwq
