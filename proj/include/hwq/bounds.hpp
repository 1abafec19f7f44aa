#pragma once

#include <cstdint>
#include <vector>

#include "hwq/dist.hpp"
#include "hwq/qsim.hpp"
#include "hwq/tail.hpp"

namespace hwq {

// The pooled-process random walk A(t) - sum_i N_i(t) at its jump epochs,
// with running supremum and the always-busy queue's excess over n computed
// both by the one-step recursion and by the reflected (unfolded) form.
struct WalkPath {
    std::vector<double> tau;                  // jump epochs, tau[0] > 0
    std::vector<std::int64_t> x;              // walk value after each jump
    std::vector<std::int64_t> sup;            // running max of (0, x_1, ..., x_k)
    std::vector<std::int64_t> excess_recursion; // max(0, prev + dA - sum dN)
    std::vector<std::int64_t> excess_unfolded;  // x_k - min_{i<=k} x_i
    std::vector<bool> is_arrival;
};

// Forward simulation of the upper-bound walk on [0, T]: equilibrium arrival
// stream rate-scaled by lambda_n against n equilibrium service streams.
WalkPath upper_walk_sup(const DistSpec& a_spec, const DistSpec& s_spec,
                        const HWScaling& scaling, double T, std::uint64_t seed);

// T = kappa * x_max / (B * mu); how far the walk must run before the
// supremum beyond T is negligible under the -B mu sqrt(n) drift.
double truncation_horizon(const HWScaling& scaling, double x_max, double mu,
                          double kappa = 5.0);

// Integer walk level for a scaled threshold: exceeding x means reaching
// x * sqrt(n), with "exceeds 0" meaning reaching level 1.
std::int64_t threshold_level(double x, const HWScaling& scaling);

// P(sup_{t>=0} walk > x sqrt(n)) estimated by truncating at T from the
// truncation rule; reports a drift-based leak estimate per threshold
// (exact hitting probability from the endpoint for the Markov case).
TailEstimate steady_upper_tail(const DistSpec& a_spec, const DistSpec& s_spec,
                               const HWScaling& scaling, const std::vector<double>& thresholds,
                               std::uint64_t reps, std::uint64_t seed, double kappa = 5.0,
                               int workers = 1);

// Poisson-arrival lower bound: P(Z >= n) * max over t_grid of
// P(walk(t) > x sqrt(n)), Z ~ Poisson(lambda_n).
TailEstimate lower_tail(const DistSpec& s_spec, const HWScaling& scaling,
                        const std::vector<double>& t_grid, const std::vector<double>& thresholds,
                        std::uint64_t reps, std::uint64_t seed, int workers = 1);

// Geometric 30-point grid spanning [x_lo/(5 B mu), 5 x_hi/(B mu)], centered
// on the most-likely exceedance time x/(B mu).
std::vector<double> default_t_grid(double B, double mu, double x_lo, double x_hi);

struct LindleyResult {
    double sup = 0.0;  // max_{0<=k<=K} W_{n,k}, W_{n,0} = 0
    double a_n = 0.0;  // 1 - n/lambda_n, computed as (lambda_n - n)/lambda_n
    std::uint64_t steps = 0;
};

// W_{n,k} = k - sum_i N_i(T_k) evaluated at the arrival epochs T_k of the
// rate-scaled equilibrium arrival stream.
LindleyResult lindley_sup(const DistSpec& a_spec, const DistSpec& s_spec,
                          const HWScaling& scaling, std::uint64_t K, std::uint64_t seed,
                          std::uint64_t rep = 0);

// One coupled replication: pooled walk (with the always-busy excess) plus
// the FCFS queue whose servers complete work at the epochs of their own
// renewal streams, spending idle ticks on virtual items. Under that
// coupling Q(t) <= n + excess(t) holds pathwise; it is compared at every
// pooled epoch.
struct CoupledReplication {
    WalkPath walk;
    std::uint64_t epochs = 0;
    std::uint64_t recursion_mismatches = 0; // recursion vs unfolded inequality count
    std::uint64_t dominance_violations = 0; // pooled epochs where Q > Q_tilde
    double lindley_sup_value = 0.0;         // max over arrival epochs (and 0)
    std::int64_t walk_sup_value = 0;        // sup over all pooled epochs (and 0)
};

CoupledReplication coupled_replication(const DistSpec& a_spec, const DistSpec& s_spec,
                                       const HWScaling& scaling, double T, std::uint64_t seed);

} // namespace hwq
