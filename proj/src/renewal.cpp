#include "hwq/renewal.hpp"

#include <cmath>
#include <cstdio>

#include "hwq/errors.hpp"
#include "hwq/parallel.hpp"

namespace hwq {

RenewalStream::RenewalStream(DistSpec dist, Mode mode, RngStream rng, double rate_scale)
    : dist_(dist), mode_(mode), rng_(rng), rate_scale_(rate_scale) {
    if (rate_scale_ <= 0.0) throw ValidationError("renewal: rate_scale must be positive");
    next_time_ = draw_interval();
}

double RenewalStream::draw_interval() {
    double x = (mode_ == Mode::equilibrium && emitted_ == 0) ? dist_.residual_sample(rng_)
                                                            : dist_.sample(rng_);
    return last_time_ + x / rate_scale_;
}

double RenewalStream::next_event() {
    double t = next_time_;
    ++emitted_;
    last_time_ = t;
    next_time_ = draw_interval();
    return t;
}

std::uint64_t RenewalStream::count_at(double t) {
    while (next_time_ <= t) next_event();
    return emitted_;
}

namespace {
// Experiment-id tags for stream derivation; each estimator owns a distinct
// tag so identical master seeds never alias across estimators.
constexpr std::uint64_t kIdCenteredMoment = 0x11;
constexpr std::uint64_t kIdVarianceFn = 0x12;
} // namespace

MomentEstimate centered_moment_mc(const DistSpec& spec, int n, double t, int r,
                                  std::uint64_t reps, std::uint64_t seed, int workers) {
    if (n < 1) throw ValidationError("centered_moment_mc: n must be >= 1");
    if (t < 0.0) throw ValidationError("centered_moment_mc: t must be >= 0");
    if (r < 2) throw ValidationError("centered_moment_mc: moment order must be >= 2");
    if (reps < 1000) throw ValidationError("centered_moment_mc: reps must be >= 1000");
    // All supported families have every moment finite, so no r-th moment
    // check is needed beyond family validation.
    double mu = 1.0 / spec.mean();

    std::size_t nb = block_count(reps);
    std::vector<double> bsum(nb, 0.0), bsum2(nb, 0.0);
    run_blocks(reps, workers, [&](std::uint64_t lo, std::uint64_t hi, std::size_t b) {
        double s = 0.0, s2 = 0.0;
        for (std::uint64_t rep = lo; rep < hi; ++rep) {
            double total = 0.0;
            for (int i = 0; i < n; ++i) {
                RenewalStream st(spec, RenewalStream::Mode::equilibrium,
                                 RngStream::derive(seed, (kIdCenteredMoment << 20) | i, rep));
                total += static_cast<double>(st.count_at(t));
            }
            double dev = std::pow(std::abs(total - mu * n * t), r);
            s += dev;
            s2 += dev * dev;
        }
        bsum[b] = s;
        bsum2[b] = s2;
    });
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t b = 0; b < nb; ++b) { sum += bsum[b]; sum2 += bsum2[b]; }
    double mean = sum / reps;
    double var = std::max(0.0, sum2 / reps - mean * mean);
    return {mean, std::sqrt(var / reps), reps};
}

VarianceTable variance_function(const DistSpec& spec, const std::vector<double>& grid,
                                std::uint64_t reps, std::uint64_t seed, int workers) {
    if (grid.empty() || grid.front() != 0.0)
        throw ValidationError("variance_function: grid must start at 0");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (grid[i] <= grid[i - 1])
            throw ValidationError("variance_function: grid must be strictly increasing");
    if (reps < 10000) throw ValidationError("variance_function: reps must be >= 1e4");
    double mu = 1.0 / spec.mean();
    std::size_t m = grid.size();

    std::size_t nb = block_count(reps);
    std::vector<double> bs2(nb * m, 0.0), bs4(nb * m, 0.0);
    run_blocks(reps, workers, [&](std::uint64_t lo, std::uint64_t hi, std::size_t b) {
        double* s2 = &bs2[b * m];
        double* s4 = &bs4[b * m];
        for (std::uint64_t rep = lo; rep < hi; ++rep) {
            RenewalStream st(spec, RenewalStream::Mode::equilibrium,
                             RngStream::derive(seed, kIdVarianceFn, rep));
            for (std::size_t g = 0; g < m; ++g) {
                double dev = static_cast<double>(st.count_at(grid[g])) - mu * grid[g];
                double d2 = dev * dev;
                s2[g] += d2;
                s4[g] += d2 * d2;
            }
        }
    });

    VarianceTable out;
    out.t = grid;
    out.v_hat.resize(m);
    out.stderror.resize(m);
    out.reps = reps;
    for (std::size_t g = 0; g < m; ++g) {
        double s2 = 0.0, s4 = 0.0;
        for (std::size_t b = 0; b < nb; ++b) { s2 += bs2[b * m + g]; s4 += bs4[b * m + g]; }
        double mean2 = s2 / reps;
        double var2 = std::max(0.0, s4 / reps - mean2 * mean2);
        out.v_hat[g] = mean2;
        out.stderror[g] = std::sqrt(var2 / reps);
    }
    return out;
}

std::optional<double> exact_equilibrium_variance(const DistSpec& spec, double t) {
    if (t <= 0.0) return 0.0;
    switch (spec.family()) {
        case Family::exponential:
            return spec.param(0) * t; // Poisson
        case Family::deterministic: {
            double f = t / spec.param(0);
            f -= std::floor(f);
            return f * (1.0 - f);
        }
        case Family::erlang: {
            // Equilibrium Erlang(k) renewals are every k-th event of a
            // Poisson(rate) stream with a uniform starting phase J in
            // {1..k}: N(t) = floor((M(t)-J)/k)+1 for M >= J, else 0.
            int k = static_cast<int>(spec.param(0));
            double rate = spec.param(1);
            double mu = rate / k;
            double lt = rate * t;
            std::uint64_t m_hi =
                static_cast<std::uint64_t>(lt + 40.0 * std::sqrt(lt + 1.0) + 60.0);
            double log_pmf = -lt; // pmf(0)
            double acc = 0.0;
            for (std::uint64_t m = 0; m <= m_hi; ++m) {
                double pmf = std::exp(log_pmf);
                for (int j = 1; j <= k; ++j) {
                    double nval = (m >= static_cast<std::uint64_t>(j))
                                      ? std::floor(static_cast<double>(m - j) / k) + 1.0
                                      : 0.0;
                    double dev = nval - mu * t;
                    acc += pmf * dev * dev / k;
                }
                log_pmf += std::log(lt) - std::log(static_cast<double>(m + 1));
            }
            return acc;
        }
        default:
            return std::nullopt;
    }
}

void require_arithmetic_grid(const std::vector<double>& grid) {
    if (grid.size() < 2 || grid.front() != 0.0)
        throw ValidationError("grid must start at 0 and have at least two points");
    double dt = grid[1] - grid[0];
    if (dt <= 0.0) throw ValidationError("grid must be strictly increasing");
    for (std::size_t i = 1; i < grid.size(); ++i) {
        double gap = grid[i] - grid[i - 1];
        if (std::abs(gap - dt) > 1e-9 * dt)
            throw ValidationError("grid must be arithmetic (equal spacing)");
    }
}

std::vector<double> covariance_matrix(const std::vector<double>& grid,
                                      const std::vector<double>& v) {
    require_arithmetic_grid(grid);
    if (v.size() != grid.size())
        throw ValidationError("covariance_matrix: V must be given on every grid point");
    std::size_t m = grid.size();
    double dt = grid[1] - grid[0];
    std::vector<double> cov(m * m);
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            // |t_i - t_j| is on-grid because the grid is arithmetic.
            std::size_t gap = static_cast<std::size_t>(
                std::llround((grid[i] - grid[j]) / dt));
            double c = 0.5 * (v[i] + v[j] - v[gap]);
            cov[i * m + j] = c;
            cov[j * m + i] = c;
        }
    }
    return cov;
}

} // namespace hwq
