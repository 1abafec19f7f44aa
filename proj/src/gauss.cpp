#include "hwq/gauss.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "hwq/errors.hpp"
#include "hwq/kernels.hpp"
#include "hwq/parallel.hpp"
#include "hwq/renewal.hpp"
#include "hwq/stats.hpp"

namespace hwq {

namespace {

constexpr std::uint64_t kIdGaussV = 0x41;
constexpr std::uint64_t kIdGaussSup = 0x42;

std::vector<double> pack_lower(const Eigen::MatrixXd& L) {
    std::size_t m = static_cast<std::size_t>(L.rows());
    std::vector<double> packed(m * (m + 1) / 2);
    std::size_t k = 0;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j <= i; ++j)
            packed[k++] = L(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    return packed;
}

} // namespace

GaussGrid build_grid(double c2A, const DistSpec& service, double B, double mu,
                     const std::vector<double>& grid, std::uint64_t reps_for_V,
                     std::uint64_t seed, int workers) {
    if (c2A < 0.0) throw ValidationError("c2A must be non-negative");
    if (B <= 0.0) throw ValidationError("B must be positive");
    if (mu <= 0.0) throw ValidationError("mu must be positive");
    if (std::abs(mu * service.mean() - 1.0) > 1e-9)
        throw ValidationError("service rate must equal mu");
    require_arithmetic_grid(grid);

    // V on every grid point (gaps of the arithmetic grid stay on-grid).
    std::vector<double> v(grid.size());
    if (exact_equilibrium_variance(service, grid[1]).has_value()) {
        for (std::size_t i = 0; i < grid.size(); ++i)
            v[i] = *exact_equilibrium_variance(service, grid[i]);
    } else {
        VarianceTable tbl = variance_function(service, grid, reps_for_V, seed ^ kIdGaussV, workers);
        v = tbl.v_hat;
    }

    GaussGrid out;
    out.dt = grid[1] - grid[0];
    out.mu = mu;
    out.c2A = c2A;
    out.c2S = service.scv();
    out.B = B;
    out.t.assign(grid.begin() + 1, grid.end()); // drop the degenerate t=0 point
    std::size_t m = out.t.size();
    out.drift.resize(m);
    out.sigma_diag.resize(m);
    Eigen::MatrixXd sigma(m, m);
    for (std::size_t i = 0; i < m; ++i) {
        out.drift[i] = -B * mu * out.t[i];
        for (std::size_t j = 0; j <= i; ++j) {
            double cov_d = 0.5 * (v[i + 1] + v[j + 1] - v[i - j]);
            double s = mu * c2A * std::min(out.t[i], out.t[j]) + cov_d;
            sigma(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = s;
            sigma(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = s;
        }
        out.sigma_diag[i] = sigma(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
    }

    out.repair.trace = sigma.trace();
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() == Eigen::Success) {
        out.L = pack_lower(Eigen::MatrixXd(llt.matrixL()));
        return out;
    }

    // PSD repair: clip negative eigenvalues, re-symmetrize, log the shift.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma);
    if (es.info() != Eigen::Success) throw NumericError("eigendecomposition failed");
    Eigen::VectorXd ev = es.eigenvalues();
    out.repair.repaired = true;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev(i) < 0.0) {
            ++out.repair.clipped;
            out.repair.max_shift = std::max(out.repair.max_shift, -ev(i));
            ev(i) = 0.0;
        }
    }
    if (out.repair.max_shift > 1e-6 * out.repair.trace)
        throw NumericError("covariance repair shift exceeds 1e-6 * trace; V is too noisy");
    out.repair.jitter = 1e-12 * out.repair.trace / static_cast<double>(m);
    Eigen::MatrixXd fixed = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    fixed = 0.5 * (fixed + fixed.transpose());
    fixed.diagonal().array() += out.repair.jitter;
    Eigen::LLT<Eigen::MatrixXd> llt2(fixed);
    if (llt2.info() != Eigen::Success)
        throw NumericError("factorization failed after PSD repair");
    out.L = pack_lower(Eigen::MatrixXd(llt2.matrixL()));
    return out;
}

std::vector<double> sample_path(const GaussGrid& grid, RngStream& rng) {
    std::size_t m = grid.m();
    std::vector<double> z(m), y(m);
    for (std::size_t i = 0; i < m; ++i) z[i] = rng.normal();
    const double* row = grid.L.data();
    for (std::size_t i = 0; i < m; ++i) {
        y[i] = kernels::dot(row, z.data(), i + 1) + grid.drift[i];
        row += i + 1;
    }
    return y;
}

TailEstimate sample_sup(const GaussGrid& grid, std::uint64_t reps,
                        const std::vector<double>& thresholds, std::uint64_t seed,
                        int workers) {
    if (grid.L.empty()) throw ValidationError("grid is not factorized");
    if (reps == 0) throw ValidationError("reps must be positive");
    if (thresholds.empty() || !std::is_sorted(thresholds.begin(), thresholds.end()))
        throw ValidationError("thresholds must be non-empty and sorted");
    for (double x : thresholds)
        if (x <= 0.0) throw ValidationError("thresholds must be positive");

    std::size_t m = grid.m();
    std::size_t J = thresholds.size();
    std::size_t nb = block_count(reps);
    std::vector<std::uint64_t> bcounts(nb * J, 0);
    run_blocks(reps, workers, [&](std::uint64_t lo, std::uint64_t hi, std::size_t b) {
        std::uint64_t* counts = &bcounts[b * J];
        std::vector<double> z(m);
        for (std::uint64_t rep = lo; rep < hi; ++rep) {
            RngStream rng = RngStream::derive(seed, kIdGaussSup, rep);
            for (std::size_t i = 0; i < m; ++i) z[i] = rng.normal();
            double sup = kernels::lower_tri_matvec_max(grid.L.data(), z.data(),
                                                       grid.drift.data(), m);
            // value at t=0 is 0, so sup over the full grid is >= 0
            if (sup < 0.0) sup = 0.0;
            std::size_t hit = static_cast<std::size_t>(
                std::lower_bound(thresholds.begin(), thresholds.end(), sup) -
                thresholds.begin());
            for (std::size_t j = 0; j < hit; ++j) ++counts[j];
        }
    });

    TailEstimate out;
    out.x = thresholds;
    out.reps = reps;
    out.T = grid.t.back();
    for (std::size_t j = 0; j < J; ++j) {
        std::uint64_t c = 0;
        for (std::size_t b = 0; b < nb; ++b) c += bcounts[b * J + j];
        double p = static_cast<double>(c) / static_cast<double>(reps);
        out.p_hat.push_back(p);
        out.ci_half.push_back(ci99_half(p, reps));
    }
    return out;
}

PointwiseTail pointwise_sup_tail(const GaussGrid& grid, const std::vector<double>& thresholds) {
    if (thresholds.empty()) throw ValidationError("thresholds must be non-empty");
    PointwiseTail out;
    for (double x : thresholds) {
        if (x <= 0.0) throw ValidationError("thresholds must be positive");
        double best_p = 0.0, best_t = grid.t.front();
        for (std::size_t i = 0; i < grid.m(); ++i) {
            double sd = std::sqrt(std::max(grid.sigma_diag[i], 0.0));
            if (sd <= 0.0) continue;
            double p = gaussian_tail((x + grid.B * grid.mu * grid.t[i]) / sd);
            if (p > best_p) {
                best_p = p;
                best_t = grid.t[i];
            }
        }
        double t_star = x / (grid.B * grid.mu);
        std::string warn;
        if (t_star > grid.t.back() + grid.dt || std::abs(best_t - t_star) > grid.dt)
            warn = "grid misses the most-likely time " + std::to_string(t_star) +
                   " by more than one spacing";
        out.x.push_back(x);
        out.p.push_back(best_p);
        out.t_argmax.push_back(best_t);
        out.warning.push_back(warn);
    }
    return out;
}

ExponentFit fit_exponent(const TailEstimate& tail, double x_lo, double x_hi, double target) {
    if (x_hi <= x_lo) throw ValidationError("fit window must satisfy x_lo < x_hi");
    std::vector<double> xs, ys, ws;
    for (std::size_t j = 0; j < tail.x.size(); ++j) {
        double x = tail.x[j], p = tail.p_hat[j];
        if (x < x_lo || x > x_hi) continue;
        if (p <= 0.0 || p >= 1.0) continue;
        if (p * static_cast<double>(tail.reps) < 50.0) continue; // binomial noise floor
        double se_log = std::sqrt((1.0 - p) / (p * static_cast<double>(tail.reps)));
        xs.push_back(x);
        ys.push_back(std::log(p));
        ws.push_back(1.0 / std::max(se_log * se_log, 1e-24));
    }
    if (xs.size() < 4)
        throw ValidationError("fit_exponent: fewer than 4 usable thresholds in window");
    double sw = 0.0, swx = 0.0, swy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sw += ws[i];
        swx += ws[i] * xs[i];
        swy += ws[i] * ys[i];
    }
    double xbar = swx / sw, ybar = swy / sw;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double dx = xs[i] - xbar;
        sxx += ws[i] * dx * dx;
        sxy += ws[i] * dx * (ys[i] - ybar);
    }
    if (sxx <= 0.0) throw NumericError("fit_exponent: degenerate design");
    ExponentFit fit;
    fit.slope = sxy / sxx;
    fit.slope_se = std::sqrt(1.0 / sxx);
    fit.target = target;
    fit.zscore = fit.slope_se > 0.0 ? (fit.slope - target) / fit.slope_se : 0.0;
    fit.used_points = static_cast<int>(xs.size());
    fit.x_lo = x_lo;
    fit.x_hi = x_hi;
    return fit;
}

double tail_bound_ratio(double y) {
    return std::sqrt(2.0 / M_PI) * std::exp(-0.5 * y * y) / (y + std::sqrt(y * y + 4.0));
}

double tail_bound_exp(double y) { return std::exp(-0.5 * y * y - y); }

bool tail_lower_bound_check(double y) {
    double phi_bar = gaussian_tail(y);
    return phi_bar >= tail_bound_ratio(y) && phi_bar >= tail_bound_exp(y);
}

} // namespace hwq
