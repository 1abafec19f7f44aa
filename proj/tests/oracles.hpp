#pragma once

// Closed-form and quadrature references used to cross-check simulation
// output. Everything here is computed by a different route than the
// library code under test (different summation direction, different
// formula, or brute-force integration), so agreement is meaningful.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace oracle {

// Stationary M/M/n with offered load a = lambda / mu < n.
// Returns P(wait) (all servers busy), via the classic recurrence
// inv_b(j) = 1 + j/a * inv_b(j-1) for the Erlang-B inverse.
inline double erlang_c(int n, double a) {
    double inv_b = 1.0; // 1 / B(0, a)
    for (int j = 1; j <= n; ++j) inv_b = 1.0 + static_cast<double>(j) / a * inv_b;
    double b = 1.0 / inv_b;            // Erlang-B blocking
    double rho = a / static_cast<double>(n);
    return b / (1.0 - rho + rho * b);
}

// P(Q - n >= k) for stationary M/M/n: geometric decay beyond the boundary.
inline double mmn_excess_tail(int n, double a, int k) {
    double rho = a / static_cast<double>(n);
    return erlang_c(n, a) * std::pow(rho, static_cast<double>(k));
}

// Full stationary pmf of M/M/n queue length (0..max_j), birth-death balance.
inline std::vector<double> mmn_pmf(int n, double a, int max_j) {
    std::vector<double> p(static_cast<std::size_t>(max_j) + 1);
    p[0] = 1.0;
    for (int j = 1; j <= max_j; ++j) {
        double svc = static_cast<double>(std::min(j, n));
        p[static_cast<std::size_t>(j)] = p[static_cast<std::size_t>(j - 1)] * a / svc;
    }
    double norm = 0.0;
    for (double v : p) norm += v;
    // account for the geometric tail beyond max_j
    double rho = a / static_cast<double>(n);
    if (max_j > n && rho < 1.0)
        norm += p.back() * rho / (1.0 - rho);
    for (double& v : p) v /= norm;
    return p;
}

// P(Z >= k), Z ~ Poisson(mean), via the *complement*: 1 - sum_{j<k} pmf,
// accumulated upward from j = 0. The library computes the same quantity by
// summing the tail directly, so the two routes share no code path.
inline double poisson_tail_complement(std::uint64_t k, double mean) {
    if (k == 0) return 1.0;
    double log_term = -mean; // log pmf(0)
    double head = 0.0;
    for (std::uint64_t j = 0; j < k; ++j) {
        head += std::exp(log_term);
        log_term += std::log(mean) - std::log(static_cast<double>(j + 1));
    }
    return 1.0 - head;
}

// Standard normal upper tail by brute-force Simpson integration of the
// density over [y, y + 40] with a fixed fine mesh.
inline double normal_tail_quad(double y) {
    const int steps = 400000; // even
    const double hi = y + 40.0;
    const double h = (hi - y) / steps;
    auto phi = [](double u) {
        return std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::acos(-1.0));
    };
    double s = phi(y) + phi(hi);
    for (int i = 1; i < steps; ++i)
        s += phi(y + h * i) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

// Sup-distance between the empirical CDF of integer samples and a reference
// pmf (index = value).
inline double pmf_sup_distance(const std::vector<long long>& samples,
                               const std::vector<double>& pmf) {
    std::vector<double> counts(pmf.size(), 0.0);
    double overflow = 0.0;
    for (long long s : samples) {
        if (s >= 0 && static_cast<std::size_t>(s) < counts.size())
            counts[static_cast<std::size_t>(s)] += 1.0;
        else
            overflow += 1.0;
    }
    double inv = 1.0 / static_cast<double>(samples.size());
    double f_emp = 0.0, f_ref = 0.0, d = overflow * inv; // mass beyond the table
    for (std::size_t j = 0; j < pmf.size(); ++j) {
        f_emp += counts[j] * inv;
        f_ref += pmf[j];
        d = std::max(d, std::abs(f_emp - f_ref));
    }
    return d;
}

// One-sample Kolmogorov-Smirnov statistic against a continuous CDF.
template <class Cdf>
double ks_one_sample(std::vector<double> xs, Cdf cdf) {
    std::sort(xs.begin(), xs.end());
    double n = static_cast<double>(xs.size());
    double d = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double f = cdf(xs[i]);
        d = std::max(d, std::abs(f - static_cast<double>(i) / n));
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
    }
    return d;
}

} // namespace oracle
