#pragma once

#include <string>

#include "hwq/rng.hpp"

namespace hwq {

enum class Family {
    exponential,     // rate
    deterministic,   // value
    erlang,          // k, rate (sum of k exponentials of the given rate)
    hyperexponential,// p, rate1, rate2 (two-phase mixture)
    lognormal,       // mu, sigma (log-scale parameters)
    weibull,         // shape, scale
};

struct Moments {
    double mean = 0.0;
    double variance = 0.0;
    double scv = 0.0; // variance / mean^2

    bool operator==(const Moments&) const = default;
};

// A parametric positive distribution with exact first/second moments and a
// residual-life (stationary-excess) law. Values are immutable once built;
// the factory functions validate parameters and precompute moments.
class DistSpec {
public:
    static DistSpec exponential(double rate);
    static DistSpec deterministic(double value);
    static DistSpec erlang(int k, double rate);
    static DistSpec hyperexponential(double p, double rate1, double rate2);
    static DistSpec lognormal(double mu, double sigma);
    static DistSpec weibull(double shape, double scale);

    Family family() const { return family_; }
    double param(int i) const { return params_[i]; }

    double mean() const { return moments_.mean; }
    double variance() const { return moments_.variance; }
    double scv() const { return moments_.scv; }
    Moments moments() const { return moments_; }

    // One i.i.d. draw; a deterministic function of the stream state.
    double sample(RngStream& rng) const;

    // Survival function P(X > z).
    double survival(double z) const;

    // Residual-life CDF P(R(X) <= z). Closed form for the exponential,
    // deterministic, Erlang and hyperexponential families; adaptive
    // quadrature of the survival function otherwise (abs tol 1e-10).
    double residual_cdf(double z) const;

    // One draw from R(X). Closed form where available, otherwise numeric
    // inversion of residual_cdf to absolute tolerance 1e-10.
    double residual_sample(RngStream& rng) const;

    // Mean of R(X) = E[X^2] / (2 E[X]).
    double residual_mean() const {
        double ex2 = moments_.variance + moments_.mean * moments_.mean;
        return ex2 / (2.0 * moments_.mean);
    }

    std::string describe() const;

    bool operator==(const DistSpec& other) const = default;

private:
    DistSpec(Family f, double a, double b, double c, Moments m)
        : family_(f), params_{a, b, c}, moments_(m) {}

    Family family_;
    double params_[3];
    Moments moments_;
};

// Halfin-Whitt scaling: n servers, excess parameter B, arrival rate
// multiplier lambda_n = n - B sqrt(n).
struct HWScaling {
    int n = 0;
    double B = 0.0;

    double lambda_n() const;
    double sqrt_n() const;

    static HWScaling make(int n, double B); // validates n >= 1, B > 0, lambda_n > 0

    bool operator==(const HWScaling&) const = default;
};

const char* family_name(Family f);

} // namespace hwq
