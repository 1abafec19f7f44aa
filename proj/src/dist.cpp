#include "hwq/dist.hpp"

#include <cmath>
#include <sstream>

#include "hwq/errors.hpp"

namespace hwq {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw ValidationError(msg);
}

// Adaptive Simpson quadrature of f on [a,b] to absolute tolerance tol.
template <typename F>
double simpson_step(const F& f, double a, double b, double fa, double fm, double fb,
                    double whole, double tol, int depth) {
    if (depth > 60) throw NumericError("residual_cdf: adaptive quadrature did not converge");
    double m = 0.5 * (a + b);
    double lm = 0.5 * (a + m);
    double rm = 0.5 * (m + b);
    double flm = f(lm);
    double frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    double delta = left + right - whole;
    if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
    return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1) +
           simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1);
}

template <typename F>
double integrate(const F& f, double a, double b, double tol) {
    if (b <= a) return 0.0;
    double fa = f(a);
    double fb = f(b);
    double fm = f(0.5 * (a + b));
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return simpson_step(f, a, b, fa, fm, fb, whole, tol, 0);
}

double erlang_survival(int k, double rate, double z) {
    if (z <= 0.0) return 1.0;
    // e^{-rate z} sum_{j<k} (rate z)^j / j!
    double x = rate * z;
    double term = 1.0;
    double sum = 1.0;
    for (int j = 1; j < k; ++j) {
        term *= x / j;
        sum += term;
    }
    return std::exp(-x) * sum;
}

constexpr double kResidualTol = 1e-10;

} // namespace

const char* family_name(Family f) {
    switch (f) {
        case Family::exponential: return "exponential";
        case Family::deterministic: return "deterministic";
        case Family::erlang: return "erlang";
        case Family::hyperexponential: return "hyperexponential";
        case Family::lognormal: return "lognormal";
        case Family::weibull: return "weibull";
    }
    return "?";
}

DistSpec DistSpec::exponential(double rate) {
    require(rate > 0.0, "exponential: rate must be positive");
    double m = 1.0 / rate;
    return DistSpec(Family::exponential, rate, 0, 0, {m, m * m, 1.0});
}

DistSpec DistSpec::deterministic(double value) {
    require(value > 0.0, "deterministic: value must be positive");
    return DistSpec(Family::deterministic, value, 0, 0, {value, 0.0, 0.0});
}

DistSpec DistSpec::erlang(int k, double rate) {
    require(k >= 1, "erlang: k must be a positive integer");
    require(rate > 0.0, "erlang: rate must be positive");
    double m = k / rate;
    double v = k / (rate * rate);
    return DistSpec(Family::erlang, static_cast<double>(k), rate, 0, {m, v, 1.0 / k});
}

DistSpec DistSpec::hyperexponential(double p, double rate1, double rate2) {
    require(p >= 0.0 && p <= 1.0, "hyperexponential: p must lie in [0,1]");
    require(rate1 > 0.0 && rate2 > 0.0, "hyperexponential: rates must be positive");
    double m = p / rate1 + (1.0 - p) / rate2;
    double ex2 = 2.0 * p / (rate1 * rate1) + 2.0 * (1.0 - p) / (rate2 * rate2);
    double v = ex2 - m * m;
    return DistSpec(Family::hyperexponential, p, rate1, rate2, {m, v, v / (m * m)});
}

DistSpec DistSpec::lognormal(double mu, double sigma) {
    require(sigma > 0.0, "lognormal: sigma must be positive");
    double m = std::exp(mu + 0.5 * sigma * sigma);
    double v = (std::exp(sigma * sigma) - 1.0) * std::exp(2.0 * mu + sigma * sigma);
    return DistSpec(Family::lognormal, mu, sigma, 0, {m, v, v / (m * m)});
}

DistSpec DistSpec::weibull(double shape, double scale) {
    require(shape > 0.0, "weibull: shape must be positive");
    require(scale > 0.0, "weibull: scale must be positive");
    double g1 = std::tgamma(1.0 + 1.0 / shape);
    double g2 = std::tgamma(1.0 + 2.0 / shape);
    double m = scale * g1;
    double v = scale * scale * (g2 - g1 * g1);
    return DistSpec(Family::weibull, shape, scale, 0, {m, v, v / (m * m)});
}

double DistSpec::sample(RngStream& rng) const {
    switch (family_) {
        case Family::exponential:
            return rng.exponential(params_[0]);
        case Family::deterministic:
            return params_[0];
        case Family::erlang: {
            int k = static_cast<int>(params_[0]);
            double sum = 0.0;
            for (int j = 0; j < k; ++j) sum += rng.exponential(params_[1]);
            return sum;
        }
        case Family::hyperexponential:
            return rng.uniform() < params_[0] ? rng.exponential(params_[1])
                                              : rng.exponential(params_[2]);
        case Family::lognormal:
            return std::exp(params_[0] + params_[1] * rng.normal());
        case Family::weibull:
            return params_[1] * std::pow(-std::log(rng.uniform()), 1.0 / params_[0]);
    }
    return 0.0;
}

double DistSpec::survival(double z) const {
    if (z <= 0.0) return 1.0;
    switch (family_) {
        case Family::exponential:
            return std::exp(-params_[0] * z);
        case Family::deterministic:
            return z < params_[0] ? 1.0 : 0.0;
        case Family::erlang:
            return erlang_survival(static_cast<int>(params_[0]), params_[1], z);
        case Family::hyperexponential:
            return params_[0] * std::exp(-params_[1] * z) +
                   (1.0 - params_[0]) * std::exp(-params_[2] * z);
        case Family::lognormal:
            return 0.5 * std::erfc((std::log(z) - params_[0]) /
                                   (params_[1] * std::sqrt(2.0)));
        case Family::weibull:
            return std::exp(-std::pow(z / params_[1], params_[0]));
    }
    return 0.0;
}

double DistSpec::residual_cdf(double z) const {
    if (z <= 0.0) return 0.0;
    switch (family_) {
        case Family::exponential:
            return 1.0 - std::exp(-params_[0] * z); // memoryless
        case Family::deterministic:
            return std::min(z / params_[0], 1.0); // uniform on (0, d)
        case Family::erlang: {
            // Equally weighted mixture of Erlang(1..k) with the same rate.
            int k = static_cast<int>(params_[0]);
            double surv = 0.0;
            for (int j = 1; j <= k; ++j) surv += erlang_survival(j, params_[1], z);
            return 1.0 - surv / k;
        }
        case Family::hyperexponential: {
            double inv_mean = 1.0 / moments_.mean;
            double surv = inv_mean * (params_[0] / params_[1] * std::exp(-params_[1] * z) +
                                      (1.0 - params_[0]) / params_[2] * std::exp(-params_[2] * z));
            return 1.0 - surv;
        }
        default: {
            double integral =
                integrate([this](double y) { return survival(y); }, 0.0, z, kResidualTol);
            return std::min(integral / moments_.mean, 1.0);
        }
    }
}

double DistSpec::residual_sample(RngStream& rng) const {
    switch (family_) {
        case Family::exponential:
            return rng.exponential(params_[0]);
        case Family::deterministic:
            return rng.uniform() * params_[0];
        case Family::erlang: {
            int k = static_cast<int>(params_[0]);
            int j = 1 + static_cast<int>(rng.uniform() * k);
            if (j > k) j = k;
            double sum = 0.0;
            for (int l = 0; l < j; ++l) sum += rng.exponential(params_[1]);
            return sum;
        }
        case Family::hyperexponential: {
            double w1 = (params_[0] / params_[1]) / moments_.mean;
            return rng.uniform() < w1 ? rng.exponential(params_[1])
                                      : rng.exponential(params_[2]);
        }
        default: {
            // Numeric inverse of residual_cdf by bracketing + bisection.
            double u = rng.uniform();
            double lo = 0.0;
            double hi = moments_.mean;
            int guard = 0;
            while (residual_cdf(hi) < u) {
                hi *= 2.0;
                if (++guard > 200) throw NumericError("residual_sample: bracket failure");
            }
            while (hi - lo > kResidualTol) {
                double mid = 0.5 * (lo + hi);
                if (residual_cdf(mid) < u)
                    lo = mid;
                else
                    hi = mid;
            }
            return 0.5 * (lo + hi);
        }
    }
}

std::string DistSpec::describe() const {
    std::ostringstream os;
    os << family_name(family_) << "(";
    switch (family_) {
        case Family::exponential: os << "rate=" << params_[0]; break;
        case Family::deterministic: os << "value=" << params_[0]; break;
        case Family::erlang: os << "k=" << params_[0] << ", rate=" << params_[1]; break;
        case Family::hyperexponential:
            os << "p=" << params_[0] << ", rate1=" << params_[1] << ", rate2=" << params_[2];
            break;
        case Family::lognormal: os << "mu=" << params_[0] << ", sigma=" << params_[1]; break;
        case Family::weibull: os << "shape=" << params_[0] << ", scale=" << params_[1]; break;
    }
    os << ")";
    return os.str();
}

double HWScaling::lambda_n() const { return n - B * std::sqrt(static_cast<double>(n)); }
double HWScaling::sqrt_n() const { return std::sqrt(static_cast<double>(n)); }

HWScaling HWScaling::make(int n, double B) {
    if (n < 1) throw ValidationError("scaling.n: server count must be >= 1");
    if (B <= 0.0) throw ValidationError("scaling.B: excess parameter must be positive");
    HWScaling s{n, B};
    if (s.lambda_n() <= 0.0)
        throw ValidationError("scaling: lambda_n = n - B sqrt(n) must be positive");
    return s;
}

} // namespace hwq
