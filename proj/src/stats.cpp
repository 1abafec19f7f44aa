#include "hwq/stats.hpp"

#include <cmath>

namespace hwq {

double poisson_upper_tail(std::uint64_t k, double mean) {
    if (mean <= 0.0) return k == 0 ? 1.0 : 0.0;
    if (k == 0) return 1.0;
    // pmf at k via logs, then the upward recurrence p_{j+1} = p_j * mean/(j+1).
    double log_pk = static_cast<double>(k) * std::log(mean) - mean -
                    std::lgamma(static_cast<double>(k) + 1.0);
    double term = std::exp(log_pk);
    double sum = 0.0;
    std::uint64_t j = k;
    while (true) {
        sum += term;
        ++j;
        term *= mean / static_cast<double>(j);
        if (term < 1e-18 * (sum + 1e-300) && static_cast<double>(j) > mean) break;
    }
    return sum < 1.0 ? sum : 1.0;
}

double gaussian_tail(double y) { return 0.5 * std::erfc(y / std::sqrt(2.0)); }

} // namespace hwq
