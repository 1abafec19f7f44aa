#pragma once

#include <cstdint>

namespace hwq {

// P(Z >= k) for Z ~ Poisson(mean), by direct pmf summation from k upward.
// Absolute accuracy better than 1e-12 for the parameter ranges used here.
double poisson_upper_tail(std::uint64_t k, double mean);

// Standard normal survival function P(G > y).
double gaussian_tail(double y);

} // namespace hwq
