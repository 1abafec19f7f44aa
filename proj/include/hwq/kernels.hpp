#pragma once

#include <cstddef>

namespace hwq::kernels {

enum class Backend { scalar, avx2 };

bool avx2_supported();
Backend active_backend();
// Throws ValidationError when the requested backend is unavailable.
void set_backend(Backend b);

// sum_i a[i] * b[i]
double dot(const double* a, const double* b, std::size_t n);

// max_i ( sum_{j<=i} L[i(i+1)/2 + j] * z[j] + drift[i] ) over a packed
// row-major lower-triangular matrix; the hot loop of Gaussian sup sampling.
double lower_tri_matvec_max(const double* L, const double* z, const double* drift,
                            std::size_t m);

namespace detail {
double dot_scalar(const double* a, const double* b, std::size_t n);
double lower_tri_matvec_max_scalar(const double* L, const double* z, const double* drift,
                                   std::size_t m);
#if defined(__x86_64__) || defined(_M_X64)
double dot_avx2(const double* a, const double* b, std::size_t n);
double lower_tri_matvec_max_avx2(const double* L, const double* z, const double* drift,
                                 std::size_t m);
#endif
} // namespace detail

} // namespace hwq::kernels
