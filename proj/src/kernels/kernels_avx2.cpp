#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include "hwq/kernels.hpp"

namespace hwq::kernels::detail {

double dot_avx2(const double* a, const double* b, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
    }
    if (i + 4 <= n) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
        i += 4;
    }
    __m256d acc = _mm256_add_pd(acc0, acc1);
    __m128d lo = _mm256_castpd256_pd128(acc);
    __m128d hi = _mm256_extractf128_pd(acc, 1);
    __m128d s2 = _mm_add_pd(lo, hi);
    double s = _mm_cvtsd_f64(_mm_add_sd(s2, _mm_unpackhi_pd(s2, s2)));
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

double lower_tri_matvec_max_avx2(const double* L, const double* z, const double* drift,
                                 std::size_t m) {
    double best = -1e308;
    const double* row = L;
    for (std::size_t i = 0; i < m; ++i) {
        double y = dot_avx2(row, z, i + 1) + drift[i];
        if (y > best) best = y;
        row += i + 1;
    }
    return best;
}

} // namespace hwq::kernels::detail

#endif
