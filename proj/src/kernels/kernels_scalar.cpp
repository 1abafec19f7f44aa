#include "hwq/kernels.hpp"

namespace hwq::kernels::detail {

double dot_scalar(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

double lower_tri_matvec_max_scalar(const double* L, const double* z, const double* drift,
                                   std::size_t m) {
    double best = -1e308;
    const double* row = L;
    for (std::size_t i = 0; i < m; ++i) {
        double y = dot_scalar(row, z, i + 1) + drift[i];
        if (y > best) best = y;
        row += i + 1;
    }
    return best;
}

} // namespace hwq::kernels::detail
