#include "hwq/kernels.hpp"

#include "hwq/errors.hpp"

namespace hwq::kernels {

namespace {

Backend pick_default() {
    return avx2_supported() ? Backend::avx2 : Backend::scalar;
}

Backend& current() {
    static Backend b = pick_default();
    return b;
}

} // namespace

bool avx2_supported() {
#if defined(__x86_64__) || defined(_M_X64)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Backend active_backend() { return current(); }

void set_backend(Backend b) {
    if (b == Backend::avx2 && !avx2_supported())
        throw ValidationError("avx2 backend not supported on this host");
    current() = b;
}

double dot(const double* a, const double* b, std::size_t n) {
#if defined(__x86_64__) || defined(_M_X64)
    if (current() == Backend::avx2) return detail::dot_avx2(a, b, n);
#endif
    return detail::dot_scalar(a, b, n);
}

double lower_tri_matvec_max(const double* L, const double* z, const double* drift,
                            std::size_t m) {
#if defined(__x86_64__) || defined(_M_X64)
    if (current() == Backend::avx2) return detail::lower_tri_matvec_max_avx2(L, z, drift, m);
#endif
    return detail::lower_tri_matvec_max_scalar(L, z, drift, m);
}

} // namespace hwq::kernels
