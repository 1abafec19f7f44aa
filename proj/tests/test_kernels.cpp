#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "hwq/errors.hpp"
#include "hwq/kernels.hpp"
#include "hwq/rng.hpp"

using namespace hwq;
namespace k = hwq::kernels;

namespace {
double dot_naive(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

double ltmv_max_naive(const double* L, const double* z, const double* drift,
                      std::size_t m) {
    double best = -1e300;
    for (std::size_t i = 0; i < m; ++i) {
        double s = drift[i];
        for (std::size_t j = 0; j <= i; ++j) s += L[i * (i + 1) / 2 + j] * z[j];
        best = s > best ? s : best;
    }
    return best;
}
} // namespace

TEST_CASE("scalar kernels match naive loops") {
    RngStream rng(12345);
    for (std::size_t n : {1ul, 2ul, 3ul, 7ul, 64ul, 257ul}) {
        std::vector<double> a(n), b(n);
        for (auto& v : a) v = rng.normal();
        for (auto& v : b) v = rng.normal();
        double ref = dot_naive(a.data(), b.data(), n);
        double got = k::detail::dot_scalar(a.data(), b.data(), n);
        CHECK(std::abs(got - ref) <= 1e-12 * (1.0 + std::abs(ref)));
    }
    for (std::size_t m : {1ul, 5ul, 33ul, 120ul}) {
        std::vector<double> L(m * (m + 1) / 2), z(m), d(m);
        for (auto& v : L) v = rng.normal();
        for (auto& v : z) v = rng.normal();
        for (auto& v : d) v = rng.normal();
        double ref = ltmv_max_naive(L.data(), z.data(), d.data(), m);
        double got = k::detail::lower_tri_matvec_max_scalar(L.data(), z.data(), d.data(), m);
        CHECK(std::abs(got - ref) <= 1e-11 * (1.0 + std::abs(ref)));
    }
}

TEST_CASE("vector backend agrees with the scalar reference") {
    if (!k::avx2_supported()) {
        MESSAGE("AVX2 not available on this host; dispatch test skipped");
        CHECK_THROWS_AS(k::set_backend(k::Backend::avx2), ValidationError);
        return;
    }
#if defined(__x86_64__) || defined(_M_X64)
    RngStream rng(98765);
    for (std::size_t n : {1ul, 4ul, 5ul, 8ul, 100ul, 1023ul}) {
        std::vector<double> a(n), b(n);
        for (auto& v : a) v = rng.normal();
        for (auto& v : b) v = rng.normal();
        double s = k::detail::dot_scalar(a.data(), b.data(), n);
        double v = k::detail::dot_avx2(a.data(), b.data(), n);
        CHECK(std::abs(v - s) <= 1e-9 * (1.0 + std::abs(s)));
    }
    for (std::size_t m : {1ul, 2ul, 9ul, 64ul, 301ul}) {
        std::vector<double> L(m * (m + 1) / 2), z(m), d(m);
        for (auto& v : L) v = rng.normal();
        for (auto& v : z) v = rng.normal();
        for (auto& v : d) v = rng.normal();
        double s = k::detail::lower_tri_matvec_max_scalar(L.data(), z.data(), d.data(), m);
        double v = k::detail::lower_tri_matvec_max_avx2(L.data(), z.data(), d.data(), m);
        CHECK(std::abs(v - s) <= 1e-9 * (1.0 + std::abs(s)));
    }
#endif
}

TEST_CASE("backend selection round-trips") {
    auto prev = k::active_backend();
    k::set_backend(k::Backend::scalar);
    CHECK(k::active_backend() == k::Backend::scalar);
    double a[3] = {1.0, 2.0, 3.0};
    double b[3] = {4.0, 5.0, 6.0};
    CHECK(k::dot(a, b, 3) == doctest::Approx(32.0).epsilon(1e-15));
    if (k::avx2_supported()) {
        k::set_backend(k::Backend::avx2);
        CHECK(k::active_backend() == k::Backend::avx2);
        CHECK(k::dot(a, b, 3) == doctest::Approx(32.0).epsilon(1e-15));
    }
    k::set_backend(prev);
}
