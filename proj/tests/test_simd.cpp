#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <string>
#include <vector>

#include "lace/rng.hpp"
#include "lace/simd.hpp"

using namespace lace;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
    std::vector<double> v(n);
    std::uint64_t s = seed;
    for (auto& x : v) x = 2.0 * u01(splitmix64(s)) - 1.0;
    return v;
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() &&
           (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

}  // namespace

TEST_CASE("scalar and avx2 kernels are bitwise identical") {
    if (!simd::cpu_has_avx2_fma()) {
        MESSAGE("cpu lacks avx2+fma, equivalence not exercised");
        return;
    }
#if defined(__x86_64__) || defined(_M_X64)
    for (std::size_t n : {std::size_t(0), std::size_t(1), std::size_t(3), std::size_t(4),
                          std::size_t(7), std::size_t(64), std::size_t(1001)}) {
        auto a = random_vec(n, 11 + n);
        auto b = random_vec(n, 23 + n);
        auto acc1 = random_vec(n, 37 + n);
        auto acc2 = acc1;
        simd::detail::fmadd_arrays_scalar(acc1.data(), a.data(), b.data(), n);
        simd::detail::fmadd_arrays_avx2(acc2.data(), a.data(), b.data(), n);
        CHECK(bitwise_equal(acc1, acc2));

        double d1 = simd::detail::dot_scalar(a.data(), b.data(), n);
        double d2 = simd::detail::dot_avx2(a.data(), b.data(), n);
        CHECK(std::memcmp(&d1, &d2, sizeof(double)) == 0);

        double w1 = simd::detail::weighted_abs_dot_scalar(a.data(), b.data(), n);
        double w2 = simd::detail::weighted_abs_dot_avx2(a.data(), b.data(), n);
        CHECK(std::memcmp(&w1, &w2, sizeof(double)) == 0);
    }
#endif
}

TEST_CASE("mode override selects the requested implementation") {
    simd::Mode got = simd::set_mode(simd::Mode::Scalar);
    CHECK(got == simd::Mode::Scalar);
    CHECK(std::string(simd::active_name()) == "scalar");
    simd::set_mode(simd::Mode::Auto);
    if (simd::cpu_has_avx2_fma()) CHECK(std::string(simd::active_name()) == "avx2");
}

TEST_CASE("reductions match a plain reference within rounding") {
    auto a = random_vec(513, 5);
    auto b = random_vec(513, 7);
    double ref = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) ref += a[i] * b[i];
    CHECK(simd::dot(a.data(), b.data(), a.size()) == doctest::Approx(ref).epsilon(1e-12));
}
