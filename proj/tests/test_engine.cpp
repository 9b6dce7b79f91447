#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <numbers>

#include "lace/engine.hpp"
#include "lace/errors.hpp"
#include "lace/models.hpp"
#include "lace/rng.hpp"
#include "lace/simd.hpp"

using namespace lace;

namespace {
constexpr double kPi = std::numbers::pi;

std::vector<KPoint> axis_kset(int d, std::size_t count, double kmax) {
    std::vector<KPoint> out;
    for (std::size_t i = 1; i <= count; ++i) {
        std::vector<double> c(d, 0.0);
        c[0] = kmax * double(i) / double(count);
        out.emplace_back(std::move(c));
    }
    return out;
}

KernelPtr cube(int d, int L, bool excl = false) {
    return std::make_shared<StepKernel>(StepKernel::uniform_cube(d, L, excl));
}
}  // namespace

TEST_CASE("srw oracle: f_n = z^n dhat^n") {
    for (int d : {1, 2, 5}) {
        auto kern = cube(d, d == 5 ? 1 : 2);
        auto prov = models::srw_provider(kern);
        for (double z : {0.5, 1.0}) {
            auto ks = axis_kset(d, 50, kPi);
            RecursionState st = run_recursion(*prov, z, 200, ks);
            double worst = 0.0;
            for (std::size_t n = 0; n <= 200; ++n)
                for (std::size_t c = 0; c < ks.size(); ++c) {
                    double expect = std::pow(z * kern->dhat(ks[c]), double(n));
                    worst = std::max(worst, std::fabs(st.f(n, c) - expect));
                }
            CHECK(worst <= 1e-12);
        }
    }
}

TEST_CASE("initial condition and empty kset rejection") {
    auto kern = cube(1, 2);
    auto prov = models::srw_provider(kern);
    RecursionState st = run_recursion(*prov, 1.0, 1, axis_kset(1, 3, 1.0));
    for (std::size_t c = 0; c < st.kset.size(); ++c) CHECK(st.f(0, c) == 1.0);
    CHECK(st.f0[0] == 1.0);
    CHECK_THROWS_AS(run_recursion(*prov, 1.0, 5, {}), UsageError);
    CHECK_THROWS_AS(run_recursion(*prov, -1.0, 5, axis_kset(1, 1, 1.0)), UsageError);
}

TEST_CASE("hand-unrolled synthetic recursion at k=0") {
    auto kern = cube(1, 2);
    auto prov = models::synthetic_b_model(kern, 0.1);
    RecursionState st = run_recursion(*prov, 1.0, 3, {KPoint::zero(1)});
    CHECK(st.f0[1] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(st.f0[2] == doctest::Approx(1.1).epsilon(1e-15));
    CHECK(st.f0[3] == doctest::Approx(1.2).epsilon(1e-15));
}

TEST_CASE("internal zero column matches an explicit k=0 column bitwise") {
    auto kern = cube(2, 2);
    auto prov = models::synthetic_b_model(kern, 0.1);
    std::vector<KPoint> ks = axis_kset(2, 4, 1.0);
    ks.push_back(KPoint::zero(2));
    RecursionState st = run_recursion(*prov, 0.9, 60, ks);
    for (std::size_t n = 0; n <= 60; ++n) CHECK(st.f(n, 4) == st.f0[n]);
}

TEST_CASE("laplacian recursion") {
    SUBCASE("srw: lap f_n(0) = -n sigma^2 at z=1") {
        auto kern = cube(2, 2);
        auto prov = models::srw_provider(kern);
        RecursionState st = run_recursion(*prov, 1.0, 150, {KPoint::zero(2)});
        laplacian_recursion(*prov, st);
        CHECK(st.lapf0[0] == 0.0);
        for (std::size_t n = 1; n <= 150; ++n)
            CHECK(st.lapf0[n] ==
                  doctest::Approx(-double(n) * kern->sigma_sq()).epsilon(1e-13));
    }
    SUBCASE("synthetic hand value lapf0[2] = -4.4") {
        auto kern = cube(1, 2);  // sigma^2 = 2
        auto prov = models::synthetic_b_model(kern, 0.1);
        // lap g_2(0) = 2b dhat(0) lap dhat(0) = -0.2 z^2 sigma^2 = -0.4, so
        // lapf0[2] = g0(1) lapf0[1] + lapg0(1) f0[1] + lapg0(2) f0[0]
        //          = -2 - 2 - 0.4; the FD test below corroborates.
        RecursionState st = run_recursion(*prov, 1.0, 2, {KPoint::zero(1)});
        laplacian_recursion(*prov, st);
        CHECK(st.lapf0[1] == doctest::Approx(-2.0).epsilon(1e-15));
        CHECK(st.lapf0[2] == doctest::Approx(-4.4).epsilon(1e-14));
    }
}

TEST_CASE("laplacian matches central finite differences") {
    const double h = 1e-4;
    for (bool synthetic : {false, true}) {
        auto kern = cube(1, 2);
        auto prov = synthetic ? models::synthetic_b_model(kern, 0.1)
                              : models::srw_provider(kern);
        std::vector<KPoint> ks{KPoint({h}), KPoint({-h})};
        RecursionState st = run_recursion(*prov, 1.0, 100, ks);
        laplacian_recursion(*prov, st);
        for (std::size_t n : {std::size_t(1), std::size_t(10), std::size_t(100)}) {
            double fd = (st.f(n, 0) - 2.0 * st.f0[n] + st.f(n, 1)) / (h * h);
            CHECK(std::fabs(fd - st.lapf0[n]) / std::fabs(st.lapf0[n]) <= 1e-5);
        }
    }
}

TEST_CASE("determinism: identical runs give bitwise-identical tables") {
    auto kern = cube(2, 1);
    auto prov = models::synthetic_b_model(kern, 0.05);
    auto ks = axis_kset(2, 7, 2.0);
    RecursionState a = run_recursion(*prov, 0.97, 80, ks);
    RecursionState b = run_recursion(*prov, 0.97, 80, ks);
    REQUIRE(a.table.size() == b.table.size());
    CHECK(std::memcmp(a.table.data(), b.table.data(), a.table.size() * sizeof(double)) == 0);
}

TEST_CASE("simd and scalar modes produce bitwise-identical tables") {
    auto kern = cube(2, 1);
    auto prov = models::synthetic_b_model(kern, 0.05);
    auto ks = axis_kset(2, 9, 2.0);
    simd::set_mode(simd::Mode::Scalar);
    RecursionState a = run_recursion(*prov, 0.97, 80, ks);
    simd::set_mode(simd::Mode::Auto);
    RecursionState b = run_recursion(*prov, 0.97, 80, ks);
    CHECK(std::memcmp(a.table.data(), b.table.data(), a.table.size() * sizeof(double)) == 0);
}

TEST_CASE("symmetry of f_n under sign flips and permutations of k") {
    auto kern = cube(2, 1);
    auto prov = models::synthetic_b_model(kern, 0.1);
    std::vector<KPoint> ks{KPoint({0.4, -1.2}), KPoint({-0.4, -1.2}), KPoint({-1.2, 0.4})};
    RecursionState st = run_recursion(*prov, 1.0, 60, ks);
    for (std::size_t n = 0; n <= 60; ++n) {
        CHECK(st.f(n, 0) == doctest::Approx(st.f(n, 1)).epsilon(1e-12));
        CHECK(st.f(n, 0) == doctest::Approx(st.f(n, 2)).epsilon(1e-12));
    }
}

TEST_CASE("kahan mode stays close to the plain sum") {
    auto kern = cube(1, 2);
    auto prov = models::synthetic_b_model(kern, 0.1);
    EngineLimits kahan;
    kahan.kahan = true;
    RecursionState a = run_recursion(*prov, 0.95, 500, {KPoint({0.3})});
    RecursionState b = run_recursion(*prov, 0.95, 500, {KPoint({0.3})}, kahan);
    CHECK(a.f(500, 0) == doctest::Approx(b.f(500, 0)).epsilon(1e-12));
}

TEST_CASE("srw provider trivia") {
    auto kern = cube(2, 2);
    auto prov = models::srw_provider(kern);
    CHECK(prov->g(1, KPoint::zero(2), 1.0) == 1.0);
    CHECK(prov->lap_g0(1, 1.0) == -kern->sigma_sq());
    CHECK(prov->g(2, KPoint({0.3, 0.1}), 0.7) == 0.0);
    CHECK(prov->e(1, KPoint::zero(2), 1.0) == 0.0);
}

TEST_CASE("synthetic spec rejects non-finite amplitudes") {
    models::SyntheticSpec bad;
    bad.g_terms[2] = models::SyntheticTerm{std::nan(""), 2};
    CHECK_THROWS_AS(models::synthetic_provider(cube(1, 2), std::move(bad)), UsageError);
    models::SyntheticSpec bad2;
    bad2.e_tail = models::SyntheticTail{std::numeric_limits<double>::infinity(), 2.5, 0};
    CHECK_THROWS_AS(models::synthetic_provider(cube(1, 2), std::move(bad2)), UsageError);
}

TEST_CASE("provider contract violations are caught") {
    auto kern = cube(1, 2);
    // max_m cap honoured
    auto tables = models::saw_enumerate(cube(1, 1, true), 4);
    auto pi = models::saw_deconvolve_pi(tables);
    auto prov = models::saw_provider(pi, cube(1, 1, true));
    CHECK_THROWS_AS(run_recursion(*prov, 1.0, 10, {KPoint::zero(1)}), ModelError);
}

TEST_CASE("table memory cap is enforced") {
    auto kern = cube(1, 2);
    auto prov = models::srw_provider(kern);
    EngineLimits tiny;
    tiny.max_table_doubles = 100;
    CHECK_THROWS_AS(run_recursion(*prov, 1.0, 200, axis_kset(1, 10, 1.0), tiny), BudgetError);
}

TEST_CASE("weighted l1 norm") {
    SUBCASE("j=0 gives the squared l2 norm of D") {
        for (int d : {1, 2}) {
            auto kern = cube(d, 2);
            auto prov = models::srw_provider(kern);
            RecursionState st = run_recursion(*prov, 1.0, 1, {KPoint::zero(d)});
            QuadratureSpec quad;
            quad.resolution = 64;
            double norm2 = 0.0;
            for (std::size_t i = 0; i < kern->support_size(); ++i)
                norm2 += kern->weight(i) * kern->weight(i);
            CHECK(weighted_l1_norm(*kern, st, 0, quad) == doctest::Approx(norm2).epsilon(1e-12));
        }
    }
    SUBCASE("srw j=2 equals the 4-fold x-space convolution at 0") {
        auto kern = cube(1, 2);
        auto prov = models::srw_provider(kern);
        RecursionState st = run_recursion(*prov, 1.0, 2, {KPoint::zero(1)});
        QuadratureSpec quad;
        quad.resolution = 64;
        // D*D*D*D at 0 via direct convolution.
        std::vector<double> conv{1.0};
        int off = 0;
        for (int rep = 0; rep < 4; ++rep) {
            std::vector<double> next(conv.size() + 4, 0.0);
            for (std::size_t i = 0; i < conv.size(); ++i)
                for (std::size_t s = 0; s < kern->support_size(); ++s)
                    next[i + std::size_t(kern->point(s)[0] + 2)] += conv[i] * kern->weight(s);
            conv = std::move(next);
            off += 2;
        }
        CHECK(weighted_l1_norm(*kern, st, 2, quad) ==
              doctest::Approx(conv[std::size_t(off)]).epsilon(1e-12));
    }
    SUBCASE("srw d=5 scaling between j=16 and j=64") {
        auto kern = cube(5, 1);
        auto prov = models::srw_provider(kern);
        RecursionState st = run_recursion(*prov, 1.0, 1, {KPoint::zero(5)});
        QuadratureSpec quad;
        quad.kind = QuadratureSpec::Kind::Qmc;
        std::size_t js[2] = {16, 64};
        auto vals = weighted_l1_norms(*kern, *prov, 1.0, js, quad);
        const double measured = vals[0] / vals[1];
        const double predicted = std::pow(64.0 / 16.0, 2.5);
        CHECK(std::fabs(measured - predicted) / predicted < 0.3);
    }
}
