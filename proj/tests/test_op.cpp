#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lace/engine.hpp"
#include "lace/errors.hpp"
#include "lace/models.hpp"

using namespace lace;
using namespace lace::models;

namespace {
KernelPtr cube(int d, int L, bool excl = false) {
    return std::make_shared<StepKernel>(StepKernel::uniform_cube(d, L, excl));
}
}  // namespace

TEST_CASE("op_simulate guards") {
    auto kern = cube(2, 1, true);  // 8 sites, max D = 1/8
    CHECK_THROWS_AS(op_simulate(kern, 9.0, 4, 10, 1), ModelError);
    CHECK_THROWS_AS(op_simulate(kern, 0.5, 4, 0, 1), UsageError);
}

TEST_CASE("tau_0 is a point mass with zero variance") {
    auto kern = cube(2, 1, true);
    OpEstimates est = op_simulate(kern, 0.7, 3, 500, 42);
    CHECK(est.tau_hat(0, LatticeVec{0, 0}) == 1.0);
    CHECK(est.tau_se(0, LatticeVec{0, 0}) == 0.0);
    CHECK(est.tau_counts[0].size() == 1);
}

TEST_CASE("tau_1 concentrates on z D(x) within 4 standard errors") {
    auto kern = cube(3, 1, true);  // 26 sites
    const double z = 0.8;
    OpEstimates est = op_simulate(kern, z, 2, 100000, 7);
    for (std::size_t i = 0; i < kern->support_size(); ++i) {
        auto p = kern->point(i);
        LatticeVec x(p.begin(), p.end());
        const double expect = z * kern->weight(i);
        const double got = est.tau_hat(1, x);
        const double se = est.tau_se(1, x);
        CHECK(std::fabs(got - expect) <= 4.0 * se);
    }
}

TEST_CASE("estimates are bitwise reproducible from the seed") {
    auto kern = cube(2, 1, true);
    OpEstimates a = op_simulate(kern, 0.8, 5, 2000, 99, 5);
    OpEstimates b = op_simulate(kern, 0.8, 5, 2000, 99, 5);
    CHECK(a.tau_counts == b.tau_counts);
    CHECK(a.rho_counts == b.rho_counts);
    OpEstimates c = op_simulate(kern, 0.8, 5, 2000, 100, 5);
    CHECK(a.tau_counts != c.tau_counts);  // different seed should differ
}

TEST_CASE("thread split does not change the counts") {
    auto kern = cube(2, 1, true);
    OpEstimates a = op_simulate(kern, 0.8, 4, 1500, 5, 4, 1);
    OpEstimates b = op_simulate(kern, 0.8, 4, 1500, 5, 4, 3);
    CHECK(a.tau_counts == b.tau_counts);
    CHECK(a.rho_counts == b.rho_counts);
}

TEST_CASE("BK diagnostic: rho0 <= tau^2 within 4 combined standard errors") {
    auto kern = cube(2, 1, true);
    OpEstimates est = op_simulate(kern, 1.2, 6, 20000, 11, 6);
    for (std::size_t m = 2; m <= 6; ++m)
        for (auto& [x, c] : est.rho_counts[m]) {
            const double rho = est.rho_hat(m, x);
            const double tau = est.tau_hat(m, x);
            const double se = est.rho_se(m, x) + 2.0 * tau * est.tau_se(m, x);
            CHECK(rho <= tau * tau + 4.0 * se);
        }
}

TEST_CASE("tau mass decays in n below criticality") {
    auto kern = cube(2, 1, true);
    OpEstimates est = op_simulate(kern, 0.7, 6, 20000, 3);
    auto mass = [&](std::size_t n) {
        double s = 0.0;
        for (auto& [x, c] : est.tau_counts[n]) s += double(c);
        return s / double(est.samples);
    };
    // expected mass z^n; statistical trend check with generous slack
    for (std::size_t n = 1; n <= 5; ++n) CHECK(mass(n + 1) <= mass(n) + 0.02);
    CHECK(mass(6) < mass(1));
}

TEST_CASE("op provider") {
    auto kern = cube(2, 1, true);
    const double z = 0.8;
    OpEstimates est = op_simulate(kern, z, 6, 30000, 17, 6);
    auto prov = op_provider(est, kern);

    SUBCASE("structure: g_2 = 0, e_1 = 0, g_1 = z dhat") {
        KPoint k({0.4, -0.2});
        CHECK(prov->g(2, k, z) == 0.0);
        CHECK(prov->e(1, k, z) == 0.0);
        CHECK(prov->g(1, k, z) == doctest::Approx(z * kern->dhat(k)).epsilon(1e-15));
        CHECK(prov->g(3, k, z) ==
              doctest::Approx(z * kern->dhat(k) * prov->e(2, k, z)).epsilon(1e-12));
    }
    SUBCASE("missing estimate orders are reported") {
        CHECK_THROWS_AS(prov->e(9, KPoint::zero(2), z), ModelError);
        CHECK_THROWS_AS(run_recursion(*prov, z, 20, {KPoint::zero(2)}), ModelError);
    }
    SUBCASE("engine run approximately reproduces tau_hat at k") {
        // The N=0 truncation error is second order at small z; statistical
        // error dominates at these sample counts.
        RecursionState st = run_recursion(*prov, z, 4, {KPoint::zero(2), KPoint({0.5, 0.5})});
        for (std::size_t n = 1; n <= 4; ++n) {
            for (std::size_t c = 0; c < 2; ++c) {
                const KPoint& k = st.kset[c];
                double tau_k = 0.0, se_k = 0.0;
                for (auto& [x, cnt] : est.tau_counts[n]) {
                    double phase = 0.0;
                    for (int i = 0; i < 2; ++i) phase += k.c[i] * x[i];
                    tau_k += est.tau_hat(n, x) * std::cos(phase);
                    se_k += est.tau_se(n, x);
                }
                const double slack = 4.0 * se_k + 0.05 * std::fabs(tau_k) + 1e-3;
                CHECK(std::fabs(st.f(n, c) - tau_k) <= slack);
            }
        }
    }
    SUBCASE("laplacian data is consistent with finite differences") {
        const double h = 1e-4;
        std::vector<KPoint> ks{KPoint({h, 0.0}), KPoint({-h, 0.0}), KPoint({0.0, h}),
                               KPoint({0.0, -h})};
        RecursionState st = run_recursion(*prov, z, 5, ks);
        laplacian_recursion(*prov, st);
        for (std::size_t n : {std::size_t(2), std::size_t(5)}) {
            double fd =
                (st.f(n, 0) + st.f(n, 1) + st.f(n, 2) + st.f(n, 3) - 4.0 * st.f0[n]) / (h * h);
            CHECK(std::fabs(fd - st.lapf0[n]) / std::max(1e-9, std::fabs(st.lapf0[n])) <= 1e-4);
        }
    }
}
