// Acceptance suite: one pass/fail line per criterion, exit code = number of
// failures.  Tolerances are pinned here, in code; nothing is calibrated at
// run time.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "lace/clt.hpp"
#include "lace/critical.hpp"
#include "lace/engine.hpp"
#include "lace/induction.hpp"
#include "lace/io.hpp"
#include "lace/models.hpp"

using namespace lace;
using namespace lace::models;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;
int g_failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
    std::cout << (pass ? "[PASS]" : "[FAIL]") << " criterion " << id << ": " << name;
    if (!detail.empty()) std::cout << " (" << detail << ")";
    std::cout << "\n";
    if (!pass) ++g_failures;
}

void criterion(int id, const std::string& name,
               const std::function<bool(std::ostringstream&)>& body) {
    std::ostringstream detail;
    bool pass = false;
    try {
        pass = body(detail);
    } catch (const std::exception& e) {
        detail << "exception: " << e.what();
    }
    report(id, name, pass, detail.str());
}

KernelPtr cube(int d, int L, bool excl = false) {
    return std::make_shared<StepKernel>(StepKernel::uniform_cube(d, L, excl));
}

std::vector<KPoint> axis_kset(int d, std::size_t count, double kmax) {
    std::vector<KPoint> out;
    for (std::size_t i = 1; i <= count; ++i) {
        std::vector<double> c(d, 0.0);
        c[0] = kmax * double(i) / double(count);
        out.emplace_back(std::move(c));
    }
    return out;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---- criteria ------------------------------------------------------------

bool crit1_srw_oracle(std::ostringstream& detail) {
    auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    for (int d : {1, 2, 5}) {
        auto kern = cube(d, d == 5 ? 1 : 2);
        auto prov = srw_provider(kern);
        auto ks = axis_kset(d, 50, kPi);
        for (double z : {0.5, 1.0}) {
            RecursionState st = run_recursion(*prov, z, 200, ks);
            for (std::size_t n = 0; n <= 200; ++n)
                for (std::size_t c = 0; c < ks.size(); ++c) {
                    double expect = std::pow(z * kern->dhat(ks[c]), double(n));
                    worst = std::max(worst, std::fabs(st.f(n, c) - expect));
                }
        }
    }
    double secs = seconds_since(t0);
    detail << "max|f_n - z^n dhat^n| = " << worst << ", " << secs << " s";
    return worst <= 1e-12 && secs < 1.0;
}

bool crit2_laplacian_fd(std::ostringstream& detail) {
    const double h = 1e-4;
    double worst = 0.0;
    for (bool synthetic : {false, true}) {
        auto kern = cube(1, 2);
        auto prov = synthetic ? synthetic_b_model(kern, 0.1) : srw_provider(kern);
        std::vector<KPoint> ks{KPoint({h}), KPoint({-h})};
        RecursionState st = run_recursion(*prov, 1.0, 100, ks);
        laplacian_recursion(*prov, st);
        for (std::size_t n : {std::size_t(1), std::size_t(10), std::size_t(100)}) {
            double fd = (st.f(n, 0) - 2.0 * st.f0[n] + st.f(n, 1)) / (h * h);
            worst = std::max(worst, std::fabs(fd - st.lapf0[n]) / std::fabs(st.lapf0[n]));
        }
    }
    detail << "max relative error = " << worst;
    return worst <= 1e-5;
}

bool crit3_synthetic_critical(std::ostringstream& detail) {
    auto t0 = std::chrono::steady_clock::now();
    auto kern = cube(1, 2);
    auto prov = synthetic_b_model(kern, 0.1);
    const double zstar = (-1.0 + std::sqrt(1.4)) / 0.2;  // quadratic-root oracle

    CriticalEstimate est = solve_zc(*prov, 2000, 1e-10);
    CriticalTrace tr = zn_sequence(*prov, 2000, 10.0);
    RecursionState st = run_recursion(*prov, est.z_c, 2000, {KPoint::zero(1)});
    estimate_A_v(*prov, est.z_c, 2000, st, est);
    double secs = seconds_since(t0);

    bool ok = std::fabs(est.z_c - zstar) <= 1e-9 && std::fabs(tr.z_seq[2000] - zstar) <= 1e-9 &&
              est.A_discrepancy <= 1e-6 && est.v_discrepancy <= 1e-6 && secs < 5.0;
    detail << "|zc_bisect - oracle| = " << std::fabs(est.z_c - zstar)
           << ", |zc_iter - oracle| = " << std::fabs(tr.z_seq[2000] - zstar)
           << ", A disc = " << est.A_discrepancy << ", v disc = " << est.v_discrepancy << ", "
           << secs << " s";
    return ok;
}

bool crit4_saw_exactness(std::ostringstream& detail) {
    auto t0 = std::chrono::steady_clock::now();
    auto kern = cube(2, 1, true);
    auto t = saw_enumerate(kern, 8);
    auto pi = saw_deconvolve_pi(t);
    bool ok = true;

    // (a) c_2(0) = 0 and c_2 = D*D off the origin, exactly (integer counts).
    ok &= t.counts[2].count(LatticeVec{0, 0}) == 0;
    std::map<LatticeVec, std::int64_t> dd;  // counts over 8^2
    for (auto& [x1, c1] : t.counts[1])
        for (auto& [x2, c2] : t.counts[1])
            dd[LatticeVec{x1[0] + x2[0], x1[1] + x2[1]}] += c1 * c2;
    for (auto& [x, c] : dd) {
        bool zero = x[0] == 0 && x[1] == 0;
        auto it = t.counts[2].find(x);
        std::int64_t got = it == t.counts[2].end() ? 0 : it->second;
        ok &= got == (zero ? 0 : c);
    }

    // (b) pi_2 = -delta * sum D(y)^2 exactly: numerator -8 over 8^2.
    ok &= pi.counts[2].size() == 1 && pi.counts[2].at(LatticeVec{0, 0}) == -8;

    // (c) reconvolution round trip, bit-exact in rational mode.
    ok &= verify_reconvolution(t, pi);

    // (d) deconvolved pi vs the N<=2 truncation, within the relaxed
    //     next-order diagram bound, m <= 5.
    auto direct = saw_pi_direct(t, 5);
    double worst_excess = 0.0;
    for (std::size_t m = 2; m <= 5; ++m) {
        std::map<LatticeVec, double> diff = direct.partial_sum[m];
        for (auto& [x, c] : pi.counts[m]) diff[x] -= double(c) / std::pow(8.0, double(m));
        for (auto& [x, v] : diff) {
            double b = 0.0;
            auto it = direct.remainder_bound[m].find(x);
            if (it != direct.remainder_bound[m].end()) b = it->second;
            worst_excess = std::max(worst_excess, std::fabs(v) - b);
        }
    }
    ok &= worst_excess <= 1e-12;

    double secs = seconds_since(t0);
    detail << "remainder excess over bound = " << worst_excess << ", " << secs << " s";
    return ok && secs < 120.0;
}

bool crit5_gaussian_profile(std::ostringstream& detail) {
    auto kern = cube(5, 1);
    auto prov = srw_provider(kern);
    std::vector<std::vector<double>> klist;
    for (double r : {0.5, 1.0, 1.5, 2.0}) {
        std::vector<double> k(5, 0.0);
        k[0] = r;
        klist.push_back(k);
        klist.push_back(std::vector<double>(5, r / std::sqrt(5.0)));
    }
    std::vector<std::size_t> nlist{64, 256, 1024};
    auto ks = profile_kset(klist, nlist, 1.0, *kern);
    RecursionState st = run_recursion(*prov, 1.0, 1024, ks);
    auto rows = gaussian_profile_check(st, 1.0, 1.0, *kern, klist, nlist);

    bool ok = true;
    double worst1024 = 0.0;
    const std::size_t K = klist.size();
    for (std::size_t i = 0; i < K; ++i) {
        double e64 = rows[i].err, e256 = rows[K + i].err, e1024 = rows[2 * K + i].err;
        ok &= !rows[i].skipped && e256 < e64 && e1024 < e256;
        worst1024 = std::max(worst1024, e1024);
    }
    ok &= worst1024 <= 0.02;
    detail << "max err at n=1024: " << worst1024;
    return ok;
}

bool crit6_diffusive(std::ostringstream& detail) {
    // SRW with a dyadic sigma^2 so the ratio is exactly representable.
    auto kern = cube(2, 2);
    auto prov = srw_provider(kern);
    RecursionState st = run_recursion(*prov, 1.0, 200, {KPoint::zero(2)});
    laplacian_recursion(*prov, st);
    bool exact = true;
    std::vector<std::size_t> all_n;
    for (std::size_t n = 1; n <= 200; ++n) all_n.push_back(n);
    for (auto& row : diffusive_check(st, 1.0, *kern, all_n)) exact &= row.ratio == 1.0;

    auto kern1 = cube(1, 2);
    auto prov1 = synthetic_b_model(kern1, 0.1);
    const double zc = solve_zc(*prov1, 1200, 1e-12).z_c;
    RecursionState st1 = run_recursion(*prov1, zc, 1000, {KPoint::zero(1)});
    laplacian_recursion(*prov1, st1);
    std::vector<std::size_t> ns{100, 1000};
    auto rows = diffusive_check(st1, 1.0, *kern1, ns);
    bool trend = rows[1].dev < rows[0].dev;
    detail << "srw ratio exact = " << (exact ? "yes" : "no")
           << ", synthetic dev 100 -> 1000: " << rows[0].dev << " -> " << rows[1].dev;
    return exact && trend;
}

bool crit7_l1_decay(std::ostringstream& detail) {
    // Normalised with the criterion's fixed n^{5/2} exponent in both runs.
    auto norm_seq = [&](int d) {
        auto kern = cube(d, 1);
        auto prov = srw_provider(kern);
        QuadratureSpec quad;
        if (d <= 3) {
            quad.kind = QuadratureSpec::Kind::Tensor;
            quad.resolution = 64;
        } else {
            quad.kind = QuadratureSpec::Kind::Qmc;
        }
        std::vector<std::size_t> ns{8, 16, 32, 64, 128};
        auto vals = weighted_l1_norms(*kern, *prov, 1.0, ns, quad);
        std::vector<double> out;
        for (std::size_t i = 0; i < ns.size(); ++i)
            out.push_back(vals[i] * std::pow(double(ns[i]), 2.5) / kern->beta());
        return out;
    };
    auto ratio = [](const std::vector<double>& v) {
        double lo = 1e300, hi = 0.0;
        for (double x : v) {
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
        return hi / lo;
    };
    double r5 = ratio(norm_seq(5));
    double r2 = ratio(norm_seq(2));
    detail << "d=5 max/min = " << r5 << " (need <= 3), d=2 max/min = " << r2 << " (need >= 3)";
    return r5 <= 3.0 && r2 >= 3.0;
}

bool crit8_local_clt(std::ostringstream& detail) {
    auto kern = cube(1, 2);
    auto prov = srw_provider(kern);
    LocalCltConfig cfg;  // R_n = floor(n^{1/4})
    double prev = 1e300, at4096 = 1e300;
    bool decreasing = true;
    for (std::size_t n : {std::size_t(512), std::size_t(1024), std::size_t(2048),
                          std::size_t(4096)}) {
        XSpaceTable tab = inverse_ft_pn(*prov, 1.0, n, 16);
        auto rows = local_clt_check(tab, cfg, 1.0, 1.0, *kern);
        double dev = std::fabs(rows[0].ratio - 1.0);
        decreasing &= dev < prev;
        prev = dev;
        if (n == 4096) at4096 = dev;
    }

    // Bipartite kernel: pointwise parity oscillation, averaged convergence.
    auto bip = cube(1, 1, true);
    auto bprov = srw_provider(bip);
    bool parity_ok = true;
    double bdev_prev = 1e300;
    for (std::size_t n : {std::size_t(1024), std::size_t(4096)}) {
        XSpaceTable tab = inverse_ft_pn(*bprov, 1.0, n, 16);
        // wrong-parity sites carry no mass (transform roundoff only)
        parity_ok &= std::fabs(tab.at(LatticeVec{int(n % 2 == 0 ? 1 : 0)})) <= 1e-12;
        parity_ok &= tab.at(LatticeVec{int(n % 2 == 0 ? 0 : 1)}) > 1e-6;
        auto rows = local_clt_check(tab, cfg, 1.0, 1.0, *bip);
        double dev = std::fabs(rows[0].ratio - 1.0);
        parity_ok &= dev < bdev_prev;
        bdev_prev = dev;
    }

    detail << "|LHS/RHS - 1| at n=4096: " << at4096 << "; bipartite averaged dev: " << bdev_prev;
    return decreasing && at4096 <= 0.05 && parity_ok;
}

bool crit9_hypotheses(std::ostringstream& detail) {
    auto kern = cube(5, 1);
    auto prov = srw_provider(kern);
    auto ks = axis_kset(5, 12, 1.8);
    RecursionState st = run_recursion(*prov, 1.0, 200, ks);
    CriticalTrace tr = zn_sequence(*prov, 200, 10.0);
    vn_sequence(*prov, 1.0, 200, tr);
    RTrace rt = extract_r_s(st, tr);
    HypothesisReport rep =
        check_hypotheses(st, tr, rt, HypothesisConstants::defaults_for(5), *kern);

    bool ok = rep.all_pass();
    // H1-H3 measured quantities: identically zero up to double rounding of
    // the ratio chain (the k = 0 quantities are exactly zero).
    ok &= rep.h1.worst.measured == 0.0 && rep.h2.worst.measured == 0.0 &&
          rep.h3_r0.worst.measured == 0.0;
    ok &= rep.h3_rk.worst.measured <= 1e-14;

    // Constructed non-decaying provider fails H1 with margin > 1.
    SyntheticSpec bad;
    bad.g_terms[2] = SyntheticTerm{0.5, 0};
    auto bprov = synthetic_provider(kern, std::move(bad));
    CriticalTrace btr = zn_sequence(*bprov, 30, 1.0);
    const double bzc = solve_zc(*bprov, 30, 1e-12).z_c;
    vn_sequence(*bprov, bzc, 30, btr);
    RecursionState bst = run_recursion(*bprov, bzc, 30, axis_kset(5, 4, 1.0));
    RTrace brt = extract_r_s(bst, btr);
    HypothesisConstants small(5, 0.25, 0.2, 0.375, 0.5, 1, 1, 1, 1, 1);
    HypothesisReport brep = check_hypotheses(bst, btr, brt, small, *kern);
    ok &= !brep.h1.pass && brep.h1.worst.margin > 1.0;

    // xyz reconstruction residuals <= 1e-9 on all four models.
    double worst_resid = 0.0;
    auto probe = [&](const CoefficientProvider& p, double z, std::size_t nmax,
                     const KPoint& k) {
        RecursionState s = run_recursion(p, z, nmax + 1, {k});
        CriticalTrace t2 = zn_sequence(p, nmax + 2, 10.0);
        vn_sequence(p, z, nmax + 2, t2);
        for (std::size_t n : {std::size_t(1), nmax / 2, nmax}) {
            DiagnosticsRecord rec = xyz_diagnostics(s, p, t2, z, n, k);
            worst_resid = std::max(worst_resid, std::fabs(rec.resid_small_k));
            worst_resid = std::max(worst_resid, std::fabs(rec.resid_large_k));
        }
    };
    probe(*prov, 1.0, 30, KPoint({0.8, 0, 0, 0, 0}));
    auto sprov = synthetic_b_model(cube(1, 2), 0.1);
    probe(*sprov, 0.916, 30, KPoint({0.8}));
    auto tables = saw_enumerate(cube(2, 1, true), 8);
    auto sawp = saw_provider(saw_deconvolve_pi(tables), cube(2, 1, true));
    probe(*sawp, 1.2, 6, KPoint({0.8, 0.4}));
    auto est = op_simulate(cube(3, 1, true), 0.8, 6, 20000, 21, 6);
    auto opp = op_provider(std::move(est), cube(3, 1, true));
    probe(*opp, 0.8, 5, KPoint({0.8, 0.4, 0.0}));
    ok &= worst_resid <= 1e-9;

    detail << "srw H margins (H1,H2,H3r0,H3rk,H4f,H4d) = (" << rep.h1.worst.margin << ", "
           << rep.h2.worst.margin << ", " << rep.h3_r0.worst.margin << ", "
           << rep.h3_rk.worst.margin << ", " << rep.h4_f.worst.margin << ", "
           << rep.h4_diff.worst.margin << "); broken H1 margin = " << brep.h1.worst.margin
           << "; max xyz residual = " << worst_resid;
    return ok;
}

bool crit10_conv_probe(std::ostringstream& detail) {
    std::vector<std::size_t> full, half;
    for (std::size_t n = 2; n <= 500; ++n) {
        full.push_back(n);
        if (n <= 250) half.push_back(n);
    }
    bool ok = true;
    detail << "sup drift 250 -> 500:";
    for (auto [a, b] : {std::pair{3.0, 3.0}, {2.5, 0.5}, {1.5, 1.5}}) {
        double s_half = conv_bound_probe(a, b, half).sup_constant;
        double s_full = conv_bound_probe(a, b, full).sup_constant;
        double drift = std::fabs(s_full - s_half) / s_full;
        detail << " (" << a << "," << b << "): " << 100.0 * drift << "%";
        ok &= drift < 0.01;
    }
    if (!ok)
        detail << "; the (2.5,0.5) scaled sequence converges to zeta(1.5)-1 like n^{-1/2}, so"
                  " the 1% window is unattainable there — see the decisions ledger";
    return ok;
}

bool crit11_op_statistics(std::ostringstream& detail) {
    auto t0 = std::chrono::steady_clock::now();
    auto kern = cube(3, 1, true);
    const double z = 0.8;
    OpEstimates est = op_simulate(kern, z, 6, 100000, 2026, 6);

    bool tau_ok = true;
    double worst_sigma = 0.0;
    for (std::size_t i = 0; i < kern->support_size(); ++i) {
        auto p = kern->point(i);
        LatticeVec x(p.begin(), p.end());
        double dev = std::fabs(est.tau_hat(1, x) - z * kern->weight(i));
        double se = est.tau_se(1, x);
        worst_sigma = std::max(worst_sigma, dev / se);
        tau_ok &= dev <= 4.0 * se;
    }

    bool bk_ok = true;
    for (std::size_t m = 2; m <= 6; ++m)
        for (auto& [x, c] : est.rho_counts[m]) {
            double rho = est.rho_hat(m, x), tau = est.tau_hat(m, x);
            double se = est.rho_se(m, x) + 2.0 * tau * est.tau_se(m, x);
            bk_ok &= rho <= tau * tau + 4.0 * se;
        }

    double secs = seconds_since(t0);
    detail << "worst tau_1 deviation = " << worst_sigma << " sigma; BK "
           << (bk_ok ? "holds" : "violated") << " at every sampled cell; " << secs << " s";
    return tau_ok && bk_ok && secs < 300.0;
}

bool crit12_determinism(std::ostringstream& detail) {
    const fs::path work = fs::temp_directory_path() / "lace_acceptance";
    fs::remove_all(work);
    fs::create_directories(work);
    lace::io::write_file(work / "cfg",
                         "model = srw\nkernel.d = 2\nkernel.L = 2\nrun.n_max = 64\n"
                         "run.z = auto\nrun.kset = axis:6:1.5\nquadrature.resolution = 32\n"
                         "seed = 4\n");
    auto run = [&](const std::string& out) {
        std::string cmd = "LACE_CACHE_DIR=" + (work / "cache").string() + " " + LACE_BIN +
                          " run --config " + (work / "cfg").string() + " --out " +
                          (work / out).string() + " > /dev/null 2>&1";
        return std::system(cmd.c_str()) == 0;
    };
    if (!run("a") || !run("b")) {
        detail << "lace run failed";
        return false;
    }
    std::string ma = lace::io::read_file(work / "a/manifest.json");
    std::string mb = lace::io::read_file(work / "b/manifest.json");
    detail << "manifests " << (ma == mb ? "byte-identical" : "DIFFER");
    return ma == mb;
}

}  // namespace

int main() {
    criterion(1, "SRW oracle, d in {1,2,5}, z in {0.5,1}, n <= 200", crit1_srw_oracle);
    criterion(2, "laplacian recursion vs finite differences", crit2_laplacian_fd);
    criterion(3, "synthetic criticality: z_c, A, v against oracles", crit3_synthetic_critical);
    criterion(4, "SAW exactness (c_2, pi_2, reconvolution, diagram bound)", crit4_saw_exactness);
    criterion(5, "gaussian profile trend, SRW d=5", crit5_gaussian_profile);
    criterion(6, "diffusive constant: SRW exact, synthetic trend", crit6_diffusive);
    criterion(7, "L1 decay: d=5 bounded, d=2 negative control", crit7_l1_decay);
    criterion(8, "local CLT at x=0 with R_n = n^{1/4}, plus parity demo", crit8_local_clt);
    criterion(9, "hypothesis checker: SRW passes, broken provider fails, xyz identities",
              crit9_hypotheses);
    criterion(10, "convolution lemma probe: sup constants stable to 1%", crit10_conv_probe);
    criterion(11, "OP statistics at 1e5 samples: tau_1 and BK", crit11_op_statistics);
    criterion(12, "determinism: repeated runs give byte-identical manifests",
              crit12_determinism);

    if (g_failures == 0)
        std::cout << "all acceptance criteria passed\n";
    else
        std::cout << g_failures << " criterion(s) failed\n";
    return g_failures;
}
