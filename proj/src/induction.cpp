#include "lace/induction.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "lace/errors.hpp"

namespace lace {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double margin_of(double measured, double bound) {
    if (measured == 0.0) return 0.0;
    if (bound == 0.0) return kInf;
    return measured / bound;
}

void record(HypothesisCheck& chk, std::size_t j, std::ptrdiff_t kidx, double measured,
            double bound) {
    HypothesisCell cell{j, kidx, measured, bound, margin_of(measured, bound)};
    if (cell.margin > 1.0) chk.pass = false;
    if (cell.margin > chk.worst.margin) chk.worst = cell;
    chk.cells.push_back(cell);
}

std::size_t provider_g_top(const CoefficientProvider& p, std::size_t want) {
    std::size_t top = want;
    if (p.max_m() != CoefficientProvider::unbounded()) top = std::min(top, p.max_m());
    if (p.g_zero_from() != CoefficientProvider::unbounded())
        top = std::min(top, p.g_zero_from() == 0 ? std::size_t(0) : p.g_zero_from() - 1);
    return top;
}

std::size_t provider_e_top(const CoefficientProvider& p, std::size_t want) {
    std::size_t top = want;
    if (p.max_m() != CoefficientProvider::unbounded()) top = std::min(top, p.max_m());
    if (p.e_zero_from() != CoefficientProvider::unbounded())
        top = std::min(top, p.e_zero_from() == 0 ? std::size_t(0) : p.e_zero_from() - 1);
    return top;
}

}  // namespace

HypothesisConstants::HypothesisConstants(int d_, double gamma_, double delta_, double rho_,
                                         double epsilon_prime_, double K1_, double K2_, double K3_,
                                         double K4_, double K5_)
    : d(d_), gamma(gamma_), delta(delta_), rho(rho_), epsilon_prime(epsilon_prime_), K1(K1_),
      K2(K2_), K3(K3_), K4(K4_), K5(K5_) {
    const double half_gap = 0.5 * (d - 4);
    if (!(gamma > 0 && delta > 0 && rho > 0))
        throw UsageError("hypothesis constants: gamma, delta, rho must be positive");
    if (!(half_gap - rho > 0 && half_gap - rho < gamma))
        throw UsageError("hypothesis constants: need 0 < (d-4)/2 - rho < gamma");
    if (!(gamma + delta < std::min(1.0, half_gap)))
        throw UsageError("hypothesis constants: need gamma + delta < min(1, (d-4)/2)");
    if (epsilon_prime < 0) throw UsageError("hypothesis constants: epsilon' must be >= 0");
    if (!(K1 > 0 && K2 > 0 && K3 > 0 && K4 > 0 && K5 > 0))
        throw UsageError("hypothesis constants: K1..K5 must be positive");
}

HypothesisConstants HypothesisConstants::defaults_for(int d) {
    if (d <= 4) throw UsageError("hypothesis constants are only admissible for d > 4");
    const double cap = std::min(1.0, 0.5 * (d - 4));
    const double gamma = 0.5 * cap;
    const double delta = 0.4 * cap;
    const double rho = 0.5 * (d - 4) - 0.5 * gamma;
    return HypothesisConstants(d, gamma, delta, rho, 0.5, 10.0, 10.0, 10.0, 100.0, 100.0);
}

std::vector<std::string> HypothesisConstants::ordering_warnings() const {
    // The ordering K3 >> K1 > K4 >= K4 >> 1, K2 >= max(K1, 2K4), K5 >> K4 is
    // existential in origin; violations are reported, never enforced.
    std::vector<std::string> w;
    auto warn = [&](bool ok, const char* msg) {
        if (!ok) w.emplace_back(msg);
    };
    warn(K3 >= K1, "ordering: K3 >= K1 not satisfied");
    warn(K1 > K4, "ordering: K1 > K4 not satisfied");
    warn(K4 >= 1.0, "ordering: K4 >= 1 not satisfied");
    warn(K2 >= K1, "ordering: K2 >= K1 not satisfied");
    warn(K2 >= 2 * K4, "ordering: K2 >= 2 K4 not satisfied");
    warn(K5 >= K4, "ordering: K5 >= K4 not satisfied");
    return w;
}

RTrace extract_r_s(const RecursionState& state, const CriticalTrace& trace) {
    if (!state.provider) throw UsageError("extract_r_s: state has no provider attached");
    if (trace.v_seq.size() < state.n_max + 1)
        throw UsageError("extract_r_s: trace v sequence shorter than the state");
    if (trace.z_ref != state.z)
        throw UsageError("extract_r_s: trace and state were computed at different z");
    const StepKernel& kernel = state.provider->kernel();

    RTrace rt;
    rt.n_max = state.n_max;
    rt.kset = state.kset;
    rt.ncols = state.kset.size();
    rt.v_seq = trace.v_seq;
    rt.r.assign(rt.n_max * rt.ncols, 0.0);
    rt.s.assign(rt.n_max * rt.ncols, 0.0);
    rt.r0.assign(rt.n_max + 1, 0.0);

    std::vector<double> a_vals(rt.ncols);
    for (std::size_t c = 0; c < rt.ncols; ++c) a_vals[c] = kernel.a_of_k(state.kset[c]);

    for (std::size_t j = 1; j <= rt.n_max; ++j) {
        if (state.f0[j - 1] == 0.0) {
            std::ostringstream os;
            os << "extract_r_s: f_" << (j - 1) << "(0) vanishes on the ratio chain";
            throw SingularityError(os.str());
        }
        rt.r0[j] = state.f0[j] / state.f0[j - 1] - 1.0;
        const double denom0 = 1.0 + rt.r0[j];
        if (std::fabs(denom0) < 1e-300)
            throw SingularityError("extract_r_s: 1 + r_j(0) vanishes");
        for (std::size_t c = 0; c < rt.ncols; ++c) {
            const double fprev = state.f(j - 1, c);
            if (fprev == 0.0) {
                std::ostringstream os;
                os << "extract_r_s: f_" << (j - 1) << "(k) vanishes at k index " << c;
                throw SingularityError(os.str());
            }
            const double rjk = state.f(j, c) / fprev - 1.0 + rt.v_seq[j] * a_vals[c];
            rt.r[(j - 1) * rt.ncols + c] = rjk;
            rt.s[(j - 1) * rt.ncols + c] =
                (rt.v_seq[j] * a_vals[c] * rt.r0[j] + (rjk - rt.r0[j])) / denom0;
        }
    }
    return rt;
}

double rtrace_reconstruction_error(const RecursionState& state, const RTrace& rt,
                                   const StepKernel& kernel, double floor) {
    double worst = 0.0;
    std::vector<double> prod(rt.ncols, 1.0);
    std::vector<double> a_vals(rt.ncols);
    for (std::size_t c = 0; c < rt.ncols; ++c) a_vals[c] = kernel.a_of_k(state.kset[c]);
    for (std::size_t j = 1; j <= rt.n_max; ++j) {
        for (std::size_t c = 0; c < rt.ncols; ++c) {
            prod[c] *= 1.0 - rt.v_seq[j] * a_vals[c] + rt.s_at(j, c);
            const double truth = state.f(j, c);
            if (std::fabs(truth) > floor)
                worst = std::max(worst, std::fabs(state.f0[j] * prod[c] - truth) / std::fabs(truth));
        }
    }
    return worst;
}

HypothesisReport check_hypotheses(const RecursionState& state, const CriticalTrace& trace,
                                  const RTrace& rtrace, const HypothesisConstants& constants,
                                  const StepKernel& kernel) {
    const std::size_t n = state.n_max;
    if (trace.z_seq.size() < n + 1 || trace.v_seq.size() < n + 1)
        throw UsageError("check_hypotheses: trace sequences shorter than the state");

    HypothesisReport rep;
    rep.warnings = constants.ordering_warnings();
    const double beta = kernel.beta();
    const int d = kernel.d();

    for (std::size_t j = 1; j <= n; ++j) {
        record(rep.h1, j, -1, std::fabs(trace.z_seq[j] - trace.z_seq[j - 1]),
               constants.K1 * beta * std::pow(double(j), -0.5 * d));
        record(rep.h2, j, -1, std::fabs(trace.v_seq[j] - trace.v_seq[j - 1]),
               constants.K2 * beta * std::pow(double(j), -0.5 * (d - 2)));
    }

    std::vector<double> a_vals(state.kset.size());
    for (std::size_t c = 0; c < state.kset.size(); ++c) a_vals[c] = kernel.a_of_k(state.kset[c]);

    // log(j)/j suffix maxima: pair (i, k) belongs to the H3 regime when
    // a(k) <= gamma * max_{i <= j <= n} log(j)/j.
    std::vector<double> suffix_max(n + 2, 0.0);
    for (std::size_t j = n; j >= 1; --j) {
        suffix_max[j] = std::max(suffix_max[j + 1], std::log(double(j)) / double(j));
        if (j == 1) break;
    }

    for (std::size_t i = 1; i <= n; ++i) {
        record(rep.h3_r0, i, -1, std::fabs(rtrace.r0[i]),
               constants.K3 * beta * std::pow(double(i), -0.5 * (d - 2)));
        const double thresh = constants.gamma * suffix_max[i];
        for (std::size_t c = 0; c < a_vals.size(); ++c) {
            if (a_vals[c] > thresh) continue;
            record(rep.h3_rk, i, std::ptrdiff_t(c), std::fabs(rtrace.r_at(i, c) - rtrace.r0[i]),
                   constants.K3 * beta * a_vals[c] * std::pow(double(i), -constants.delta));
        }
    }

    for (std::size_t j = 1; j <= n; ++j) {
        const double thresh = constants.gamma * std::log(double(j)) / double(j);
        const double jpow = std::pow(double(j), -0.5 * d);
        for (std::size_t c = 0; c < a_vals.size(); ++c) {
            if (!(a_vals[c] > thresh)) continue;
            record(rep.h4_f, j, std::ptrdiff_t(c), std::fabs(state.f(j, c)),
                   constants.K4 * std::pow(a_vals[c], -2.0 - constants.rho) * jpow);
            record(rep.h4_diff, j, std::ptrdiff_t(c), std::fabs(state.f(j, c) - state.f(j - 1, c)),
                   constants.K5 * std::pow(a_vals[c], -1.0 - constants.rho) * jpow);
        }
    }
    return rep;
}

EgReport check_assumption_eg(const CoefficientProvider& provider, std::span<const double> z_grid,
                             std::size_t n_max, const HypothesisConstants& constants,
                             std::span<const KPoint> ksample) {
    const StepKernel& kernel = provider.kernel();
    const double beta = kernel.beta();
    const double sigma_sq = kernel.sigma_sq();
    const int d = kernel.d();
    const double epp = constants.epsilon_prime;

    EgReport rep;
    auto update = [&](int which, std::size_t m, std::ptrdiff_t kidx, double measured,
                      double envelope) {
        double ratio = margin_of(measured, envelope);
        if (ratio > rep.kprime[which]) {
            rep.kprime[which] = ratio;
            rep.worst[which] = HypothesisCell{m, kidx, measured, envelope, ratio};
        }
    };

    const std::size_t gt = provider_g_top(provider, n_max + 1);
    const std::size_t et = provider_e_top(provider, n_max + 1);

    for (double z : z_grid) {
        for (std::size_t m = 2; m <= gt; ++m) {
            const double g0 = provider.g0(m, z);
            const double lap = provider.lap_g0(m, z);
            update(1, m, -1, std::fabs(lap), sigma_sq * beta * std::pow(double(m), -0.5 * (d - 2)));
            update(2, m, -1, std::fabs(provider.dz_g0(m, z)),
                   beta * std::pow(double(m), -0.5 * (d - 2)));
            for (std::size_t c = 0; c < ksample.size(); ++c) {
                const double a = kernel.a_of_k(ksample[c]);
                const double gk = provider.g(m, ksample[c], z);
                update(0, m, std::ptrdiff_t(c), std::fabs(gk), beta * std::pow(double(m), -0.5 * d));
                if (a > 0.0)
                    update(3, m, std::ptrdiff_t(c), std::fabs(gk - g0 - a / sigma_sq * lap),
                           beta * std::pow(a, 1.0 + epp) *
                               std::pow(double(m), -0.5 * (d - 2 - 2 * epp)));
            }
        }
        for (std::size_t m = 2; m <= et; ++m) {
            const double e0 = provider.e0(m, z);
            for (std::size_t c = 0; c < ksample.size(); ++c) {
                const double a = kernel.a_of_k(ksample[c]);
                const double ek = provider.e(m, ksample[c], z);
                update(4, m, std::ptrdiff_t(c), std::fabs(ek), beta * std::pow(double(m), -0.5 * d));
                if (a > 0.0)
                    update(5, m, std::ptrdiff_t(c), std::fabs(ek - e0),
                           a * beta * std::pow(double(m), -0.5 * (d - 2)));
            }
        }
    }
    rep.kprime_overall = *std::max_element(rep.kprime, rep.kprime + 6);
    return rep;
}

ConvProbeResult conv_bound_probe(double a_exp, double b_exp,
                                 std::span<const std::size_t> n_list) {
    ConvProbeResult res;
    res.a = a_exp;
    res.b = b_exp;
    if (a_exp > 2 && b_exp > 2) {
        res.case_id = 4;
        res.power = std::min(a_exp, b_exp);
    } else if (a_exp > 2 && b_exp > 1) {
        res.case_id = 3;
        res.power = std::min(a_exp - 1, b_exp);
    } else if (a_exp > 2 && b_exp > 0) {
        res.case_id = 2;
        res.power = std::min(a_exp - 2, b_exp);
    } else if (a_exp > 1 && b_exp > 1) {
        res.case_id = 1;
        res.power = std::min(a_exp, b_exp) - 1;
    } else {
        throw UsageError(
            "conv_bound_probe: exponents match none of the admissible cases "
            "{a,b>1}, {a>2,b>0}, {a>2,b>1}, {a,b>2}");
    }

    std::size_t top = 2;
    for (std::size_t n : n_list) top = std::max(top, n);
    std::vector<double> pref(top + 1, 0.0);  // pref[j] = sum_{i<=j} i^-b
    for (std::size_t j = 1; j <= top; ++j) pref[j] = pref[j - 1] + std::pow(double(j), -b_exp);

    for (std::size_t n : n_list) {
        if (n < 2) continue;
        double S = 0.0;
        for (std::size_t m = 2; m <= n; ++m)
            S += std::pow(double(m), -a_exp) * (pref[n] - pref[n - m]);
        double scaled = S * std::pow(double(n), res.power);
        res.scaled.emplace_back(n, scaled);
        res.sup_constant = std::max(res.sup_constant, scaled);
    }
    return res;
}

DiagnosticsRecord xyz_diagnostics(const RecursionState& state, const CoefficientProvider& provider,
                                  const CriticalTrace& trace, double z, std::size_t n,
                                  const KPoint& k, double tol) {
    if (state.z != z || trace.z_ref != z)
        throw UsageError("xyz_diagnostics: state/trace/z mismatch");
    if (n + 1 > state.n_max) throw UsageError("xyz_diagnostics: state not computed through n+1");
    if (trace.v_seq.size() < n + 2 || trace.zeta_seq.size() < n + 2)
        throw UsageError("xyz_diagnostics: trace sequences too short");

    const StepKernel& kernel = provider.kernel();
    std::size_t col;
    if (k.is_zero()) {
        col = state.ncols - 1;
    } else {
        std::ptrdiff_t c = state.find_column(k);
        if (c < 0) throw UsageError("xyz_diagnostics: k not in the state kset");
        col = std::size_t(c);
    }

    auto fk = [&](std::size_t j) { return state.f(j, col); };
    const double fn = fk(n);
    if (fn == 0.0) throw SingularityError("xyz_diagnostics: f_n(k) vanishes");

    const double a = kernel.a_of_k(k);
    const double sigma_sq = kernel.sigma_sq();
    DiagnosticsRecord rec;
    rec.zeta = trace.zeta_seq[n + 1];
    rec.v_next = trace.v_seq[n + 1];
    rec.b_next = trace.b_seq[n + 1];

    const std::size_t gt = provider_g_top(provider, n + 1);
    for (std::size_t m = 2; m <= gt; ++m) {
        const double gk = provider.g(m, k, z);
        const double g0 = provider.g0(m, z);
        const double lap = provider.lap_g0(m, z);
        const double ratio = fk(n + 1 - m) / fn;
        rec.X += (gk - g0) * ratio - a / sigma_sq * lap;
        rec.Y += g0 * (ratio - 1.0 - (double(m) - 1.0) * rec.v_next * a);
        rec.X1 += gk - g0 - a / sigma_sq * lap;
        rec.W += gk * (fk(n + 1 - m) - fn);
    }
    const std::size_t et = provider_e_top(provider, n + 1);
    const double e_next = (n + 1 <= et) ? provider.e(n + 1, k, z) : 0.0;
    rec.Z = e_next / fn;

    rec.r_next = fk(n + 1) / fn - 1.0 + rec.v_next * a;
    rec.resid_small_k =
        fk(n + 1) / fn - (1.0 - rec.v_next * a + rec.X + rec.Y + rec.Z + rec.zeta);
    rec.resid_large_k =
        fk(n + 1) - (fn * (1.0 - a * rec.b_next + rec.X1 + rec.zeta) + rec.W + e_next);

    const double scale = std::max(1.0, std::fabs(fk(n + 1)));
    if (std::fabs(rec.resid_small_k) > tol || std::fabs(rec.resid_large_k) > tol * scale) {
        std::ostringstream os;
        os << "xyz_diagnostics: reconstruction residual beyond " << tol
           << " (small-k " << rec.resid_small_k << ", large-k " << rec.resid_large_k
           << ") at n=" << n << "; engine or provider bug";
        throw IdentityViolationError(os.str());
    }
    return rec;
}

}  // namespace lace
