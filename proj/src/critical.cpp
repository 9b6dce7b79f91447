#include "lace/critical.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "lace/errors.hpp"

namespace lace {

namespace {

std::size_t g_top(const CoefficientProvider& p, std::size_t want) {
    std::size_t top = want;
    if (p.max_m() != CoefficientProvider::unbounded()) top = std::min(top, p.max_m());
    if (p.g_zero_from() != CoefficientProvider::unbounded())
        top = std::min(top, p.g_zero_from() == 0 ? std::size_t(0) : p.g_zero_from() - 1);
    return top;
}

std::size_t e_top(const CoefficientProvider& p, std::size_t want) {
    std::size_t top = want;
    if (p.max_m() != CoefficientProvider::unbounded()) top = std::min(top, p.max_m());
    if (p.e_zero_from() != CoefficientProvider::unbounded())
        top = std::min(top, p.e_zero_from() == 0 ? std::size_t(0) : p.e_zero_from() - 1);
    return top;
}

// sum_{m=2}^{top} g_m(0;z)
double tail_g_sum(const CoefficientProvider& p, double z, std::size_t top) {
    double s = 0.0;
    for (std::size_t m = 2; m <= top; ++m) s += p.g0(m, z);
    return s;
}

}  // namespace

bool CriticalTrace::intervals_nested() const {
    for (std::size_t n = 2; n < z_seq.size(); ++n) {
        double lo_prev = z_seq[n - 1] - half_width[n - 1];
        double hi_prev = z_seq[n - 1] + half_width[n - 1];
        double lo = z_seq[n] - half_width[n];
        double hi = z_seq[n] + half_width[n];
        if (lo < lo_prev - 1e-15 || hi > hi_prev + 1e-15) return false;
    }
    return true;
}

CriticalTrace zn_sequence(const CoefficientProvider& provider, std::size_t n_max, double K1) {
    if (n_max < 1) throw UsageError("zn_sequence: n_max must be >= 1");
    const StepKernel& kernel = provider.kernel();
    CriticalTrace tr;
    tr.K1 = K1;
    tr.beta = kernel.beta();
    tr.d = kernel.d();
    tr.provider_name = provider.name();

    tr.z_seq.assign(n_max + 1, 1.0);  // z_0 = z_1 = 1
    tr.half_width.assign(n_max + 1, 0.0);
    for (std::size_t n = 1; n <= n_max; ++n)
        tr.half_width[n] = K1 * tr.beta * std::pow(double(n), -0.5 * (tr.d - 2));
    for (std::size_t n = 1; n < n_max; ++n) {
        const std::size_t top = g_top(provider, n + 1);
        tr.z_seq[n + 1] = 1.0 - tail_g_sum(provider, tr.z_seq[n], top);
    }
    return tr;
}

void vn_sequence(const CoefficientProvider& provider, double z, std::size_t n_max,
                 CriticalTrace& tr) {
    const StepKernel& kernel = provider.kernel();
    const double sigma_sq = kernel.sigma_sq();
    tr.z_ref = z;
    tr.beta = kernel.beta();
    tr.d = kernel.d();
    tr.provider_name = provider.name();
    tr.b_seq.assign(n_max + 1, 1.0);
    tr.c_seq.assign(n_max + 1, 0.0);
    tr.v_seq.assign(n_max + 1, 1.0);
    tr.zeta_seq.assign(n_max + 1, 0.0);

    const std::size_t top = g_top(provider, n_max);
    double b = 0.0, c = 0.0, zeta_tail = 0.0;
    for (std::size_t n = 1; n <= n_max; ++n) {
        if (n <= top) {
            b += -provider.lap_g0(n, z) / sigma_sq;
            c += (double(n) - 1.0) * provider.g0(n, z);
            if (n >= 2) zeta_tail += provider.g0(n, z);
        }
        double denom = 1.0 + c;
        if (std::fabs(denom) < 1e-12) {
            std::ostringstream os;
            os << "vn_sequence: 1 + c_n vanishes at n=" << n << " (c_n=" << c << ")";
            throw SingularityError(os.str());
        }
        tr.b_seq[n] = b;
        tr.c_seq[n] = c;
        tr.v_seq[n] = b / denom;
        tr.zeta_seq[n] = zeta_tail + z - 1.0;  // zeta_n(z) = sum_{m<=n} g_m(0;z) - 1
    }
}

CriticalTrace vn_sequence(const CoefficientProvider& provider, double z, std::size_t n_max) {
    CriticalTrace tr;
    vn_sequence(provider, z, n_max, tr);
    return tr;
}

CriticalEstimate solve_zc(const CoefficientProvider& provider, std::size_t n_max, double tol) {
    if (!(tol > 0)) throw UsageError("solve_zc: tol must be positive");
    const std::size_t top = g_top(provider, n_max);
    auto F = [&](double z) { return 1.0 - z - tail_g_sum(provider, z, top); };

    double lo = 0.5, hi = 1.5;
    double flo = F(lo), fhi = F(hi);
    if (flo == 0.0) hi = lo;
    if (!(flo > 0.0 && fhi < 0.0) && !(flo < 0.0 && fhi > 0.0) && flo != 0.0 && fhi != 0.0) {
        std::ostringstream os;
        os << "solve_zc: no sign change on [0.5, 1.5]: F(0.5)=" << flo << ", F(1.5)=" << fhi;
        throw BracketingError(os.str());
    }
    while (hi - lo > tol) {
        double mid = 0.5 * (lo + hi);
        double fm = F(mid);
        if (fm == 0.0) {
            lo = hi = mid;
            break;
        }
        if ((fm > 0.0) == (flo > 0.0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }

    CriticalEstimate est;
    est.z_c = 0.5 * (lo + hi);
    est.n_used = n_max;
    CriticalTrace tr = zn_sequence(provider, n_max, 1.0);
    est.z_c_iter = tr.z_seq[n_max];
    est.z_discrepancy = std::fabs(est.z_c - est.z_c_iter);
    return est;
}

void estimate_A_v(const CoefficientProvider& provider, double z_c, std::size_t n_max,
                  const RecursionState& state, CriticalEstimate& est) {
    const StepKernel& kernel = provider.kernel();
    const double sigma_sq = kernel.sigma_sq();
    const std::size_t gt = g_top(provider, n_max);
    const std::size_t et = e_top(provider, n_max);

    double sum_mg = 0.0, sum_lapg = 0.0, sum_e = 0.0;
    for (std::size_t m = 1; m <= gt; ++m) {
        sum_mg += double(m) * provider.g0(m, z_c);
        sum_lapg += provider.lap_g0(m, z_c);
    }
    for (std::size_t m = 2; m <= et; ++m) sum_e += provider.e0(m, z_c);

    if (std::fabs(sum_mg) < 1e-12)
        throw SingularityError("estimate_A_v: sum of m*g_m(0;z_c) vanishes");

    est.A_formula = (1.0 + sum_e) / sum_mg;
    est.v_formula = -sum_lapg / (sigma_sq * sum_mg);
    est.A_limit = state.f0[state.n_max];
    CriticalTrace tr = vn_sequence(provider, z_c, n_max);
    est.v_limit = tr.v_seq[n_max];
    est.A_discrepancy = std::fabs(est.A_formula - est.A_limit);
    est.v_discrepancy = std::fabs(est.v_formula - est.v_limit);
    est.n_used = n_max;

    // Tail indicators from the measured decay envelope of the summands:
    // extend max_{m in [N/2, N]} |a_m| m^{d/2} over 2N further orders.
    const int d = kernel.d();
    auto tail = [&](double env_const, double extra_power) {
        double t = 0.0;
        for (std::size_t m = n_max + 1; m <= 3 * n_max; ++m)
            t += env_const * std::pow(double(m), extra_power - 0.5 * d);
        return t;
    };
    double env_g = 0.0, env_mg = 0.0, env_lap = 0.0;
    for (std::size_t m = std::max<std::size_t>(2, gt / 2); m <= gt; ++m) {
        double w = std::pow(double(m), 0.5 * d);
        env_g = std::max(env_g, std::fabs(provider.g0(m, z_c)) * w);
        env_mg = std::max(env_mg, std::fabs(provider.g0(m, z_c)) * w);
        env_lap = std::max(env_lap, std::fabs(provider.lap_g0(m, z_c)) / sigma_sq * w);
    }
    est.tail_g = tail(env_g, 0.0);
    est.tail_A = tail(env_mg, 1.0);
    est.tail_v = tail(env_lap, 0.0);
}

SusceptibilityResult susceptibility(const CoefficientProvider& provider, double z,
                                    std::size_t n_max, double ceiling) {
    if (!(z > 0)) throw UsageError("susceptibility: z must be positive");
    SusceptibilityResult res;
    res.ceiling = ceiling;

    RecursionState st = run_recursion(provider, z, std::max<std::size_t>(1, n_max),
                                      {KPoint::zero(provider.kernel().d())});
    res.partial.resize(n_max + 1);
    double acc = 0.0;
    for (std::size_t n = 0; n <= n_max; ++n) {
        acc += st.f0[n];
        res.partial[n] = acc;
        if (acc > ceiling) res.divergent = true;
    }

    const std::size_t gt = g_top(provider, n_max);
    const std::size_t et = e_top(provider, n_max);
    double G = tail_g_sum(provider, z, gt);
    double E = 0.0;
    for (std::size_t m = 2; m <= et; ++m) E += provider.e0(m, z);
    res.denominator = 1.0 - z - G;
    if (res.denominator <= 0.0) {
        res.divergent = true;
        res.closed_form = std::numeric_limits<double>::infinity();
    } else {
        res.closed_form = (1.0 + E) / res.denominator;
    }
    return res;
}

}  // namespace lace
