#pragma once

// Inductive sequences z_n, I_n, b_n, c_n, v_n, zeta_n and the limiting
// estimates z_c, A, v.  Two independent z_c estimators are kept on
// purpose: bracketed bisection of 1 - z - sum_{m>=2} g_m(0;z) and the
// recursive iteration z_{n+1} = 1 - sum_{m=2}^{n+1} g_m(0;z_n).

#include <span>
#include <string>
#include <vector>

#include "lace/engine.hpp"
#include "lace/provider.hpp"

namespace lace {

struct CriticalTrace {
    // z iteration: z_seq[n] = z_n with z_0 = z_1 = 1; half_width[n] is the
    // I_n halfwidth K1 * beta * n^{-(d-2)/2} (index 0 unused).
    std::vector<double> z_seq;
    std::vector<double> half_width;
    double K1 = 0.0;

    // b/c/v/zeta sequences evaluated at z_ref (b_0 = v_0 = 1, c_0 = 0).
    double z_ref = 0.0;
    std::vector<double> b_seq, c_seq, v_seq, zeta_seq;

    double beta = 0.0;
    int d = 0;
    std::string provider_name;

    // Nesting of I_1 .. I_n given the stored centers/halfwidths.
    bool intervals_nested() const;
};

CriticalTrace zn_sequence(const CoefficientProvider& provider, std::size_t n_max, double K1);

// Fills the b/c/v/zeta parts at fixed z (other fields untouched if `into`
// is supplied).
CriticalTrace vn_sequence(const CoefficientProvider& provider, double z, std::size_t n_max);
void vn_sequence(const CoefficientProvider& provider, double z, std::size_t n_max,
                 CriticalTrace& into);

struct CriticalEstimate {
    double z_c = 0.0;          // bisection root (primary)
    double z_c_iter = 0.0;     // z_n iteration limit
    double z_discrepancy = 0.0;
    double A_formula = 0.0;
    double A_limit = 0.0;      // lim f_n(0; z_c) from an engine run
    double A_discrepancy = 0.0;
    double v_formula = 0.0;
    double v_limit = 0.0;      // lim v_n
    double v_discrepancy = 0.0;
    std::size_t n_used = 0;
    // Measured coefficient-decay tail indicators for the truncated series.
    double tail_g = 0.0;   // for sum g_m(0)
    double tail_A = 0.0;   // for sum m g_m(0)
    double tail_v = 0.0;   // for sum lap g_m(0) / sigma^2
};

CriticalEstimate solve_zc(const CoefficientProvider& provider, std::size_t n_max, double tol);

// Completes A and v (formula and limit routes) at the given z_c; `state`
// must have been run at z_c with n_max matching its table.
void estimate_A_v(const CoefficientProvider& provider, double z_c, std::size_t n_max,
                  const RecursionState& state, CriticalEstimate& est);

struct SusceptibilityResult {
    std::vector<double> partial;  // chi_n = sum_{j<=n} f_j(0;z)
    double closed_form = 0.0;     // (1+E)/(1-z-G) with truncated series
    bool divergent = false;
    double denominator = 0.0;     // 1 - z - G(z)
    double ceiling = 0.0;
};

SusceptibilityResult susceptibility(const CoefficientProvider& provider, double z,
                                    std::size_t n_max, double ceiling = 1e12);

}  // namespace lace
