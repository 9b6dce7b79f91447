#pragma once

// Numerical verification of the induction hypotheses H1-H4, extraction of
// the r/s sequences, the six Assumption E/G bound shapes, the elementary
// convolution-sum lemma, and the X/Y/Z/W decomposition diagnostics.

#include <span>
#include <string>
#include <vector>

#include "lace/critical.hpp"
#include "lace/engine.hpp"

namespace lace {

struct HypothesisConstants {
    int d = 0;
    double gamma = 0.0, delta = 0.0, rho = 0.0;
    double epsilon_prime = 0.0;
    double K1 = 10.0, K2 = 10.0, K3 = 10.0, K4 = 100.0, K5 = 100.0;

    // Enforces 0 < (d-4)/2 - rho < gamma and gamma + delta < min(1, (d-4)/2).
    HypothesisConstants(int d, double gamma, double delta, double rho, double epsilon_prime,
                        double K1, double K2, double K3, double K4, double K5);
    static HypothesisConstants defaults_for(int d);  // throws for d <= 4

    // Advisories for the unquantified ordering K3 >> K1 > K4 >> 1, etc.
    std::vector<std::string> ordering_warnings() const;
};

// r_{j}(k) = f_j(k)/f_{j-1}(k) - 1 + v_j a(k), and the s_i(k) that turn the
// product form into f_j(k) = f_j(0) prod_i [1 - v_i a(k) + s_i(k)].
struct RTrace {
    std::size_t n_max = 0;
    std::vector<KPoint> kset;       // columns (without the k=0 column)
    std::vector<double> r;          // rows j = 1..n_max over kset columns
    std::vector<double> r0;         // r_j(0), index 0 unused
    std::vector<double> s;          // same layout as r
    std::vector<double> v_seq;      // the v_j used
    std::size_t ncols = 0;

    double r_at(std::size_t j, std::size_t col) const { return r[(j - 1) * ncols + col]; }
    double s_at(std::size_t j, std::size_t col) const { return s[(j - 1) * ncols + col]; }
};

RTrace extract_r_s(const RecursionState& state, const CriticalTrace& trace);

// Largest relative deviation of the product reconstruction
// f_j(0) prod [1 - v_i a + s_i] from the stored f_j, over cells with
// |f_j| > floor.
double rtrace_reconstruction_error(const RecursionState& state, const RTrace& rt,
                                   const StepKernel& kernel, double floor = 1e-8);

struct HypothesisCell {
    std::size_t j = 0;
    std::ptrdiff_t k_index = -1;  // -1 means k = 0
    double measured = 0.0;
    double bound = 0.0;
    double margin = 0.0;  // measured / bound (0 when measured == 0)
};

struct HypothesisCheck {
    bool pass = true;
    HypothesisCell worst;
    std::vector<HypothesisCell> cells;
};

struct HypothesisReport {
    HypothesisCheck h1, h2, h3_r0, h3_rk, h4_f, h4_diff;
    std::vector<std::string> warnings;
    bool all_pass() const {
        return h1.pass && h2.pass && h3_r0.pass && h3_rk.pass && h4_f.pass && h4_diff.pass;
    }
};

HypothesisReport check_hypotheses(const RecursionState& state, const CriticalTrace& trace,
                                  const RTrace& rtrace, const HypothesisConstants& constants,
                                  const StepKernel& kernel);

// The six bound shapes with the smallest K' making each hold on the sample.
struct EgReport {
    double kprime[6] = {0, 0, 0, 0, 0, 0};
    double kprime_overall = 0.0;
    HypothesisCell worst[6];
};

EgReport check_assumption_eg(const CoefficientProvider& provider, std::span<const double> z_grid,
                             std::size_t n_max, const HypothesisConstants& constants,
                             std::span<const KPoint> ksample);

// S(n) = sum_{m=2}^n m^-a sum_{j=n-m+1}^n j^-b and sup_n S(n) n^power for
// the applicable regime of the four-case convolution bound.
struct ConvProbeResult {
    double a = 0.0, b = 0.0;
    double power = 0.0;
    int case_id = 0;  // 1: a,b>1; 2: a>2,b>0; 3: a>2,b>1; 4: a,b>2
    std::vector<std::pair<std::size_t, double>> scaled;  // (n, S(n) n^power)
    double sup_constant = 0.0;
};

ConvProbeResult conv_bound_probe(double a_exp, double b_exp, std::span<const std::size_t> n_list);

// One-point evaluation of the decomposition terms and the two exact
// reconstruction identities (small-k and large-k routes).
struct DiagnosticsRecord {
    double X = 0.0, Y = 0.0, Z = 0.0, W = 0.0, X1 = 0.0;
    double zeta = 0.0;
    double v_next = 0.0, b_next = 0.0;
    double r_next = 0.0;          // r_{n+1}(k) from the ratio
    double resid_small_k = 0.0;   // f_{n+1}/f_n - (1 - v a + X+Y+Z+zeta)
    double resid_large_k = 0.0;   // f_{n+1} - [f_n (1 - a b + X1 + zeta) + W + e_{n+1}]
};

DiagnosticsRecord xyz_diagnostics(const RecursionState& state, const CoefficientProvider& provider,
                                  const CriticalTrace& trace, double z, std::size_t n,
                                  const KPoint& k, double tol = 1e-9);

}  // namespace lace
