#pragma once

// Verification of the Gaussian profile, diffusive scaling, L1 decay, and
// the cube-averaged local central limit theorem.  All O(.) statements are
// checked as trends (values at larger n below values at smaller n, or
// bounded normalised sequences), never as absolute constants.

#include <map>
#include <span>
#include <vector>

#include "lace/engine.hpp"
#include "lace/models.hpp"

namespace lace {

// kset the profile harness needs: the scaled points k/sqrt(v sigma^2 n).
// Points landing outside [-pi,pi]^d are dropped (the checker skips them
// the same way).
std::vector<KPoint> profile_kset(std::span<const std::vector<double>> k_list,
                                 std::span<const std::size_t> n_list, double v,
                                 const StepKernel& kernel);

struct ProfileRow {
    std::size_t n = 0;
    std::vector<double> k;  // unscaled test point
    double f = 0.0;         // f_n(k / sqrt(v sigma^2 n))
    double gaussian = 0.0;  // A exp(-k^2 / 2d)
    double err = 0.0;
    bool skipped = false;   // scaled point left the torus
};

std::vector<ProfileRow> gaussian_profile_check(const RecursionState& state, double A, double v,
                                               const StepKernel& kernel,
                                               std::span<const std::vector<double>> k_list,
                                               std::span<const std::size_t> n_list);

struct DiffusiveRow {
    std::size_t n = 0;
    double ratio = 0.0;  // -lap f_n(0) / (f_n(0) v sigma^2 n)
    double dev = 0.0;    // |ratio - 1|
};

std::vector<DiffusiveRow> diffusive_check(const RecursionState& state, double v,
                                          const StepKernel& kernel,
                                          std::span<const std::size_t> n_list);

struct L1Row {
    std::size_t n = 0;
    double norm = 0.0;        // ||dhat^2 f_n||_1
    double normalised = 0.0;  // norm * n^{d/2} / beta
};

std::vector<L1Row> l1_decay_check(const StepKernel& kernel, const RecursionState& state,
                                  std::span<const std::size_t> n_list, const QuadratureSpec& quad);

// --- x space ---------------------------------------------------------------

struct XSpaceTable {
    std::size_t n = 0;
    int d = 0;
    int window = 0;  // values cover ||x||_inf <= window
    enum class Method { InverseTransform, ModelTables } method = Method::InverseTransform;
    std::map<models::LatticeVec, double> p;

    double at(const models::LatticeVec& x) const;
    double window_sum() const;
};

// p_n(x) by discrete inverse transform on a full tensor k-grid (d <= 3;
// the grid is sized to avoid aliasing from the walk's reach n * L_supp).
XSpaceTable inverse_ft_pn(const CoefficientProvider& provider, double z, std::size_t n,
                          int x_window);
// Model mode: exact SAW tables times z^n.
XSpaceTable inverse_ft_pn(const models::SawTables& tables, double z, std::size_t n, int x_window);

struct LocalCltConfig {
    double exponent = 0.25;           // R_n = floor(n^exponent); needs (0, 1/2)
    std::vector<std::size_t> fixed_Rn;  // alternative: table indexed by position in n order
    std::vector<std::vector<double>> x_points = {{}};  // in units of sqrt(v sigma^2 n); {} = 0
    double kappa = 0.5;               // smoothing-decay exponent for the error budget
    std::size_t rn(std::size_t n, std::size_t index) const;
    void validate(int d) const;
};

struct LcltRow {
    std::size_t n = 0;
    std::vector<double> x;
    std::size_t Rn = 0;
    double lhs = 0.0;  // cube average of p_n
    double rhs = 0.0;  // A (d / 2 pi n v sigma^2)^{d/2} exp(-d x^2 / 2)
    double ratio = 0.0;
};

std::vector<LcltRow> local_clt_check(const XSpaceTable& table, const LocalCltConfig& config,
                                     double A, double v, const StepKernel& kernel);

// Fourier transform of the normalised cube indicator (Dirichlet kernel
// product), with the removable singularity at k_i = 0 handled.
double dirichlet_qhat(int R, const KPoint& k);

}  // namespace lace
