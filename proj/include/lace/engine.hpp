#pragma once

// Pointwise-in-k solver for f_{n+1}(k) = sum_{m=1}^{n+1} g_m(k) f_{n+1-m}(k)
// + e_{n+1}(k), with the companion exact recursion for the k=0 laplacian
// column.  The sum over m runs left to right in ascending m for
// reproducibility; an optional Kahan mode compensates it.

#include <cstdint>
#include <span>
#include <vector>

#include "lace/kernel.hpp"
#include "lace/provider.hpp"

namespace lace {

struct EngineLimits {
    std::size_t max_table_doubles = std::size_t(1) << 27;  // f table cap
    bool kahan = false;
};

struct RecursionState {
    double z = 0.0;
    std::size_t n_max = 0;
    std::vector<KPoint> kset;
    const CoefficientProvider* provider = nullptr;  // non-owning; caller keeps it alive

    // f_n(k) table, rows n = 0..n_max; row n holds kset columns followed by
    // one internal k=0 column (same code path as the rest of the row).
    std::vector<double> table;
    std::size_t ncols = 0;

    std::vector<double> f0;     // f_n(0)
    std::vector<double> lapf0;  // laplacian of f_n at 0; filled by laplacian_recursion
    bool lapf0_valid = false;

    double f(std::size_t n, std::size_t col) const { return table[n * ncols + col]; }
    std::span<const double> row(std::size_t n) const { return {table.data() + n * ncols, ncols}; }
    // Column index of k in kset, or -1.  Matches exact floating-point values;
    // callers are expected to reuse the very vectors they built the kset from.
    std::ptrdiff_t find_column(const KPoint& k) const;
};

RecursionState run_recursion(const CoefficientProvider& provider, double z, std::size_t n_max,
                             std::vector<KPoint> kset, const EngineLimits& limits = {});

// Fills state.lapf0 via the differentiated recursion; exact given exact
// provider derivative data.  Returns the filled sequence.
const std::vector<double>& laplacian_recursion(const CoefficientProvider& provider,
                                               RecursionState& state);

// --- Quadrature over the torus -------------------------------------------

struct QuadratureSpec {
    enum class Kind { Tensor, Qmc };
    Kind kind = Kind::Tensor;
    int resolution = 64;        // tensor: points per axis
    int node_count = 1 << 14;   // qmc: rank-1 lattice size
    std::uint64_t seed = 0;     // qmc: shift
    int peak_resolution = 12;   // qmc: midpoint points per axis on the peak box
};

struct QuadratureNodes {
    std::vector<KPoint> nodes;
    std::vector<double> weights;  // already include the (2pi)^{-d} volume factor
};

// Node set for (2pi)^{-d} integrals over [-pi,pi]^d.  For the Qmc kind the
// rule is a composite: a midpoint grid on the peak box ||k||_inf <= r(j)
// (where the integrand of interest concentrates) plus a shifted rank-1
// lattice on the complement.  peak_scale j controls r(j) ~ sqrt(1/j);
// pass j = 0 for integrands without an n-dependent peak.
QuadratureNodes make_quadrature(const QuadratureSpec& spec, const StepKernel& kernel,
                                std::size_t peak_scale);

// (2pi)^{-d} int dhat(k)^2 |f_j(k)| d^dk, with f_j evaluated on the
// quadrature nodes via a dedicated recursion pass.
double weighted_l1_norm(const StepKernel& kernel, const RecursionState& state, std::size_t j,
                        const QuadratureSpec& quad);

// Batched version: one recursion pass per distinct peak scale.
std::vector<double> weighted_l1_norms(const StepKernel& kernel, const CoefficientProvider& provider,
                                      double z, std::span<const std::size_t> j_list,
                                      const QuadratureSpec& quad);

// Deterministic rank-1 lattice generating vector (Korobov form, best of a
// fixed candidate scan under the standard worst-case criterion).
std::vector<std::uint32_t> korobov_vector(int d, std::uint32_t n);

}  // namespace lace
