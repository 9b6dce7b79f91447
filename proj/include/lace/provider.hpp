#pragma once

// The recursion's input contract: a model supplies g_m(k;z), e_m(k;z)
// and their k=0 derivative data.  Every provider must satisfy
// g_1(k;z) = z*dhat(k) and e_1 = 0.

#include <cstddef>
#include <limits>
#include <span>
#include <string>

#include "lace/kernel.hpp"

namespace lace {

class CoefficientProvider {
  public:
    virtual ~CoefficientProvider() = default;

    virtual double g(std::size_t m, const KPoint& k, double z) const = 0;
    virtual double e(std::size_t m, const KPoint& k, double z) const = 0;

    // k = 0 data.
    virtual double g0(std::size_t m, double z) const = 0;
    virtual double lap_g0(std::size_t m, double z) const = 0;   // laplacian of g_m at k=0
    virtual double dz_g0(std::size_t m, double z) const = 0;    // d/dz of g_m(0;z)
    virtual double lap_e0(std::size_t m, double z) const = 0;

    // Largest m with computable coefficients; unbounded() when closed-form.
    virtual std::size_t max_m() const { return unbounded(); }
    // Coefficients vanish identically for m >= this bound (engine shortcut).
    // unbounded() means "no such bound is known".
    virtual std::size_t g_zero_from() const { return unbounded(); }
    virtual std::size_t e_zero_from() const { return unbounded(); }

    virtual bool has_derivatives() const { return true; }
    virtual std::string name() const = 0;
    virtual const StepKernel& kernel() const = 0;

    double e0(std::size_t m, double z) const { return e(m, KPoint::zero(kernel().d()), z); }

    // Batched row evaluation for the engine: fills out[i] = g(m, ks[i], z).
    // dhat_vals[i] = dhat(ks[i]) is precomputed once per run; closed-form
    // models use it to avoid re-summing the transform per order m.
    virtual void g_row(std::size_t m, double z, std::span<const KPoint> ks,
                       std::span<const double> dhat_vals, std::span<double> out) const;
    virtual void e_row(std::size_t m, double z, std::span<const KPoint> ks,
                       std::span<const double> dhat_vals, std::span<double> out) const;

    static constexpr std::size_t unbounded() { return std::numeric_limits<std::size_t>::max(); }
};

}  // namespace lace
