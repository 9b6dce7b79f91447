#pragma once

// Spread-out step distributions D_L on Z^d and their Fourier transforms.
//
// A kernel is an explicit finite support list with weights, immutable
// after construction.  All Fourier evaluations are direct cosine sums
// (lattice symmetry makes every transform real), and a(k) = 1 - dhat(k)
// is evaluated through 2*sin^2(k.x/2) so that small-k values do not
// suffer cancellation.

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace lace {

// A point of the Fourier torus [-pi,pi]^d.
struct KPoint {
    std::vector<double> c;

    KPoint() = default;
    explicit KPoint(std::vector<double> comps);  // validates the range
    static KPoint zero(int d) { return KPoint(std::vector<double>(d, 0.0)); }

    int dim() const { return static_cast<int>(c.size()); }
    bool is_zero() const;
};

class StepKernel {
  public:
    // Uniform distribution on [-L,L]^d (optionally minus the origin).
    static StepKernel uniform_cube(int d, int L, bool exclude_origin,
                                   std::size_t support_cap = kDefaultSupportCap);

    // D_L(x) = h(x/L) / sum_y h(y/L), h sampled on the lattice within
    // inf-norm radius `radius` (in h units).  Rejects empty normalisers
    // and asymmetric samples.
    static StepKernel from_density(const std::function<double(std::span<const double>)>& h, int d,
                                   int L, double radius,
                                   std::size_t support_cap = kDefaultSupportCap);

    int d() const { return d_; }
    int L() const { return L_; }
    bool origin_excluded() const { return origin_excluded_; }
    double beta() const { return beta_; }          // L^{-d}
    double sigma_sq() const { return sigma_sq_; }  // sum |x|^2 D(x)
    double epsilon() const { return epsilon_; }    // moment order used in reports
    void set_epsilon(double eps);
    double sup_norm() const { return sup_norm_; }       // max_x D(x)
    double sup_norm_scale() const { return sup_c_; }    // sup_norm * L^d
    int support_radius() const { return radius_; }      // max inf-norm over support

    std::size_t support_size() const { return weights_.size(); }
    // Point i as a span of d coordinates (lexicographic order over the support).
    std::span<const int> point(std::size_t i) const { return {coords_.data() + i * d_, static_cast<std::size_t>(d_)}; }
    double weight(std::size_t i) const { return weights_[i]; }
    std::int64_t norm_sq(std::size_t i) const { return normsq_[i]; }
    double weight_at(std::span<const int> x) const;  // 0 when x is off-support

    double dhat(const KPoint& k) const;  // sum_x D(x) cos(k.x)
    double a_of_k(const KPoint& k) const;  // 1 - dhat, cancellation-free form
    double moment(double p) const;         // sum_x |x|^p D(x)
    bool separable() const { return separable_; }

    static constexpr std::size_t kDefaultSupportCap = 50'000'000;

  private:
    StepKernel() = default;
    void finalize();  // normalisation, symmetry and moment checks

    int d_ = 0;
    int L_ = 0;
    bool origin_excluded_ = false;
    double beta_ = 0.0;
    double sigma_sq_ = 0.0;
    double epsilon_ = 1.0;
    double sup_norm_ = 0.0;
    double sup_c_ = 0.0;
    int radius_ = 0;
    bool separable_ = false;  // full uniform box: dhat factorises over axes
    std::vector<int> coords_;          // flattened, d per point, lexicographic
    std::vector<double> weights_;
    std::vector<std::int64_t> normsq_;
};

using KernelPtr = std::shared_ptr<const StepKernel>;

// Grid verification of the three a(k) bounds: the quadratic envelope
// c1 L^2 k^2 <= a(k) <= c2 L^2 k^2 near zero, the infrared mass gap
// a(k) > eta off the small box, and the global gap a(k) < 2 - eta.
struct AssumptionDReport {
    double moment_2_2eps = 0.0;
    double sup_norm = 0.0;
    double c_1 = 0.0;  // fitted over {0 < ||k||_inf <= 1/L}
    double c_2 = 0.0;
    double eta_low = 0.0;   // largest eta validated on {||k||_inf >= 1/L}
    double eta_high = 0.0;  // largest eta validated globally for a(k) < 2 - eta
    int grid_resolution = 0;
    bool pass_quadratic = false;
    bool pass_gap_low = false;
    bool pass_gap_high = false;
    bool all_pass() const { return pass_quadratic && pass_gap_low && pass_gap_high; }
};

AssumptionDReport check_assumption_d(const StepKernel& kernel, int resolution);

}  // namespace lace
