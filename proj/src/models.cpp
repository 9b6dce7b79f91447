// Random-walk and synthetic providers.

#include <cmath>

#include "lace/errors.hpp"
#include "lace/models.hpp"

namespace lace::models {

namespace {

class SrwProvider final : public CoefficientProvider {
  public:
    explicit SrwProvider(KernelPtr k) : kernel_(std::move(k)) {}

    double g(std::size_t m, const KPoint& k, double z) const override {
        return m == 1 ? z * kernel_->dhat(k) : 0.0;
    }
    double e(std::size_t, const KPoint&, double) const override { return 0.0; }
    double g0(std::size_t m, double z) const override { return m == 1 ? z : 0.0; }
    double lap_g0(std::size_t m, double z) const override {
        return m == 1 ? -z * kernel_->sigma_sq() : 0.0;
    }
    double dz_g0(std::size_t m, double) const override { return m == 1 ? 1.0 : 0.0; }
    double lap_e0(std::size_t, double) const override { return 0.0; }
    std::size_t g_zero_from() const override { return 2; }
    std::size_t e_zero_from() const override { return 1; }
    std::string name() const override { return "srw"; }
    const StepKernel& kernel() const override { return *kernel_; }

    void g_row(std::size_t m, double z, std::span<const KPoint> ks,
               std::span<const double> dhat_vals, std::span<double> out) const override {
        for (std::size_t i = 0; i < ks.size(); ++i) out[i] = m == 1 ? z * dhat_vals[i] : 0.0;
    }

  private:
    KernelPtr kernel_;
};

class SyntheticProvider final : public CoefficientProvider {
  public:
    SyntheticProvider(KernelPtr k, SyntheticSpec spec) : kernel_(std::move(k)), spec_(std::move(spec)) {
        for (auto& [m, t] : spec_.g_terms) {
            if (m < 2) throw UsageError("synthetic g terms start at m = 2");
            if (!std::isfinite(t.amplitude)) throw UsageError("synthetic amplitude must be finite");
        }
        for (auto& [m, t] : spec_.e_terms) {
            if (m < 2) throw UsageError("synthetic e terms start at m = 2");
            if (!std::isfinite(t.amplitude)) throw UsageError("synthetic amplitude must be finite");
        }
        if (!std::isfinite(spec_.g_tail.amplitude) || !std::isfinite(spec_.e_tail.amplitude))
            throw UsageError("synthetic amplitude must be finite");
        has_g_tail_ = spec_.g_tail.amplitude != 0.0;
        has_e_tail_ = spec_.e_tail.amplitude != 0.0;
    }

    double g(std::size_t m, const KPoint& k, double z) const override {
        return eval(spec_.g_terms, spec_.g_tail, has_g_tail_, m, z, kernel_->dhat(k));
    }
    double e(std::size_t m, const KPoint& k, double z) const override {
        if (m == 1) return 0.0;
        return eval_terms_only(spec_.e_terms, spec_.e_tail, has_e_tail_, m, z, kernel_->dhat(k));
    }
    double g0(std::size_t m, double z) const override {
        return eval(spec_.g_terms, spec_.g_tail, has_g_tail_, m, z, 1.0);
    }
    double lap_g0(std::size_t m, double z) const override {
        return lap0(spec_.g_terms, spec_.g_tail, has_g_tail_, m, z, m == 1);
    }
    double dz_g0(std::size_t m, double z) const override {
        if (m == 1) return 1.0;
        double s = 0.0;
        if (auto it = spec_.g_terms.find(m); it != spec_.g_terms.end())
            s += it->second.amplitude * m * std::pow(z, double(m) - 1.0);
        if (has_g_tail_ && m >= 2)
            s += spec_.g_tail.amplitude * std::pow(double(m), -spec_.g_tail.decay) * m *
                 std::pow(z, double(m) - 1.0);
        return s;
    }
    double lap_e0(std::size_t m, double z) const override {
        if (m == 1) return 0.0;
        return lap0(spec_.e_terms, spec_.e_tail, has_e_tail_, m, z, false);
    }
    std::size_t g_zero_from() const override {
        if (has_g_tail_) return unbounded();
        std::size_t top = 1;
        for (auto& [m, t] : spec_.g_terms)
            if (t.amplitude != 0.0) top = std::max(top, m);
        return top + 1;
    }
    std::size_t e_zero_from() const override {
        if (has_e_tail_) return unbounded();
        std::size_t top = 0;
        for (auto& [m, t] : spec_.e_terms)
            if (t.amplitude != 0.0) top = std::max(top, m);
        return top + 1;
    }
    std::string name() const override { return "synthetic"; }
    const StepKernel& kernel() const override { return *kernel_; }

    void g_row(std::size_t m, double z, std::span<const KPoint> ks,
               std::span<const double> dhat_vals, std::span<double> out) const override {
        for (std::size_t i = 0; i < ks.size(); ++i)
            out[i] = eval(spec_.g_terms, spec_.g_tail, has_g_tail_, m, z, dhat_vals[i]);
    }
    void e_row(std::size_t m, double z, std::span<const KPoint> ks,
               std::span<const double> dhat_vals, std::span<double> out) const override {
        for (std::size_t i = 0; i < ks.size(); ++i)
            out[i] = m == 1 ? 0.0
                            : eval_terms_only(spec_.e_terms, spec_.e_tail, has_e_tail_, m, z,
                                              dhat_vals[i]);
    }

  private:
    double eval(const std::map<std::size_t, SyntheticTerm>& terms, const SyntheticTail& tail,
                bool has_tail, std::size_t m, double z, double dh) const {
        if (m == 1) return z * dh;
        return eval_terms_only(terms, tail, has_tail, m, z, dh);
    }
    double eval_terms_only(const std::map<std::size_t, SyntheticTerm>& terms,
                           const SyntheticTail& tail, bool has_tail, std::size_t m, double z,
                           double dh) const {
        double s = 0.0;
        if (auto it = terms.find(m); it != terms.end())
            s += it->second.amplitude * std::pow(z, double(m)) * std::pow(dh, it->second.dhat_power);
        if (has_tail && m >= 2)
            s += tail.amplitude * std::pow(double(m), -tail.decay) * std::pow(z, double(m)) *
                 std::pow(dh, tail.dhat_power);
        return s;
    }
    // laplacian of dh^p at 0 is  p * lap(dhat)(0) = -p * sigma^2.
    double lap0(const std::map<std::size_t, SyntheticTerm>& terms, const SyntheticTail& tail,
                bool has_tail, std::size_t m, double z, bool is_g1) const {
        if (is_g1) return -z * kernel_->sigma_sq();
        if (m == 1) return 0.0;
        double s = 0.0;
        if (auto it = terms.find(m); it != terms.end())
            s += it->second.amplitude * std::pow(z, double(m)) *
                 (-double(it->second.dhat_power) * kernel_->sigma_sq());
        if (has_tail && m >= 2)
            s += tail.amplitude * std::pow(double(m), -tail.decay) * std::pow(z, double(m)) *
                 (-double(tail.dhat_power) * kernel_->sigma_sq());
        return s;
    }

    KernelPtr kernel_;
    SyntheticSpec spec_;
    bool has_g_tail_ = false;
    bool has_e_tail_ = false;
};

}  // namespace

std::shared_ptr<CoefficientProvider> srw_provider(KernelPtr kernel) {
    return std::make_shared<SrwProvider>(std::move(kernel));
}

std::shared_ptr<CoefficientProvider> synthetic_provider(KernelPtr kernel, SyntheticSpec spec) {
    return std::make_shared<SyntheticProvider>(std::move(kernel), std::move(spec));
}

std::shared_ptr<CoefficientProvider> synthetic_b_model(KernelPtr kernel, double b) {
    SyntheticSpec spec;
    spec.g_terms[2] = SyntheticTerm{b, 2};
    return synthetic_provider(std::move(kernel), std::move(spec));
}

}  // namespace lace::models
