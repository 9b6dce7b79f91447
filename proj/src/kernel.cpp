#include "lace/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

#include "lace/errors.hpp"

namespace lace {

namespace {

constexpr double kPi = std::numbers::pi;

std::string point_str(std::span<const int> x) {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < x.size(); ++i) os << (i ? "," : "") << x[i];
    os << ")";
    return os.str();
}

}  // namespace

KPoint::KPoint(std::vector<double> comps) : c(std::move(comps)) {
    for (double v : c)
        if (!(v >= -kPi && v <= kPi)) throw UsageError("KPoint component outside [-pi,pi]");
}

bool KPoint::is_zero() const {
    for (double v : c)
        if (v != 0.0) return false;
    return true;
}

StepKernel StepKernel::uniform_cube(int d, int L, bool exclude_origin, std::size_t support_cap) {
    if (d < 1 || L < 1) throw UsageError("uniform_cube requires d >= 1 and L >= 1");
    double points = 1.0;
    for (int i = 0; i < d; ++i) points *= 2.0 * L + 1.0;
    if (points * d > static_cast<double>(support_cap)) {
        std::ostringstream os;
        os << "uniform_cube support of " << points << " points (d=" << d << ", L=" << L
           << ") exceeds the cap of " << support_cap;
        throw BudgetError(os.str());
    }

    StepKernel k;
    k.d_ = d;
    k.L_ = L;
    k.origin_excluded_ = exclude_origin;

    const std::size_t npoints = static_cast<std::size_t>(points) - (exclude_origin ? 1 : 0);
    k.coords_.reserve(npoints * d);
    k.normsq_.reserve(npoints);

    std::vector<int> x(d, -L);
    std::int64_t sum_nsq = 0;
    while (true) {
        bool is_origin = std::all_of(x.begin(), x.end(), [](int v) { return v == 0; });
        if (!(exclude_origin && is_origin)) {
            std::int64_t nsq = 0;
            for (int v : x) nsq += static_cast<std::int64_t>(v) * v;
            k.coords_.insert(k.coords_.end(), x.begin(), x.end());
            k.normsq_.push_back(nsq);
            sum_nsq += nsq;
        }
        int axis = d - 1;
        while (axis >= 0 && x[axis] == L) x[axis--] = -L;
        if (axis < 0) break;
        ++x[axis];
    }

    k.weights_.assign(k.normsq_.size(), 1.0 / static_cast<double>(k.normsq_.size()));
    // sigma^2 as one exact rational: integer sum over support / support size.
    k.sigma_sq_ = static_cast<double>(sum_nsq) / static_cast<double>(k.normsq_.size());
    k.finalize();
    return k;
}

StepKernel StepKernel::from_density(const std::function<double(std::span<const double>)>& h, int d,
                                    int L, double radius, std::size_t support_cap) {
    if (d < 1 || L < 1) throw UsageError("from_density requires d >= 1 and L >= 1");
    if (!(radius > 0)) throw UsageError("from_density requires a positive support radius");
    const int R = static_cast<int>(std::floor(radius * L + 1e-9));
    double points = 1.0;
    for (int i = 0; i < d; ++i) points *= 2.0 * R + 1.0;
    if (points * d > static_cast<double>(support_cap))
        throw BudgetError("from_density sample box exceeds the support cap");

    StepKernel k;
    k.d_ = d;
    k.L_ = L;

    std::vector<int> x(d, -R);
    std::vector<double> xs(d);
    double total = 0.0;
    bool off_origin = false;
    while (true) {
        for (int i = 0; i < d; ++i) xs[i] = static_cast<double>(x[i]) / L;
        double w = h(xs);
        if (w < 0.0) throw UsageError("from_density: negative density sample at x=" + point_str(x));
        if (w > 0.0) {
            std::int64_t nsq = 0;
            for (int v : x) nsq += static_cast<std::int64_t>(v) * v;
            if (nsq > 0) off_origin = true;
            k.coords_.insert(k.coords_.end(), x.begin(), x.end());
            k.normsq_.push_back(nsq);
            k.weights_.push_back(w);
            total += w;
        }
        int axis = d - 1;
        while (axis >= 0 && x[axis] == R) x[axis--] = -R;
        if (axis < 0) break;
        ++x[axis];
    }

    if (total <= 0.0 || !off_origin)
        throw UsageError("from_density: degenerate normaliser (no off-origin mass in the sample box)");

    double sigma = 0.0;
    for (std::size_t i = 0; i < k.weights_.size(); ++i) {
        k.weights_[i] /= total;
        sigma += k.weights_[i] * static_cast<double>(k.normsq_[i]);
    }
    k.sigma_sq_ = sigma;
    k.origin_excluded_ = (k.weight_at(std::vector<int>(d, 0)) == 0.0);
    k.finalize();
    return k;
}

void StepKernel::finalize() {
    beta_ = std::pow(static_cast<double>(L_), -d_);
    radius_ = 0;
    sup_norm_ = 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        sum += weights_[i];
        sup_norm_ = std::max(sup_norm_, weights_[i]);
        auto p = point(i);
        for (int v : p) radius_ = std::max(radius_, std::abs(v));
    }
    if (std::fabs(sum - 1.0) > 1e-12) throw UsageError("kernel weights do not sum to 1");
    sup_c_ = sup_norm_ / beta_;

    // A full uniform box is a product measure, so the transform factorises
    // over axes; detected here and exploited in a_of_k.
    {
        double full = 1.0;
        for (int i = 0; i < d_; ++i) full *= 2.0 * radius_ + 1.0;
        bool equal = true;
        for (double w : weights_)
            if (w != weights_[0]) equal = false;
        separable_ = equal && static_cast<double>(weights_.size()) == full;
    }

    // Lattice symmetry: every weight must match its canonical representative
    // (coordinates replaced by sorted absolute values).
    std::map<std::vector<int>, double> canon;
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        auto p = point(i);
        std::vector<int> key(p.begin(), p.end());
        for (int& v : key) v = std::abs(v);
        std::sort(key.begin(), key.end());
        auto [it, inserted] = canon.emplace(std::move(key), weights_[i]);
        if (!inserted && std::fabs(it->second - weights_[i]) > 1e-12 * std::max(1.0, sup_norm_))
            throw UsageError("kernel violates lattice symmetry near x=" + point_str(point(i)));
    }
}

void StepKernel::set_epsilon(double eps) {
    if (!(eps > 0)) throw UsageError("moment order epsilon must be positive");
    epsilon_ = eps;
}

double StepKernel::weight_at(std::span<const int> x) const {
    if (x.size() != static_cast<std::size_t>(d_)) return 0.0;
    // Support is stored in lexicographic order; binary search over indices.
    std::size_t lo = 0, hi = weights_.size();
    while (lo < hi) {
        std::size_t mid = (lo + hi) / 2;
        auto p = point(mid);
        bool less = std::lexicographical_compare(p.begin(), p.end(), x.begin(), x.end());
        if (less)
            lo = mid + 1;
        else
            hi = mid;
    }
    if (lo == weights_.size()) return 0.0;
    auto p = point(lo);
    return std::equal(p.begin(), p.end(), x.begin()) ? weights_[lo] : 0.0;
}

double StepKernel::dhat(const KPoint& k) const {
    // Equivalent to the direct cosine sum (cos t = 1 - 2 sin^2(t/2) per
    // term), but exact at k = 0 and cancellation-free at small k.
    return 1.0 - a_of_k(k);
}

double StepKernel::a_of_k(const KPoint& k) const {
    // 1 - cos t = 2 sin^2(t/2); avoids cancellation at small k.
    if (separable_) {
        // a = 1 - prod_i (1 - a_i) with per-axis a_i over the uniform range.
        const double wa = 1.0 / (2.0 * radius_ + 1.0);
        double prod = 1.0;
        for (int j = 0; j < d_; ++j) {
            double ai = 0.0;
            for (int x = 1; x <= radius_; ++x) {
                double sn = std::sin(0.5 * k.c[j] * x);
                ai += 4.0 * wa * sn * sn;
            }
            prod *= 1.0 - ai;
        }
        return 1.0 - prod;
    }
    double s = 0.0;
    const std::size_t n = weights_.size();
    for (std::size_t i = 0; i < n; ++i) {
        double phase = 0.0;
        const int* x = coords_.data() + i * d_;
        for (int j = 0; j < d_; ++j) phase += k.c[j] * x[j];
        double sn = std::sin(0.5 * phase);
        s += weights_[i] * 2.0 * sn * sn;
    }
    return s;
}

double StepKernel::moment(double p) const {
    if (p < 0) throw UsageError("moment order must be >= 0");
    double s = 0.0;
    for (std::size_t i = 0; i < weights_.size(); ++i)
        s += weights_[i] * std::pow(static_cast<double>(normsq_[i]), 0.5 * p);
    return s;
}

namespace {

// Enumerate multisets of size d over axis value indices, invoking fn with
// the value tuple.  By lattice symmetry this covers the whole tensor grid.
void for_each_multiset(int d, const std::vector<double>& vals,
                       const std::function<void(const std::vector<double>&)>& fn) {
    std::vector<int> idx(d, 0);
    std::vector<double> tuple(d);
    while (true) {
        for (int i = 0; i < d; ++i) tuple[i] = vals[idx[i]];
        fn(tuple);
        int axis = d - 1;
        while (axis >= 0 && idx[axis] == static_cast<int>(vals.size()) - 1) --axis;
        if (axis < 0) break;
        ++idx[axis];
        for (int i = axis + 1; i < d; ++i) idx[i] = idx[axis];  // keep non-decreasing
    }
}

}  // namespace

AssumptionDReport check_assumption_d(const StepKernel& kernel, int resolution) {
    if (resolution < 8) throw UsageError("check_assumption_d requires resolution >= 8");
    resolution += resolution & 1;  // even, so the closed grid contains 0 and pi

    AssumptionDReport rep;
    rep.grid_resolution = resolution;
    rep.sup_norm = kernel.sup_norm();
    rep.moment_2_2eps = kernel.moment(2.0 + 2.0 * kernel.epsilon());

    const int d = kernel.d();
    const double invL = 1.0 / kernel.L();
    const int half = resolution / 2;

    // Global closed grid on [0,pi] per axis (symmetry covers the rest).
    std::vector<double> axis_global(half + 1);
    for (int j = 0; j <= half; ++j) axis_global[j] = kPi * j / half;

    double max_a = 0.0;
    double min_a_off_box = std::numeric_limits<double>::infinity();
    for_each_multiset(d, axis_global, [&](const std::vector<double>& t) {
        KPoint k;
        k.c = t;
        double a = kernel.a_of_k(k);
        max_a = std::max(max_a, a);
        double kinf = *std::max_element(t.begin(), t.end());
        if (kinf >= invL) min_a_off_box = std::min(min_a_off_box, a);
    });

    // Low-k closed grid on [0, 1/L] per axis for the quadratic envelope.
    std::vector<double> axis_low(half + 1);
    for (int j = 0; j <= half; ++j) axis_low[j] = invL * j / half;
    double c1 = std::numeric_limits<double>::infinity(), c2 = 0.0;
    const double L2 = static_cast<double>(kernel.L()) * kernel.L();
    for_each_multiset(d, axis_low, [&](const std::vector<double>& t) {
        double ksq = 0.0;
        for (double v : t) ksq += v * v;
        if (ksq == 0.0) return;  // k = 0: both sides vanish, trivially tight
        KPoint k;
        k.c = t;
        double ratio = kernel.a_of_k(k) / (L2 * ksq);
        c1 = std::min(c1, ratio);
        c2 = std::max(c2, ratio);
    });

    rep.c_1 = std::isfinite(c1) ? c1 : 0.0;
    rep.c_2 = c2;
    rep.pass_quadratic = rep.c_1 > 0.0 && std::isfinite(c2);
    rep.eta_low = std::isfinite(min_a_off_box) ? min_a_off_box : 0.0;
    rep.pass_gap_low = rep.eta_low > 0.0;
    rep.eta_high = 2.0 - max_a;
    rep.pass_gap_high = rep.eta_high > 0.0;
    return rep;
}

}  // namespace lace
