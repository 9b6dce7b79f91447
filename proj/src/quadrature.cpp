// Torus quadrature for the weighted L1 norms.  Tensor midpoint rules for
// low dimension; for d >= 4 a composite rule: the integrand dhat^2 |f_j|
// concentrates in a ||k|| ~ j^{-1/2} peak that a plain equal-weight rule
// at affordable node counts would miss entirely, so the peak box gets a
// dedicated midpoint grid and the complement a shifted rank-1 lattice.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <numbers>

#include "lace/engine.hpp"
#include "lace/errors.hpp"
#include "lace/rng.hpp"
#include "lace/simd.hpp"

namespace lace {

namespace {

constexpr double kPi = std::numbers::pi;

// Worst-case P_2 merit of the Korobov vector (1, a, a^2, ...) mod n.
double korobov_merit(std::uint32_t a, int d, std::uint32_t n) {
    std::vector<std::uint64_t> g(d);
    g[0] = 1;
    for (int j = 1; j < d; ++j) g[j] = (g[j - 1] * a) % n;
    const double two_pi_sq = 2.0 * kPi * kPi;
    double total = 0.0;
    for (std::uint32_t i = 0; i < n; ++i) {
        double prod = 1.0;
        for (int j = 0; j < d; ++j) {
            double t = static_cast<double>((static_cast<std::uint64_t>(i) * g[j]) % n) / n;
            prod *= 1.0 + two_pi_sq * (t * t - t + 1.0 / 6.0);
        }
        total += prod;
    }
    return total / n - 1.0;
}

}  // namespace

std::vector<std::uint32_t> korobov_vector(int d, std::uint32_t n) {
    static std::mutex mu;
    static std::map<std::pair<int, std::uint32_t>, std::vector<std::uint32_t>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find({d, n});
    if (it != cache.end()) return it->second;

    std::uint32_t best_a = 1;
    double best = std::numeric_limits<double>::infinity();
    const std::uint32_t a_top = std::min<std::uint32_t>(n - 1, 2399);
    for (std::uint32_t a = 3; a <= a_top; a += 2) {
        double m = korobov_merit(a, d, n);
        if (m < best) {
            best = m;
            best_a = a;
        }
    }
    std::vector<std::uint32_t> g(d);
    std::uint64_t p = 1;
    for (int j = 0; j < d; ++j) {
        g[j] = static_cast<std::uint32_t>(p);
        p = (p * best_a) % n;
    }
    cache[{d, n}] = g;
    return g;
}

QuadratureNodes make_quadrature(const QuadratureSpec& spec, const StepKernel& kernel,
                                std::size_t peak_scale) {
    const int d = kernel.d();
    QuadratureNodes out;

    if (spec.kind == QuadratureSpec::Kind::Tensor) {
        if (spec.resolution < 1) throw UsageError("tensor quadrature needs resolution >= 1");
        double count = std::pow(static_cast<double>(spec.resolution), d);
        if (count > 8e6)
            throw BudgetError("tensor quadrature grid too large; use the qmc rule for d >= 4");
        const std::size_t n = static_cast<std::size_t>(count);
        const double w = 1.0 / static_cast<double>(n);
        std::vector<int> idx(d, 0);
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> c(d);
            for (int j = 0; j < d; ++j) c[j] = -kPi + (idx[j] + 0.5) * (2.0 * kPi / spec.resolution);
            out.nodes.emplace_back(std::move(c));
            out.weights.push_back(w);
            int axis = d - 1;
            while (axis >= 0 && ++idx[axis] == spec.resolution) idx[axis--] = 0;
        }
        return out;
    }

    // Composite peak box + lattice complement.
    if (spec.node_count < 1 || spec.peak_resolution < 1)
        throw UsageError("qmc quadrature needs positive node_count and peak_resolution");
    double r = kPi;
    if (peak_scale > 0) {
        const double T = 12.0;  // boundary suppression exp(-T) of the nominal peak
        r = std::min(kPi, std::sqrt(2.0 * d * T / (kernel.sigma_sq() * peak_scale)));
    }

    const int B = spec.peak_resolution;
    double box_count = std::pow(static_cast<double>(B), d);
    if (box_count > 8e6) throw BudgetError("qmc peak box grid too large");
    const double box_w = std::pow(r / kPi, d) / box_count;  // (2r)^d / (2pi)^d / B^d
    std::vector<int> idx(d, 0);
    for (std::size_t i = 0; i < static_cast<std::size_t>(box_count); ++i) {
        std::vector<double> c(d);
        for (int j = 0; j < d; ++j) c[j] = -r + (idx[j] + 0.5) * (2.0 * r / B);
        out.nodes.emplace_back(std::move(c));
        out.weights.push_back(box_w);
        int axis = d - 1;
        while (axis >= 0 && ++idx[axis] == B) idx[axis--] = 0;
    }

    if (r < kPi) {
        auto g = korobov_vector(d, static_cast<std::uint32_t>(spec.node_count));
        std::uint64_t s = spec.seed;
        std::vector<double> shift(d);
        for (int j = 0; j < d; ++j) shift[j] = u01(splitmix64(s));
        const double lat_w = 1.0 / spec.node_count;
        const double n_inv = 1.0 / spec.node_count;
        for (int i = 0; i < spec.node_count; ++i) {
            std::vector<double> c(d);
            double kinf = 0.0;
            for (int j = 0; j < d; ++j) {
                double t = std::fmod(static_cast<double>(i) * g[j] * n_inv + shift[j], 1.0);
                c[j] = 2.0 * kPi * t - kPi;
                kinf = std::max(kinf, std::fabs(c[j]));
            }
            if (kinf <= r) continue;  // covered by the box grid
            out.nodes.emplace_back(std::move(c));
            out.weights.push_back(lat_w);
        }
    }

    if (out.nodes.empty()) throw UsageError("quadrature produced zero nodes");
    return out;
}

namespace {

double norm_from_state(const StepKernel& kernel, const RecursionState& st,
                       const QuadratureNodes& nodes, std::size_t j) {
    // u_i = w_i * dhat(k_i)^2; nodes occupy the leading columns of the state.
    std::vector<double> u(nodes.nodes.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        double dh = kernel.dhat(nodes.nodes[i]);
        u[i] = nodes.weights[i] * dh * dh;
    }
    return simd::weighted_abs_dot(u.data(), st.row(j).data(), u.size());
}

}  // namespace

std::vector<double> weighted_l1_norms(const StepKernel& kernel, const CoefficientProvider& provider,
                                      double z, std::span<const std::size_t> j_list,
                                      const QuadratureSpec& quad) {
    std::vector<double> out(j_list.size());
    if (quad.kind == QuadratureSpec::Kind::Tensor) {
        QuadratureNodes nodes = make_quadrature(quad, kernel, 0);
        std::size_t top = 1;
        for (std::size_t j : j_list) top = std::max(top, j);
        RecursionState st = run_recursion(provider, z, top, nodes.nodes);
        for (std::size_t i = 0; i < j_list.size(); ++i)
            out[i] = norm_from_state(kernel, st, nodes, j_list[i]);
        return out;
    }
    for (std::size_t i = 0; i < j_list.size(); ++i) {
        QuadratureNodes nodes = make_quadrature(quad, kernel, j_list[i]);
        RecursionState st = run_recursion(provider, z, std::max<std::size_t>(1, j_list[i]), nodes.nodes);
        out[i] = norm_from_state(kernel, st, nodes, j_list[i]);
    }
    return out;
}

double weighted_l1_norm(const StepKernel& kernel, const RecursionState& state, std::size_t j,
                        const QuadratureSpec& quad) {
    if (j > state.n_max) throw UsageError("weighted_l1_norm: j exceeds the computed range");
    if (!state.provider) throw UsageError("weighted_l1_norm: state has no provider attached");
    std::size_t jl[1] = {j};
    return weighted_l1_norms(kernel, *state.provider, state.z, jl, quad)[0];
}

}  // namespace lace
