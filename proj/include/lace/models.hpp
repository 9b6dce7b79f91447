#pragma once

// Concrete coefficient providers: exact random walk, synthetic closed
// forms, exact self-avoiding walk (pi_m by deconvolution of enumerated
// two-point tables), and Monte-Carlo oriented percolation.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "lace/kernel.hpp"
#include "lace/provider.hpp"

namespace lace::models {

using LatticeVec = std::vector<int>;

// --- Random walk / synthetic ---------------------------------------------

// g_1 = z*dhat, everything else zero.  f_n = z^n dhat^n exactly.
std::shared_ptr<CoefficientProvider> srw_provider(KernelPtr kernel);

// Closed-form coefficients shaped like Assumption G envelopes:
//   g_m(k;z) = amplitude * z^m * dhat(k)^power        (per-order terms)
// plus an optional tail family amplitude * m^{-decay} * z^m * dhat(k)^power
// for every m >= 2.  Same structure for e.  Derivatives are analytic.
struct SyntheticTerm {
    double amplitude = 0.0;
    int dhat_power = 0;
};
struct SyntheticTail {
    double amplitude = 0.0;
    double decay = 0.0;
    int dhat_power = 0;
};
struct SyntheticSpec {
    std::map<std::size_t, SyntheticTerm> g_terms;  // order m >= 2
    std::map<std::size_t, SyntheticTerm> e_terms;
    SyntheticTail g_tail;
    SyntheticTail e_tail;
};
std::shared_ptr<CoefficientProvider> synthetic_provider(KernelPtr kernel, SyntheticSpec spec);

// The workhorse test model: g_2(k;z) = b z^2 dhat(k)^2.
std::shared_ptr<CoefficientProvider> synthetic_b_model(KernelPtr kernel, double b);

// --- Self-avoiding walk ----------------------------------------------------

struct SawBudget {
    double max_walk_estimate = 2e8;  // |support|^n_max bound on enumerated paths
};

// Exact two-point tables c_n(x), 0 <= n <= n_max.  For uniform kernels the
// entries are exact rationals, stored as integer walk counts over the
// denominator |support|^n; otherwise double weights with a residual report.
struct SawTables {
    KernelPtr kernel;
    std::size_t n_max = 0;
    bool exact = false;
    std::vector<std::map<LatticeVec, std::int64_t>> counts;   // exact mode
    std::vector<std::map<LatticeVec, double>> values;         // double mode

    double value(std::size_t n, const LatticeVec& x) const;  // c_n(x) as double
    double chat0(std::size_t n) const;                       // sum_x c_n(x)
    double sup_norm(std::size_t n) const;                    // max_x c_n(x)
    double denom(std::size_t n) const;                       // |support|^n (exact mode)
};

SawTables saw_enumerate(KernelPtr kernel, std::size_t n_max, const SawBudget& budget = {});

// pi_m(x), 2 <= m <= n_max, by exact deconvolution of the convolution
// recursion for c.  Exact mode mirrors the tables' integer arithmetic.
struct PiTables {
    KernelPtr kernel;
    std::size_t n_max = 0;
    bool exact = false;
    std::string method = "deconvolved";
    std::vector<std::map<LatticeVec, std::int64_t>> counts;  // index m, denominator |S|^m
    std::vector<std::map<LatticeVec, double>> values;

    double value(std::size_t m, const LatticeVec& x) const;
    double pihat0(std::size_t m) const;
};

PiTables saw_deconvolve_pi(const SawTables& tables);

// Verifies c_{n+1} = c_1*c_n + sum_m pi_m * c_{n+1-m} on the stored tables;
// exact-mode comparison is per-entry integer equality.
bool verify_reconvolution(const SawTables& tables, const PiTables& pi, double tol = 0.0);

// Direct N <= 2 diagrams: pi^{(1)} from polygon weights, pi^{(2)} from
// triples of mutually-avoiding walks, both exact.  partial_sum holds the
// two-term truncation -pi^{(1)} + pi^{(2)} of the alternating series, and
// remainder_bound the fully-relaxed next-order diagram
//   sum_u sum_{m1..m5} c(u)c(u) c(v-u)c(v-u) c(y-v)
// obtained by dropping every mutual-avoidance constraint.
struct PiDirect {
    std::size_t n_max = 0;
    std::vector<double> pi1_at0;                              // index m
    std::vector<std::map<LatticeVec, double>> pi2;            // index m
    std::vector<std::map<LatticeVec, double>> partial_sum;    // -pi1 + pi2
    std::vector<std::map<LatticeVec, double>> remainder_bound;
};

// m_max = 0 means the full table depth; the triple-walk enumeration grows
// fast, so cross-checks usually cap it lower than the table depth.
PiDirect saw_pi_direct(const SawTables& tables, std::size_t m_max = 0);
PiDirect saw_pi_direct(KernelPtr kernel, std::size_t n_max, const SawBudget& budget = {});

// g_1 = z*dhat, g_m = pihat_m(k) z^m; e = 0.  Derivative data from x-space
// moments of the pi tables.
std::shared_ptr<CoefficientProvider> saw_provider(PiTables pi, KernelPtr kernel);

// --- Oriented percolation ---------------------------------------------------

struct OpEstimates {
    KernelPtr kernel;
    double z = 0.0;
    std::uint64_t seed = 0;
    std::size_t samples = 0;
    std::size_t n_max = 0;
    std::size_t rho_m_max = 0;
    std::vector<std::map<LatticeVec, std::uint64_t>> tau_counts;  // index n = 0..n_max
    std::vector<std::map<LatticeVec, std::uint64_t>> rho_counts;  // index m = 0..rho_m_max

    double tau_hat(std::size_t n, const LatticeVec& x) const;
    double tau_se(std::size_t n, const LatticeVec& x) const;
    double rho_hat(std::size_t m, const LatticeVec& x) const;
    double rho_se(std::size_t m, const LatticeVec& x) const;
};

// Level-by-level simulation of independent oriented bond configurations.
// Bond occupation is a pure function of (seed, sample, level, endpoints),
// so results are reproducible under any traversal or thread order.
OpEstimates op_simulate(KernelPtr kernel, double z, std::size_t n_max, std::size_t samples,
                        std::uint64_t seed, std::size_t rho_m_max = 6, int threads = 1);

// N = 0 truncation of the expansion coefficients:
//   e_m = pihat(0)_m (m >= 2), g_1 = z dhat, g_2 = 0,
//   g_m = z dhat * pihat(0)_{m-1} (m >= 3).
// Flagged statistical/truncated; tables are pinned at the simulated z.
std::shared_ptr<CoefficientProvider> op_provider(OpEstimates est, KernelPtr kernel);

}  // namespace lace::models
