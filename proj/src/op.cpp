// Oriented percolation on Z^d x Z_+: level-by-level cluster growth with
// counter-based bond randomness, two-point estimates tau_n(x), and
// double-connection probabilities rho0_m(x) via pivotal-bond retests.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>
#include <unordered_map>
#include <unordered_set>

#include "lace/errors.hpp"
#include "lace/models.hpp"
#include "lace/rng.hpp"

namespace lace::models {

namespace {

struct Codec {
    int d = 0;
    std::int64_t R = 0, radix = 0, origin = 0;
    Codec(int d_, std::int64_t reach) : d(d_), R(reach), radix(2 * reach + 1) {
        double cap = 1.0;
        for (int i = 0; i < d; ++i) cap *= static_cast<double>(radix);
        if (cap > 9.0e18) throw BudgetError("op lattice codec range overflow");
        std::int64_t p = 1;
        for (int i = 0; i < d; ++i) {
            origin += R * p;
            p *= radix;
        }
    }
    std::int64_t encode(std::span<const int> x) const {
        std::int64_t code = 0, p = 1;
        for (int i = 0; i < d; ++i) {
            code += (x[i] + R) * p;
            p *= radix;
        }
        return code;
    }
    LatticeVec decode(std::int64_t code) const {
        LatticeVec x(d);
        for (int i = 0; i < d; ++i) {
            x[i] = static_cast<int>(code % radix - R);
            code /= radix;
        }
        return x;
    }
};

using LevelAdj = std::unordered_map<std::int64_t, std::vector<std::int64_t>>;  // u -> v list

struct SampleAccum {
    std::vector<std::unordered_map<std::int64_t, std::uint64_t>> tau;
    std::vector<std::unordered_map<std::int64_t, std::uint64_t>> rho;
};

// Forward reachability through the materialized bonds, optionally with one
// bond removed; returns whether (x, m) stays connected.
bool connected_without(const std::vector<LevelAdj>& adj, std::size_t m, std::int64_t x,
                       std::size_t skip_t, std::int64_t skip_u, std::int64_t skip_v,
                       std::int64_t origin) {
    std::unordered_set<std::int64_t> cur{origin};
    for (std::size_t t = 0; t < m; ++t) {
        std::unordered_set<std::int64_t> nxt;
        for (std::int64_t u : cur) {
            auto it = adj[t].find(u);
            if (it == adj[t].end()) continue;
            for (std::int64_t v : it->second) {
                if (t == skip_t && u == skip_u && v == skip_v) continue;
                nxt.insert(v);
            }
        }
        if (nxt.empty()) return false;
        cur = std::move(nxt);
    }
    return cur.count(x) > 0;
}

void run_samples(const StepKernel& kernel, const Codec& cd, double z, std::size_t n_max,
                 std::size_t rho_m_max, std::uint64_t seed, std::size_t s_begin,
                 std::size_t s_end, SampleAccum& acc) {
    const std::size_t nsteps = kernel.support_size();
    std::vector<std::int64_t> deltas(nsteps);
    std::vector<double> probs(nsteps);
    for (std::size_t i = 0; i < nsteps; ++i) {
        deltas[i] = cd.encode(kernel.point(i)) - cd.origin;
        probs[i] = z * kernel.weight(i);
    }

    for (std::size_t s = s_begin; s < s_end; ++s) {
        std::vector<LevelAdj> adj(n_max);
        std::vector<std::vector<std::int64_t>> levels(n_max + 1);
        levels[0].push_back(cd.origin);
        std::unordered_set<std::int64_t> seen;
        for (std::size_t t = 0; t < n_max; ++t) {
            seen.clear();
            for (std::int64_t u : levels[t]) {
                std::vector<std::int64_t> outs;
                const std::uint64_t hu = mix64(seed, s, t, static_cast<std::uint64_t>(u));
                for (std::size_t o = 0; o < nsteps; ++o) {
                    const std::uint64_t h = mix64(hu, o);
                    if (u01(h) < probs[o]) {
                        const std::int64_t v = u + deltas[o];
                        outs.push_back(v);
                        if (seen.insert(v).second) levels[t + 1].push_back(v);
                    }
                }
                if (!outs.empty()) adj[t].emplace(u, std::move(outs));
            }
            if (levels[t + 1].empty()) break;
        }

        for (std::size_t t = 0; t <= n_max; ++t)
            for (std::int64_t u : levels[t]) ++acc.tau[t][u];

        // Double connections: no pivotal bond for (0,0) -> (x,m).
        for (std::size_t m = 2; m <= rho_m_max; ++m) {
            for (std::int64_t x : levels[m]) {
                // Backward sets within the forward-materialized bonds.
                std::vector<std::unordered_set<std::int64_t>> back(m + 1);
                back[m].insert(x);
                for (std::size_t t = m; t-- > 0;) {
                    for (std::int64_t u : levels[t]) {
                        auto it = adj[t].find(u);
                        if (it == adj[t].end()) continue;
                        for (std::int64_t v : it->second)
                            if (back[t + 1].count(v)) {
                                back[t].insert(u);
                                break;
                            }
                    }
                }
                bool pivotal = false;
                for (std::size_t t = 0; t < m && !pivotal; ++t) {
                    // Candidate bonds at this level: on some 0 -> (x,m) path.
                    std::vector<std::pair<std::int64_t, std::int64_t>> cands;
                    for (std::int64_t u : back[t]) {
                        auto it = adj[t].find(u);
                        if (it == adj[t].end()) continue;
                        for (std::int64_t v : it->second)
                            if (back[t + 1].count(v)) cands.emplace_back(u, v);
                    }
                    if (cands.size() == 1) {
                        pivotal = true;  // every path crosses this level through it
                        break;
                    }
                    for (auto& [u, v] : cands)
                        if (!connected_without(adj, m, x, t, u, v, cd.origin)) {
                            pivotal = true;
                            break;
                        }
                }
                if (!pivotal) ++acc.rho[m][x];
            }
        }
    }
}

}  // namespace

double OpEstimates::tau_hat(std::size_t n, const LatticeVec& x) const {
    auto it = tau_counts[n].find(x);
    return it == tau_counts[n].end() ? 0.0
                                     : static_cast<double>(it->second) / double(samples);
}

double OpEstimates::tau_se(std::size_t n, const LatticeVec& x) const {
    double p = tau_hat(n, x);
    return std::sqrt(p * (1.0 - p) / double(samples));
}

double OpEstimates::rho_hat(std::size_t m, const LatticeVec& x) const {
    auto it = rho_counts[m].find(x);
    return it == rho_counts[m].end() ? 0.0
                                     : static_cast<double>(it->second) / double(samples);
}

double OpEstimates::rho_se(std::size_t m, const LatticeVec& x) const {
    double p = rho_hat(m, x);
    return std::sqrt(p * (1.0 - p) / double(samples));
}

OpEstimates op_simulate(KernelPtr kernel, double z, std::size_t n_max, std::size_t samples,
                        std::uint64_t seed, std::size_t rho_m_max, int threads) {
    if (samples < 1) throw UsageError("op_simulate: samples must be >= 1");
    if (n_max < 1) throw UsageError("op_simulate: n_max must be >= 1");
    if (!(z >= 0)) throw UsageError("op_simulate: z must be >= 0");
    const double pmax = z * kernel->sup_norm();
    if (pmax > 1.0) {
        std::ostringstream os;
        os << "op_simulate: invalid probability, z * max D(x) = " << pmax << " > 1";
        throw ModelError(os.str());
    }
    rho_m_max = std::min(rho_m_max, n_max);
    const Codec cd(kernel->d(), static_cast<std::int64_t>(n_max) * kernel->support_radius());

    const int nthreads = std::max(1, threads);
    std::vector<SampleAccum> accs(nthreads);
    for (auto& a : accs) {
        a.tau.resize(n_max + 1);
        a.rho.resize(rho_m_max + 1);
    }

    if (nthreads == 1) {
        run_samples(*kernel, cd, z, n_max, rho_m_max, seed, 0, samples, accs[0]);
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (samples + nthreads - 1) / nthreads;
        for (int t = 0; t < nthreads; ++t) {
            const std::size_t b = std::min<std::size_t>(t * chunk, samples);
            const std::size_t e = std::min<std::size_t>(b + chunk, samples);
            pool.emplace_back([&, t, b, e] {
                run_samples(*kernel, cd, z, n_max, rho_m_max, seed, b, e, accs[t]);
            });
        }
        for (auto& th : pool) th.join();
    }

    OpEstimates est;
    est.kernel = kernel;
    est.z = z;
    est.seed = seed;
    est.samples = samples;
    est.n_max = n_max;
    est.rho_m_max = rho_m_max;
    est.tau_counts.resize(n_max + 1);
    est.rho_counts.resize(rho_m_max + 1);
    for (const auto& a : accs) {
        for (std::size_t n = 0; n <= n_max; ++n)
            for (auto& [code, c] : a.tau[n]) est.tau_counts[n][cd.decode(code)] += c;
        for (std::size_t m = 0; m <= rho_m_max; ++m)
            for (auto& [code, c] : a.rho[m]) est.rho_counts[m][cd.decode(code)] += c;
    }
    // A site is always doubly connected to itself.
    est.rho_counts[0][LatticeVec(kernel->d(), 0)] = samples;
    return est;
}

namespace {

class OpProvider final : public CoefficientProvider {
  public:
    OpProvider(OpEstimates est, KernelPtr kernel) : est_(std::move(est)), kernel_(std::move(kernel)) {
        const std::size_t top = est_.rho_m_max;
        entries_.resize(top + 1);
        pihat0_.assign(top + 1, 0.0);
        norm2sum_.assign(top + 1, 0.0);
        for (std::size_t m = 2; m <= top; ++m) {
            for (auto& [x, c] : est_.rho_counts[m]) {
                const double v = static_cast<double>(c) / double(est_.samples);
                std::int64_t n2 = 0;
                for (int xi : x) n2 += std::int64_t(xi) * xi;
                entries_[m].push_back({x, v});
                pihat0_[m] += v;
                norm2sum_[m] += static_cast<double>(n2) * v;
            }
        }
    }

    double g(std::size_t m, const KPoint& k, double z) const override {
        if (m == 1) return z * kernel_->dhat(k);
        if (m == 2) return 0.0;
        check_order(m - 1);
        return z * kernel_->dhat(k) * pihat(m - 1, k);
    }
    double e(std::size_t m, const KPoint& k, double) const override {
        if (m < 2) return 0.0;
        check_order(m);
        return pihat(m, k);
    }
    double g0(std::size_t m, double z) const override {
        if (m == 1) return z;
        if (m == 2) return 0.0;
        check_order(m - 1);
        return z * pihat0_[m - 1];
    }
    double lap_g0(std::size_t m, double z) const override {
        if (m == 1) return -z * kernel_->sigma_sq();
        if (m == 2) return 0.0;
        check_order(m - 1);
        return z * (-kernel_->sigma_sq() * pihat0_[m - 1] - norm2sum_[m - 1]);
    }
    double dz_g0(std::size_t m, double) const override {
        if (m == 1) return 1.0;
        if (m == 2) return 0.0;
        check_order(m - 1);
        return pihat0_[m - 1];
    }
    double lap_e0(std::size_t m, double) const override {
        if (m < 2) return 0.0;
        check_order(m);
        return -norm2sum_[m];
    }
    std::size_t max_m() const override { return est_.rho_m_max; }
    std::size_t g_zero_from() const override { return est_.rho_m_max + 2; }
    std::size_t e_zero_from() const override { return est_.rho_m_max + 1; }
    std::string name() const override { return "op-truncated-n0"; }
    const StepKernel& kernel() const override { return *kernel_; }

    const OpEstimates& estimates() const { return est_; }

  private:
    void check_order(std::size_t m) const {
        if (m > est_.rho_m_max) {
            std::ostringstream os;
            os << "op provider: estimate order " << m << " missing (tables reach "
               << est_.rho_m_max << ")";
            throw ModelError(os.str());
        }
    }
    double pihat(std::size_t m, const KPoint& k) const {
        double s = 0.0;
        for (auto& en : entries_[m]) {
            double phase = 0.0;
            for (int i = 0; i < kernel_->d(); ++i) phase += k.c[i] * en.x[i];
            s += en.v * std::cos(phase);
        }
        return s;
    }

    struct Entry {
        LatticeVec x;
        double v;
    };
    OpEstimates est_;
    KernelPtr kernel_;
    std::vector<std::vector<Entry>> entries_;
    std::vector<double> pihat0_, norm2sum_;
};

}  // namespace

std::shared_ptr<CoefficientProvider> op_provider(OpEstimates est, KernelPtr kernel) {
    return std::make_shared<OpProvider>(std::move(est), std::move(kernel));
}

}  // namespace lace::models
