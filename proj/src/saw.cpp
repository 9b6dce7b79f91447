// Exact self-avoiding walk tables and the pi coefficients.
//
// pi_m is obtained by exact deconvolution of the two-point recursion
//   c_{n+1} = c_1 * c_n + sum_{m=2}^{n+1} pi_m * c_{n+1-m},
// which is total in the expansion order.  For uniform kernels everything
// is integer arithmetic over the denominator |support|^n, so round trips
// are bit-exact.  The direct N <= 2 diagrams serve as cross-checks only.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>

#include "lace/errors.hpp"
#include "lace/models.hpp"

namespace lace::models {

namespace {

// Mixed-radix packing of small lattice vectors into int64.  Codes add like
// vectors up to the constant origin offset, which makes sparse
// convolutions cheap.
struct Codec {
    int d = 0;
    std::int64_t R = 0;
    std::int64_t radix = 0;
    std::int64_t origin = 0;

    Codec(int d_, std::int64_t reach) : d(d_), R(reach), radix(2 * reach + 1) {
        double cap = 1.0;
        for (int i = 0; i < d; ++i) cap *= static_cast<double>(radix);
        if (cap > 9.0e18) throw BudgetError("lattice codec range overflow");
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
    std::int64_t add(std::int64_t a, std::int64_t b) const { return a + b - origin; }
    std::int64_t sub(std::int64_t a, std::int64_t b) const { return a - b + origin; }
};

struct Step {
    std::int64_t delta;  // code offset (add to a code via +delta-origin handled by caller)
    double weight;
};

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
    std::int64_t r;
    if (__builtin_mul_overflow(a, b, &r)) throw BudgetError("exact SAW arithmetic overflow");
    return r;
}
std::int64_t checked_add(std::int64_t a, std::int64_t b) {
    std::int64_t r;
    if (__builtin_add_overflow(a, b, &r)) throw BudgetError("exact SAW arithmetic overflow");
    return r;
}

bool kernel_is_uniform(const StepKernel& k) {
    for (std::size_t i = 1; i < k.support_size(); ++i)
        if (k.weight(i) != k.weight(0)) return false;
    return true;
}

template <class V>
std::map<LatticeVec, V> to_sorted(const std::unordered_map<std::int64_t, V>& m, const Codec& cd) {
    std::map<LatticeVec, V> out;
    for (auto& [code, v] : m) out.emplace(cd.decode(code), v);
    return out;
}

}  // namespace

double SawTables::denom(std::size_t n) const {
    return std::pow(static_cast<double>(kernel->support_size()), static_cast<double>(n));
}

double SawTables::value(std::size_t n, const LatticeVec& x) const {
    if (exact) {
        auto it = counts[n].find(x);
        return it == counts[n].end() ? 0.0 : static_cast<double>(it->second) / denom(n);
    }
    auto it = values[n].find(x);
    return it == values[n].end() ? 0.0 : it->second;
}

double SawTables::chat0(std::size_t n) const {
    if (exact) {
        std::int64_t s = 0;
        for (auto& [x, c] : counts[n]) s = checked_add(s, c);
        return static_cast<double>(s) / denom(n);
    }
    double s = 0.0;
    for (auto& [x, v] : values[n]) s += v;
    return s;
}

double SawTables::sup_norm(std::size_t n) const {
    double s = 0.0;
    if (exact) {
        for (auto& [x, c] : counts[n]) s = std::max(s, static_cast<double>(c));
        return s / denom(n);
    }
    for (auto& [x, v] : values[n]) s = std::max(s, v);
    return s;
}

double PiTables::value(std::size_t m, const LatticeVec& x) const {
    if (m < 2 || m > n_max) return 0.0;
    if (exact) {
        auto it = counts[m].find(x);
        return it == counts[m].end()
                   ? 0.0
                   : static_cast<double>(it->second) /
                         std::pow(static_cast<double>(kernel->support_size()), double(m));
    }
    auto it = values[m].find(x);
    return it == values[m].end() ? 0.0 : it->second;
}

double PiTables::pihat0(std::size_t m) const {
    if (m < 2 || m > n_max) return 0.0;
    double s = 0.0;
    if (exact) {
        std::int64_t acc = 0;
        for (auto& [x, c] : counts[m]) acc = checked_add(acc, c);
        return static_cast<double>(acc) /
               std::pow(static_cast<double>(kernel->support_size()), double(m));
    }
    for (auto& [x, v] : values[m]) s += v;
    return s;
}

SawTables saw_enumerate(KernelPtr kernel, std::size_t n_max, const SawBudget& budget) {
    if (!kernel->origin_excluded())
        throw ModelError("saw_enumerate: kernel must exclude the origin (D(0) = 0)");
    if (n_max < 1) throw UsageError("saw_enumerate: n_max must be >= 1");

    const double est = std::pow(static_cast<double>(kernel->support_size()),
                                static_cast<double>(n_max));
    if (est > budget.max_walk_estimate) {
        std::ostringstream os;
        os << "saw_enumerate: estimated walk count " << est << " exceeds the budget "
           << budget.max_walk_estimate;
        throw BudgetError(os.str());
    }

    const int d = kernel->d();
    const Codec cd(d, static_cast<std::int64_t>(n_max) * kernel->support_radius());
    const bool exact = kernel_is_uniform(*kernel);

    std::vector<Step> steps(kernel->support_size());
    for (std::size_t i = 0; i < steps.size(); ++i)
        steps[i] = Step{cd.encode(kernel->point(i)) - cd.origin, kernel->weight(i)};

    std::vector<std::unordered_map<std::int64_t, std::int64_t>> cnt(n_max + 1);
    std::vector<std::unordered_map<std::int64_t, double>> val(n_max + 1);

    std::vector<std::int64_t> path;  // visited codes, origin first
    path.reserve(n_max + 1);
    path.push_back(cd.origin);

    // Depth-first over self-avoiding paths, accumulating the step-weight
    // product at every depth.
    auto dfs = [&](auto&& self, std::int64_t pos, double w, std::size_t depth) -> void {
        if (depth == n_max) return;
        for (const Step& s : steps) {
            const std::int64_t nxt = pos + s.delta;
            if (std::find(path.begin(), path.end(), nxt) != path.end()) continue;
            const double nw = w * s.weight;
            if (exact)
                ++cnt[depth + 1][nxt];
            else
                val[depth + 1][nxt] += nw;
            path.push_back(nxt);
            self(self, nxt, nw, depth + 1);
            path.pop_back();
        }
    };
    dfs(dfs, cd.origin, 1.0, 0);

    SawTables t;
    t.kernel = std::move(kernel);
    t.n_max = n_max;
    t.exact = exact;
    if (exact) {
        cnt[0][cd.origin] = 1;
        t.counts.resize(n_max + 1);
        for (std::size_t n = 0; n <= n_max; ++n) t.counts[n] = to_sorted(cnt[n], cd);
    } else {
        val[0][cd.origin] = 1.0;
        t.values.resize(n_max + 1);
        for (std::size_t n = 0; n <= n_max; ++n) t.values[n] = to_sorted(val[n], cd);
    }
    return t;
}

namespace {

// Working copies in code space for the deconvolution.
struct CodeTable {
    std::unordered_map<std::int64_t, std::int64_t> ints;
    std::unordered_map<std::int64_t, double> dbls;
};

template <class V>
std::unordered_map<std::int64_t, V> to_codes(const std::map<LatticeVec, V>& m, const Codec& cd) {
    std::unordered_map<std::int64_t, V> out;
    out.reserve(m.size() * 2);
    for (auto& [x, v] : m) out.emplace(cd.encode(x), v);
    return out;
}

void conv_acc_int(const std::unordered_map<std::int64_t, std::int64_t>& a,
                  const std::unordered_map<std::int64_t, std::int64_t>& b, const Codec& cd,
                  std::int64_t sign, std::unordered_map<std::int64_t, std::int64_t>& out) {
    for (auto& [xa, va] : a)
        for (auto& [xb, vb] : b) {
            std::int64_t& slot = out[cd.add(xa, xb)];
            slot = checked_add(slot, checked_mul(sign, checked_mul(va, vb)));
        }
}

void conv_acc_dbl(const std::unordered_map<std::int64_t, double>& a,
                  const std::unordered_map<std::int64_t, double>& b, const Codec& cd, double sign,
                  std::unordered_map<std::int64_t, double>& out) {
    for (auto& [xa, va] : a)
        for (auto& [xb, vb] : b) out[cd.add(xa, xb)] += sign * va * vb;
}

Codec tables_codec(const SawTables& t) {
    // pi support is contained in the c support range; double the reach so
    // convolutions in the verification step cannot leave the code range.
    return Codec(t.kernel->d(),
                 2 * static_cast<std::int64_t>(t.n_max) * t.kernel->support_radius() + 1);
}

}  // namespace

PiTables saw_deconvolve_pi(const SawTables& t) {
    const Codec cd = tables_codec(t);
    PiTables pi;
    pi.kernel = t.kernel;
    pi.n_max = t.n_max;
    pi.exact = t.exact;
    pi.method = "deconvolved";

    if (t.exact) {
        std::vector<std::unordered_map<std::int64_t, std::int64_t>> C(t.n_max + 1),
            P(t.n_max + 1);
        for (std::size_t n = 0; n <= t.n_max; ++n) C[n] = to_codes(t.counts[n], cd);
        // Denominator alignment: P_m carries |S|^m, C_j carries |S|^j, and
        // every term of the order-(n+1) identity carries |S|^{n+1}.
        for (std::size_t n = 1; n < t.n_max; ++n) {
            std::unordered_map<std::int64_t, std::int64_t> acc = C[n + 1];
            conv_acc_int(C[1], C[n], cd, -1, acc);
            for (std::size_t m = 2; m <= n; ++m) {
                // scale P_m * C_{n+1-m} by |S|^0: both already share |S|^{n+1}
                conv_acc_int(P[m], C[n + 1 - m], cd, -1, acc);
            }
            std::erase_if(acc, [](const auto& kv) { return kv.second == 0; });
            P[n + 1] = std::move(acc);
        }
        // pi_2 = c_2 - c_1*c_1.
        {
            std::unordered_map<std::int64_t, std::int64_t> acc = C[2];
            conv_acc_int(C[1], C[1], cd, -1, acc);
            std::erase_if(acc, [](const auto& kv) { return kv.second == 0; });
            P[2] = std::move(acc);
        }
        pi.counts.resize(t.n_max + 1);
        for (std::size_t m = 2; m <= t.n_max; ++m) pi.counts[m] = to_sorted(P[m], cd);
    } else {
        std::vector<std::unordered_map<std::int64_t, double>> C(t.n_max + 1), P(t.n_max + 1);
        for (std::size_t n = 0; n <= t.n_max; ++n) C[n] = to_codes(t.values[n], cd);
        for (std::size_t n = 1; n < t.n_max; ++n) {
            std::unordered_map<std::int64_t, double> acc = C[n + 1];
            conv_acc_dbl(C[1], C[n], cd, -1.0, acc);
            for (std::size_t m = 2; m <= n; ++m) conv_acc_dbl(P[m], C[n + 1 - m], cd, -1.0, acc);
            P[n + 1] = std::move(acc);
        }
        {
            std::unordered_map<std::int64_t, double> acc = C[2];
            conv_acc_dbl(C[1], C[1], cd, -1.0, acc);
            P[2] = std::move(acc);
        }
        pi.values.resize(t.n_max + 1);
        for (std::size_t m = 2; m <= t.n_max; ++m) pi.values[m] = to_sorted(P[m], cd);
    }
    return pi;
}

bool verify_reconvolution(const SawTables& t, const PiTables& pi, double tol) {
    const Codec cd = tables_codec(t);
    if (t.exact && pi.exact) {
        std::vector<std::unordered_map<std::int64_t, std::int64_t>> C(t.n_max + 1),
            P(t.n_max + 1);
        for (std::size_t n = 0; n <= t.n_max; ++n) C[n] = to_codes(t.counts[n], cd);
        for (std::size_t m = 2; m <= t.n_max; ++m) P[m] = to_codes(pi.counts[m], cd);
        for (std::size_t n = 1; n < t.n_max; ++n) {
            std::unordered_map<std::int64_t, std::int64_t> rhs;
            conv_acc_int(C[1], C[n], cd, +1, rhs);
            for (std::size_t m = 2; m <= n + 1; ++m) conv_acc_int(P[m], C[n - m + 1], cd, +1, rhs);
            std::erase_if(rhs, [](const auto& kv) { return kv.second == 0; });
            if (rhs.size() != C[n + 1].size()) return false;
            for (auto& [x, v] : rhs) {
                auto it = C[n + 1].find(x);
                if (it == C[n + 1].end() || it->second != v) return false;
            }
        }
        return true;
    }
    // Mixed or double mode: compare as doubles within tol.
    auto c_codes = [&](std::size_t n) {
        std::unordered_map<std::int64_t, double> out;
        if (t.exact)
            for (auto& [x, c] : t.counts[n])
                out[cd.encode(x)] = static_cast<double>(c) / t.denom(n);
        else
            for (auto& [x, v] : t.values[n]) out[cd.encode(x)] = v;
        return out;
    };
    auto pi_codes = [&](std::size_t m) {
        std::unordered_map<std::int64_t, double> out;
        if (pi.exact)
            for (auto& [x, c] : pi.counts[m])
                out[cd.encode(x)] = static_cast<double>(c) /
                                    std::pow(double(t.kernel->support_size()), double(m));
        else
            for (auto& [x, v] : pi.values[m]) out[cd.encode(x)] = v;
        return out;
    };
    for (std::size_t n = 1; n < t.n_max; ++n) {
        std::unordered_map<std::int64_t, double> rhs;
        conv_acc_dbl(c_codes(1), c_codes(n), cd, 1.0, rhs);
        for (std::size_t m = 2; m <= n + 1; ++m)
            conv_acc_dbl(pi_codes(m), c_codes(n - m + 1), cd, 1.0, rhs);
        auto truth = c_codes(n + 1);
        for (auto& [x, v] : truth) {
            auto it = rhs.find(x);
            double r = it == rhs.end() ? 0.0 : it->second;
            if (std::fabs(r - v) > tol) return false;
            if (it != rhs.end()) rhs.erase(it);
        }
        for (auto& [x, v] : rhs)
            if (std::fabs(v) > tol) return false;
    }
    return true;
}

namespace {

// All self-avoiding walks of length 1..len_max, grouped by (length,
// endpoint code), each carrying its interior site set (codes of
// omega(1..len-1), sorted) and its weight.
struct WalkSet {
    struct Walk {
        std::vector<std::int64_t> interior;
        double weight;
    };
    // by_len[l] : endpoint code -> walks
    std::vector<std::unordered_map<std::int64_t, std::vector<Walk>>> by_len;
};

WalkSet enumerate_walks(const StepKernel& kernel, std::size_t len_max, const Codec& cd) {
    WalkSet ws;
    ws.by_len.resize(len_max + 1);
    std::vector<Step> steps(kernel.support_size());
    for (std::size_t i = 0; i < steps.size(); ++i)
        steps[i] = Step{cd.encode(kernel.point(i)) - cd.origin, kernel.weight(i)};

    std::vector<std::int64_t> path{cd.origin};
    auto dfs = [&](auto&& self, std::int64_t pos, double w, std::size_t depth) -> void {
        if (depth >= 1) {
            WalkSet::Walk walk;
            walk.interior.assign(path.begin() + 1, path.end() - 1);
            std::sort(walk.interior.begin(), walk.interior.end());
            walk.weight = w;
            ws.by_len[depth][pos].push_back(std::move(walk));
        }
        if (depth == len_max) return;
        for (const Step& s : steps) {
            const std::int64_t nxt = pos + s.delta;
            if (std::find(path.begin(), path.end(), nxt) != path.end()) continue;
            path.push_back(nxt);
            self(self, nxt, w * s.weight, depth + 1);
            path.pop_back();
        }
    };
    dfs(dfs, cd.origin, 1.0, 0);
    return ws;
}

bool sorted_disjoint(const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b) {
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] < b[j])
            ++i;
        else if (a[i] > b[j])
            ++j;
        else
            return false;
    }
    return true;
}

}  // namespace

PiDirect saw_pi_direct(const SawTables& t, std::size_t m_max) {
    const int d = t.kernel->d();
    const Codec cd(d, 2 * static_cast<std::int64_t>(t.n_max) * t.kernel->support_radius() + 1);
    const std::size_t top = (m_max == 0 || m_max > t.n_max) ? t.n_max : m_max;
    PiDirect out;
    out.n_max = top;
    out.pi1_at0.assign(top + 1, 0.0);
    out.pi2.resize(top + 1);
    out.partial_sum.resize(top + 1);
    out.remainder_bound.resize(top + 1);

    // pi^(1)_m(0): polygons = self-avoiding (m-1)-walks closed by one step.
    for (std::size_t m = 2; m <= top; ++m) {
        double s = 0.0;
        if (t.exact) {
            for (auto& [x, c] : t.counts[m - 1])
                s += static_cast<double>(c) / t.denom(m - 1) * t.kernel->weight_at(x);
        } else {
            for (auto& [x, v] : t.values[m - 1]) s += v * t.kernel->weight_at(x);
        }
        out.pi1_at0[m] = s;
    }

    // pi^(2)_m(y): three mutually-avoiding walks 0 -> y, lengths >= 1.
    if (top >= 3) {
        WalkSet ws = enumerate_walks(*t.kernel, top - 2, cd);
        for (std::size_t m = 3; m <= top; ++m) {
            std::unordered_map<std::int64_t, double> acc;
            for (std::size_t m1 = 1; m1 + 2 <= m; ++m1)
                for (std::size_t m2 = 1; m1 + m2 + 1 <= m; ++m2) {
                    const std::size_t m3 = m - m1 - m2;
                    if (m3 < 1 || m3 > top - 2) continue;
                    if (m1 > top - 2 || m2 > top - 2) continue;
                    for (auto& [y, w1s] : ws.by_len[m1]) {
                        auto it2 = ws.by_len[m2].find(y);
                        auto it3 = ws.by_len[m3].find(y);
                        if (it2 == ws.by_len[m2].end() || it3 == ws.by_len[m3].end()) continue;
                        if (y == cd.origin) continue;  // no closed SAWs of length >= 1
                        for (auto& w1 : w1s)
                            for (auto& w2 : it2->second) {
                                if (!sorted_disjoint(w1.interior, w2.interior)) continue;
                                for (auto& w3 : it3->second) {
                                    if (!sorted_disjoint(w1.interior, w3.interior)) continue;
                                    if (!sorted_disjoint(w2.interior, w3.interior)) continue;
                                    acc[y] += w1.weight * w2.weight * w3.weight;
                                }
                            }
                    }
                }
            out.pi2[m] = to_sorted(acc, cd);
        }
    }

    // partial_sum = -pi1 + pi2 (two-term truncation of the alternating series).
    for (std::size_t m = 2; m <= top; ++m) {
        std::map<LatticeVec, double> ps;
        if (out.pi1_at0[m] != 0.0) ps[LatticeVec(d, 0)] = -out.pi1_at0[m];
        for (auto& [x, v] : out.pi2[m]) ps[x] += v;
        out.partial_sum[m] = std::move(ps);
    }

    // Fully-relaxed next-order diagram, dropping every avoidance constraint:
    //   3 * sum_{u,v} c_p(v) c_q(u-v) c_a(u) c_b(u) c_s(v-u) c_t(y-v)
    // over p+q+a+b+s+t = m with a,b,s >= 1 and p+q >= 1 (split leg), t >= 0.
    auto cval = [&](std::size_t n, std::int64_t code) -> double {
        if (n == 0) return code == cd.origin ? 1.0 : 0.0;
        if (n > t.n_max) return 0.0;
        return t.value(n, cd.decode(code));
    };
    auto centries = [&](std::size_t n) {
        std::vector<std::pair<std::int64_t, double>> v;
        if (n == 0) {
            v.emplace_back(cd.origin, 1.0);
            return v;
        }
        if (t.exact)
            for (auto& [x, c] : t.counts[n])
                v.emplace_back(cd.encode(x), static_cast<double>(c) / t.denom(n));
        else
            for (auto& [x, val] : t.values[n]) v.emplace_back(cd.encode(x), val);
        return v;
    };

    for (std::size_t m = 4; m <= top; ++m) {
        std::unordered_map<std::int64_t, double> acc;
        for (std::size_t p = 0; p <= m; ++p)
            for (std::size_t q = 0; p + q <= m; ++q) {
                if (p + q < 1) continue;
                for (std::size_t a = 1; p + q + a <= m; ++a)
                    for (std::size_t b = 1; p + q + a + b <= m; ++b)
                        for (std::size_t s = 1; p + q + a + b + s <= m; ++s) {
                            const std::size_t tt = m - p - q - a - b - s;
                            auto ev = centries(p);    // v
                            auto eu = centries(a);    // u via c_a
                            auto ey = centries(tt);   // y - v
                            for (auto& [v, wv] : ev)
                                for (auto& [u, wu] : eu) {
                                    double w = wv * wu * cval(b, u) * cval(q, cd.sub(u, v)) *
                                               cval(s, cd.sub(v, u));
                                    if (w == 0.0) continue;
                                    for (auto& [dy, wy] : ey)
                                        acc[cd.add(v, dy)] += 3.0 * w * wy;
                                }
                        }
            }
        out.remainder_bound[m] = to_sorted(acc, cd);
    }
    return out;
}

PiDirect saw_pi_direct(KernelPtr kernel, std::size_t n_max, const SawBudget& budget) {
    return saw_pi_direct(saw_enumerate(std::move(kernel), n_max, budget));
}

namespace {

class SawProvider final : public CoefficientProvider {
  public:
    SawProvider(PiTables pi, KernelPtr kernel) : pi_(std::move(pi)), kernel_(std::move(kernel)) {
        entries_.resize(pi_.n_max + 1);
        pihat0_.assign(pi_.n_max + 1, 0.0);
        norm2sum_.assign(pi_.n_max + 1, 0.0);
        for (std::size_t m = 2; m <= pi_.n_max; ++m) {
            auto add_entry = [&](const LatticeVec& x, double v) {
                std::int64_t n2 = 0;
                for (int xi : x) n2 += std::int64_t(xi) * xi;
                entries_[m].push_back({x, v});
                pihat0_[m] += v;
                norm2sum_[m] += static_cast<double>(n2) * v;
            };
            if (pi_.exact)
                for (auto& [x, c] : pi_.counts[m])
                    add_entry(x, static_cast<double>(c) /
                                     std::pow(double(kernel_->support_size()), double(m)));
            else
                for (auto& [x, v] : pi_.values[m]) add_entry(x, v);
        }
    }

    double g(std::size_t m, const KPoint& k, double z) const override {
        if (m == 1) return z * kernel_->dhat(k);
        check_order(m);
        return std::pow(z, double(m)) * pihat(m, k);
    }
    double e(std::size_t, const KPoint&, double) const override { return 0.0; }
    double g0(std::size_t m, double z) const override {
        if (m == 1) return z;
        check_order(m);
        return std::pow(z, double(m)) * pihat0_[m];
    }
    double lap_g0(std::size_t m, double z) const override {
        if (m == 1) return -z * kernel_->sigma_sq();
        check_order(m);
        return -std::pow(z, double(m)) * norm2sum_[m];
    }
    double dz_g0(std::size_t m, double z) const override {
        if (m == 1) return 1.0;
        check_order(m);
        return double(m) * std::pow(z, double(m) - 1.0) * pihat0_[m];
    }
    double lap_e0(std::size_t, double) const override { return 0.0; }
    std::size_t max_m() const override { return pi_.n_max; }
    std::size_t g_zero_from() const override { return pi_.n_max + 1; }
    std::size_t e_zero_from() const override { return 1; }
    std::string name() const override { return "saw"; }
    const StepKernel& kernel() const override { return *kernel_; }

  private:
    void check_order(std::size_t m) const {
        if (m > pi_.n_max) {
            std::ostringstream os;
            os << "saw provider: order m=" << m << " beyond the pi table depth " << pi_.n_max;
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
    PiTables pi_;
    KernelPtr kernel_;
    std::vector<std::vector<Entry>> entries_;
    std::vector<double> pihat0_;
    std::vector<double> norm2sum_;
};

}  // namespace

std::shared_ptr<CoefficientProvider> saw_provider(PiTables pi, KernelPtr kernel) {
    return std::make_shared<SawProvider>(std::move(pi), std::move(kernel));
}

}  // namespace lace::models
