#include "lace/engine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lace/errors.hpp"
#include "lace/simd.hpp"

namespace lace {

void CoefficientProvider::g_row(std::size_t m, double z, std::span<const KPoint> ks,
                                std::span<const double> /*dhat_vals*/,
                                std::span<double> out) const {
    for (std::size_t i = 0; i < ks.size(); ++i) out[i] = g(m, ks[i], z);
}

void CoefficientProvider::e_row(std::size_t m, double z, std::span<const KPoint> ks,
                                std::span<const double> /*dhat_vals*/,
                                std::span<double> out) const {
    for (std::size_t i = 0; i < ks.size(); ++i) out[i] = e(m, ks[i], z);
}

std::ptrdiff_t RecursionState::find_column(const KPoint& k) const {
    for (std::size_t i = 0; i < kset.size(); ++i)
        if (kset[i].c == k.c) return static_cast<std::ptrdiff_t>(i);
    return -1;
}

namespace {

// Largest possibly-nonzero order given a zero_from hint.
std::size_t cut_from_hint(std::size_t n_max, std::size_t zero_from) {
    if (zero_from == CoefficientProvider::unbounded()) return n_max;
    return std::min(n_max, zero_from == 0 ? std::size_t(0) : zero_from - 1);
}

void kahan_row_fma(std::vector<double>& acc, std::vector<double>& comp, const double* a,
                   const double* b, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        double y = a[i] * b[i] - comp[i];
        double t = acc[i] + y;
        comp[i] = (t - acc[i]) - y;
        acc[i] = t;
    }
}

}  // namespace

RecursionState run_recursion(const CoefficientProvider& provider, double z, std::size_t n_max,
                             std::vector<KPoint> kset, const EngineLimits& limits) {
    if (n_max < 1) throw UsageError("run_recursion: n_max must be >= 1");
    if (!(z > 0)) throw UsageError("run_recursion: z must be positive");
    if (kset.empty()) throw UsageError("run_recursion: empty kset");
    if (n_max > provider.max_m()) {
        std::ostringstream os;
        os << "run_recursion: provider '" << provider.name() << "' supplies coefficients only to m="
           << provider.max_m() << " but n_max=" << n_max;
        throw ModelError(os.str());
    }
    const StepKernel& kernel = provider.kernel();
    const int d = kernel.d();
    for (const KPoint& k : kset)
        if (k.dim() != d) throw UsageError("run_recursion: kset dimension mismatch");

    RecursionState st;
    st.z = z;
    st.n_max = n_max;
    st.kset = std::move(kset);
    st.provider = &provider;
    st.ncols = st.kset.size() + 1;  // + internal k=0 column

    if ((n_max + 1) * st.ncols > limits.max_table_doubles)
        throw BudgetError("run_recursion: f table would exceed the configured memory cap");

    std::vector<KPoint> cols = st.kset;
    cols.push_back(KPoint::zero(d));
    std::vector<double> dhat_vals(st.ncols);
    for (std::size_t i = 0; i < st.ncols; ++i) dhat_vals[i] = kernel.dhat(cols[i]);

    const std::size_t g_cut = cut_from_hint(n_max, provider.g_zero_from());
    const std::size_t e_cut = cut_from_hint(n_max, provider.e_zero_from());

    // Rows of g_m(k;z) and e_n(k;z) over the columns, order-major.
    std::vector<double> grows(g_cut * st.ncols);
    for (std::size_t m = 1; m <= g_cut; ++m)
        provider.g_row(m, z, cols, dhat_vals, {grows.data() + (m - 1) * st.ncols, st.ncols});
    std::vector<double> erows(e_cut * st.ncols);
    for (std::size_t m = 1; m <= e_cut; ++m)
        provider.e_row(m, z, cols, dhat_vals, {erows.data() + (m - 1) * st.ncols, st.ncols});

    // Assumption D contract: g_1 = z*dhat, e_1 = 0.
    if (g_cut >= 1) {
        for (std::size_t i = 0; i < st.ncols; ++i) {
            if (std::fabs(grows[i] - z * dhat_vals[i]) > 1e-12 * std::max(1.0, std::fabs(z)))
                throw ModelError("provider violates g_1(k;z) = z*dhat(k)");
        }
    }
    if (e_cut >= 1) {
        for (std::size_t i = 0; i < st.ncols; ++i)
            if (erows[i] != 0.0) throw ModelError("provider violates e_1 = 0");
    }

    st.table.assign((n_max + 1) * st.ncols, 0.0);
    for (std::size_t i = 0; i < st.ncols; ++i) st.table[i] = 1.0;  // f_0 = 1

    std::vector<double> acc(st.ncols), comp;
    if (limits.kahan) comp.resize(st.ncols);
    for (std::size_t n = 0; n < n_max; ++n) {
        std::fill(acc.begin(), acc.end(), 0.0);
        if (limits.kahan) std::fill(comp.begin(), comp.end(), 0.0);
        const std::size_t mtop = std::min(n + 1, g_cut);
        for (std::size_t m = 1; m <= mtop; ++m) {
            const double* grow = grows.data() + (m - 1) * st.ncols;
            const double* frow = st.table.data() + (n + 1 - m) * st.ncols;
            if (limits.kahan)
                kahan_row_fma(acc, comp, grow, frow, st.ncols);
            else
                simd::fmadd_arrays(acc.data(), grow, frow, st.ncols);
        }
        double* out = st.table.data() + (n + 1) * st.ncols;
        if (n + 1 <= e_cut) {
            const double* erow = erows.data() + n * st.ncols;
            for (std::size_t i = 0; i < st.ncols; ++i) out[i] = acc[i] + erow[i];
        } else {
            std::copy(acc.begin(), acc.end(), out);
        }
    }

    st.f0.resize(n_max + 1);
    for (std::size_t n = 0; n <= n_max; ++n) st.f0[n] = st.table[n * st.ncols + st.ncols - 1];
    return st;
}

const std::vector<double>& laplacian_recursion(const CoefficientProvider& provider,
                                               RecursionState& state) {
    if (!provider.has_derivatives())
        throw ModelError("laplacian_recursion: provider '" + provider.name() +
                         "' does not expose derivative data");
    const std::size_t n_max = state.n_max;
    const double z = state.z;
    const std::size_t g_cut = cut_from_hint(n_max, provider.g_zero_from());
    const std::size_t e_cut = cut_from_hint(n_max, provider.e_zero_from());

    std::vector<double> g0v(g_cut + 1, 0.0), lg0v(g_cut + 1, 0.0), le0v(e_cut + 1, 0.0);
    for (std::size_t m = 1; m <= g_cut; ++m) {
        g0v[m] = provider.g0(m, z);
        lg0v[m] = provider.lap_g0(m, z);
    }
    for (std::size_t m = 1; m <= e_cut; ++m) le0v[m] = provider.lap_e0(m, z);

    state.lapf0.assign(n_max + 1, 0.0);
    for (std::size_t n = 0; n < n_max; ++n) {
        double acc = 0.0;
        const std::size_t mtop = std::min(n + 1, g_cut);
        for (std::size_t m = 1; m <= mtop; ++m) {
            acc = std::fma(g0v[m], state.lapf0[n + 1 - m], acc);
            acc = std::fma(lg0v[m], state.f0[n + 1 - m], acc);
        }
        if (n + 1 <= e_cut) acc += le0v[n + 1];
        state.lapf0[n + 1] = acc;
    }
    state.lapf0_valid = true;
    return state.lapf0;
}

}  // namespace lace
