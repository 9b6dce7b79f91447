#include "lace/clt.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "lace/errors.hpp"

namespace lace {

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<double> scaled_point(const std::vector<double>& k, double v, double sigma_sq,
                                 std::size_t n) {
    const double scale = 1.0 / std::sqrt(v * sigma_sq * static_cast<double>(n));
    std::vector<double> out(k.size());
    for (std::size_t i = 0; i < k.size(); ++i) out[i] = k[i] * scale;
    return out;
}

bool on_torus(const std::vector<double>& c) {
    return std::all_of(c.begin(), c.end(), [](double v) { return v >= -kPi && v <= kPi; });
}

double norm_sq(const std::vector<double>& k) {
    double s = 0.0;
    for (double v : k) s += v * v;
    return s;
}

}  // namespace

std::vector<KPoint> profile_kset(std::span<const std::vector<double>> k_list,
                                 std::span<const std::size_t> n_list, double v,
                                 const StepKernel& kernel) {
    std::set<std::vector<double>> uniq;
    for (std::size_t n : n_list)
        for (const auto& k : k_list) {
            auto c = scaled_point(k, v, kernel.sigma_sq(), n);
            if (on_torus(c)) uniq.insert(std::move(c));
        }
    std::vector<KPoint> out;
    out.reserve(uniq.size());
    for (auto& c : uniq) out.emplace_back(KPoint{std::vector<double>(c)});
    return out;
}

std::vector<ProfileRow> gaussian_profile_check(const RecursionState& state, double A, double v,
                                               const StepKernel& kernel,
                                               std::span<const std::vector<double>> k_list,
                                               std::span<const std::size_t> n_list) {
    std::vector<ProfileRow> rows;
    for (std::size_t n : n_list) {
        if (n > state.n_max) throw UsageError("gaussian_profile_check: n beyond the state range");
        for (const auto& k : k_list) {
            ProfileRow row;
            row.n = n;
            row.k = k;
            row.gaussian = A * std::exp(-norm_sq(k) / (2.0 * kernel.d()));
            auto c = scaled_point(k, v, kernel.sigma_sq(), n);
            if (!on_torus(c)) {
                row.skipped = true;
                rows.push_back(std::move(row));
                continue;
            }
            KPoint kp;
            kp.c = std::move(c);
            std::ptrdiff_t col = state.find_column(kp);
            if (col < 0)
                throw UsageError(
                    "gaussian_profile_check: scaled point missing from the state kset; build the "
                    "kset with profile_kset");
            row.f = state.f(n, std::size_t(col));
            row.err = std::fabs(row.f - row.gaussian);
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

std::vector<DiffusiveRow> diffusive_check(const RecursionState& state, double v,
                                          const StepKernel& kernel,
                                          std::span<const std::size_t> n_list) {
    if (!state.lapf0_valid)
        throw UsageError("diffusive_check: run laplacian_recursion on the state first");
    std::vector<DiffusiveRow> rows;
    for (std::size_t n : n_list) {
        if (n > state.n_max) throw UsageError("diffusive_check: n beyond the state range");
        if (n == 0) continue;
        if (state.f0[n] == 0.0) {
            std::ostringstream os;
            os << "diffusive_check: f_" << n << "(0) = 0, ratio undefined";
            throw SingularityError(os.str());
        }
        DiffusiveRow row;
        row.n = n;
        row.ratio = -state.lapf0[n] /
                    (state.f0[n] * v * kernel.sigma_sq() * static_cast<double>(n));
        row.dev = std::fabs(row.ratio - 1.0);
        rows.push_back(row);
    }
    return rows;
}

std::vector<L1Row> l1_decay_check(const StepKernel& kernel, const RecursionState& state,
                                  std::span<const std::size_t> n_list, const QuadratureSpec& quad) {
    if (!state.provider) throw UsageError("l1_decay_check: state has no provider attached");
    std::vector<double> norms =
        weighted_l1_norms(kernel, *state.provider, state.z, n_list, quad);
    std::vector<L1Row> rows(n_list.size());
    for (std::size_t i = 0; i < n_list.size(); ++i) {
        rows[i].n = n_list[i];
        rows[i].norm = norms[i];
        rows[i].normalised = norms[i] * std::pow(double(n_list[i]), 0.5 * kernel.d()) / kernel.beta();
    }
    return rows;
}

double XSpaceTable::at(const models::LatticeVec& x) const {
    auto it = p.find(x);
    return it == p.end() ? 0.0 : it->second;
}

double XSpaceTable::window_sum() const {
    double s = 0.0;
    for (auto& [x, v] : p) s += v;
    return s;
}

XSpaceTable inverse_ft_pn(const CoefficientProvider& provider, double z, std::size_t n,
                          int x_window) {
    const StepKernel& kernel = provider.kernel();
    const int d = kernel.d();
    if (d > 3)
        throw UsageError(
            "inverse_ft_pn: transform mode is limited to d <= 3; use the model-table mode");
    if (x_window < 0) throw UsageError("inverse_ft_pn: window must be >= 0");

    XSpaceTable tab;
    tab.n = n;
    tab.d = d;
    tab.window = x_window;
    tab.method = XSpaceTable::Method::InverseTransform;

    if (n == 0) {
        tab.p[models::LatticeVec(d, 0)] = 1.0;
        return tab;
    }

    // Grid size beyond the reach kills aliasing: the alias images sit at
    // x + M t with |x + M t| > n * L_supp for t != 0.
    const long reach = static_cast<long>(n) * kernel.support_radius();
    const long M = reach + x_window + 1;
    double count = std::pow(static_cast<double>(M), d);
    if (count > 4e6) throw BudgetError("inverse_ft_pn: tensor k-grid too large");

    std::vector<double> axis(M);
    for (long j = 0; j < M; ++j) {
        double t = 2.0 * kPi * j / M;
        axis[j] = t > kPi ? t - 2.0 * kPi : t;
    }
    std::vector<KPoint> grid;
    grid.reserve(static_cast<std::size_t>(count));
    std::vector<long> idx(d, 0);
    for (std::size_t i = 0; i < static_cast<std::size_t>(count); ++i) {
        std::vector<double> c(d);
        for (int j = 0; j < d; ++j) c[j] = axis[idx[j]];
        grid.emplace_back(KPoint{std::move(c)});
        int axis_i = d - 1;
        while (axis_i >= 0 && ++idx[axis_i] == M) idx[axis_i--] = 0;
    }

    RecursionState st = run_recursion(provider, z, n, std::move(grid));
    const double inv = 1.0 / count;

    std::vector<int> x(d, -x_window);
    while (true) {
        double s = 0.0;
        for (std::size_t c = 0; c < st.kset.size(); ++c) {
            double phase = 0.0;
            for (int j = 0; j < d; ++j) phase += st.kset[c].c[j] * x[j];
            s += std::cos(phase) * st.f(n, c);
        }
        tab.p[models::LatticeVec(x.begin(), x.end())] = s * inv;
        int axis_i = d - 1;
        while (axis_i >= 0 && x[axis_i] == x_window) x[axis_i--] = -x_window;
        if (axis_i < 0) break;
        ++x[axis_i];
    }
    return tab;
}

XSpaceTable inverse_ft_pn(const models::SawTables& tables, double z, std::size_t n, int x_window) {
    if (n > tables.n_max) throw UsageError("inverse_ft_pn: n beyond the table depth");
    XSpaceTable tab;
    tab.n = n;
    tab.d = tables.kernel->d();
    tab.window = x_window;
    tab.method = XSpaceTable::Method::ModelTables;
    const double zn = std::pow(z, double(n));
    auto in_window = [&](const models::LatticeVec& x) {
        return std::all_of(x.begin(), x.end(),
                           [&](int v) { return std::abs(v) <= x_window; });
    };
    if (tables.exact) {
        for (auto& [x, c] : tables.counts[n])
            if (in_window(x)) tab.p[x] = static_cast<double>(c) / tables.denom(n) * zn;
    } else {
        for (auto& [x, v] : tables.values[n])
            if (in_window(x)) tab.p[x] = v * zn;
    }
    return tab;
}

std::size_t LocalCltConfig::rn(std::size_t n, std::size_t) const {
    if (!fixed_Rn.empty()) {
        // Fixed-growth table: nearest entry at or below n.
        std::size_t best = 0;
        bool found = false;
        for (std::size_t i = 0; i + 1 < fixed_Rn.size(); i += 2)
            if (fixed_Rn[i] <= n) {
                best = fixed_Rn[i + 1];
                found = true;
            }
        if (!found) throw UsageError("local CLT: fixed R table has no entry at or below n");
        return best;
    }
    return static_cast<std::size_t>(std::floor(std::pow(double(n), exponent)));
}

void LocalCltConfig::validate(int) const {
    if (fixed_Rn.empty()) {
        if (!(exponent > 0.0 && exponent < 0.5))
            throw UsageError("local CLT: R_n = floor(n^a) requires 0 < a < 1/2");
    } else {
        if (fixed_Rn.size() % 2 != 0)
            throw UsageError("local CLT: fixed R table must be (n, R) pairs");
        for (std::size_t i = 2; i + 1 < fixed_Rn.size(); i += 2)
            if (fixed_Rn[i] <= fixed_Rn[i - 2] || fixed_Rn[i + 1] < fixed_Rn[i - 1])
                throw UsageError("local CLT: fixed R table must grow with n");
    }
    if (!(kappa > 0.0 && kappa < 1.0)) throw UsageError("local CLT: kappa must lie in (0,1)");
}

std::vector<LcltRow> local_clt_check(const XSpaceTable& table, const LocalCltConfig& config,
                                     double A, double v, const StepKernel& kernel) {
    config.validate(kernel.d());
    const int d = table.d;
    const std::size_t n = table.n;
    const std::size_t R = config.rn(n, 0);
    const double scale = std::sqrt(v * kernel.sigma_sq() * static_cast<double>(n));

    std::vector<LcltRow> rows;
    for (auto x : config.x_points) {
        if (x.empty()) x.assign(d, 0.0);
        if (static_cast<int>(x.size()) != d)
            throw UsageError("local CLT: x point dimension mismatch");
        models::LatticeVec center(d);
        int need = 0;
        for (int i = 0; i < d; ++i) {
            center[i] = static_cast<int>(std::lround(x[i] * scale));
            need = std::max(need, std::abs(center[i]) + static_cast<int>(R));
        }
        if (need > table.window) {
            std::ostringstream os;
            os << "local CLT: x window " << table.window << " too small; need radius " << need;
            throw WindowError(os.str());
        }

        double sum = 0.0;
        std::vector<int> y(d);
        std::vector<int> off(d, -static_cast<int>(R));
        while (true) {
            for (int i = 0; i < d; ++i) y[i] = center[i] + off[i];
            sum += table.at(y);
            int axis = d - 1;
            while (axis >= 0 && off[axis] == static_cast<int>(R)) off[axis--] = -static_cast<int>(R);
            if (axis < 0) break;
            ++off[axis];
        }

        LcltRow row;
        row.n = n;
        row.x = x;
        row.Rn = R;
        row.lhs = sum / std::pow(2.0 * R + 1.0, d);
        row.rhs = A *
                  std::pow(d / (2.0 * kPi * n * v * kernel.sigma_sq()), 0.5 * d) *
                  std::exp(-0.5 * d * norm_sq(x));
        row.ratio = row.lhs / row.rhs;
        rows.push_back(std::move(row));
    }
    return rows;
}

double dirichlet_qhat(int R, const KPoint& k) {
    if (R < 0) throw UsageError("dirichlet_qhat: R must be >= 0");
    const double width = 2.0 * R + 1.0;
    double prod = 1.0;
    for (double t : k.c) {
        if (t == 0.0) continue;  // removable singularity
        prod *= std::sin(0.5 * width * t) / (width * std::sin(0.5 * t));
    }
    return prod;
}

}  // namespace lace
