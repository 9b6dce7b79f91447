// lace: batch front door.  Subcommands:
//   lace kernel-check --config PATH [--out DIR]
//   lace run          --config PATH --out DIR [--seed N] [--threads N]
//   lace cache list|purge [--dir D] [--hash H | --all]
// Exit codes: 0 success, 1 check-failure, 2 usage, 3 runtime.

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lace/cache.hpp"
#include "lace/clt.hpp"
#include "lace/critical.hpp"
#include "lace/engine.hpp"
#include "lace/errors.hpp"
#include "lace/induction.hpp"
#include "lace/io.hpp"
#include "lace/models.hpp"
#include "lace/simd.hpp"

namespace fs = std::filesystem;
using lace::io::Json;

namespace {

constexpr double kPi = std::numbers::pi;

// ---------------------------------------------------------------- config

using FlatConfig = std::map<std::string, std::string>;

void flatten_json(const Json& j, const std::string& prefix, FlatConfig& out) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (it.value().is_object())
            flatten_json(it.value(), key, out);
        else if (it.value().is_string())
            out[key] = it.value().get<std::string>();
        else
            out[key] = it.value().dump();
    }
}

FlatConfig parse_config_file(const fs::path& path) {
    std::string text = lace::io::read_file(path);
    std::size_t first = text.find_first_not_of(" \t\r\n");
    FlatConfig cfg;
    if (first != std::string::npos && text[first] == '{') {
        Json j = Json::parse(text);
        // A manifest echoes its effective config; accept it directly.
        if (j.contains("config") && j["config"].is_object()) j = j["config"];
        flatten_json(j, "", cfg);
        return cfg;
    }
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            if (line.find_first_not_of(" \t\r") != std::string::npos)
                throw lace::UsageError("config line " + std::to_string(lineno) +
                                       ": expected key = value");
            continue;
        }
        auto trim = [](std::string s) {
            std::size_t b = s.find_first_not_of(" \t\r");
            std::size_t e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (key.empty())
            throw lace::UsageError("config line " + std::to_string(lineno) + ": empty key");
        cfg[key] = val;
    }
    return cfg;
}

class Config {
  public:
    explicit Config(FlatConfig raw) : raw_(std::move(raw)) {}

    std::string str(const std::string& key, const std::string& def) {
        seen_.insert(key);
        auto it = raw_.find(key);
        return it == raw_.end() ? def : it->second;
    }
    std::string require(const std::string& key) {
        seen_.insert(key);
        auto it = raw_.find(key);
        if (it == raw_.end()) throw lace::UsageError("missing config key \"" + key + "\"");
        return it->second;
    }
    long integer(const std::string& key, long def) {
        std::string v = str(key, "");
        if (v.empty()) return def;
        try {
            std::size_t pos = 0;
            long r = std::stol(v, &pos);
            if (pos != v.size()) throw std::invalid_argument(v);
            return r;
        } catch (...) {
            throw lace::UsageError("config key \"" + key + "\": not an integer: " + v);
        }
    }
    double number(const std::string& key, double def) {
        std::string v = str(key, "");
        if (v.empty()) return def;
        try {
            std::size_t pos = 0;
            double r = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument(v);
            return r;
        } catch (...) {
            throw lace::UsageError("config key \"" + key + "\": not a number: " + v);
        }
    }
    bool boolean(const std::string& key, bool def) {
        std::string v = str(key, "");
        if (v.empty()) return def;
        if (v == "true" || v == "1") return true;
        if (v == "false" || v == "0") return false;
        throw lace::UsageError("config key \"" + key + "\": not a boolean: " + v);
    }
    void set(const std::string& key, const std::string& val) { raw_[key] = val; }
    const FlatConfig& raw() const { return raw_; }

  private:
    FlatConfig raw_;
    std::set<std::string> seen_;
};

// ------------------------------------------------------------- model setup

struct ModelBundle {
    lace::KernelPtr kernel;
    std::shared_ptr<lace::CoefficientProvider> provider;
    std::string model;
    std::string coeff_status = "n/a";  // built | cache-hit | n/a
    std::optional<lace::models::OpEstimates> op_estimates;
};

lace::KernelPtr build_kernel(Config& cfg) {
    const int d = int(cfg.integer("kernel.d", 0));
    if (d == 0) throw lace::UsageError("missing config key \"kernel.d\"");
    const int L = int(cfg.integer("kernel.L", 0));
    if (L == 0) throw lace::UsageError("missing config key \"kernel.L\"");
    const bool excl = cfg.boolean("kernel.exclude_origin", false);
    const double eps = cfg.number("kernel.epsilon", 1.0);
    const std::string density = cfg.str("kernel.density", "");

    lace::StepKernel kern = [&] {
        if (density.empty()) return lace::StepKernel::uniform_cube(d, L, excl);
        if (density == "cube") {
            const double w = std::pow(0.5, d);
            return lace::StepKernel::from_density(
                [w](std::span<const double> x) {
                    for (double v : x)
                        if (std::fabs(v) > 1.0) return 0.0;
                    return w;
                },
                d, L, 1.0);
        }
        if (density.rfind("gaussian:", 0) == 0) {
            const double R = std::stod(density.substr(9));
            return lace::StepKernel::from_density(
                [R](std::span<const double> x) {
                    double n2 = 0.0;
                    for (double v : x) {
                        if (std::fabs(v) > R) return 0.0;
                        n2 += v * v;
                    }
                    return std::exp(-0.5 * n2);
                },
                d, L, R);
        }
        throw lace::UsageError("kernel.density: expected \"cube\" or \"gaussian:<radius>\"");
    }();
    kern.set_epsilon(eps);
    return std::make_shared<lace::StepKernel>(std::move(kern));
}

ModelBundle build_model(Config& cfg, lace::KernelPtr kernel, lace::Cache& cache, int threads,
                        std::uint64_t seed) {
    ModelBundle mb;
    mb.kernel = kernel;
    mb.model = cfg.require("model");
    if (mb.model == "srw") {
        mb.provider = lace::models::srw_provider(kernel);
    } else if (mb.model == "synthetic") {
        mb.provider = lace::models::synthetic_b_model(kernel, cfg.number("synthetic.b", 0.1));
    } else if (mb.model == "saw") {
        const std::size_t n_max = std::size_t(cfg.integer("run.n_max", 8));
        Json key;
        key["kernel"] = lace::io::kernel_to_json(*kernel);
        key["n_max"] = n_max;
        auto st = cache.load("saw-tables", key);
        auto pt = cache.load("pi-tables", key);
        lace::models::SawTables tables;
        lace::models::PiTables pi;
        if (st && pt) {
            tables = lace::saw_tables_from_json(*st, kernel);
            pi = lace::pi_tables_from_json(*pt, kernel);
            mb.coeff_status = "cache-hit";
        } else {
            tables = lace::models::saw_enumerate(kernel, n_max);
            pi = lace::models::saw_deconvolve_pi(tables);
            cache.store("saw-tables", key, lace::saw_tables_to_json(tables));
            cache.store("pi-tables", key, lace::pi_tables_to_json(pi));
            mb.coeff_status = "built";
        }
        mb.provider = lace::models::saw_provider(std::move(pi), kernel);
    } else if (mb.model == "op") {
        const std::string zs = cfg.str("run.z", "auto");
        if (zs == "auto")
            throw lace::UsageError("op model needs a numeric run.z (simulation parameter)");
        const double z = cfg.number("run.z", 0.0);
        const std::size_t samples = std::size_t(cfg.integer("op.samples", 20000));
        const std::size_t rho_m_max = std::size_t(cfg.integer("op.rho_m_max", 6));
        Json key;
        key["kernel"] = lace::io::kernel_to_json(*kernel);
        key["z"] = z;
        key["samples"] = samples;
        key["seed"] = seed;
        key["rho_m_max"] = rho_m_max;
        auto payload = cache.load("op-estimates", key);
        lace::models::OpEstimates est;
        if (payload) {
            est = lace::op_estimates_from_json(*payload, kernel);
            mb.coeff_status = "cache-hit";
        } else {
            est = lace::models::op_simulate(kernel, z, rho_m_max, samples, seed, rho_m_max,
                                            threads);
            cache.store("op-estimates", key, lace::op_estimates_to_json(est));
            mb.coeff_status = "built";
        }
        mb.op_estimates = est;
        mb.provider = lace::models::op_provider(std::move(est), kernel);
    } else {
        throw lace::UsageError("model: expected srw | synthetic | saw | op, got \"" + mb.model +
                               "\"");
    }
    return mb;
}

std::vector<lace::KPoint> build_kset(Config& cfg, int d) {
    const std::string spec = cfg.str("run.kset", "axis:50");
    if (spec == "zero") return {lace::KPoint::zero(d)};
    if (spec.rfind("axis:", 0) == 0) {
        std::string rest = spec.substr(5);
        double kmax = 2.0;
        std::size_t colon = rest.find(':');
        if (colon != std::string::npos) {
            kmax = std::stod(rest.substr(colon + 1));
            rest.erase(colon);
        }
        const long count = std::stol(rest);
        if (count < 1 || kmax <= 0 || kmax > kPi)
            throw lace::UsageError("run.kset axis spec: need count >= 1 and 0 < kmax <= pi");
        std::vector<lace::KPoint> out;
        for (long i = 1; i <= count; ++i) {
            std::vector<double> c(d, 0.0);
            c[0] = kmax * double(i) / double(count);
            out.emplace_back(std::move(c));
        }
        return out;
    }
    if (spec.rfind("grid:", 0) == 0) {
        if (d > 3) throw lace::UsageError("run.kset grid is limited to d <= 3");
        const long m = std::stol(spec.substr(5));
        if (m < 2) throw lace::UsageError("run.kset grid needs at least 2 points per axis");
        std::vector<lace::KPoint> out;
        std::vector<long> idx(d, 0);
        while (true) {
            std::vector<double> c(d);
            for (int i = 0; i < d; ++i) c[i] = -kPi + (idx[i] + 0.5) * 2.0 * kPi / double(m);
            out.emplace_back(std::move(c));
            int axis = d - 1;
            while (axis >= 0 && ++idx[axis] == m) idx[axis--] = 0;
            if (axis < 0) break;
        }
        return out;
    }
    throw lace::UsageError("run.kset: expected zero | axis:N[:kmax] | grid:M");
}

// ------------------------------------------------------------------ stages

struct RunArtifacts {
    fs::path out;
    std::vector<std::pair<std::string, std::string>> stages;  // name, status
    std::vector<fs::path> files;

    void stage(const std::string& name, const std::string& status) {
        for (auto& [n, s] : stages)
            if (n == name) {
                s = status;
                return;
            }
        stages.emplace_back(name, status);
    }
    void emit(const std::string& name, std::string_view content) {
        lace::io::write_file(out / name, content);
        files.push_back(out / name);
    }
};

void write_manifest(RunArtifacts& art, const FlatConfig& cfg, bool failed) {
    Json m;
    m["format_version"] = 1;
    m["tool"] = "lace";
    Json jc;
    for (auto& [k, v] : cfg) jc[k] = v;
    m["config"] = std::move(jc);
    Json stages = Json::array();
    for (auto& [name, status] : art.stages) {
        Json s;
        s["name"] = name;
        s["status"] = status;
        stages.push_back(std::move(s));
    }
    m["stages"] = std::move(stages);
    Json outputs = Json::array();
    for (const auto& f : art.files) {
        Json o;
        o["file"] = f.filename().string();
        std::string bytes = lace::io::read_file(f);
        o["bytes"] = bytes.size();
        o["sha256"] = lace::io::sha256_hex(bytes);
        outputs.push_back(std::move(o));
    }
    m["outputs"] = std::move(outputs);
    m["status"] = failed ? "FAILED" : "ok";
    lace::io::write_file(art.out / "manifest.json", m.dump(1));
}

// Scoped exclusive lock file: one process per run directory.
class RunLock {
  public:
    explicit RunLock(const fs::path& dir) : path_(dir / ".lock") {
        int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (fd < 0)
            throw lace::Error("run directory is locked (remove " + path_.string() +
                              " if no other process owns it)");
        ::close(fd);
    }
    ~RunLock() {
        std::error_code ec;
        fs::remove(path_, ec);
    }

  private:
    fs::path path_;
};

std::string fmtd(double v) { return lace::io::fmt(v); }

int default_check_resolution(int d) {
    return d <= 2 ? 128 : d == 3 ? 48 : d == 4 ? 20 : 10;
}

int cmd_kernel_check(Config& cfg, const std::string& out_dir) {
    auto kernel = build_kernel(cfg);
    int res = int(cfg.integer("kernel.check_resolution", 0));
    if (res == 0) res = default_check_resolution(kernel->d());
    auto rep = lace::check_assumption_d(*kernel, res);
    Json j;
    j["kernel"] = lace::io::kernel_to_json(*kernel);
    j["sigma_sq"] = kernel->sigma_sq();
    j["beta"] = kernel->beta();
    j["report"] = lace::io::assumption_d_to_json(rep);
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        lace::io::write_file(fs::path(out_dir) / "kernel_report.json", j.dump(1));
    } else {
        std::cout << j.dump(1) << "\n";
    }
    return rep.all_pass() ? 0 : 1;
}

int cmd_run(Config& cfg, const fs::path& out_dir, int threads, std::uint64_t seed) {
    fs::create_directories(out_dir);
    RunLock lock(out_dir);
    RunArtifacts art;
    art.out = out_dir;

    std::string current_stage = "setup";
    try {
        lace::Cache cache(lace::Cache::default_dir());

        // ---- kernel
        current_stage = "kernel";
        auto kernel = build_kernel(cfg);
        {
            int res = int(cfg.integer("kernel.check_resolution", 0));
            if (res == 0) res = default_check_resolution(kernel->d());
            auto rep = lace::check_assumption_d(*kernel, res);
            Json j;
            j["kernel"] = lace::io::kernel_to_json(*kernel);
            j["sigma_sq"] = kernel->sigma_sq();
            j["beta"] = kernel->beta();
            j["report"] = lace::io::assumption_d_to_json(rep);
            art.emit("kernel_report.json", j.dump(1));
            art.stage("kernel", rep.all_pass() ? "ok" : "bounds-violated");
        }
        const int d = kernel->d();

        // ---- coefficients
        current_stage = "coefficients";
        ModelBundle mb = build_model(cfg, kernel, cache, threads, seed);
        art.stage("coefficients", mb.coeff_status);
        if (mb.op_estimates) {
            const auto& est_op = *mb.op_estimates;
            std::vector<std::string> header{"kind", "n"};
            for (int i = 1; i <= d; ++i) header.push_back("x_" + std::to_string(i));
            header.push_back("estimate");
            header.push_back("stderr");
            lace::io::Csv csv(header);
            auto rows_for = [&](const char* kind, const auto& counts, auto hat, auto se) {
                for (std::size_t n = 0; n < counts.size(); ++n)
                    for (auto& [x, c] : counts[n]) {
                        std::vector<std::string> row{kind, std::to_string(n)};
                        for (int v : x) row.push_back(std::to_string(v));
                        row.push_back(fmtd(hat(n, x)));
                        row.push_back(fmtd(se(n, x)));
                        csv.row(std::move(row));
                    }
            };
            rows_for("tau", est_op.tau_counts,
                     [&](std::size_t n, const lace::models::LatticeVec& x) {
                         return est_op.tau_hat(n, x);
                     },
                     [&](std::size_t n, const lace::models::LatticeVec& x) {
                         return est_op.tau_se(n, x);
                     });
            rows_for("rho0", est_op.rho_counts,
                     [&](std::size_t n, const lace::models::LatticeVec& x) {
                         return est_op.rho_hat(n, x);
                     },
                     [&](std::size_t n, const lace::models::LatticeVec& x) {
                         return est_op.rho_se(n, x);
                     });
            art.emit("op_estimates.csv", csv.dump());
        }

        std::size_t n_max = std::size_t(cfg.integer("run.n_max", 200));
        if (mb.provider->max_m() != lace::CoefficientProvider::unbounded())
            n_max = std::min(n_max, mb.provider->max_m());

        // ---- critical point first: z = auto resolves to z_c
        current_stage = "critical";
        const double tol = cfg.number("run.tol", 1e-10);
        const double K1 = cfg.number("hyp.K1", 10.0);
        lace::CriticalEstimate est = lace::solve_zc(*mb.provider, n_max, tol);
        const std::string zspec = cfg.str("run.z", "auto");
        const double z_run = zspec == "auto" ? est.z_c : cfg.number("run.z", 1.0);
        if (!(z_run > 0)) throw lace::UsageError("run.z must be positive");

        lace::CriticalTrace trace = lace::zn_sequence(*mb.provider, n_max, K1);
        lace::vn_sequence(*mb.provider, z_run, n_max, trace);

        // ---- recursion state
        current_stage = "recursion";
        std::vector<lace::KPoint> kset = build_kset(cfg, d);
        lace::EngineLimits limits;
        limits.kahan = cfg.boolean("run.kahan", false);
        lace::RecursionState state =
            lace::run_recursion(*mb.provider, z_run, n_max, kset, limits);
        lace::laplacian_recursion(*mb.provider, state);
        {
            std::vector<std::string> header{"n"};
            for (int i = 1; i <= d; ++i) header.push_back("k_" + std::to_string(i));
            header.push_back("f");
            lace::io::Csv csv(header);
            for (std::size_t n = 0; n <= n_max; ++n)
                for (std::size_t c = 0; c < state.ncols; ++c) {
                    std::vector<std::string> row{std::to_string(n)};
                    for (int i = 0; i < d; ++i)
                        row.push_back(fmtd(c < state.kset.size() ? state.kset[c].c[i] : 0.0));
                    row.push_back(fmtd(state.f(n, c)));
                    csv.row(std::move(row));
                }
            art.emit("state.csv", csv.dump());
        }
        art.stage("recursion", "ok");

        // ---- critical outputs
        current_stage = "critical";
        {
            // A/v limits want a run at z_c, which may differ from z_run.
            lace::RecursionState zc_state =
                lace::run_recursion(*mb.provider, est.z_c, n_max, {lace::KPoint::zero(d)});
            lace::estimate_A_v(*mb.provider, est.z_c, n_max, zc_state, est);
        }
        lace::SusceptibilityResult sus =
            lace::susceptibility(*mb.provider, z_run, std::min<std::size_t>(n_max, 4000));
        {
            Json j;
            j["z_run"] = z_run;
            j["z_c"] = est.z_c;
            j["z_c_iteration"] = est.z_c_iter;
            j["z_discrepancy"] = est.z_discrepancy;
            j["A_formula"] = est.A_formula;
            j["A_limit"] = est.A_limit;
            j["A_discrepancy"] = est.A_discrepancy;
            j["v_formula"] = est.v_formula;
            j["v_limit"] = est.v_limit;
            j["v_discrepancy"] = est.v_discrepancy;
            j["n_used"] = est.n_used;
            j["tail_g"] = est.tail_g;
            j["tail_A"] = est.tail_A;
            j["tail_v"] = est.tail_v;
            j["beta"] = kernel->beta();
            j["abs_zc_minus_1"] = std::fabs(est.z_c - 1.0);
            j["abs_A_minus_1"] = std::fabs(est.A_formula - 1.0);
            j["abs_v_minus_1"] = std::fabs(est.v_formula - 1.0);
            j["susceptibility_closed_form"] = sus.closed_form;
            j["susceptibility_partial"] = sus.partial.empty() ? 0.0 : sus.partial.back();
            j["susceptibility_divergent"] = sus.divergent;
            j["intervals_nested"] = trace.intervals_nested();
            art.emit("critical.json", j.dump(1));
        }
        {
            lace::io::Csv csv({"n", "z_n", "v_n", "b_n", "c_n", "zeta_n"});
            for (std::size_t n = 0; n <= n_max; ++n)
                csv.row({std::to_string(n), fmtd(trace.z_seq[n]), fmtd(trace.v_seq[n]),
                         fmtd(trace.b_seq[n]), fmtd(trace.c_seq[n]), fmtd(trace.zeta_seq[n])});
            art.emit("trace.csv", csv.dump());
        }
        art.stage("critical", "ok");

        // ---- hypotheses (center of I_n plus both endpoints)
        current_stage = "hypotheses";
        {
            Json j;
            if (d <= 4) {
                j["skipped"] = "no admissible hypothesis constants for d <= 4";
            } else {
                auto defaults = lace::HypothesisConstants::defaults_for(d);
                lace::HypothesisConstants consts(
                    d, cfg.number("hyp.gamma", defaults.gamma),
                    cfg.number("hyp.delta", defaults.delta),
                    cfg.number("hyp.rho", defaults.rho),
                    cfg.number("hyp.epsilon_prime", defaults.epsilon_prime), K1,
                    cfg.number("hyp.K2", 10.0), cfg.number("hyp.K3", 10.0),
                    cfg.number("hyp.K4", 100.0), cfg.number("hyp.K5", 100.0));
                const double center = trace.z_seq[n_max];
                const double hw = trace.half_width[n_max];
                auto run_at = [&](double z) {
                    lace::RecursionState st = lace::run_recursion(*mb.provider, z, n_max, kset);
                    lace::CriticalTrace tr = lace::zn_sequence(*mb.provider, n_max, K1);
                    lace::vn_sequence(*mb.provider, z, n_max, tr);
                    lace::RTrace rt = lace::extract_r_s(st, tr);
                    lace::HypothesisReport rep =
                        lace::check_hypotheses(st, tr, rt, consts, *kernel);
                    Json out;
                    auto put = [&](const char* name, const lace::HypothesisCheck& chk) {
                        Json h;
                        h["pass"] = chk.pass;
                        h["worst_margin"] = chk.worst.margin;
                        h["worst_j"] = chk.worst.j;
                        h["worst_k_index"] = chk.worst.k_index;
                        h["worst_measured"] = chk.worst.measured;
                        h["worst_bound"] = chk.worst.bound;
                        out[name] = std::move(h);
                    };
                    put("H1", rep.h1);
                    put("H2", rep.h2);
                    put("H3_r0", rep.h3_r0);
                    put("H3_rk", rep.h3_rk);
                    put("H4_f", rep.h4_f);
                    put("H4_diff", rep.h4_diff);
                    out["all_pass"] = rep.all_pass();
                    out["warnings"] = rep.warnings;
                    return out;
                };
                j["z_center"] = center;
                j["half_width"] = hw;
                j["center"] = run_at(center);
                j["lower"] = run_at(center - hw);
                j["upper"] = run_at(center + hw);
                Json cj;
                cj["gamma"] = consts.gamma;
                cj["delta"] = consts.delta;
                cj["rho"] = consts.rho;
                cj["epsilon_prime"] = consts.epsilon_prime;
                cj["K1"] = consts.K1;
                cj["K2"] = consts.K2;
                cj["K3"] = consts.K3;
                cj["K4"] = consts.K4;
                cj["K5"] = consts.K5;
                j["constants"] = std::move(cj);
            }
            art.emit("hypotheses.json", j.dump(1));
            if (d > 4 && cfg.boolean("hyp.margins_csv", false)) {
                auto defaults = lace::HypothesisConstants::defaults_for(d);
                lace::HypothesisConstants consts(
                    d, cfg.number("hyp.gamma", defaults.gamma),
                    cfg.number("hyp.delta", defaults.delta),
                    cfg.number("hyp.rho", defaults.rho),
                    cfg.number("hyp.epsilon_prime", defaults.epsilon_prime), K1,
                    cfg.number("hyp.K2", 10.0), cfg.number("hyp.K3", 10.0),
                    cfg.number("hyp.K4", 100.0), cfg.number("hyp.K5", 100.0));
                lace::CriticalTrace tr = lace::zn_sequence(*mb.provider, n_max, K1);
                const double zc_center = tr.z_seq[n_max];
                lace::vn_sequence(*mb.provider, zc_center, n_max, tr);
                lace::RecursionState st =
                    lace::run_recursion(*mb.provider, zc_center, n_max, kset);
                lace::RTrace rt = lace::extract_r_s(st, tr);
                lace::HypothesisReport rep =
                    lace::check_hypotheses(st, tr, rt, consts, *kernel);
                lace::io::Csv csv({"hypothesis", "j", "k_index", "measured", "bound", "margin"});
                auto dump_cells = [&](const char* name, const lace::HypothesisCheck& chk) {
                    for (const auto& cell : chk.cells)
                        csv.row({name, std::to_string(cell.j), std::to_string(cell.k_index),
                                 fmtd(cell.measured), fmtd(cell.bound), fmtd(cell.margin)});
                };
                dump_cells("H1", rep.h1);
                dump_cells("H2", rep.h2);
                dump_cells("H3_r0", rep.h3_r0);
                dump_cells("H3_rk", rep.h3_rk);
                dump_cells("H4_f", rep.h4_f);
                dump_cells("H4_diff", rep.h4_diff);
                art.emit("margins.csv", csv.dump());
            }
            art.stage("hypotheses", d <= 4 ? "skipped" : "ok");
        }

        // ---- clt tables
        current_stage = "clt";
        {
            std::vector<std::size_t> powers;
            for (std::size_t n = 8; n <= n_max; n *= 2) powers.push_back(n);
            lace::io::Csv csv({"table", "n", "k_or_x", "value", "reference", "deviation"});

            const double A = est.A_formula, v = est.v_formula;
            if (!powers.empty()) {
                std::vector<std::vector<double>> klist;
                const double kmax = cfg.number("clt.kmax", 2.0);
                for (double r : {0.25, 0.5, 0.75, 1.0}) {
                    std::vector<double> k(d, 0.0);
                    k[0] = kmax * r;
                    klist.push_back(std::move(k));
                }
                auto pks = lace::profile_kset(klist, powers, v, *kernel);
                if (!pks.empty()) {
                    lace::RecursionState pst =
                        lace::run_recursion(*mb.provider, z_run, n_max, pks);
                    auto rows = lace::gaussian_profile_check(pst, A, v, *kernel, klist, powers);
                    for (auto& row : rows) {
                        if (row.skipped) continue;
                        csv.row({"profile", std::to_string(row.n), fmtd(row.k[0]), fmtd(row.f),
                                 fmtd(row.gaussian), fmtd(row.err)});
                    }
                }
            }
            {
                std::vector<std::size_t> ns = powers;
                if (ns.empty())
                    for (std::size_t n = 1; n <= n_max; ++n) ns.push_back(n);
                auto rows = lace::diffusive_check(state, est.v_formula, *kernel, ns);
                for (auto& row : rows)
                    csv.row({"diffusive", std::to_string(row.n), "0", fmtd(row.ratio), "1",
                             fmtd(row.dev)});
            }
            {
                std::vector<std::size_t> ns;
                for (std::size_t n : powers)
                    if (n <= 128) ns.push_back(n);
                if (!ns.empty()) {
                    lace::QuadratureSpec quad;
                    const std::string qkind = cfg.str("quadrature.kind", "auto");
                    quad.kind = (qkind == "tensor" || (qkind == "auto" && d <= 3))
                                    ? lace::QuadratureSpec::Kind::Tensor
                                    : lace::QuadratureSpec::Kind::Qmc;
                    quad.resolution = int(cfg.integer("quadrature.resolution", 64));
                    quad.node_count = int(cfg.integer("quadrature.node_count", 1 << 14));
                    quad.peak_resolution = int(cfg.integer("quadrature.peak_resolution", 12));
                    quad.seed = std::uint64_t(cfg.integer("quadrature.seed", 0));
                    auto rows = lace::l1_decay_check(*kernel, state, ns, quad);
                    for (auto& row : rows)
                        csv.row({"l1", std::to_string(row.n), "0", fmtd(row.norm),
                                 fmtd(kernel->beta() * std::pow(double(row.n), -0.5 * d)),
                                 fmtd(row.normalised)});
                }
            }
            art.emit("clt.csv", csv.dump());

            // Local CLT in transform mode for low dimension.
            if (d <= 3 && n_max >= 64) {
                lace::LocalCltConfig lcfg;
                lcfg.exponent = cfg.number("clt.rn_exponent", 0.25);
                lace::io::Csv lcsv({"n", "R_n", "x", "lhs", "rhs", "ratio"});
                for (std::size_t n : {n_max / 4, n_max}) {
                    const std::size_t R = lcfg.rn(n, 0);
                    lace::XSpaceTable tab =
                        lace::inverse_ft_pn(*mb.provider, z_run, n, int(R) + 4);
                    auto rows = lace::local_clt_check(tab, lcfg, A, v, *kernel);
                    for (auto& row : rows)
                        lcsv.row({std::to_string(row.n), std::to_string(row.Rn), "0",
                                  fmtd(row.lhs), fmtd(row.rhs), fmtd(row.ratio)});
                }
                art.emit("lclt.csv", lcsv.dump());
            }
            art.stage("clt", "ok");
        }

        write_manifest(art, cfg.raw(), false);
        return 0;
    } catch (const lace::UsageError& e) {
        art.stage(current_stage, std::string("failed: ") + e.what());
        write_manifest(art, cfg.raw(), true);
        std::cerr << "[stage:" << current_stage << "] usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        art.stage(current_stage, std::string("failed: ") + e.what());
        write_manifest(art, cfg.raw(), true);
        std::cerr << "[stage:" << current_stage << "] error: " << e.what() << "\n";
        return 3;
    }
}

int cmd_cache_list(const fs::path& dir) {
    lace::Cache cache(dir);
    std::cout << "hash,kind,bytes\n";
    for (auto& e : cache.list()) std::cout << e.hash << "," << e.kind << "," << e.bytes << "\n";
    return 0;
}

int cmd_cache_purge(const fs::path& dir, const std::string& hash, bool all) {
    lace::Cache cache(dir);
    std::size_t removed = all ? cache.purge_all() : cache.purge(hash);
    if (!all && removed == 0)
        std::cout << "no cache entry with hash " << hash << " (nothing to do)\n";
    else
        std::cout << "removed " << removed << " entr" << (removed == 1 ? "y" : "ies") << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"lace expansion recursion engine"};
    app.require_subcommand(1);

    std::string config_path, out_dir, cache_dir, purge_hash;
    long seed = -1;
    int threads = 1;
    bool purge_all = false;
    std::string simd_mode = "auto";

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "configuration file (flat keys or JSON)")
            ->required();
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--seed", seed, "override the config seed");
        sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
        sub->add_option("--simd", simd_mode, "simd mode: auto|scalar|avx2");
    };

    CLI::App* check = app.add_subcommand("kernel-check", "validate a step kernel");
    add_common(check);
    CLI::App* run = app.add_subcommand("run", "full pipeline into an artifact directory");
    add_common(run);
    CLI::App* cachecmd = app.add_subcommand("cache", "coefficient cache maintenance");
    cachecmd->add_option("--dir", cache_dir, "cache directory (default LACE_CACHE_DIR)");
    CLI::App* clist = cachecmd->add_subcommand("list", "list entries");
    clist->fallthrough();
    CLI::App* cpurge = cachecmd->add_subcommand("purge", "remove entries");
    cpurge->fallthrough();
    cpurge->add_option("--hash", purge_hash, "entry hash to remove");
    cpurge->add_flag("--all", purge_all, "remove every entry");
    cachecmd->require_subcommand(1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (simd_mode == "scalar")
            lace::simd::set_mode(lace::simd::Mode::Scalar);
        else if (simd_mode == "avx2")
            lace::simd::set_mode(lace::simd::Mode::Avx2);
        else if (simd_mode != "auto")
            throw lace::UsageError("--simd: expected auto|scalar|avx2");

        fs::path cdir = cache_dir.empty() ? lace::Cache::default_dir() : fs::path(cache_dir);
        if (clist->parsed()) return cmd_cache_list(cdir);
        if (cpurge->parsed()) {
            if (!purge_all && purge_hash.empty())
                throw lace::UsageError("cache purge: pass --hash H or --all");
            return cmd_cache_purge(cdir, purge_hash, purge_all);
        }

        Config cfg(parse_config_file(config_path));
        if (seed >= 0) cfg.set("seed", std::to_string(seed));
        cfg.set("threads", std::to_string(threads));
        const std::uint64_t eff_seed = std::uint64_t(cfg.integer("seed", 0));

        if (check->parsed()) return cmd_kernel_check(cfg, out_dir);
        if (run->parsed()) {
            if (out_dir.empty()) throw lace::UsageError("run: --out DIR is required");
            return cmd_run(cfg, out_dir, threads, eff_seed);
        }
    } catch (const lace::UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
