#include "lace/cache.hpp"

#include <algorithm>
#include <cstdlib>

#include "lace/errors.hpp"

namespace lace {

namespace fs = std::filesystem;

Cache::Cache(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

fs::path Cache::default_dir() {
    if (const char* env = std::getenv("LACE_CACHE_DIR"); env && *env) return fs::path(env);
    return fs::path(".lace-cache");
}

std::string Cache::key_hash(const std::string& kind, const io::Json& key_fields) {
    io::Json key;
    key["kind"] = kind;
    key["fields"] = key_fields;
    return io::sha256_hex(key.dump());
}

std::string Cache::store(const std::string& kind, const io::Json& key_fields,
                         const io::Json& payload) {
    const std::string hash = key_hash(kind, key_fields);
    io::Json entry;
    entry["format_version"] = kCacheFormatVersion;
    entry["kind"] = kind;
    entry["key"] = key_fields;
    entry["payload"] = payload;
    io::write_file(dir_ / (hash + ".json"), entry.dump(1));
    return hash;
}

std::optional<io::Json> Cache::load(const std::string& kind, const io::Json& key_fields) const {
    const std::string hash = key_hash(kind, key_fields);
    const fs::path file = dir_ / (hash + ".json");
    if (!fs::exists(file)) return std::nullopt;
    io::Json entry;
    try {
        entry = io::Json::parse(io::read_file(file));
    } catch (...) {
        return std::nullopt;  // unparsable entry is a miss
    }
    if (!entry.contains("format_version") ||
        entry["format_version"].get<int>() != kCacheFormatVersion)
        return std::nullopt;
    if (!entry.contains("kind") || entry["kind"].get<std::string>() != kind) return std::nullopt;
    // Re-derive: stored key must hash to the file name.
    if (!entry.contains("key") || key_hash(kind, entry["key"]) != hash) return std::nullopt;
    if (!entry.contains("payload")) return std::nullopt;
    return entry["payload"];
}

std::vector<CacheEntry> Cache::list() const {
    std::vector<CacheEntry> out;
    if (!fs::exists(dir_)) return out;
    for (const auto& de : fs::directory_iterator(dir_)) {
        if (!de.is_regular_file() || de.path().extension() != ".json") continue;
        CacheEntry e;
        e.hash = de.path().stem().string();
        e.file = de.path();
        e.bytes = de.file_size();
        try {
            io::Json j = io::Json::parse(io::read_file(de.path()));
            if (j.contains("kind")) e.kind = j["kind"].get<std::string>();
        } catch (...) {
            e.kind = "(unreadable)";
        }
        out.push_back(std::move(e));
    }
    std::sort(out.begin(), out.end(),
              [](const CacheEntry& a, const CacheEntry& b) { return a.hash < b.hash; });
    return out;
}

std::size_t Cache::purge(const std::string& hash) {
    const fs::path file = dir_ / (hash + ".json");
    if (!fs::exists(file)) return 0;
    fs::remove(file);
    return 1;
}

std::size_t Cache::purge_all() {
    std::size_t n = 0;
    for (const auto& e : list()) n += purge(e.hash);
    return n;
}

namespace {

io::Json int_maps_to_json(const std::vector<std::map<models::LatticeVec, std::int64_t>>& maps) {
    io::Json out = io::Json::array();
    for (const auto& m : maps) {
        io::Json level = io::Json::array();
        for (const auto& [x, v] : m) {
            io::Json row = io::Json::array();
            for (int c : x) row.push_back(c);
            row.push_back(v);
            level.push_back(std::move(row));
        }
        out.push_back(std::move(level));
    }
    return out;
}

io::Json dbl_maps_to_json(const std::vector<std::map<models::LatticeVec, double>>& maps) {
    io::Json out = io::Json::array();
    for (const auto& m : maps) {
        io::Json level = io::Json::array();
        for (const auto& [x, v] : m) {
            io::Json row = io::Json::array();
            for (int c : x) row.push_back(c);
            row.push_back(v);
            level.push_back(std::move(row));
        }
        out.push_back(std::move(level));
    }
    return out;
}

io::Json u64_maps_to_json(const std::vector<std::map<models::LatticeVec, std::uint64_t>>& maps) {
    io::Json out = io::Json::array();
    for (const auto& m : maps) {
        io::Json level = io::Json::array();
        for (const auto& [x, v] : m) {
            io::Json row = io::Json::array();
            for (int c : x) row.push_back(c);
            row.push_back(v);
            level.push_back(std::move(row));
        }
        out.push_back(std::move(level));
    }
    return out;
}

template <class V>
std::vector<std::map<models::LatticeVec, V>> maps_from_json(const io::Json& j, int d) {
    std::vector<std::map<models::LatticeVec, V>> out(j.size());
    for (std::size_t n = 0; n < j.size(); ++n) {
        for (const auto& row : j[n]) {
            models::LatticeVec x(d);
            for (int i = 0; i < d; ++i) x[i] = row[i].get<int>();
            out[n][std::move(x)] = row[d].get<V>();
        }
    }
    return out;
}

}  // namespace

io::Json saw_tables_to_json(const models::SawTables& t) {
    io::Json j;
    j["n_max"] = t.n_max;
    j["exact"] = t.exact;
    if (t.exact)
        j["counts"] = int_maps_to_json(t.counts);
    else
        j["values"] = dbl_maps_to_json(t.values);
    return j;
}

models::SawTables saw_tables_from_json(const io::Json& j, KernelPtr kernel) {
    models::SawTables t;
    t.n_max = j["n_max"].get<std::size_t>();
    t.exact = j["exact"].get<bool>();
    const int d = kernel->d();
    t.kernel = std::move(kernel);
    if (t.exact)
        t.counts = maps_from_json<std::int64_t>(j["counts"], d);
    else
        t.values = maps_from_json<double>(j["values"], d);
    return t;
}

io::Json pi_tables_to_json(const models::PiTables& t) {
    io::Json j;
    j["n_max"] = t.n_max;
    j["exact"] = t.exact;
    j["method"] = t.method;
    if (t.exact)
        j["counts"] = int_maps_to_json(t.counts);
    else
        j["values"] = dbl_maps_to_json(t.values);
    return j;
}

models::PiTables pi_tables_from_json(const io::Json& j, KernelPtr kernel) {
    models::PiTables t;
    t.n_max = j["n_max"].get<std::size_t>();
    t.exact = j["exact"].get<bool>();
    t.method = j["method"].get<std::string>();
    const int d = kernel->d();
    t.kernel = std::move(kernel);
    if (t.exact)
        t.counts = maps_from_json<std::int64_t>(j["counts"], d);
    else
        t.values = maps_from_json<double>(j["values"], d);
    return t;
}

io::Json op_estimates_to_json(const models::OpEstimates& est) {
    io::Json j;
    j["z"] = est.z;
    j["seed"] = est.seed;
    j["samples"] = est.samples;
    j["n_max"] = est.n_max;
    j["rho_m_max"] = est.rho_m_max;
    j["tau"] = u64_maps_to_json(est.tau_counts);
    j["rho"] = u64_maps_to_json(est.rho_counts);
    return j;
}

models::OpEstimates op_estimates_from_json(const io::Json& j, KernelPtr kernel) {
    models::OpEstimates est;
    est.z = j["z"].get<double>();
    est.seed = j["seed"].get<std::uint64_t>();
    est.samples = j["samples"].get<std::size_t>();
    est.n_max = j["n_max"].get<std::size_t>();
    est.rho_m_max = j["rho_m_max"].get<std::size_t>();
    const int d = kernel->d();
    est.kernel = std::move(kernel);
    est.tau_counts = maps_from_json<std::uint64_t>(j["tau"], d);
    est.rho_counts = maps_from_json<std::uint64_t>(j["rho"], d);
    return est;
}

}  // namespace lace
