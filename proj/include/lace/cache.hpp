#pragma once

// Content-addressed coefficient cache.  An entry is a JSON file named by
// the hash of its key fields; the key is re-hashed on load, so a mismatch
// is a miss, never a silent reuse.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "lace/io.hpp"
#include "lace/models.hpp"

namespace lace {

constexpr int kCacheFormatVersion = 1;

struct CacheEntry {
    std::string hash;
    std::string kind;
    std::filesystem::path file;
    std::uintmax_t bytes = 0;
};

class Cache {
  public:
    explicit Cache(std::filesystem::path dir);
    static std::filesystem::path default_dir();  // LACE_CACHE_DIR or ./.lace-cache

    const std::filesystem::path& dir() const { return dir_; }

    // key_fields are hashed; the payload rides along.
    std::string store(const std::string& kind, const io::Json& key_fields,
                      const io::Json& payload);
    std::optional<io::Json> load(const std::string& kind, const io::Json& key_fields) const;
    static std::string key_hash(const std::string& kind, const io::Json& key_fields);

    std::vector<CacheEntry> list() const;
    std::size_t purge(const std::string& hash);  // returns number removed
    std::size_t purge_all();

  private:
    std::filesystem::path dir_;
};

// Payload codecs.
io::Json saw_tables_to_json(const models::SawTables& t);
models::SawTables saw_tables_from_json(const io::Json& j, KernelPtr kernel);
io::Json pi_tables_to_json(const models::PiTables& t);
models::PiTables pi_tables_from_json(const io::Json& j, KernelPtr kernel);
io::Json op_estimates_to_json(const models::OpEstimates& est);
models::OpEstimates op_estimates_from_json(const io::Json& j, KernelPtr kernel);

}  // namespace lace
