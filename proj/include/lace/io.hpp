#pragma once

// Byte-stable output helpers: shortest round-trip decimals, ordered JSON,
// content hashing.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lace/kernel.hpp"

namespace lace::io {

using Json = nlohmann::ordered_json;

std::string fmt(double v);  // shortest decimal that round-trips

std::string sha256_hex(std::string_view data);

void write_file(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

// Minimal CSV emitter; all numeric cells go through fmt().
class Csv {
  public:
    explicit Csv(std::vector<std::string> header) : header_(std::move(header)) {}
    void row(std::vector<std::string> cells);
    std::string dump() const;

  private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

Json kernel_to_json(const StepKernel& kernel);
Json assumption_d_to_json(const AssumptionDReport& rep);

}  // namespace lace::io
