// Deterministic artifact emission: CSV with fixed 12-significant-digit
// formatting, JSON summaries, and the run record tying outputs to a config
// hash and seed. No timestamps anywhere, so identical runs emit identical
// bytes.

#pragma once

#include "refsim/types.hpp"

#include "json.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace refsim {

inline constexpr const char* kVersion = "0.1.0";

std::string format_g12(double v);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

void write_json_file(const std::string& path, const nlohmann::json& doc);

std::uint64_t fnv1a64(std::string_view data);
std::string config_hash_hex(const nlohmann::json& doc, std::uint64_t seed);

struct RunRecord {
    std::string name;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::vector<std::string> artifacts;
    nlohmann::json summary;

    nlohmann::json to_json() const;
};

// Writes <out_dir>/<name>.json and returns its path.
std::string write_run_record(const std::string& out_dir, const RunRecord& record);

}  // namespace refsim
