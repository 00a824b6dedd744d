#include "refsim/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace refsim {

std::string format_g12(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_csv: cannot open '" + path + "'");
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out << ',';
        out << header[i];
    }
    out << '\n';
    for (const auto& row : rows) {
        if (row.size() != header.size()) throw std::runtime_error("write_csv: row width mismatch");
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            out << row[i];
        }
        out << '\n';
    }
}

void write_json_file(const std::string& path, const nlohmann::json& doc) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_json_file: cannot open '" + path + "'");
    out << doc.dump(2) << '\n';
}

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string config_hash_hex(const nlohmann::json& doc, std::uint64_t seed) {
    const std::string canonical = doc.dump() + "#" + std::to_string(seed);
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(canonical)));
    return buf;
}

nlohmann::json RunRecord::to_json() const {
    nlohmann::json j;
    j["name"] = name;
    j["config_hash"] = config_hash;
    j["version"] = kVersion;
    j["seed"] = seed;
    j["artifacts"] = artifacts;
    j["summary"] = summary;
    return j;
}

std::string write_run_record(const std::string& out_dir, const RunRecord& record) {
    std::filesystem::create_directories(out_dir);
    const std::string path = (std::filesystem::path(out_dir) / (record.name + ".json")).string();
    write_json_file(path, record.to_json());
    return path;
}

}  // namespace refsim
