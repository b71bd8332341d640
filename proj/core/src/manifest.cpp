#include "fakerair/manifest.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "fakerair/checksum.hpp"
#include "fakerair/errors.hpp"

namespace fakerair {

using ordered_json = nlohmann::ordered_json;

void Manifest::save(const std::filesystem::path& path) const {
    ordered_json j;
    j["command"] = command;
    j["version"] = version;
    j["seed"] = seed;
    j["config_hash"] = config_hash_hex;
    j["config"] = config_text;
    j["outputs"] = outputs;
    j["checksums"] = checksums;
    j["timings_ms"] = timings_ms;
    if (!extra.empty()) j["extra"] = extra;
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write manifest: " + path.string());
    out << j.dump(2) << "\n";
    if (!out) throw DataError("write failure: " + path.string());
}

Manifest Manifest::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open manifest: " + path.string());
    ordered_json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": invalid JSON: " + e.what());
    }
    Manifest m;
    try {
        m.command = j.value("command", "");
        m.version = j.value("version", "");
        m.seed = j.value("seed", uint64_t{0});
        m.config_hash_hex = j.value("config_hash", "");
        m.config_text = j.value("config", "");
        if (j.contains("outputs")) m.outputs = j["outputs"].get<std::map<std::string, std::string>>();
        if (j.contains("checksums"))
            m.checksums = j["checksums"].get<std::map<std::string, std::string>>();
        if (j.contains("timings_ms"))
            m.timings_ms = j["timings_ms"].get<std::map<std::string, long long>>();
        if (j.contains("extra")) m.extra = j["extra"].get<std::map<std::string, std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": malformed manifest: " + e.what());
    }
    return m;
}

std::string file_checksum_hex(const std::filesystem::path& path) {
    return hash_hex(file_checksum(path));
}

}  // namespace fakerair
