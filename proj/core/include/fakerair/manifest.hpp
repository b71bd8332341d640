#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

namespace fakerair {

// manifest.json written next to every command's outputs. Paths are stored
// relative to the manifest's directory so output trees relocate cleanly.
struct Manifest {
    std::string command;                    // datagen | train-sft | ...
    std::string config_text;                // full canonical config snapshot
    std::string config_hash_hex;            // identity hash (data + model keys)
    uint64_t seed = 0;
    std::string version;                    // library version stamp
    std::map<std::string, std::string> checksums;  // relative path -> fnv1a hex
    std::map<std::string, std::string> outputs;    // logical name -> relative path
    std::map<std::string, long long> timings_ms;   // stage -> wall clock
    std::map<std::string, std::string> extra;      // free-form annotations

    void save(const std::filesystem::path& path) const;
    static Manifest load(const std::filesystem::path& path);
};

// FNV-1a of a file's bytes as a fixed-width hex string.
std::string file_checksum_hex(const std::filesystem::path& path);

}  // namespace fakerair
