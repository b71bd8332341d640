#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace fakerair {

// FNV-1a, 64-bit. Used for config hashes and output checksums.
constexpr uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr uint64_t kFnvPrime = 0x100000001b3ULL;

inline uint64_t fnv1a(std::span<const unsigned char> bytes, uint64_t h = kFnvOffset) {
    for (unsigned char b : bytes) {
        h ^= b;
        h *= kFnvPrime;
    }
    return h;
}

inline uint64_t fnv1a(std::string_view text, uint64_t h = kFnvOffset) {
    for (char c : text) {
        h ^= static_cast<unsigned char>(c);
        h *= kFnvPrime;
    }
    return h;
}

std::string hash_hex(uint64_t h);

// Streams the file through FNV-1a; throws DataError if unreadable.
uint64_t file_checksum(const std::filesystem::path& path);

}  // namespace fakerair
