#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "fakerair/grid.hpp"

namespace fakerair {

// FKRF: little-endian gridded sequence container.
//
//   offset  size  field
//   0       4     magic "FKRF"
//   4       2     format version (u16, currently 1)
//   6       4     nx (u32)
//   10      4     ny (u32)
//   14      4     n_vars (u32)
//   18      4     n_times (u32)
//   22      8     time_index of the first frame (i64)
//   30      ...   payload: n_times frames, each [var][y][x], f32
//
// Values are stored as f32 (the on-disk precision policy); in-memory math
// stays double. An empty sequence is a bare header with n_times = 0.

struct FieldSequence {
    int nx = 0;
    int ny = 0;
    int n_vars = 0;
    int64_t base_time_index = 0;
    // frames[t] has time_index = base_time_index + t
    std::vector<GridField> frames;

    GridField& at(int t) { return frames.at(static_cast<size_t>(t)); }
    const GridField& at(int t) const { return frames.at(static_cast<size_t>(t)); }
    int size() const { return static_cast<int>(frames.size()); }
};

// Writes the sequence; frames must share one shape and have consecutive
// time indices. Throws DataError on shape mismatch, std::system_error-free:
// IO failures surface as DataError with the path.
void write_fkrf(const std::filesystem::path& path, const FieldSequence& seq);

// Reads and validates a sequence. Malformed input throws DataError naming
// the path and the byte offset where parsing failed.
FieldSequence read_fkrf(const std::filesystem::path& path);

// f32 round-trip applied in memory: the value a double becomes after a
// save/load cycle. Used when a trainer must hand out bytes identical to a
// checkpoint it never wrote to disk.
inline double f32_roundtrip(double v) { return static_cast<double>(static_cast<float>(v)); }

}  // namespace fakerair
