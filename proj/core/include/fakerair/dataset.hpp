#pragma once

#include <filesystem>
#include <string>

#include "fakerair/config.hpp"
#include "fakerair/field_io.hpp"
#include "fakerair/stations.hpp"

namespace fakerair {

struct Split {
    std::string name;        // train | val | test
    FieldSequence truth;     // dense model fields (the CMAQ stand-in)
    StationSet stations;     // sparse observations of the same period
};

struct Dataset {
    Split train;
    Split val;
    Split test;
    uint64_t config_hash = 0;
};

// Runs the simulator for the configured number of steps (after spin-up),
// samples stations with observation noise, and splits chronologically by
// train_frac / val_frac. Fully determined by cfg + cfg.seed.
Dataset generate_dataset(const RunConfig& cfg);

// Layout under root:
//   root/{train,val,test}/fields.fkrf
//   root/{train,val,test}/stations.csv
//   root/splits.json         (sizes, time ranges, config hash)
void write_dataset(const std::filesystem::path& root, const Dataset& ds);

// Loads and cross-checks a previously written dataset. expected_hash = 0
// skips the hash check (used by tools that take the dataset as ground
// truth); otherwise a mismatch throws DataError showing both hashes.
Dataset load_dataset(const std::filesystem::path& root, uint64_t expected_hash);

// Station-interpolated OBS view of a split (PM via IDW from the sampled
// stations, wind copied from the forcing). The "obs" training source trains
// on this view alone; "fused" adds the dense truth fields as extra pairs.
FieldSequence obs_view(const Split& split, double idw_power);

}  // namespace fakerair
