#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fakerair/field_io.hpp"
#include "fakerair/grid.hpp"

namespace fakerair {

struct Station {
    int id = 0;
    double x = 0.0;  // cell coordinates (may be fractional)
    double y = 0.0;
};

// One observed sample. variable is a PM channel (kPm25 / kPm10).
struct StationSample {
    int station_id = 0;
    int64_t time_index = 0;
    int variable = kPm25;
    double value = 0.0;
};

struct StationSet {
    std::vector<Station> stations;
    std::vector<StationSample> samples;  // sorted by (time, station, variable)
};

// CSV with header: station_id,x,y,time_index,variable,value
// variable is written as pm25 / pm10. Station coordinates repeat on every
// row, which keeps the file self-contained.
void write_station_csv(const std::filesystem::path& path, const StationSet& set);
StationSet read_station_csv(const std::filesystem::path& path);

// Precomputed IDW interpolation weights: for each grid cell, the normalized
// weight of every station. Stations are static so this is built once per
// split and reused across all frames.
class IdwInterpolator {
public:
    // power is the IDW exponent p; weight = 1 / d^p with d the distance from
    // cell center to station. A station within 1e-9 cells of a cell center
    // takes the cell over entirely (exactness at station sites).
    IdwInterpolator(int nx, int ny, const std::vector<Station>& stations, double power);

    // values[s] is the reading of stations[s]; returns the interpolated grid
    // in row-major [y][x] order.
    void interpolate(const std::vector<double>& values, std::vector<double>& out) const;

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    int station_count() const { return n_stations_; }

private:
    int nx_;
    int ny_;
    int n_stations_;
    std::vector<double> weights_;  // [cell][station], rows sum to 1
};

// Builds the OBS field sequence for one split: PM channels interpolated from
// station samples, wind channels copied from the truth frames (wind is the
// known forcing, not an observed quantity). Throws DataError if any
// (time, station, pm-variable) sample is missing.
FieldSequence interpolate_observations(const FieldSequence& truth,
                                       const StationSet& set,
                                       double idw_power);

}  // namespace fakerair
