#include "fakerair/stations.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "fakerair/errors.hpp"

namespace fakerair {
namespace {

constexpr const char* kHeader = "station_id,x,y,time_index,variable,value";

std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

int parse_variable(const std::string& s, const std::string& where) {
    if (s == "pm25") return kPm25;
    if (s == "pm10") return kPm10;
    throw DataError(where + ": unknown variable '" + s + "' (expected pm25 or pm10)");
}

}  // namespace

void write_station_csv(const std::filesystem::path& path, const StationSet& set) {
    std::map<int, const Station*> by_id;
    for (const Station& s : set.stations) by_id[s.id] = &s;

    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out << kHeader << "\n";
    for (const StationSample& s : set.samples) {
        const auto it = by_id.find(s.station_id);
        if (it == by_id.end())
            throw DataError("sample references unknown station id " +
                            std::to_string(s.station_id));
        out << s.station_id << "," << fmt_g(it->second->x) << "," << fmt_g(it->second->y) << ","
            << s.time_index << "," << (s.variable == kPm25 ? "pm25" : "pm10") << ","
            << fmt_g(s.value) << "\n";
    }
    if (!out) throw DataError("write failure: " + path.string());
}

StationSet read_station_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
    // Tolerate a trailing \r from CRLF writers.
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kHeader)
        throw DataError(path.string() + ": bad header '" + line + "', expected '" + kHeader + "'");

    StationSet set;
    std::map<int, Station> stations;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::string where = path.string() + ":" + std::to_string(lineno);
        std::stringstream ss(line);
        std::string field;
        std::vector<std::string> parts;
        while (std::getline(ss, field, ',')) parts.push_back(field);
        if (parts.size() != 6)
            throw DataError(where + ": expected 6 fields, got " + std::to_string(parts.size()));
        try {
            StationSample sample;
            sample.station_id = std::stoi(parts[0]);
            const double x = std::stod(parts[1]);
            const double y = std::stod(parts[2]);
            sample.time_index = std::stoll(parts[3]);
            sample.variable = parse_variable(parts[4], where);
            sample.value = std::stod(parts[5]);
            if (!std::isfinite(sample.value) || sample.value < 0.0)
                throw DataError(where + ": invalid concentration '" + parts[5] + "'");
            auto [it, inserted] = stations.try_emplace(sample.station_id,
                                                       Station{sample.station_id, x, y});
            if (!inserted && (it->second.x != x || it->second.y != y))
                throw DataError(where + ": station " + std::to_string(sample.station_id) +
                                " coordinates differ from an earlier row");
            set.samples.push_back(sample);
        } catch (const DataError&) {
            throw;
        } catch (const std::exception&) {
            throw DataError(where + ": malformed row '" + line + "'");
        }
    }
    set.stations.reserve(stations.size());
    for (const auto& [id, st] : stations) set.stations.push_back(st);
    std::sort(set.samples.begin(), set.samples.end(), [](const auto& a, const auto& b) {
        return std::tie(a.time_index, a.station_id, a.variable) <
               std::tie(b.time_index, b.station_id, b.variable);
    });
    return set;
}

IdwInterpolator::IdwInterpolator(int nx, int ny, const std::vector<Station>& stations,
                                 double power)
    : nx_(nx), ny_(ny), n_stations_(static_cast<int>(stations.size())) {
    if (n_stations_ == 0) throw DataError("IDW interpolation needs at least one station");
    weights_.assign(static_cast<size_t>(nx_) * ny_ * n_stations_, 0.0);
    for (int y = 0; y < ny_; ++y) {
        for (int x = 0; x < nx_; ++x) {
            double* w = &weights_[(static_cast<size_t>(y) * nx_ + x) * n_stations_];
            int exact = -1;
            double total = 0.0;
            for (int s = 0; s < n_stations_; ++s) {
                const double dx = stations[s].x - x;
                const double dy = stations[s].y - y;
                const double d = std::sqrt(dx * dx + dy * dy);
                if (d < 1e-9) {
                    exact = s;
                    break;
                }
                w[s] = std::pow(d, -power);
                total += w[s];
            }
            if (exact >= 0) {
                for (int s = 0; s < n_stations_; ++s) w[s] = (s == exact) ? 1.0 : 0.0;
            } else {
                for (int s = 0; s < n_stations_; ++s) w[s] /= total;
            }
        }
    }
}

void IdwInterpolator::interpolate(const std::vector<double>& values,
                                  std::vector<double>& out) const {
    if (static_cast<int>(values.size()) != n_stations_)
        throw DataError("IDW: got " + std::to_string(values.size()) + " values for " +
                        std::to_string(n_stations_) + " stations");
    out.assign(static_cast<size_t>(nx_) * ny_, 0.0);
    for (size_t cell = 0; cell < out.size(); ++cell) {
        const double* w = &weights_[cell * n_stations_];
        double acc = 0.0;
        for (int s = 0; s < n_stations_; ++s) acc += w[s] * values[s];
        out[cell] = acc;
    }
}

FieldSequence interpolate_observations(const FieldSequence& truth, const StationSet& set,
                                       double idw_power) {
    IdwInterpolator idw(truth.nx, truth.ny, set.stations, idw_power);
    const int n_st = static_cast<int>(set.stations.size());

    // Index samples by (time, variable) -> per-station values, in the order
    // of set.stations.
    std::map<int, int> station_slot;
    for (int s = 0; s < n_st; ++s) station_slot[set.stations[s].id] = s;

    std::map<std::pair<int64_t, int>, std::vector<double>> by_key;
    for (const StationSample& s : set.samples) {
        auto& vec = by_key[{s.time_index, s.variable}];
        if (vec.empty()) vec.assign(n_st, -1.0);
        const auto slot = station_slot.find(s.station_id);
        if (slot == station_slot.end())
            throw DataError("sample references unknown station id " +
                            std::to_string(s.station_id));
        vec[slot->second] = s.value;
    }

    FieldSequence obs;
    obs.nx = truth.nx;
    obs.ny = truth.ny;
    obs.n_vars = truth.n_vars;
    obs.base_time_index = truth.base_time_index;
    obs.frames.reserve(truth.frames.size());

    std::vector<double> interp;
    for (const GridField& frame : truth.frames) {
        GridField f(frame.nx, frame.ny, frame.n_vars, frame.time_index);
        for (int var : {kPm25, kPm10}) {
            const auto it = by_key.find({frame.time_index, var});
            if (it == by_key.end())
                throw DataError("no station samples for time " + std::to_string(frame.time_index) +
                                " variable " + (var == kPm25 ? "pm25" : "pm10"));
            for (int s = 0; s < n_st; ++s)
                if (it->second[s] < 0.0)
                    throw DataError("missing sample for station " +
                                    std::to_string(set.stations[s].id) + " at time " +
                                    std::to_string(frame.time_index));
            idw.interpolate(it->second, interp);
            std::copy(interp.begin(), interp.end(), f.var(var).begin());
        }
        // Wind is the known forcing shared by both views.
        std::copy(frame.var(kWindU).begin(), frame.var(kWindU).end(), f.var(kWindU).begin());
        std::copy(frame.var(kWindV).begin(), frame.var(kWindV).end(), f.var(kWindV).begin());
        obs.frames.push_back(std::move(f));
    }
    return obs;
}

}  // namespace fakerair
