#include "fakerair/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "fakerair/checksum.hpp"
#include "fakerair/errors.hpp"
#include "fakerair/sim.hpp"

namespace fakerair {
namespace {

// Stations sampled from the truth frame with multiplicative noise, floored
// so near-zero readings still carry absolute uncertainty. Readings never go
// negative.
double observe(double value, double noise_frac, double noise_floor, Rng& rng) {
    const double sd = std::max(noise_frac * value, noise_floor);
    return std::max(0.0, value + sd * rng.normal());
}

std::vector<Station> place_stations(const RunConfig& cfg, const std::vector<Source>& sources) {
    Rng rng(Rng::derive(cfg.seed, 0x57u));
    std::vector<Station> out;
    out.reserve(static_cast<size_t>(cfg.stations));
    // Two thirds of the network sits near emitters (monitoring practice puts
    // stations where people and pollution are), the rest is uniform.
    const int near = sources.empty() ? 0 : (2 * cfg.stations) / 3;
    for (int i = 0; i < cfg.stations; ++i) {
        Station s;
        s.id = i;
        if (i < near) {
            const Source& src = sources[static_cast<size_t>(i) % sources.size()];
            const double r = 2.0 + 4.0 * rng.uniform();
            const double ang = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
            s.x = src.x + r * std::cos(ang);
            s.y = src.y + r * std::sin(ang);
        } else {
            s.x = rng.uniform(0.0, static_cast<double>(cfg.nx - 1));
            s.y = rng.uniform(0.0, static_cast<double>(cfg.ny - 1));
        }
        s.x = std::clamp(s.x, 0.0, static_cast<double>(cfg.nx - 1));
        s.y = std::clamp(s.y, 0.0, static_cast<double>(cfg.ny - 1));
        out.push_back(s);
    }
    return out;
}

StationSet sample_stations(const FieldSequence& truth, const std::vector<Station>& stations,
                           const RunConfig& cfg) {
    Rng rng(Rng::derive(cfg.seed, 0x58u, static_cast<uint64_t>(truth.base_time_index)));
    StationSet set;
    set.stations = stations;
    set.samples.reserve(truth.frames.size() * stations.size() * 2);
    for (const GridField& frame : truth.frames) {
        for (const Station& st : stations) {
            // Nearest-cell sampling.
            const int cx = static_cast<int>(std::lround(st.x));
            const int cy = static_cast<int>(std::lround(st.y));
            for (int var : {kPm25, kPm10}) {
                StationSample s;
                s.station_id = st.id;
                s.time_index = frame.time_index;
                s.variable = var;
                s.value = observe(frame.at(var, cy, cx), cfg.obs_noise_frac, cfg.obs_noise_floor,
                                  rng);
                set.samples.push_back(s);
            }
        }
    }
    return set;
}

FieldSequence slice(const FieldSequence& all, int from, int count) {
    FieldSequence s;
    s.nx = all.nx;
    s.ny = all.ny;
    s.n_vars = all.n_vars;
    s.base_time_index = all.base_time_index + from;
    s.frames.assign(all.frames.begin() + from, all.frames.begin() + from + count);
    return s;
}

}  // namespace

Dataset generate_dataset(const RunConfig& cfg) {
    cfg.validate();
    SimParams params = SimParams::from_config(cfg);
    std::vector<Source> sources = make_sources(cfg);
    Simulator sim(params, sources, cfg.seed);

    GridField state = sim.initial_state();
    for (int t = 0; t < cfg.sim_spinup; ++t) state = sim.step(state);
    // Restart the clock at zero after spin-up.
    state.time_index = 0;

    FieldSequence all;
    all.nx = cfg.nx;
    all.ny = cfg.ny;
    all.n_vars = kStateVars;
    all.base_time_index = 0;
    all.frames.reserve(static_cast<size_t>(cfg.total_steps));
    all.frames.push_back(state);
    for (int t = 1; t < cfg.total_steps; ++t) all.frames.push_back(sim.step(all.frames.back()));
    for (const GridField& f : all.frames) validate_dataset_field(f);

    const int n_train = std::max(1, static_cast<int>(std::floor(cfg.train_frac * cfg.total_steps)));
    const int n_val = std::max(1, static_cast<int>(std::floor(cfg.val_frac * cfg.total_steps)));
    const int n_test = cfg.total_steps - n_train - n_val;
    if (n_test < 1)
        throw ConfigError("split fractions leave no test steps (" + std::to_string(n_train) +
                          " train + " + std::to_string(n_val) + " val of " +
                          std::to_string(cfg.total_steps) + ")");

    const std::vector<Station> stations = place_stations(cfg, sources);

    Dataset ds;
    ds.config_hash = cfg.config_hash();
    ds.train = {"train", slice(all, 0, n_train), {}};
    ds.val = {"val", slice(all, n_train, n_val), {}};
    ds.test = {"test", slice(all, n_train + n_val, n_test), {}};
    ds.train.stations = sample_stations(ds.train.truth, stations, cfg);
    ds.val.stations = sample_stations(ds.val.truth, stations, cfg);
    ds.test.stations = sample_stations(ds.test.truth, stations, cfg);
    return ds;
}

void write_dataset(const std::filesystem::path& root, const Dataset& ds) {
    namespace fs = std::filesystem;
    for (const Split* split : {&ds.train, &ds.val, &ds.test}) {
        const fs::path dir = root / split->name;
        fs::create_directories(dir);
        write_fkrf(dir / "fields.fkrf", split->truth);
        write_station_csv(dir / "stations.csv", split->stations);
    }
    nlohmann::json j;
    j["config_hash"] = hash_hex(ds.config_hash);
    for (const Split* split : {&ds.train, &ds.val, &ds.test}) {
        j["splits"][split->name] = {
            {"steps", split->truth.size()},
            {"base_time_index", split->truth.base_time_index},
            {"stations", split->stations.stations.size()},
        };
    }
    std::ofstream out(root / "splits.json", std::ios::trunc);
    if (!out) throw DataError("cannot write " + (root / "splits.json").string());
    out << j.dump(2) << "\n";
}

Dataset load_dataset(const std::filesystem::path& root, uint64_t expected_hash) {
    namespace fs = std::filesystem;
    const fs::path index = root / "splits.json";
    std::ifstream in(index);
    if (!in) throw DataError("cannot open dataset index: " + index.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(index.string() + ": invalid JSON: " + e.what());
    }
    const std::string stored = j.value("config_hash", "");
    if (expected_hash != 0 && stored != hash_hex(expected_hash))
        throw DataError("dataset at " + root.string() + " was generated with config hash " +
                        stored + " but the current config hashes to " + hash_hex(expected_hash));

    Dataset ds;
    ds.config_hash = std::stoull(stored, nullptr, 16);
    for (Split* split : {&ds.train, &ds.val, &ds.test}) {
        split->name = (split == &ds.train) ? "train" : (split == &ds.val) ? "val" : "test";
        const fs::path dir = root / split->name;
        split->truth = read_fkrf(dir / "fields.fkrf");
        split->stations = read_station_csv(dir / "stations.csv");
        for (const GridField& f : split->truth.frames) validate_dataset_field(f);
    }
    return ds;
}

FieldSequence obs_view(const Split& split, double idw_power) {
    return interpolate_observations(split.truth, split.stations, idw_power);
}

}  // namespace fakerair
