#include "fakerair/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <functional>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "fakerair/checksum.hpp"
#include "fakerair/errors.hpp"

namespace fakerair {
namespace {

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

long long parse_int(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        const long long r = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return r;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected integer, got '" + v + "'");
    }
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        const double r = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing");
        return r;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected number, got '" + v + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "on" || v == "true" || v == "1") return true;
    if (v == "off" || v == "false" || v == "0") return false;
    throw ConfigError("config key '" + key + "': expected on/off, got '" + v + "'");
}

std::array<double, 3> parse_triple(const std::string& key, const std::string& v) {
    std::array<double, 3> out{};
    std::stringstream ss(v);
    std::string item;
    int n = 0;
    while (std::getline(ss, item, ',')) {
        if (n >= 3) throw ConfigError("config key '" + key + "': expected 3 values, got more");
        out[n++] = parse_double(key, trim(item));
    }
    if (n != 3)
        throw ConfigError("config key '" + key + "': expected 3 comma-separated values");
    return out;
}

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
    std::vector<int> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ','))
        out.push_back(static_cast<int>(parse_int(key, trim(item))));
    if (out.empty()) throw ConfigError("config key '" + key + "': empty list");
    return out;
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_triple(const std::array<double, 3>& t) {
    return fmt_double(t[0]) + "," + fmt_double(t[1]) + "," + fmt_double(t[2]);
}

std::string fmt_int_list(const std::vector<int>& v) {
    std::string out;
    for (size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",";
        out += std::to_string(v[i]);
    }
    return out;
}

const char* fmt_pollutant(RewardPollutant p) {
    switch (p) {
        case RewardPollutant::Pm25: return "pm25";
        case RewardPollutant::Pm10: return "pm10";
        case RewardPollutant::Both: return "both";
    }
    return "?";
}

RewardPollutant parse_pollutant(const std::string& key, const std::string& v) {
    if (v == "pm25") return RewardPollutant::Pm25;
    if (v == "pm10") return RewardPollutant::Pm10;
    if (v == "both") return RewardPollutant::Both;
    throw ConfigError("config key '" + key + "': expected pm25/pm10/both, got '" + v + "'");
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;
using Getter = std::function<std::string(const RunConfig&)>;

struct KeyEntry {
    Setter set;
    Getter get;
    bool identity;  // participates in the dataset/model identity hash
};

// One table drives parsing, serialization and hashing, so the three can
// never drift apart.
const std::map<std::string, KeyEntry>& key_table() {
    static const std::map<std::string, KeyEntry> table = [] {
        std::map<std::string, KeyEntry> t;
        auto add_int = [&t](const char* key, int RunConfig::*field, bool identity) {
            t[key] = {[field](RunConfig& c, const std::string& k, const std::string& v) {
                          c.*field = static_cast<int>(parse_int(k, v));
                      },
                      [field](const RunConfig& c) { return std::to_string(c.*field); }, identity};
        };
        auto add_dbl = [&t](const char* key, double RunConfig::*field, bool identity) {
            t[key] = {[field](RunConfig& c, const std::string& k, const std::string& v) {
                          c.*field = parse_double(k, v);
                      },
                      [field](const RunConfig& c) { return fmt_double(c.*field); }, identity};
        };
        auto add_str = [&t](const char* key, std::string RunConfig::*field, bool identity) {
            t[key] = {[field](RunConfig& c, const std::string&, const std::string& v) {
                          c.*field = v;
                      },
                      [field](const RunConfig& c) { return c.*field; }, identity};
        };

        add_int("grid.nx", &RunConfig::nx, true);
        add_int("grid.ny", &RunConfig::ny, true);
        add_int("data.steps", &RunConfig::total_steps, true);
        add_dbl("data.train_frac", &RunConfig::train_frac, true);
        add_dbl("data.val_frac", &RunConfig::val_frac, true);
        add_int("data.stations", &RunConfig::stations, true);
        add_dbl("data.noise_frac", &RunConfig::obs_noise_frac, true);
        add_dbl("data.noise_floor", &RunConfig::obs_noise_floor, true);
        add_dbl("data.idw_power", &RunConfig::idw_power, true);

        add_int("sim.substeps", &RunConfig::sim_substeps, true);
        add_dbl("sim.diffusion", &RunConfig::sim_diffusion, true);
        add_dbl("sim.decay", &RunConfig::sim_decay, true);
        add_str("sim.boundary", &RunConfig::sim_boundary, true);
        add_dbl("sim.wind_speed", &RunConfig::sim_wind_speed, true);
        add_dbl("sim.wind_period", &RunConfig::sim_wind_period, true);
        add_int("sim.sources", &RunConfig::sim_sources, true);
        add_dbl("sim.source_strength", &RunConfig::sim_source_strength, true);
        add_dbl("sim.source_radius", &RunConfig::sim_source_radius, true);
        add_dbl("sim.source_rho", &RunConfig::sim_source_rho, true);
        add_dbl("sim.source_eta", &RunConfig::sim_source_eta, true);
        add_dbl("sim.background", &RunConfig::sim_background, true);
        add_dbl("sim.pm10_ratio", &RunConfig::sim_pm10_ratio, true);
        add_int("sim.spinup", &RunConfig::sim_spinup, true);

        t["aqi.pm25"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
                             c.thresholds.pm25 = parse_triple(k, v);
                         },
                         [](const RunConfig& c) { return fmt_triple(c.thresholds.pm25); }, true};
        t["aqi.pm10"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
                             c.thresholds.pm10 = parse_triple(k, v);
                         },
                         [](const RunConfig& c) { return fmt_triple(c.thresholds.pm10); }, true};

        add_int("model.t_in", &RunConfig::t_in, true);
        add_int("model.kernel", &RunConfig::kernel, true);
        add_int("model.hidden", &RunConfig::hidden, true);
        add_dbl("model.init_std", &RunConfig::init_std, true);

        add_int("sft.epochs", &RunConfig::sft_epochs, false);
        add_int("sft.batch", &RunConfig::sft_batch, false);
        add_dbl("sft.peak_lr", &RunConfig::sft_peak_lr, false);
        add_int("sft.horizon", &RunConfig::sft_horizon, false);
        add_dbl("sft.weight_floor", &RunConfig::weight_floor, false);
        add_int("sft.stride", &RunConfig::sft_stride, false);
        add_dbl("sft.w_pm25", &RunConfig::group_weight_pm25, false);
        add_str("sft.source", &RunConfig::sft_source, false);
        add_str("sft.init_from", &RunConfig::sft_init_from, false);

        add_int("grpo.epochs", &RunConfig::grpo_epochs, false);
        add_int("grpo.group", &RunConfig::group_size, false);
        add_dbl("grpo.sigma", &RunConfig::sigma, false);
        add_dbl("grpo.tau", &RunConfig::tau, false);
        add_dbl("grpo.kappa", &RunConfig::kappa, false);
        add_int("grpo.h_min", &RunConfig::h_min, false);
        add_int("grpo.h_max", &RunConfig::h_max, false);
        add_dbl("grpo.lr", &RunConfig::grpo_lr, false);
        add_str("grpo.reward", &RunConfig::grpo_reward, false);
        t["grpo.curriculum"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
                                    c.grpo_curriculum = parse_bool(k, v);
                                },
                                [](const RunConfig& c) {
                                    return std::string(c.grpo_curriculum ? "on" : "off");
                                },
                                false};
        t["grpo.pollutant"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
                                   c.reward_pollutant = parse_pollutant(k, v);
                               },
                               [](const RunConfig& c) {
                                   return std::string(fmt_pollutant(c.reward_pollutant));
                               },
                               false};
        add_int("grpo.stride", &RunConfig::grpo_stride, false);

        t["eval.leads"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
                               if (v == "default")
                                   c.leads_hours.clear();
                               else
                                   c.leads_hours = parse_int_list(k, v);
                           },
                           [](const RunConfig& c) {
                               return c.leads_hours.empty() ? std::string("default")
                                                            : fmt_int_list(c.leads_hours);
                           },
                           false};
        add_int("eval.init_stride", &RunConfig::eval_init_stride, false);
        add_str("eval.overall", &RunConfig::overall_mode, false);

        t["seed"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
                         c.seed = static_cast<uint64_t>(parse_int(k, v));
                     },
                     [](const RunConfig& c) { return std::to_string(c.seed); }, true};
        return t;
    }();
    return table;
}

void check_range(bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
    const auto& table = key_table();
    const auto it = table.find(key);
    if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
    it->second.set(*this, key, value);
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    RunConfig cfg;
    std::set<std::string> seen;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        const size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                              ": expected key=value, got '" + s + "'");
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        cfg.set(key, value);
        seen.insert(key);
    }
    for (const char* req : {"grid.nx", "grid.ny", "data.steps", "seed"})
        if (!seen.count(req))
            throw ConfigError("config file " + path.string() + " missing required key '" + req +
                              "'");
    cfg.validate();
    return cfg;
}

void RunConfig::validate() const {
    check_range(nx >= 4 && nx <= 4096, "grid.nx must be in [4, 4096]");
    check_range(ny >= 4 && ny <= 4096, "grid.ny must be in [4, 4096]");
    check_range(total_steps >= 8, "data.steps must be at least 8");
    check_range(train_frac > 0.0 && val_frac > 0.0 && train_frac + val_frac < 1.0,
                "data.train_frac/val_frac must be positive and sum below 1");
    check_range(stations >= 1, "data.stations must be at least 1");
    check_range(obs_noise_frac >= 0.0, "data.noise_frac must be nonnegative");
    check_range(obs_noise_floor >= 0.0, "data.noise_floor must be nonnegative");
    check_range(idw_power > 0.0, "data.idw_power must be positive");

    check_range(sim_substeps >= 1 && sim_substeps <= 64, "sim.substeps must be in [1, 64]");
    check_range(sim_diffusion >= 0.0, "sim.diffusion must be nonnegative");
    check_range(sim_decay >= 0.0 && sim_decay < 1.0, "sim.decay must be in [0, 1)");
    check_range(sim_boundary == "periodic" || sim_boundary == "absorbing",
                "sim.boundary must be periodic or absorbing");
    check_range(sim_wind_speed >= 0.0, "sim.wind_speed must be nonnegative");
    check_range(sim_wind_period > 0.0, "sim.wind_period must be positive");
    check_range(sim_sources >= 0, "sim.sources must be nonnegative");
    check_range(sim_source_strength >= 0.0, "sim.source_strength must be nonnegative");
    check_range(sim_source_radius > 0.0, "sim.source_radius must be positive");
    check_range(sim_source_rho >= 0.0 && sim_source_rho < 1.0, "sim.source_rho must be in [0, 1)");
    check_range(sim_source_eta >= 0.0, "sim.source_eta must be nonnegative");
    check_range(sim_background >= 0.0, "sim.background must be nonnegative");
    check_range(sim_pm10_ratio > 0.0, "sim.pm10_ratio must be positive");
    check_range(sim_spinup >= 0, "sim.spinup must be nonnegative");

    thresholds.validate();

    check_range(t_in >= 1 && t_in <= 8, "model.t_in must be in [1, 8]");
    check_range(kernel >= 1 && kernel % 2 == 1, "model.kernel must be odd and positive");
    check_range(hidden >= 0, "model.hidden must be nonnegative");
    check_range(init_std >= 0.0, "model.init_std must be nonnegative");

    check_range(sft_epochs >= 0, "sft.epochs must be nonnegative");
    check_range(sft_batch >= 1, "sft.batch must be at least 1");
    check_range(sft_peak_lr > 0.0, "sft.peak_lr must be positive");
    check_range(sft_horizon >= 1, "sft.horizon must be at least 1");
    check_range(weight_floor > 0.0 && weight_floor <= 1.0, "sft.weight_floor must be in (0, 1]");
    check_range(sft_stride >= 1, "sft.stride must be at least 1");
    check_range(group_weight_pm25 >= 0.0 && group_weight_pm25 <= 1.0,
                "sft.w_pm25 must be in [0, 1]");
    check_range(sft_source == "obs" || sft_source == "fused", "sft.source must be obs or fused");

    check_range(grpo_epochs >= 0, "grpo.epochs must be nonnegative");
    check_range(group_size >= 2 && group_size % 2 == 0, "grpo.group must be even and at least 2");
    check_range(sigma > 0.0, "grpo.sigma must be positive");
    check_range(tau > 0.0, "grpo.tau must be positive");
    check_range(kappa > 0.0, "grpo.kappa must be positive");
    check_range(h_min >= 1, "grpo.h_min must be at least 1");
    check_range(h_max >= h_min, "grpo.h_max must be at least grpo.h_min");
    check_range(grpo_lr >= 0.0, "grpo.lr must be nonnegative (0 = auto)");
    check_range(grpo_reward == "aqi" || grpo_reward == "mse", "grpo.reward must be aqi or mse");
    check_range(grpo_stride >= 1, "grpo.stride must be at least 1");

    for (int lead : leads_hours)
        check_range(lead >= 12 && lead <= 120 && lead % 12 == 0,
                    "eval.leads entries must be multiples of 12 in [12, 120]");
    check_range(eval_init_stride >= 1, "eval.init_stride must be at least 1");
    check_range(overall_mode == "pooled" || overall_mode == "mean",
                "eval.overall must be pooled or mean");
}

std::vector<int> RunConfig::effective_leads() const {
    if (!leads_hours.empty()) return leads_hours;
    std::vector<int> out;
    for (int h = 12; h <= 120; h += 12) out.push_back(h);
    return out;
}

std::string RunConfig::canonical_identity_text() const {
    std::string out;
    for (const auto& [key, entry] : key_table())
        if (entry.identity) out += key + "=" + entry.get(*this) + "\n";
    return out;
}

uint64_t RunConfig::config_hash() const { return fnv1a(canonical_identity_text()); }

std::string RunConfig::serialize() const {
    std::string out;
    for (const auto& [key, entry] : key_table()) out += key + "=" + entry.get(*this) + "\n";
    return out;
}

}  // namespace fakerair
