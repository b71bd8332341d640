#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fakerair/aqi.hpp"

namespace fakerair {

// Which sampled pollutant the GRPO reward scores.
enum class RewardPollutant { Pm25, Pm10, Both };

// Full run configuration. Loaded from a plain key=value text file; unknown
// keys fail fast. Every field has a desk-scale default, but a config file
// must at least pin grid.nx, grid.ny, data.steps and seed so that datasets
// are never produced from a half-specified file.
struct RunConfig {
    // grid + dataset
    int nx = 64;
    int ny = 64;
    int total_steps = 1000;
    double train_frac = 0.70;
    double val_frac = 0.15;
    int stations = 24;
    double obs_noise_frac = 0.05;   // std as fraction of the sampled value
    double obs_noise_floor = 0.5;   // ug/m3
    double idw_power = 2.0;

    // synthetic regional scenario: brisk advection over a clean background,
    // so plumes travel several cells per step and autoregressive rollouts
    // drift visibly off the truth manifold at long leads
    int sim_substeps = 7;  // keeps the upwind update positivity-preserving at default wind/diffusion
    double sim_diffusion = 0.2;     // cells^2 per step
    double sim_decay = 0.012;       // per step
    std::string sim_boundary = "periodic";  // periodic | absorbing
    double sim_wind_speed = 1.15;   // cells per step
    double sim_wind_period = 28.0;  // steps per rotation (~1 week)
    int sim_sources = 3;
    double sim_source_strength = 2.2;  // ug/m3 per step at blob center (median)
    double sim_source_radius = 3.0;    // cells
    double sim_source_rho = 0.9;       // AR(1) factor of log-intensity
    double sim_source_eta = 0.5;       // innovation std of log-intensity
    double sim_background = 5.0;       // equilibrium background concentration
    double sim_pm10_ratio = 1.7;       // PM10 emission per unit PM2.5 emission
    int sim_spinup = 40;               // discarded leading steps

    // classification thresholds
    AqiThresholds thresholds;

    // forecaster
    int t_in = 2;
    int kernel = 3;
    int hidden = 32;
    double init_std = 0.01;

    // stage 1
    int sft_epochs = 12;
    int sft_batch = 8;
    double sft_peak_lr = 3e-3;
    int sft_horizon = 4;
    double weight_floor = 0.5;    // b in the step-weight schedule
    int sft_stride = 5;           // stride between training windows
    double group_weight_pm25 = 0.5;  // PM10 gets the complement
    std::string sft_source = "fused";  // obs | fused
    std::string sft_init_from;         // optional checkpoint to start from

    // stage 2
    int grpo_epochs = 4;
    int group_size = 4;
    double sigma = 0.05;          // exploration std, in per-channel z-units
    double tau = 0.5;             // softmax temperature over group rewards
    double kappa = 1.0;           // curriculum expansion rate
    int h_min = 1;
    int h_max = 4;
    double grpo_lr = 0.0;         // 0 = sft_peak_lr / 10
    std::string grpo_reward = "aqi";   // aqi | mse
    bool grpo_curriculum = true;
    RewardPollutant reward_pollutant = RewardPollutant::Pm25;
    int grpo_stride = 8;

    // evaluation
    std::vector<int> leads_hours;  // empty = 12,24,...,120
    int eval_init_stride = 8;
    std::string overall_mode = "pooled";  // pooled | mean

    uint64_t seed = 42;

    static RunConfig defaults() { return RunConfig{}; }

    // Parses a key=value file. Unknown key -> ConfigError naming it; missing
    // required key -> ConfigError naming it. Validates on success.
    static RunConfig from_file(const std::filesystem::path& path);

    // Applies one "key=value" override (CLI flags funnel through this).
    void set(const std::string& key, const std::string& value);

    void validate() const;

    std::vector<int> effective_leads() const;
    double effective_grpo_lr() const { return grpo_lr > 0.0 ? grpo_lr : sft_peak_lr / 10.0; }

    // Canonical text of the keys that determine dataset bytes and model
    // shape; its FNV-1a hash ties checkpoints to the data they were
    // trained on. Training-schedule keys are deliberately excluded.
    std::string canonical_identity_text() const;
    uint64_t config_hash() const;

    // Full canonical snapshot (every key), for manifests.
    std::string serialize() const;
};

}  // namespace fakerair
