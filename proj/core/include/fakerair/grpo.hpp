#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "fakerair/config.hpp"
#include "fakerair/dataset.hpp"
#include "fakerair/model.hpp"
#include "fakerair/optimizer.hpp"
#include "fakerair/rng.hpp"

namespace fakerair {

// H_e = min(H_max, floor(H_min + kappa * e)). A 1e-9 nudge before the floor
// absorbs binary round-off of decimal kappa (0.7 * 10 = 6.999...), keeping
// the result equal to the exact-arithmetic floor for any reasonable grid of
// (e, kappa) values.
int curriculum_horizon(int epoch, int h_min, int h_max, double kappa);

// Softmax advantages A_g = exp(r_g / tau) / sum_j exp(r_j / tau), computed
// with max subtraction. Sum is 1 within 1e-9; equal rewards give 1/G.
std::vector<double> group_advantages(const std::vector<double>& rewards, double tau);

// G actions a = mu + sigma * eps with eps in exact antithetic pairs drawn
// from rng (G/2 independent per-cell standard normal fields; the pair
// partner reuses the same field negated). Per pair and cell the high member
// is formed first and the low member is synthesized as mu - (hi - mu), which
// makes hi + lo == 2*mu bit-exact whenever sigma*|eps| <= |mu| (Sterbenz
// cancellation); otherwise the pair is within 1 ulp. Returned actions are
// unclipped; noise_out, when given, receives the per-member eps fields.
// sigma_raw holds the per-PM-channel standard deviation in raw units.
std::vector<PmField> sample_group(const PmField& mu, const std::array<double, 2>& sigma_raw,
                                  int group_size, Rng& rng,
                                  std::vector<PmField>* noise_out = nullptr);

// Diagonal Gaussian log-density of a around mu, summed over PM cells, plus
// (when d_mu is non-null) the gradient (a - mu) / sigma^2 written into d_mu.
double gaussian_logprob(const PmField& a, const PmField& mu,
                        const std::array<double, 2>& sigma_raw, PmField* d_mu);

// Fraction of cells whose AQI class matches between action and target, for
// the selected pollutant (Both = mean of the two fractions). Action values
// are clamped at 0 before classification.
double aqi_reward(const PmField& action, const GridField& target, RewardPollutant which,
                  const AqiThresholds& thresholds);

// Negated mean squared error over the selected pollutant channel(s).
double mse_reward(const PmField& action, const GridField& target, RewardPollutant which);

// One member's realized trajectory: per step the input window it saw (owned
// copies, so the group is self-contained), the unclipped action (what the
// log-density scores) and the clipped action (what was fed back and
// rewarded).
struct StepSample {
    std::vector<GridField> window;
    PmField action_unclipped;
    PmField action;
};

struct MemberRollout {
    std::vector<StepSample> steps;
    double reward = 0.0;  // step-averaged
};

struct GroupRollout {
    std::vector<MemberRollout> members;
    std::vector<double> rewards;
    std::vector<double> advantages;
    std::array<double, 2> sigma_raw{1.0, 1.0};
    int horizon = 0;
};

// Rolls out the G trajectories for the window starting at t0 (sampling each
// step, feeding the clipped action back), scores them with the configured
// reward averaged over steps, and computes advantages. Pure sampling: does
// not touch parameters.
GroupRollout collect_group(const Forecaster& model, const FieldSequence& seq, int t0,
                           int horizon, const RunConfig& cfg, Rng& noise);

// The GRPO surrogate on a frozen group: L = -sum_g A_g sum_t log pi(a_t |
// mu_t(theta)) with mu recomputed from the stored windows. theta enters only
// through mu, so central finite differences of this function are the oracle
// for its gradient. Gradients accumulate (+=) into d_params when non-null.
double group_surrogate(const Forecaster& model, const GroupRollout& group,
                       std::vector<double>* d_params);

struct GroupDiagnostics {
    double mean_reward = 0.0;
    double loss = 0.0;
    bool skipped = false;  // non-finite loss or gradient; update not applied
};

// collect_group + group_surrogate + one Adam step. Non-finite loss or
// gradient skips the update and reports skipped = true.
GroupDiagnostics grpo_update(Forecaster& model, Adam& opt, const FieldSequence& seq, int t0,
                             int horizon, const RunConfig& cfg, Rng& noise, double lr);

struct GrpoLogRow {
    int epoch = 0;
    int horizon = 0;
    double mean_reward = 0.0;   // deterministic mean-policy reward on validation
    double val_far = 0.0;       // binary FAR on validation, pooled leads
    double val_macro_csi = 0.0; // multiclass macro-CSI on validation
};

struct GrpoResult {
    Forecaster model;
    std::vector<GrpoLogRow> log;
    int skipped_updates = 0;
};

// Stage 2 driver: epochs with curriculum horizons, batch size 1 over the
// training windows, per-epoch validation metrics. More than 10 consecutive
// skipped updates aborts with NumericError. Deterministic per (config,
// seed).
GrpoResult train_grpo(const RunConfig& cfg, const Dataset& ds, const Forecaster& sft_model);

// CSV: epoch,horizon,mean_reward,val_far,val_macro_csi
void write_grpo_log(const std::filesystem::path& path, const std::vector<GrpoLogRow>& rows);

}  // namespace fakerair
