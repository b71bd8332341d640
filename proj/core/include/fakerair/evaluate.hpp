#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fakerair/config.hpp"
#include "fakerair/field_io.hpp"
#include "fakerair/metrics.hpp"
#include "fakerair/model.hpp"

namespace fakerair {

// Hours per model step. Leads are even multiples of this (2..20 steps).
inline constexpr int kHoursPerStep = 6;
inline constexpr int kEvalHorizonSteps = 20;  // 120 h

struct LeadTimeReport {
    std::vector<int> leads_hours;
    // counts[pollutant][lead index]; pollutant 0 = PM2.5, 1 = PM10
    std::array<std::vector<MultiCounts>, kPmVars> counts;
    std::array<MultiCounts, kPmVars> pooled;  // element-wise sum over leads
    std::string overall_mode = "pooled";      // pooled | mean
    int initializations = 0;
};

struct EvalOptions {
    std::vector<int> leads_hours;  // must be even multiples of 6 in [12,120]
    int init_stride = 1;
    std::string overall_mode = "pooled";
    // Optional per-cell score mask (ny*nx entries, nonzero = scored); null
    // scores everything. Mirrors station-coverage evaluation.
    const std::vector<uint8_t>* cell_mask = nullptr;

    static EvalOptions from_config(const RunConfig& cfg);
};

// Deterministic mean-forecast verification: for every usable initialization
// in the sequence (window start stepped by init_stride, needing 20 steps of
// truth beyond the window), rolls the model out 20 steps, classifies
// prediction (clamped at 0) and truth per cell at each requested lead, and
// accumulates the per-lead matrices. Throws DataError when the sequence
// holds no usable initialization, reporting how many steps it has and needs.
LeadTimeReport evaluate_forecast(const Forecaster& model, const FieldSequence& seq,
                                 const AqiThresholds& thresholds, const EvalOptions& opt);

// Aggregate binary / multiclass metrics of a report. lead_index -1 selects
// the Overall aggregation: pooled counts, or the mean of per-lead metric
// values (undefined leads excluded) under overall_mode == "mean".
BinaryMetrics report_binary(const LeadTimeReport& rep, int pollutant, int lead_index);
MulticlassMetrics report_multiclass(const LeadTimeReport& rep, int pollutant, int lead_index);

// Mean 20-step rollout MSE over both PM channels (raw units), same
// initialization protocol. Not part of the categorical report; used for
// baseline comparisons.
double rollout_mse(const Forecaster& model, const FieldSequence& seq, int horizon,
                   int init_stride);

// Mean AQI class-match fraction of the deterministic mean forecast at the
// given horizon (the validation reward logged per GRPO epoch).
double mean_policy_reward(const Forecaster& model, const FieldSequence& seq, int horizon,
                          int init_stride, RewardPollutant which, const AqiThresholds& thresholds);

// report.csv: pollutant,lead,family,<metric columns>, "undefined" where a
// ratio is 0/0, empty where the column does not apply to the family.
// report.json: {pollutant: {lead: {metric: value | "undefined"}}}.
void write_report_csv(const std::filesystem::path& path, const LeadTimeReport& rep);
void write_report_json(const std::filesystem::path& path, const LeadTimeReport& rep);

}  // namespace fakerair
