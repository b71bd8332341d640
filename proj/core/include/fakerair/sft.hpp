#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fakerair/config.hpp"
#include "fakerair/dataset.hpp"
#include "fakerair/losses.hpp"
#include "fakerair/model.hpp"

namespace fakerair {

struct TrainLogRow {
    int epoch = 0;
    std::string phase;  // "sft" / "grpo"
    double loss = 0.0;
    double lr = 0.0;
    long long wall_ms = 0;
};

struct SftResult {
    Forecaster model;            // best-validation parameters, f32-rounded
    std::vector<TrainLogRow> log;
    double initial_val_loss = 0.0;
    double final_val_loss = 0.0;
    int best_epoch = -1;
};

// Stage 1 training. Builds training windows from the configured source view
// ("obs" uses station-interpolated fields as inputs and targets; "fused"
// additionally trains on the dense fields, doubling the pairs), fits
// normalization stats on training frames, then runs the configured epochs of
// TA loss at sft.horizon with one-cycle LR. Validation loss (same TA
// objective on the validation split) selects the returned checkpoint.
// Deterministic per (config, seed). Non-finite loss aborts with NumericError
// naming epoch and batch.
SftResult train_sft(const RunConfig& cfg, const Dataset& ds);

// Writes the log rows as CSV: epoch,phase,loss,lr,wall_ms
void write_train_log(const std::filesystem::path& path, const std::vector<TrainLogRow>& rows);

}  // namespace fakerair
