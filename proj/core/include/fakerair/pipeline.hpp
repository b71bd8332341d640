#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fakerair/config.hpp"
#include "fakerair/manifest.hpp"

namespace fakerair {

// High-level drivers shared by the CLI and the ablation harness. Each writes
// its outputs plus manifest.json under `out` and returns the manifest.

Manifest run_datagen(const RunConfig& cfg, const std::filesystem::path& out);

// Stage 1: data_dir must hold a datagen tree whose hash matches cfg.
Manifest run_train_sft(const RunConfig& cfg, const std::filesystem::path& data_dir,
                       const std::filesystem::path& out);

// Stage 2: sft_checkpoint is required and hash-checked against cfg.
Manifest run_train_grpo(const RunConfig& cfg, const std::filesystem::path& data_dir,
                        const std::filesystem::path& sft_checkpoint,
                        const std::filesystem::path& out);

// Evaluation of a checkpoint on the test split; emits report.csv/.json and
// optionally per-lead prediction field dumps (FKRF) when dump_fields is set.
Manifest run_eval(const RunConfig& cfg, const std::filesystem::path& checkpoint,
                  const std::filesystem::path& data_dir, const std::filesystem::path& out,
                  bool dump_fields = false);

// Factorial suites. "sft-axes": {obs, fused} x {TF, TA H=2, TA H=4}, six
// rows. "grpo-axes": SFT baseline + {mse, aqi} x {curriculum on, off}, five
// rows. Emits comparison.csv; per-row outputs live in subdirectories and
// completed rows (matching manifest hash) are skipped on rerun. A row
// failure is recorded in the row's status and the suite continues.
Manifest run_ablate(const std::string& suite, const RunConfig& cfg,
                    const std::filesystem::path& data_dir, const std::filesystem::path& out);

}  // namespace fakerair
