#include "fakerair/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>

#include "fakerair/checkpoint.hpp"
#include "fakerair/checksum.hpp"
#include "fakerair/dataset.hpp"
#include "fakerair/errors.hpp"
#include "fakerair/evaluate.hpp"
#include "fakerair/grpo.hpp"
#include "fakerair/sft.hpp"
#include "fakerair/version.hpp"

namespace fakerair {
namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

long long ms_since(Clock::time_point t0) {
    return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - t0).count();
}

Manifest base_manifest(const char* command, const RunConfig& cfg) {
    Manifest m;
    m.command = command;
    m.config_text = cfg.serialize();
    m.config_hash_hex = hash_hex(cfg.config_hash());
    m.seed = cfg.seed;
    m.version = kVersion;
    return m;
}

void add_output(Manifest& m, const fs::path& root, const std::string& name,
                const fs::path& file) {
    const std::string rel = fs::relative(file, root).string();
    m.outputs[name] = rel;
    m.checksums[rel] = file_checksum_hex(file);
}

std::string fmt6(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

std::string metric_or(const Metric& m, const char* undef = "undefined") {
    return m.defined ? fmt6(m.value) : std::string(undef);
}

}  // namespace

Manifest run_datagen(const RunConfig& cfg, const fs::path& out) {
    cfg.validate();
    const auto t0 = Clock::now();
    fs::create_directories(out);

    const Dataset ds = generate_dataset(cfg);
    write_dataset(out, ds);

    Manifest m = base_manifest("datagen", cfg);
    for (const char* split : {"train", "val", "test"}) {
        add_output(m, out, std::string(split) + ".fields", out / split / "fields.fkrf");
        add_output(m, out, std::string(split) + ".stations", out / split / "stations.csv");
    }
    add_output(m, out, "splits", out / "splits.json");
    m.timings_ms["datagen"] = ms_since(t0);
    m.save(out / "manifest.json");
    return m;
}

Manifest run_train_sft(const RunConfig& cfg, const fs::path& data_dir, const fs::path& out) {
    cfg.validate();
    const auto t0 = Clock::now();
    fs::create_directories(out);

    const Dataset ds = load_dataset(data_dir, cfg.config_hash());
    const SftResult res = train_sft(cfg, ds);

    const fs::path ckpt = out / "checkpoint.fkrm";
    save_checkpoint(ckpt, res.model, cfg.config_hash());
    const fs::path log = out / "train_log.csv";
    write_train_log(log, res.log);

    Manifest m = base_manifest("train-sft", cfg);
    add_output(m, out, "checkpoint", ckpt);
    add_output(m, out, "train_log", log);
    m.extra["best_epoch"] = std::to_string(res.best_epoch);
    m.extra["initial_val_loss"] = fmt6(res.initial_val_loss);
    m.extra["final_val_loss"] = fmt6(res.final_val_loss);
    m.timings_ms["train_sft"] = ms_since(t0);
    m.save(out / "manifest.json");
    return m;
}

Manifest run_train_grpo(const RunConfig& cfg, const fs::path& data_dir,
                        const fs::path& sft_checkpoint, const fs::path& out) {
    cfg.validate();
    const auto t0 = Clock::now();
    fs::create_directories(out);

    const Dataset ds = load_dataset(data_dir, cfg.config_hash());
    const Forecaster sft_model = load_checkpoint(sft_checkpoint, cfg.config_hash());
    const GrpoResult res = train_grpo(cfg, ds, sft_model);

    const fs::path ckpt = out / "checkpoint.fkrm";
    save_checkpoint(ckpt, res.model, cfg.config_hash());
    const fs::path log = out / "grpo_log.csv";
    write_grpo_log(log, res.log);

    Manifest m = base_manifest("train-grpo", cfg);
    add_output(m, out, "checkpoint", ckpt);
    add_output(m, out, "grpo_log", log);
    m.extra["sft_checkpoint"] = sft_checkpoint.string();
    m.extra["skipped_updates"] = std::to_string(res.skipped_updates);
    m.timings_ms["train_grpo"] = ms_since(t0);
    m.save(out / "manifest.json");
    return m;
}

Manifest run_eval(const RunConfig& cfg, const fs::path& checkpoint, const fs::path& data_dir,
                  const fs::path& out, bool dump_fields) {
    cfg.validate();
    const auto t0 = Clock::now();
    fs::create_directories(out);

    const Dataset ds = load_dataset(data_dir, cfg.config_hash());
    const Forecaster model = load_checkpoint(checkpoint, cfg.config_hash());
    const EvalOptions opt = EvalOptions::from_config(cfg);
    const LeadTimeReport rep = evaluate_forecast(model, ds.test.truth, cfg.thresholds, opt);

    const fs::path csv = out / "report.csv";
    const fs::path json = out / "report.json";
    write_report_csv(csv, rep);
    write_report_json(json, rep);

    Manifest m = base_manifest("eval", cfg);
    add_output(m, out, "report_csv", csv);
    add_output(m, out, "report_json", json);

    if (dump_fields) {
        // Forecast fields of the first initialization, one frame per
        // requested lead, for external visualization.
        const ForecastTrajectory traj =
            rollout_predict(model, ds.test.truth, 0, kEvalHorizonSteps);
        FieldSequence dump;
        dump.nx = ds.test.truth.nx;
        dump.ny = ds.test.truth.ny;
        dump.n_vars = kStateVars;
        dump.base_time_index = 0;
        int ti = 0;
        for (int lead : opt.leads_hours) {
            const int step = lead / kHoursPerStep;
            GridField f = assemble_frame(traj.preds[static_cast<size_t>(step - 1)],
                                         ds.test.truth.at(model.shape.t_in - 1 + step), true);
            f.time_index = ti++;
            dump.frames.push_back(std::move(f));
        }
        const fs::path fields = out / "forecast_fields.fkrf";
        write_fkrf(fields, dump);
        add_output(m, out, "forecast_fields", fields);
    }

    m.extra["checkpoint"] = checkpoint.string();
    m.timings_ms["eval"] = ms_since(t0);
    m.save(out / "manifest.json");
    return m;
}

namespace {

struct AblationRow {
    std::string name;
    RunConfig cfg;
    std::string init_checkpoint;  // grpo rows: path to the SFT base checkpoint
    bool is_grpo = false;
    bool is_baseline = false;  // evaluate the checkpoint as-is
};

// Rows are resumable: a completed row records the hash of its full config
// (training keys included; the identity hash alone would collide across
// rows that share the dataset).
bool row_done(const fs::path& dir, const RunConfig& row_cfg) {
    const fs::path mpath = dir / "manifest.json";
    if (!fs::exists(mpath)) return false;
    try {
        const Manifest m = Manifest::load(mpath);
        const auto status = m.extra.find("status");
        const auto hash = m.extra.find("full_config_hash");
        return status != m.extra.end() && status->second == "ok" && hash != m.extra.end() &&
               hash->second == hash_hex(fnv1a(row_cfg.serialize()));
    } catch (const Error&) {
        return false;
    }
}

}  // namespace

Manifest run_ablate(const std::string& suite, const RunConfig& cfg, const fs::path& data_dir,
                    const fs::path& out) {
    cfg.validate();
    if (suite != "sft-axes" && suite != "grpo-axes")
        throw UsageError("unknown ablation suite '" + suite + "' (expected sft-axes or grpo-axes)");
    const auto t_suite = Clock::now();
    fs::create_directories(out);

    const Dataset ds = load_dataset(data_dir, cfg.config_hash());
    Manifest suite_manifest = base_manifest("ablate", cfg);
    suite_manifest.extra["suite"] = suite;

    std::vector<AblationRow> rows;
    const fs::path sft_base_dir = out / "sft_base";
    if (suite == "sft-axes") {
        for (const char* source : {"obs", "fused"}) {
            for (int h : {1, 2, 4}) {
                AblationRow row;
                row.cfg = cfg;
                row.cfg.sft_source = source;
                row.cfg.sft_horizon = h;
                row.name = std::string(source) + (h == 1 ? "_tf" : "_ta" + std::to_string(h));
                rows.push_back(row);
            }
        }
    } else {
        // Shared stage-1 checkpoint first, then the reward x curriculum grid.
        AblationRow base;
        base.cfg = cfg;
        base.name = "sft_baseline";
        base.is_baseline = true;
        rows.push_back(base);
        for (const char* reward : {"mse", "aqi"}) {
            for (bool cr : {true, false}) {
                AblationRow row;
                row.cfg = cfg;
                row.cfg.grpo_reward = reward;
                row.cfg.grpo_curriculum = cr;
                row.name = std::string(reward) + (cr ? "_cr" : "_nocr");
                row.is_grpo = true;
                row.init_checkpoint = (sft_base_dir / "checkpoint.fkrm").string();
                rows.push_back(row);
            }
        }
    }

    const std::vector<int> leads = cfg.effective_leads();
    std::vector<std::string> csv_rows;

    for (AblationRow& row : rows) {
        const fs::path row_dir = out / (row.is_baseline ? "sft_base" : ("row_" + row.name));
        const auto t_row = Clock::now();
        std::string status = "ok";
        std::string metrics_cells;

        try {
            Forecaster model;
            if (row_done(row_dir, row.cfg)) {
                model = load_checkpoint(row_dir / "checkpoint.fkrm", row.cfg.config_hash());
                status = "ok (resumed)";
            } else {
                fs::create_directories(row_dir);
                if (row.is_grpo) {
                    if (!fs::exists(row.init_checkpoint))
                        throw DataError("GRPO row '" + row.name +
                                        "' needs the sft_baseline checkpoint first");
                    const Forecaster init =
                        load_checkpoint(row.init_checkpoint, row.cfg.config_hash());
                    const GrpoResult res = train_grpo(row.cfg, ds, init);
                    model = res.model;
                    write_grpo_log(row_dir / "grpo_log.csv", res.log);
                } else {
                    const SftResult res = train_sft(row.cfg, ds);
                    model = res.model;
                    write_train_log(row_dir / "train_log.csv", res.log);
                }
                save_checkpoint(row_dir / "checkpoint.fkrm", model, row.cfg.config_hash());
            }

            EvalOptions opt = EvalOptions::from_config(row.cfg);
            const LeadTimeReport rep = evaluate_forecast(model, ds.test.truth,
                                                         row.cfg.thresholds, opt);
            write_report_csv(row_dir / "report.csv", rep);
            write_report_json(row_dir / "report.json", rep);

            if (suite == "sft-axes") {
                // Binary event F1 per pollutant per lead plus pooled
                // multiclass micro.
                for (int pm = 0; pm < kPmVars; ++pm)
                    for (size_t li = 0; li < leads.size(); ++li)
                        metrics_cells +=
                            "," + metric_or(report_binary(rep, pm, static_cast<int>(li)).f1);
                for (int pm = 0; pm < kPmVars; ++pm)
                    metrics_cells += "," + metric_or(report_binary(rep, pm, -1).f1);
                metrics_cells += "," + metric_or(report_multiclass(rep, kPm25, -1).f1_micro);
                metrics_cells += "," + metric_or(report_multiclass(rep, kPm10, -1).f1_micro);
            } else {
                const int pm =
                    row.cfg.reward_pollutant == RewardPollutant::Pm10 ? kPm10 : kPm25;
                const BinaryMetrics b = report_binary(rep, pm, -1);
                const MulticlassMetrics mc = report_multiclass(rep, pm, -1);
                metrics_cells = "," + metric_or(b.far) + "," + metric_or(b.csi) + "," +
                                metric_or(b.bias) + "," + metric_or(b.f1) + "," +
                                metric_or(mc.macro_csi) + "," + metric_or(mc.f1_micro);
            }

            if (status == "ok") {
                Manifest rm = base_manifest("ablate-row", row.cfg);
                add_output(rm, row_dir, "checkpoint", row_dir / "checkpoint.fkrm");
                add_output(rm, row_dir, "report_csv", row_dir / "report.csv");
                rm.extra["status"] = "ok";
                rm.extra["row"] = row.name;
                rm.extra["full_config_hash"] = hash_hex(fnv1a(row.cfg.serialize()));
                rm.timings_ms["row"] = ms_since(t_row);
                rm.save(row_dir / "manifest.json");
            }
        } catch (const Error& e) {
            status = std::string("failed: ") + e.what();
            metrics_cells.clear();
        }

        suite_manifest.extra["row." + row.name] = status;
        suite_manifest.timings_ms["row." + row.name] = ms_since(t_row);

        std::string line = row.name;
        if (suite == "sft-axes") {
            line += "," + row.cfg.sft_source + "," +
                    (row.cfg.sft_horizon == 1 ? std::string("tf")
                                              : "ta" + std::to_string(row.cfg.sft_horizon));
        } else {
            line += row.is_baseline ? ",none,-" : ("," + row.cfg.grpo_reward + "," +
                                                   (row.cfg.grpo_curriculum ? "on" : "off"));
        }
        if (metrics_cells.empty()) {
            line += ",failed";
        } else {
            line += metrics_cells;
        }
        csv_rows.push_back(line);
    }

    const fs::path table = out / "comparison.csv";
    {
        std::ofstream csv(table, std::ios::trunc);
        if (!csv) throw DataError("cannot write " + table.string());
        if (suite == "sft-axes") {
            csv << "row,source,mode";
            for (int pm = 0; pm < kPmVars; ++pm)
                for (int lead : leads)
                    csv << ",f1_" << (pm == kPm25 ? "pm25" : "pm10") << "_" << lead << "h";
            csv << ",f1_pm25_overall,f1_pm10_overall,f1_micro_pm25,f1_micro_pm10\n";
        } else {
            csv << "row,reward,curriculum,far,csi,bias,event_f1,macro_csi,f1_micro\n";
        }
        for (const std::string& line : csv_rows) csv << line << "\n";
    }
    add_output(suite_manifest, out, "comparison", table);
    suite_manifest.timings_ms["suite"] = ms_since(t_suite);
    suite_manifest.save(out / "manifest.json");
    return suite_manifest;
}

}  // namespace fakerair
