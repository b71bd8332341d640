#include "fakerair/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <nlohmann/json.hpp>

#include "fakerair/errors.hpp"
#include "fakerair/grpo.hpp"
#include "fakerair/losses.hpp"

namespace fakerair {
namespace {

using ordered_json = nlohmann::ordered_json;

void check_leads(const std::vector<int>& leads) {
    if (leads.empty()) throw UsageError("no lead times requested");
    for (int lead : leads)
        if (lead < 12 || lead > 120 || lead % 12 != 0)
            throw UsageError("lead " + std::to_string(lead) +
                             " h is not an even multiple of the 6 h step within 12..120");
}

int usable_inits(const FieldSequence& seq, int t_in, int stride) {
    const int last_start = seq.size() - t_in - kEvalHorizonSteps;
    if (last_start < 0) return 0;
    return last_start / stride + 1;
}

}  // namespace

EvalOptions EvalOptions::from_config(const RunConfig& cfg) {
    EvalOptions o;
    o.leads_hours = cfg.effective_leads();
    o.init_stride = cfg.eval_init_stride;
    o.overall_mode = cfg.overall_mode;
    return o;
}

LeadTimeReport evaluate_forecast(const Forecaster& model, const FieldSequence& seq,
                                 const AqiThresholds& thresholds, const EvalOptions& opt) {
    check_leads(opt.leads_hours);
    thresholds.validate();
    const int T = model.shape.t_in;
    const int n_inits = usable_inits(seq, T, opt.init_stride);
    if (n_inits == 0)
        throw DataError("sequence of " + std::to_string(seq.size()) +
                        " steps leaves 0 usable initializations (needs " +
                        std::to_string(T + kEvalHorizonSteps) + " consecutive steps)");
    if (opt.cell_mask &&
        static_cast<int>(opt.cell_mask->size()) != seq.nx * seq.ny)
        throw UsageError("cell mask size does not match the grid");

    LeadTimeReport rep;
    rep.leads_hours = opt.leads_hours;
    rep.overall_mode = opt.overall_mode;
    rep.initializations = n_inits;
    for (int pm = 0; pm < kPmVars; ++pm)
        rep.counts[static_cast<size_t>(pm)].assign(opt.leads_hours.size(), MultiCounts{});

    for (int t0 = 0; t0 + T + kEvalHorizonSteps <= seq.size(); t0 += opt.init_stride) {
        const ForecastTrajectory traj = rollout_predict(model, seq, t0, kEvalHorizonSteps);
        for (size_t li = 0; li < opt.leads_hours.size(); ++li) {
            const int step = opt.leads_hours[li] / kHoursPerStep;
            const PmField& pred = traj.preds[static_cast<size_t>(step - 1)];
            const GridField& truth = seq.at(t0 + T - 1 + step);
            for (int pm = 0; pm < kPmVars; ++pm) {
                const Pollutant pol = pm == kPm25 ? Pollutant::Pm25 : Pollutant::Pm10;
                MultiCounts& cnt = rep.counts[static_cast<size_t>(pm)][li];
                for (int y = 0; y < seq.ny; ++y)
                    for (int x = 0; x < seq.nx; ++x) {
                        if (opt.cell_mask &&
                            !(*opt.cell_mask)[static_cast<size_t>(y) * seq.nx + x])
                            continue;
                        const double pv = std::max(0.0, pred.at(pm, y, x));
                        const AqiClass pc = aqi_classify(pv, pol, thresholds);
                        const AqiClass tc = aqi_classify(truth.at(pm, y, x), pol, thresholds);
                        cnt.add(tc, pc);
                    }
            }
        }
    }

    for (int pm = 0; pm < kPmVars; ++pm) {
        MultiCounts pooled;
        for (const MultiCounts& c : rep.counts[static_cast<size_t>(pm)]) pooled += c;
        rep.pooled[static_cast<size_t>(pm)] = pooled;
    }
    return rep;
}

namespace {

Metric mean_of(const std::vector<Metric>& ms) {
    double sum = 0.0;
    int n = 0;
    for (const Metric& m : ms)
        if (m.defined) {
            sum += m.value;
            ++n;
        }
    return n == 0 ? Metric{0.0, false} : Metric{sum / n, true};
}

}  // namespace

BinaryMetrics report_binary(const LeadTimeReport& rep, int pollutant, int lead_index) {
    const auto& leads = rep.counts[static_cast<size_t>(pollutant)];
    if (lead_index >= 0) return binary_metrics(collapse_to_binary(leads.at(static_cast<size_t>(lead_index))));
    if (rep.overall_mode == "pooled")
        return binary_metrics(collapse_to_binary(rep.pooled[static_cast<size_t>(pollutant)]));
    // mean of per-lead metric values, skipping undefined leads
    std::vector<BinaryMetrics> per;
    per.reserve(leads.size());
    for (const MultiCounts& c : leads) per.push_back(binary_metrics(collapse_to_binary(c)));
    BinaryMetrics r;
    auto gather = [&](Metric BinaryMetrics::*field) {
        std::vector<Metric> ms;
        for (const BinaryMetrics& b : per) ms.push_back(b.*field);
        return mean_of(ms);
    };
    r.acc = gather(&BinaryMetrics::acc);
    r.precision = gather(&BinaryMetrics::precision);
    r.recall = gather(&BinaryMetrics::recall);
    r.f1 = gather(&BinaryMetrics::f1);
    r.far = gather(&BinaryMetrics::far);
    r.csi = gather(&BinaryMetrics::csi);
    r.bias = gather(&BinaryMetrics::bias);
    return r;
}

MulticlassMetrics report_multiclass(const LeadTimeReport& rep, int pollutant, int lead_index) {
    const auto& leads = rep.counts[static_cast<size_t>(pollutant)];
    if (lead_index >= 0) return multiclass_metrics(leads.at(static_cast<size_t>(lead_index)));
    if (rep.overall_mode == "pooled")
        return multiclass_metrics(rep.pooled[static_cast<size_t>(pollutant)]);
    std::vector<MulticlassMetrics> per;
    per.reserve(leads.size());
    for (const MultiCounts& c : leads) per.push_back(multiclass_metrics(c));
    MulticlassMetrics r;
    auto gather = [&](Metric MulticlassMetrics::*field) {
        std::vector<Metric> ms;
        for (const MulticlassMetrics& m : per) ms.push_back(m.*field);
        return mean_of(ms);
    };
    r.acc = gather(&MulticlassMetrics::acc);
    r.f1_macro = gather(&MulticlassMetrics::f1_macro);
    r.f1_weighted = gather(&MulticlassMetrics::f1_weighted);
    r.f1_micro = gather(&MulticlassMetrics::f1_micro);
    r.macro_csi = gather(&MulticlassMetrics::macro_csi);
    for (size_t k = 0; k < kNumClasses; ++k) {
        std::vector<Metric> f1s, csis;
        for (const MulticlassMetrics& m : per) {
            f1s.push_back(m.f1_class[k]);
            csis.push_back(m.csi_class[k]);
        }
        r.f1_class[k] = mean_of(f1s);
        r.csi_class[k] = mean_of(csis);
    }
    return r;
}

double rollout_mse(const Forecaster& model, const FieldSequence& seq, int horizon,
                   int init_stride) {
    const int T = model.shape.t_in;
    const ChannelWeights w;  // equal PM weights
    double total = 0.0;
    int n = 0;
    for (int t0 = 0; t0 + T + horizon <= seq.size(); t0 += init_stride) {
        const ForecastTrajectory traj = rollout_predict(model, seq, t0, horizon);
        double acc = 0.0;
        for (int i = 0; i < horizon; ++i)
            acc += mse_loss(traj.preds[static_cast<size_t>(i)], seq.at(t0 + T + i), w, nullptr);
        total += acc / horizon;
        ++n;
    }
    if (n == 0)
        throw DataError("sequence of " + std::to_string(seq.size()) +
                        " steps leaves no usable rollout windows at horizon " +
                        std::to_string(horizon));
    return total / n;
}

double mean_policy_reward(const Forecaster& model, const FieldSequence& seq, int horizon,
                          int init_stride, RewardPollutant which,
                          const AqiThresholds& thresholds) {
    const int T = model.shape.t_in;
    double total = 0.0;
    int n = 0;
    for (int t0 = 0; t0 + T + horizon <= seq.size(); t0 += init_stride) {
        const ForecastTrajectory traj = rollout_predict(model, seq, t0, horizon);
        double acc = 0.0;
        for (int i = 0; i < horizon; ++i)
            acc += aqi_reward(traj.preds[static_cast<size_t>(i)], seq.at(t0 + T + i), which,
                              thresholds);
        total += acc / horizon;
        ++n;
    }
    if (n == 0)
        throw DataError("no usable windows for mean_policy_reward at horizon " +
                        std::to_string(horizon));
    return total / n;
}

namespace {

std::string metric_cell(const Metric& m) {
    if (!m.defined) return "undefined";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", m.value);
    return buf;
}

ordered_json metric_json(const Metric& m) {
    if (!m.defined) return "undefined";
    return m.value;
}

const char* kClassNames[kNumClasses] = {"good", "moderate", "bad", "verybad"};

}  // namespace

void write_report_csv(const std::filesystem::path& path, const LeadTimeReport& rep) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out << "pollutant,lead,family,acc,precision,recall,f1,far,csi,bias,f1_macro,f1_weighted,"
           "f1_micro,f1_good,f1_moderate,f1_bad,f1_verybad,csi_good,csi_moderate,csi_bad,"
           "csi_verybad,macro_csi\n";
    for (int pm = 0; pm < kPmVars; ++pm) {
        const std::string pol = pm == kPm25 ? "pm25" : "pm10";
        const int n_leads = static_cast<int>(rep.leads_hours.size());
        for (int li = 0; li <= n_leads; ++li) {
            const bool overall = li == n_leads;
            const int lead_index = overall ? -1 : li;
            const std::string lead =
                overall ? "overall" : std::to_string(rep.leads_hours[static_cast<size_t>(li)]);
            const BinaryMetrics b = report_binary(rep, pm, lead_index);
            out << pol << "," << lead << ",binary," << metric_cell(b.acc) << ","
                << metric_cell(b.precision) << "," << metric_cell(b.recall) << ","
                << metric_cell(b.f1) << "," << metric_cell(b.far) << "," << metric_cell(b.csi)
                << "," << metric_cell(b.bias) << ",,,,,,,,,,,,\n";
            const MulticlassMetrics m = report_multiclass(rep, pm, lead_index);
            out << pol << "," << lead << ",multiclass," << metric_cell(m.acc) << ",,,,,,,"
                << metric_cell(m.f1_macro) << "," << metric_cell(m.f1_weighted) << ","
                << metric_cell(m.f1_micro);
            for (size_t k = 0; k < kNumClasses; ++k) out << "," << metric_cell(m.f1_class[k]);
            for (size_t k = 0; k < kNumClasses; ++k) out << "," << metric_cell(m.csi_class[k]);
            out << "," << metric_cell(m.macro_csi) << "\n";
        }
    }
    if (!out) throw DataError("write failure: " + path.string());
}

void write_report_json(const std::filesystem::path& path, const LeadTimeReport& rep) {
    ordered_json root;
    root["initializations"] = rep.initializations;
    root["overall_mode"] = rep.overall_mode;
    for (int pm = 0; pm < kPmVars; ++pm) {
        const std::string pol = pm == kPm25 ? "pm25" : "pm10";
        const int n_leads = static_cast<int>(rep.leads_hours.size());
        for (int li = 0; li <= n_leads; ++li) {
            const bool overall = li == n_leads;
            const int lead_index = overall ? -1 : li;
            const std::string lead =
                overall ? "overall" : std::to_string(rep.leads_hours[static_cast<size_t>(li)]);
            const BinaryMetrics b = report_binary(rep, pm, lead_index);
            ordered_json jb;
            jb["acc"] = metric_json(b.acc);
            jb["precision"] = metric_json(b.precision);
            jb["recall"] = metric_json(b.recall);
            jb["f1"] = metric_json(b.f1);
            jb["far"] = metric_json(b.far);
            jb["csi"] = metric_json(b.csi);
            jb["bias"] = metric_json(b.bias);
            const MulticlassMetrics m = report_multiclass(rep, pm, lead_index);
            ordered_json jm;
            jm["acc"] = metric_json(m.acc);
            jm["f1_macro"] = metric_json(m.f1_macro);
            jm["f1_weighted"] = metric_json(m.f1_weighted);
            jm["f1_micro"] = metric_json(m.f1_micro);
            jm["macro_csi"] = metric_json(m.macro_csi);
            for (size_t k = 0; k < kNumClasses; ++k) {
                jm[std::string("f1_") + kClassNames[k]] = metric_json(m.f1_class[k]);
                jm[std::string("csi_") + kClassNames[k]] = metric_json(m.csi_class[k]);
            }
            root[pol][lead] = {{"binary", jb}, {"multiclass", jm}};
        }
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out << root.dump(2) << "\n";
    if (!out) throw DataError("write failure: " + path.string());
}

}  // namespace fakerair
