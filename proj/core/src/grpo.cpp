#include "fakerair/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>

#include "fakerair/errors.hpp"
#include "fakerair/evaluate.hpp"
#include "fakerair/losses.hpp"

namespace fakerair {

int curriculum_horizon(int epoch, int h_min, int h_max, double kappa) {
    if (h_min < 1 || h_max < h_min)
        throw ConfigError("curriculum bounds must satisfy 1 <= h_min <= h_max");
    if (!(kappa > 0.0)) throw ConfigError("curriculum kappa must be positive");
    if (epoch < 0) throw UsageError("curriculum epoch must be nonnegative");
    // The nudge keeps e.g. kappa=0.7, e=10 (6.999999999999999 in binary) on
    // the exact-arithmetic floor.
    const double h = std::floor(static_cast<double>(h_min) + kappa * epoch + 1e-9);
    return static_cast<int>(std::min(static_cast<double>(h_max), h));
}

std::vector<double> group_advantages(const std::vector<double>& rewards, double tau) {
    if (!(tau > 0.0)) throw ConfigError("advantage temperature tau must be positive");
    if (rewards.size() < 2) throw ConfigError("advantages need a group of at least 2");
    double mx = rewards[0];
    for (double r : rewards) mx = std::max(mx, r);
    std::vector<double> out(rewards.size());
    double sum = 0.0;
    for (size_t i = 0; i < rewards.size(); ++i) {
        out[i] = std::exp((rewards[i] - mx) / tau);
        sum += out[i];
    }
    for (double& v : out) v /= sum;
    return out;
}

namespace {

// One antithetic pair member around mu with perturbation magnitude abs_t.
// The high member is the plain sum; the low member mirrors it through mu via
// the rounded delta, which makes hi + lo == 2*mu exact whenever hi stays
// within [mu, 2*mu] (Sterbenz subtraction). sgn picks which member this
// call returns.
inline double antithetic_member(double mu, double sgn, double abs_t) {
    const double hi = mu + abs_t;
    const double delta = hi - mu;
    const double lo = mu - delta;
    return sgn >= 0.0 ? hi : lo;
}

}  // namespace

std::vector<PmField> sample_group(const PmField& mu, const std::array<double, 2>& sigma_raw,
                                  int group_size, Rng& rng, std::vector<PmField>* noise_out) {
    if (group_size < 2 || group_size % 2 != 0)
        throw ConfigError("group size must be even and at least 2, got " +
                          std::to_string(group_size));
    if (!(sigma_raw[0] > 0.0) || !(sigma_raw[1] > 0.0))
        throw ConfigError("sampling sigma must be positive");

    const size_t per_ch = static_cast<size_t>(mu.ny) * mu.nx;
    std::vector<PmField> actions(static_cast<size_t>(group_size), PmField(mu.nx, mu.ny));
    if (noise_out) noise_out->assign(static_cast<size_t>(group_size), PmField(mu.nx, mu.ny));

    std::vector<double> eps(mu.values.size());
    for (int p = 0; p < group_size / 2; ++p) {
        for (double& e : eps) e = rng.normal();
        PmField& a_pos = actions[static_cast<size_t>(2 * p)];
        PmField& a_neg = actions[static_cast<size_t>(2 * p + 1)];
        for (size_t i = 0; i < eps.size(); ++i) {
            const double sigma = sigma_raw[i < per_ch ? 0 : 1];
            const double e = eps[i];
            const double abs_t = std::abs(sigma * e);
            const double m = mu.values[i];
            a_pos.values[i] = antithetic_member(m, e, abs_t);
            a_neg.values[i] = antithetic_member(m, -e, abs_t);
        }
        if (noise_out) {
            PmField& n_pos = (*noise_out)[static_cast<size_t>(2 * p)];
            PmField& n_neg = (*noise_out)[static_cast<size_t>(2 * p + 1)];
            for (size_t i = 0; i < eps.size(); ++i) {
                n_pos.values[i] = eps[i];
                n_neg.values[i] = -eps[i];
            }
        }
    }
    return actions;
}

double gaussian_logprob(const PmField& a, const PmField& mu,
                        const std::array<double, 2>& sigma_raw, PmField* d_mu) {
    if (a.nx != mu.nx || a.ny != mu.ny) throw DataError("gaussian_logprob: shape mismatch");
    if (!(sigma_raw[0] > 0.0) || !(sigma_raw[1] > 0.0))
        throw ConfigError("gaussian_logprob: sigma must be positive");
    if (d_mu && (d_mu->nx != mu.nx || d_mu->ny != mu.ny)) *d_mu = PmField(mu.nx, mu.ny);

    const size_t per_ch = static_cast<size_t>(mu.ny) * mu.nx;
    double logp = 0.0;
    for (int c = 0; c < kPmVars; ++c) {
        const double sigma = sigma_raw[static_cast<size_t>(c)];
        const double inv_var = 1.0 / (sigma * sigma);
        const double log_norm = std::log(sigma) + 0.5 * std::log(2.0 * std::numbers::pi);
        for (size_t i = c * per_ch; i < (c + 1) * per_ch; ++i) {
            const double r = a.values[i] - mu.values[i];
            logp += -0.5 * r * r * inv_var - log_norm;
            if (d_mu) d_mu->values[i] = r * inv_var;
        }
    }
    return logp;
}

double aqi_reward(const PmField& action, const GridField& target, RewardPollutant which,
                  const AqiThresholds& thresholds) {
    if (action.nx != target.nx || action.ny != target.ny)
        throw DataError("aqi_reward: shape mismatch");
    double sum = 0.0;
    int channels = 0;
    for (int c = 0; c < kPmVars; ++c) {
        if (which == RewardPollutant::Pm25 && c != kPm25) continue;
        if (which == RewardPollutant::Pm10 && c != kPm10) continue;
        const Pollutant pol = c == kPm25 ? Pollutant::Pm25 : Pollutant::Pm10;
        int64_t match = 0;
        for (int y = 0; y < action.ny; ++y)
            for (int x = 0; x < action.nx; ++x) {
                const double av = std::max(0.0, action.at(c, y, x));
                if (aqi_classify(av, pol, thresholds) ==
                    aqi_classify(target.at(c, y, x), pol, thresholds))
                    ++match;
            }
        sum += static_cast<double>(match) / (static_cast<double>(action.nx) * action.ny);
        ++channels;
    }
    return sum / channels;
}

double mse_reward(const PmField& action, const GridField& target, RewardPollutant which) {
    if (action.nx != target.nx || action.ny != target.ny)
        throw DataError("mse_reward: shape mismatch");
    double acc = 0.0;
    int64_t n = 0;
    for (int c = 0; c < kPmVars; ++c) {
        if (which == RewardPollutant::Pm25 && c != kPm25) continue;
        if (which == RewardPollutant::Pm10 && c != kPm10) continue;
        for (int y = 0; y < action.ny; ++y)
            for (int x = 0; x < action.nx; ++x) {
                const double r = action.at(c, y, x) - target.at(c, y, x);
                acc += r * r;
                ++n;
            }
    }
    return -acc / static_cast<double>(n);
}

GroupRollout collect_group(const Forecaster& model, const FieldSequence& seq, int t0,
                           int horizon, const RunConfig& cfg, Rng& noise) {
    const int T = model.shape.t_in;
    if (horizon < 1) throw UsageError("collect_group: horizon must be at least 1");
    if (t0 < 0 || t0 + T + horizon > seq.size())
        throw DataError("collect_group window [" + std::to_string(t0) + "..] needs " +
                        std::to_string(t0 + T + horizon) + " frames, sequence has " +
                        std::to_string(seq.size()));
    const int G = cfg.group_size;
    if (G < 2 || G % 2 != 0)
        throw ConfigError("group size must be even and at least 2, got " + std::to_string(G));

    GroupRollout group;
    group.horizon = horizon;
    group.sigma_raw = {cfg.sigma * model.norm_std[kPm25], cfg.sigma * model.norm_std[kPm10]};
    group.members.resize(static_cast<size_t>(G));

    // Per-member sliding windows, all starting from the same truth frames.
    std::vector<std::vector<GridField>> windows(static_cast<size_t>(G));
    for (int g = 0; g < G; ++g) {
        windows[static_cast<size_t>(g)].reserve(static_cast<size_t>(T));
        for (int j = 0; j < T; ++j) windows[static_cast<size_t>(g)].push_back(seq.at(t0 + j));
    }

    PmField mu;
    ModelWorkspace ws;
    std::vector<PmField> mus(static_cast<size_t>(G), PmField(seq.nx, seq.ny));
    std::vector<double> eps(static_cast<size_t>(kPmVars) * seq.ny * seq.nx);
    const size_t per_ch = static_cast<size_t>(seq.ny) * seq.nx;

    for (int t = 0; t < horizon; ++t) {
        const GridField& target = seq.at(t0 + T + t);
        // Means first: every member's forward on its own window.
        for (int g = 0; g < G; ++g) {
            Window win;
            win.reserve(static_cast<size_t>(T));
            for (const GridField& f : windows[static_cast<size_t>(g)]) win.push_back(&f);
            model_forward(model, win, mus[static_cast<size_t>(g)], ws);
        }
        // One noise field per pair from the item's common stream; the pair
        // partner gets the exact negation.
        for (int p = 0; p < G / 2; ++p) {
            for (double& e : eps) e = noise.normal();
            for (int side = 0; side < 2; ++side) {
                const int g = 2 * p + side;
                const double flip = side == 0 ? 1.0 : -1.0;
                MemberRollout& member = group.members[static_cast<size_t>(g)];
                StepSample sample;
                sample.window = windows[static_cast<size_t>(g)];  // copy
                sample.action_unclipped = PmField(seq.nx, seq.ny);
                const PmField& m = mus[static_cast<size_t>(g)];
                for (size_t i = 0; i < eps.size(); ++i) {
                    const double sigma = group.sigma_raw[i < per_ch ? 0 : 1];
                    const double e = flip * eps[i];
                    sample.action_unclipped.values[i] =
                        antithetic_member(m.values[i], e, std::abs(sigma * e));
                }
                sample.action = sample.action_unclipped;
                for (double& v : sample.action.values) v = std::max(0.0, v);

                const double r = cfg.grpo_reward == "aqi"
                                     ? aqi_reward(sample.action, target, cfg.reward_pollutant,
                                                  cfg.thresholds)
                                     : mse_reward(sample.action, target, cfg.reward_pollutant);
                member.reward += r;

                // Feed the clipped action back.
                std::vector<GridField>& w = windows[static_cast<size_t>(g)];
                w.erase(w.begin());
                w.push_back(assemble_frame(sample.action, target, /*clamp_pm=*/true));
                member.steps.push_back(std::move(sample));
            }
        }
    }

    group.rewards.resize(static_cast<size_t>(G));
    for (int g = 0; g < G; ++g) {
        group.members[static_cast<size_t>(g)].reward /= horizon;
        group.rewards[static_cast<size_t>(g)] = group.members[static_cast<size_t>(g)].reward;
    }
    group.advantages = group_advantages(group.rewards, cfg.tau);
    return group;
}

double group_surrogate(const Forecaster& model, const GroupRollout& group,
                       std::vector<double>* d_params) {
    double loss = 0.0;
    PmField mu, d_mu, d_pred;
    ModelWorkspace ws;
    for (size_t g = 0; g < group.members.size(); ++g) {
        const double adv = group.advantages[g];
        for (const StepSample& step : group.members[g].steps) {
            Window win;
            win.reserve(step.window.size());
            for (const GridField& f : step.window) win.push_back(&f);
            model_forward(model, win, mu, ws);
            const double logp = gaussian_logprob(step.action_unclipped, mu, group.sigma_raw,
                                                 d_params ? &d_mu : nullptr);
            loss -= adv * logp;
            if (d_params) {
                if (d_pred.nx != mu.nx || d_pred.ny != mu.ny) d_pred = PmField(mu.nx, mu.ny);
                for (size_t i = 0; i < d_mu.values.size(); ++i)
                    d_pred.values[i] = -adv * d_mu.values[i];
                model_backward(model, win, ws, d_pred, *d_params, nullptr);
            }
        }
    }
    return loss;
}

GroupDiagnostics grpo_update(Forecaster& model, Adam& opt, const FieldSequence& seq, int t0,
                             int horizon, const RunConfig& cfg, Rng& noise, double lr) {
    const GroupRollout group = collect_group(model, seq, t0, horizon, cfg, noise);
    GroupDiagnostics diag;
    for (double r : group.rewards) diag.mean_reward += r;
    diag.mean_reward /= static_cast<double>(group.rewards.size());

    std::vector<double> grad(model.params.size(), 0.0);
    diag.loss = group_surrogate(model, group, &grad);

    bool finite = std::isfinite(diag.loss);
    if (finite)
        for (double gv : grad)
            if (!std::isfinite(gv)) {
                finite = false;
                break;
            }
    if (!finite) {
        diag.skipped = true;
        return diag;
    }
    opt.step(model.params, grad, lr);
    return diag;
}

namespace {

// Cheap per-epoch validation: short/mid/long leads that fit the split. The
// returned metrics may be NaN when the split is too short to score anything
// (tiny unit-test datasets).
void epoch_validation(const Forecaster& model, const FieldSequence& val, const RunConfig& cfg,
                      GrpoLogRow& row) {
    row.mean_reward = std::numeric_limits<double>::quiet_NaN();
    row.val_far = std::numeric_limits<double>::quiet_NaN();
    row.val_macro_csi = std::numeric_limits<double>::quiet_NaN();

    const int T = model.shape.t_in;
    const int reward_h = std::min(cfg.h_max, val.size() - T - 1);
    if (reward_h >= 1) {
        const int stride = std::max(1, (val.size() - T - reward_h) / 8);
        row.mean_reward = mean_policy_reward(model, val, reward_h, stride, cfg.reward_pollutant,
                                             cfg.thresholds);
    }
    if (val.size() >= T + kEvalHorizonSteps) {
        EvalOptions opt;
        opt.leads_hours = {12, 48, 96};
        opt.init_stride = std::max(1, (val.size() - T - kEvalHorizonSteps) / 6);
        opt.overall_mode = "pooled";
        const LeadTimeReport rep = evaluate_forecast(model, val, cfg.thresholds, opt);
        const int pm = cfg.reward_pollutant == RewardPollutant::Pm10 ? kPm10 : kPm25;
        const BinaryMetrics b = report_binary(rep, pm, -1);
        const MulticlassMetrics m = report_multiclass(rep, pm, -1);
        row.val_far = b.far.defined ? b.far.value : std::numeric_limits<double>::quiet_NaN();
        row.val_macro_csi =
            m.macro_csi.defined ? m.macro_csi.value : std::numeric_limits<double>::quiet_NaN();
    }
}

}  // namespace

GrpoResult train_grpo(const RunConfig& cfg, const Dataset& ds, const Forecaster& sft_model) {
    cfg.validate();
    GrpoResult res;
    res.model = sft_model;

    const FieldSequence& train = ds.train.truth;
    const int T = res.model.shape.t_in;
    const int margin = T + cfg.h_max;
    if (train.size() < margin + 1)
        throw DataError("training split of " + std::to_string(train.size()) +
                        " steps is too short for GRPO windows needing " + std::to_string(margin) +
                        " frames");

    std::vector<int> starts;
    for (int t0 = 0; t0 + margin <= train.size(); t0 += cfg.grpo_stride) starts.push_back(t0);

    const double lr = cfg.effective_grpo_lr();
    Adam opt(static_cast<int64_t>(res.model.params.size()));
    int consecutive_skips = 0;

    for (int epoch = 0; epoch < cfg.grpo_epochs; ++epoch) {
        const int horizon = cfg.grpo_curriculum
                                ? curriculum_horizon(epoch, cfg.h_min, cfg.h_max, cfg.kappa)
                                : cfg.h_max;

        std::vector<int> order(starts.begin(), starts.end());
        Rng shuffle_rng(Rng::derive(cfg.seed, 0x47u, static_cast<uint64_t>(epoch)));
        for (size_t i = order.size(); i > 1; --i) {
            const size_t j = static_cast<size_t>(
                shuffle_rng.uniform_int(0, static_cast<int64_t>(i) - 1));
            std::swap(order[i - 1], order[j]);
        }

        for (size_t item = 0; item < order.size(); ++item) {
            Rng noise(Rng::derive(cfg.seed, 0x4eu, static_cast<uint64_t>(epoch),
                                  static_cast<uint64_t>(item)));
            const GroupDiagnostics diag =
                grpo_update(res.model, opt, train, order[item], horizon, cfg, noise, lr);
            if (diag.skipped) {
                ++res.skipped_updates;
                if (++consecutive_skips > 10)
                    throw NumericError(
                        "GRPO aborted: more than 10 consecutive non-finite updates (epoch " +
                        std::to_string(epoch) + ", item " + std::to_string(item) + ")");
            } else {
                consecutive_skips = 0;
            }
        }

        GrpoLogRow row;
        row.epoch = epoch;
        row.horizon = horizon;
        epoch_validation(res.model, ds.val.truth, cfg, row);
        res.log.push_back(row);
    }

    res.model.quantize_to_f32();
    return res;
}

void write_grpo_log(const std::filesystem::path& path, const std::vector<GrpoLogRow>& rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out << "epoch,horizon,mean_reward,val_far,val_macro_csi\n";
    char buf[160];
    for (const GrpoLogRow& r : rows) {
        std::snprintf(buf, sizeof buf, "%d,%d,%.6f,%.6f,%.6f\n", r.epoch, r.horizon,
                      r.mean_reward, r.val_far, r.val_macro_csi);
        out << buf;
    }
    if (!out) throw DataError("write failure: " + path.string());
}

}  // namespace fakerair
