#include "fakerair/losses.hpp"

#include <algorithm>
#include <cmath>

#include "fakerair/errors.hpp"

namespace fakerair {

void ChannelWeights::validate() const {
    if (pm25 < 0.0 || pm10 < 0.0 || std::abs(pm25 + pm10 - 1.0) > 1e-12)
        throw UsageError("variable-group weights must be nonnegative and sum to 1 (got " +
                         std::to_string(pm25) + " + " + std::to_string(pm10) + ")");
}

StepWeights step_weights(int horizon, double floor) {
    if (horizon < 1) throw UsageError("step_weights: horizon must be at least 1");
    if (!(floor > 0.0 && floor <= 1.0))
        throw UsageError("step_weights: weight floor b must lie in (0, 1], got " +
                         std::to_string(floor));
    StepWeights w;
    w.horizon = horizon;
    w.floor = floor;
    w.raw.resize(static_cast<size_t>(horizon));
    if (horizon == 1) {
        w.raw[0] = 1.0;
    } else {
        for (int i = 1; i <= horizon; ++i)
            w.raw[static_cast<size_t>(i - 1)] =
                floor + (1.0 - floor) * static_cast<double>(i - 1) / (horizon - 1);
    }
    double sum = 0.0;
    for (double v : w.raw) sum += v;
    w.normalized.resize(w.raw.size());
    for (size_t i = 0; i < w.raw.size(); ++i) w.normalized[i] = w.raw[i] / sum;
    return w;
}

double mse_loss(const PmField& pred, const GridField& target, const ChannelWeights& w,
                PmField* d_pred) {
    w.validate();
    if (pred.nx != target.nx || pred.ny != target.ny)
        throw DataError("mse_loss: prediction " + std::to_string(pred.nx) + "x" +
                        std::to_string(pred.ny) + " vs target " + std::to_string(target.nx) +
                        "x" + std::to_string(target.ny));
    const int n = pred.nx * pred.ny;
    const double inv_n = 1.0 / n;
    if (d_pred && (d_pred->nx != pred.nx || d_pred->ny != pred.ny))
        *d_pred = PmField(pred.nx, pred.ny);

    double loss = 0.0;
    for (int c = 0; c < kPmVars; ++c) {
        const double wc = w.of(c);
        double acc = 0.0;
        for (int y = 0; y < pred.ny; ++y)
            for (int x = 0; x < pred.nx; ++x) {
                const double r = pred.at(c, y, x) - target.at(c, y, x);
                acc += r * r;
                if (d_pred) d_pred->at(c, y, x) = 2.0 * wc * r * inv_n;
            }
        loss += wc * (acc * inv_n);
    }
    return loss;
}

namespace {

void check_rollout_span(const FieldSequence& seq, int t_in, int t0, int horizon) {
    if (horizon < 1) throw UsageError("rollout horizon must be at least 1");
    if (t0 < 0 || t0 + t_in + horizon > seq.size())
        throw DataError("rollout window [" + std::to_string(t0) + ", " +
                        std::to_string(t0 + t_in - 1 + horizon) + "] exceeds sequence of " +
                        std::to_string(seq.size()) + " frames");
}

void check_pred_finite(const PmField& pred, int step) {
    for (double v : pred.values)
        if (!std::isfinite(v))
            throw NumericError("rollout diverged: non-finite prediction at step " +
                               std::to_string(step));
}

}  // namespace

ForecastTrajectory rollout_predict(const Forecaster& model, const FieldSequence& seq, int t0,
                                   int horizon) {
    const int T = model.shape.t_in;
    check_rollout_span(seq, T, t0, horizon);

    ForecastTrajectory traj;
    traj.t0 = t0;
    traj.horizon = horizon;
    traj.preds.resize(static_cast<size_t>(horizon));
    traj.fed_back.reserve(static_cast<size_t>(horizon));

    // Virtual frame line: first T entries are truth, later ones are the
    // model's own fed-back predictions. reserve() above keeps the borrowed
    // pointers stable.
    std::vector<const GridField*> frames(static_cast<size_t>(T + horizon), nullptr);
    for (int j = 0; j < T; ++j) frames[static_cast<size_t>(j)] = &seq.at(t0 + j);

    ModelWorkspace ws;
    for (int i = 0; i < horizon; ++i) {
        const Window win(frames.begin() + i, frames.begin() + i + T);
        model_forward(model, win, traj.preds[static_cast<size_t>(i)], ws);
        check_pred_finite(traj.preds[static_cast<size_t>(i)], i + 1);
        const GridField& forcing = seq.at(t0 + T + i);
        traj.fed_back.push_back(assemble_frame(traj.preds[static_cast<size_t>(i)], forcing,
                                               /*clamp_pm=*/false));
        frames[static_cast<size_t>(T + i)] = &traj.fed_back.back();
    }
    return traj;
}

double ta_loss(const Forecaster& model, const FieldSequence& seq, int t0, int horizon,
               double weight_floor, const ChannelWeights& w, std::vector<double>* d_params) {
    const int T = model.shape.t_in;
    check_rollout_span(seq, T, t0, horizon);
    const StepWeights weights = step_weights(horizon, weight_floor);

    std::vector<const GridField*> frames(static_cast<size_t>(T + horizon), nullptr);
    for (int j = 0; j < T; ++j) frames[static_cast<size_t>(j)] = &seq.at(t0 + j);
    std::vector<GridField> owned;
    owned.reserve(static_cast<size_t>(horizon));  // pointer stability

    std::vector<ModelWorkspace> ws(static_cast<size_t>(horizon));
    std::vector<PmField> preds(static_cast<size_t>(horizon));
    std::vector<PmField> d_mse(static_cast<size_t>(horizon));

    double total = 0.0;
    for (int i = 0; i < horizon; ++i) {
        const Window win(frames.begin() + i, frames.begin() + i + T);
        model_forward(model, win, preds[static_cast<size_t>(i)], ws[static_cast<size_t>(i)]);
        check_pred_finite(preds[static_cast<size_t>(i)], i + 1);
        const GridField& target = seq.at(t0 + T + i);
        const double li = mse_loss(preds[static_cast<size_t>(i)], target, w,
                                   d_params ? &d_mse[static_cast<size_t>(i)] : nullptr);
        total += weights.normalized[static_cast<size_t>(i)] * li;
        if (i + 1 < horizon) {
            owned.push_back(assemble_frame(preds[static_cast<size_t>(i)], target,
                                           /*clamp_pm=*/false));
            frames[static_cast<size_t>(T + i)] = &owned.back();
        }
    }

    if (d_params) {
        const int nx = preds[0].nx, ny = preds[0].ny;
        // d_feed[i]: gradient w.r.t. the PM channels of fed-back frame i,
        // filled by the backward passes of later steps.
        std::vector<PmField> d_feed(static_cast<size_t>(horizon), PmField(nx, ny));
        std::vector<PmField> d_win;
        PmField d_pred(nx, ny);

        for (int i = horizon - 1; i >= 0; --i) {
            const double wi = weights.normalized[static_cast<size_t>(i)];
            const PmField& dm = d_mse[static_cast<size_t>(i)];
            const PmField& df = d_feed[static_cast<size_t>(i)];
            for (size_t j = 0; j < d_pred.values.size(); ++j)
                d_pred.values[j] = wi * dm.values[j] + df.values[j];

            const Window win(frames.begin() + i, frames.begin() + i + T);
            const bool needs_input_grad = i > 0;  // step 0's window is all truth
            if (needs_input_grad) {
                d_win.assign(static_cast<size_t>(T), PmField(nx, ny));
                model_backward(model, win, ws[static_cast<size_t>(i)], d_pred, *d_params, &d_win);
                for (int t = 0; t < T; ++t) {
                    const int j = i + t - T;  // fed-back frame index, <0 = truth
                    if (j < 0) continue;
                    PmField& dst = d_feed[static_cast<size_t>(j)];
                    const PmField& src = d_win[static_cast<size_t>(t)];
                    for (size_t v = 0; v < dst.values.size(); ++v) dst.values[v] += src.values[v];
                }
            } else {
                model_backward(model, win, ws[static_cast<size_t>(i)], d_pred, *d_params, nullptr);
            }
        }
    }
    return total;
}

double ta_loss_batch(const Forecaster& model, const FieldSequence& seq,
                     const std::vector<int>& starts, int horizon, double weight_floor,
                     const ChannelWeights& w, std::vector<double>* d_params) {
    if (starts.empty()) throw UsageError("ta_loss_batch: empty batch");
    const double inv_k = 1.0 / static_cast<double>(starts.size());
    double total = 0.0;
    std::vector<double> scratch;
    if (d_params) scratch.assign(d_params->size(), 0.0);
    for (int t0 : starts) {
        if (d_params) {
            std::fill(scratch.begin(), scratch.end(), 0.0);
            total += ta_loss(model, seq, t0, horizon, weight_floor, w, &scratch);
            for (size_t i = 0; i < scratch.size(); ++i) (*d_params)[i] += scratch[i] * inv_k;
        } else {
            total += ta_loss(model, seq, t0, horizon, weight_floor, w, nullptr);
        }
    }
    return total * inv_k;
}

}  // namespace fakerair
