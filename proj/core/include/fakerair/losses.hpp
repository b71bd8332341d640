#pragma once

#include <vector>

#include "fakerair/field_io.hpp"
#include "fakerair/model.hpp"

namespace fakerair {

// Per-pollutant loss weights; must sum to 1 (checked).
struct ChannelWeights {
    double pm25 = 0.5;
    double pm10 = 0.5;
    double of(int pm_channel) const { return pm_channel == 0 ? pm25 : pm10; }
    void validate() const;
};

// Linearly increasing rollout step weights: raw w_i = b + (1-b)(i-1)/(H-1)
// for H > 1, a single weight 1 for H = 1, normalized to sum 1.
struct StepWeights {
    int horizon = 1;
    double floor = 1.0;
    std::vector<double> raw;
    std::vector<double> normalized;
};

// b must lie in (0, 1]; H >= 1. Normalized weights are nondecreasing and sum
// to 1 within 1e-12.
StepWeights step_weights(int horizon, double floor);

// Weighted mean squared error over PM channels: for each channel c,
// mean over cells of (pred - target)^2, combined with weights w. The target
// frame supplies its PM channels. When d_pred is non-null the gradient
// 2 * w_c * (pred - target) / n_cells is written (not accumulated) into it.
double mse_loss(const PmField& pred, const GridField& target, const ChannelWeights& w,
                PmField* d_pred);

// H model steps from the window ending at frame index t0 + t_in - 1 of seq.
// Each step feeds the raw (unclamped) PM prediction back into the sliding
// window; wind comes from the forcing frames. Keeping feedback unclamped
// keeps the map differentiable, which the gradient tests rely on; clamping
// happens where values are consumed as concentrations (classification,
// rendering). Throws NumericError naming the step if a prediction goes
// non-finite.
struct ForecastTrajectory {
    int t0 = 0;      // first window frame index in the source sequence
    int horizon = 0;
    std::vector<PmField> preds;        // preds[i] forecasts frame t0 + t_in + i
    std::vector<GridField> fed_back;   // assembled feedback frames (internal reuse)
};

ForecastTrajectory rollout_predict(const Forecaster& model, const FieldSequence& seq, int t0,
                                   int horizon);

// Temporal-accumulation loss for one window: L = sum_i w_i * mse_i over the
// H rollout steps, with gradients flowing through the full recursion (step i
// backpropagates into every earlier step's prediction). Gradients accumulate
// (+=) into d_params when non-null. With horizon 1 this reduces to exactly
// one forward + mse_loss, sharing the same reduction code path.
double ta_loss(const Forecaster& model, const FieldSequence& seq, int t0, int horizon,
               double weight_floor, const ChannelWeights& w, std::vector<double>* d_params);

// Batch mean of ta_loss over several window starts; gradients are the mean
// of per-window gradients, accumulated in start order.
double ta_loss_batch(const Forecaster& model, const FieldSequence& seq,
                     const std::vector<int>& starts, int horizon, double weight_floor,
                     const ChannelWeights& w, std::vector<double>* d_params);

}  // namespace fakerair
