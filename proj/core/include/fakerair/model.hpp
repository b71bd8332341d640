#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "fakerair/config.hpp"
#include "fakerair/grid.hpp"
#include "fakerair/rng.hpp"

namespace fakerair {

// Forecaster shape. The model is a translation-equivariant per-cell MLP: for
// every cell it gathers a k x k periodic neighborhood of all n_vars channels
// over the last t_in frames, z-scores each channel with the training stats,
// and maps the flattened feature vector through one tanh hidden layer to a
// 2-channel PM increment added on top of persistence. hidden == 0 degrades
// to a purely linear map (useful in tiny analytic tests).
struct ModelShape {
    int n_vars = kStateVars;
    int n_out = kPmVars;
    int t_in = 2;
    int kernel = 3;
    int hidden = 32;

    int features() const { return n_vars * t_in * kernel * kernel; }
    int64_t param_count() const {
        const int64_t f = features();
        if (hidden == 0) return n_out * (f + 1);
        return static_cast<int64_t>(hidden) * (f + 1) + static_cast<int64_t>(n_out) * (hidden + 1);
    }

    static ModelShape from_config(const RunConfig& cfg);
    bool operator==(const ModelShape&) const = default;
};

// Flat parameter layout (offsets into one vector<double>):
//   hidden > 0: w1 [hidden][F], b1 [hidden], w2 [n_out][hidden], b2 [n_out]
//   hidden = 0: w  [n_out][F],  b  [n_out]
struct ParamLayout {
    int64_t w1 = 0, b1 = 0, w2 = 0, b2 = 0, total = 0;
    explicit ParamLayout(const ModelShape& s);
};

struct Forecaster {
    ModelShape shape;
    std::vector<double> params;
    std::array<double, kStateVars> norm_mean{0.0, 0.0, 0.0, 0.0};
    std::array<double, kStateVars> norm_std{1.0, 1.0, 1.0, 1.0};

    static Forecaster init(const ModelShape& shape, double init_std, Rng& rng);

    // Rounds params and norm stats through f32, so in-memory values match
    // what a checkpoint save/load cycle would produce.
    void quantize_to_f32();
};

// Input window: t_in frames, oldest first. Frames are borrowed; during a
// rollout the newest entries point at model-built frames (predicted PM plus
// forcing wind) instead of dataset truth.
using Window = std::vector<const GridField*>;

// Dense 2-channel PM map, [channel][y][x] with channel 0 = PM2.5.
struct PmField {
    int nx = 0, ny = 0;
    std::vector<double> values;
    PmField() = default;
    PmField(int nx_, int ny_) : nx(nx_), ny(ny_), values(static_cast<size_t>(kPmVars) * ny_ * nx_, 0.0) {}
    double& at(int c, int y, int x) { return values[(static_cast<size_t>(c) * ny + y) * nx + x]; }
    double at(int c, int y, int x) const { return values[(static_cast<size_t>(c) * ny + y) * nx + x]; }
};

// Per-cell activations cached by forward for the matching backward call.
struct ModelWorkspace {
    std::vector<double> features;  // [cell][F]
    std::vector<double> hidden;    // [cell][hidden] (post-tanh)
    int nx = 0, ny = 0;
};

// pred = persistence(window.back() PM) + MLP increment. Requires
// window.size() == shape.t_in and matching frame shapes.
void model_forward(const Forecaster& model, const Window& window, PmField& pred,
                   ModelWorkspace& ws);

// Accumulates (+=) parameter gradients for d_pred into d_params, and, when
// d_window is non-null, gradients with respect to the PM channels of every
// window frame (wind is forcing, it never receives gradient). d_window[t]
// must be shaped like pred. The workspace must come from the matching
// forward call on the same window.
void model_backward(const Forecaster& model, const Window& window, const ModelWorkspace& ws,
                    const PmField& d_pred, std::vector<double>& d_params,
                    std::vector<PmField>* d_window);

// Builds the frame a rollout feeds back: PM channels from pred (clamped at
// zero when clamp_pm is set), wind copied from the forcing frame.
GridField assemble_frame(const PmField& pred, const GridField& forcing_wind, bool clamp_pm);

// Channel mean / std over the PM+wind channels of a frame range, used to fit
// norm stats on the training split. Guards against zero variance.
void fit_normalization(Forecaster& model, const std::vector<const GridField*>& frames);

}  // namespace fakerair
