#include "fakerair/model.hpp"

#include <algorithm>
#include <cmath>

#include "fakerair/errors.hpp"
#include "fakerair/field_io.hpp"

namespace fakerair {

ModelShape ModelShape::from_config(const RunConfig& cfg) {
    ModelShape s;
    s.t_in = cfg.t_in;
    s.kernel = cfg.kernel;
    s.hidden = cfg.hidden;
    return s;
}

ParamLayout::ParamLayout(const ModelShape& s) {
    const int64_t f = s.features();
    if (s.hidden == 0) {
        w1 = 0;                    // direct weights [n_out][F]
        b1 = s.n_out * f;          // direct bias [n_out]
        w2 = b2 = -1;
        total = s.n_out * (f + 1);
    } else {
        w1 = 0;
        b1 = w1 + static_cast<int64_t>(s.hidden) * f;
        w2 = b1 + s.hidden;
        b2 = w2 + static_cast<int64_t>(s.n_out) * s.hidden;
        total = b2 + s.n_out;
    }
}

Forecaster Forecaster::init(const ModelShape& shape, double init_std, Rng& rng) {
    Forecaster m;
    m.shape = shape;
    m.params.assign(static_cast<size_t>(shape.param_count()), 0.0);
    const ParamLayout lay(shape);
    const int64_t f = shape.features();
    if (shape.hidden == 0) {
        // Direct linear map: all weights at the small output scale.
        for (int64_t i = 0; i < shape.n_out * f; ++i) m.params[lay.w1 + i] = rng.normal(0.0, init_std);
    } else {
        // First layer at fan-in scale so hidden units see O(1) inputs; the
        // output (residual) layer small so the initial forecast stays close
        // to persistence.
        const double w1_std = 1.0 / std::sqrt(static_cast<double>(f));
        for (int64_t i = 0; i < static_cast<int64_t>(shape.hidden) * f; ++i)
            m.params[lay.w1 + i] = rng.normal(0.0, w1_std);
        for (int64_t i = 0; i < static_cast<int64_t>(shape.n_out) * shape.hidden; ++i)
            m.params[lay.w2 + i] = rng.normal(0.0, init_std);
        // b1 and b2 start at zero.
    }
    return m;
}

void Forecaster::quantize_to_f32() {
    for (double& v : params) v = f32_roundtrip(v);
    for (double& v : norm_mean) v = f32_roundtrip(v);
    for (double& v : norm_std) v = f32_roundtrip(v);
}

namespace {

void check_window(const Forecaster& model, const Window& window) {
    if (static_cast<int>(window.size()) != model.shape.t_in)
        throw UsageError("window holds " + std::to_string(window.size()) + " frames, model wants " +
                         std::to_string(model.shape.t_in));
    const GridField* first = window.front();
    for (const GridField* f : window) {
        if (f == nullptr) throw UsageError("null frame in window");
        if (f->n_vars != model.shape.n_vars)
            throw DataError("frame has " + std::to_string(f->n_vars) + " channels, model wants " +
                            std::to_string(model.shape.n_vars));
        require_same_shape(*first, *f, "window frames");
        for (double v : f->values)
            if (!std::isfinite(v)) throw DataError("non-finite value in model input window");
    }
}

}  // namespace

void model_forward(const Forecaster& model, const Window& window, PmField& pred,
                   ModelWorkspace& ws) {
    check_window(model, window);
    const ModelShape& s = model.shape;
    const int nx = window.front()->nx, ny = window.front()->ny;
    const int k = s.kernel, off = k / 2;
    const int F = s.features();
    const ParamLayout lay(s);

    if (pred.nx != nx || pred.ny != ny) pred = PmField(nx, ny);
    ws.nx = nx;
    ws.ny = ny;
    ws.features.assign(static_cast<size_t>(nx) * ny * F, 0.0);
    if (s.hidden > 0) ws.hidden.assign(static_cast<size_t>(nx) * ny * s.hidden, 0.0);

    std::vector<int> xs(static_cast<size_t>(k)), ys(static_cast<size_t>(k));
    const double* p = model.params.data();

    for (int y = 0; y < ny; ++y) {
        for (int i = 0; i < k; ++i) ys[static_cast<size_t>(i)] = (y + i - off + ny) % ny;
        for (int x = 0; x < nx; ++x) {
            for (int i = 0; i < k; ++i) xs[static_cast<size_t>(i)] = (x + i - off + nx) % nx;
            const size_t cell = static_cast<size_t>(y) * nx + x;
            double* z = &ws.features[cell * F];

            int f = 0;
            for (int t = 0; t < s.t_in; ++t) {
                const GridField* frame = window[static_cast<size_t>(t)];
                for (int v = 0; v < s.n_vars; ++v) {
                    const double mean = model.norm_mean[static_cast<size_t>(v)];
                    const double inv_std = 1.0 / model.norm_std[static_cast<size_t>(v)];
                    for (int ky = 0; ky < k; ++ky)
                        for (int kx = 0; kx < k; ++kx)
                            z[f++] = (frame->at(v, ys[static_cast<size_t>(ky)],
                                                xs[static_cast<size_t>(kx)]) -
                                      mean) *
                                     inv_std;
                }
            }

            if (s.hidden == 0) {
                for (int c = 0; c < s.n_out; ++c) {
                    const double* w = p + lay.w1 + static_cast<int64_t>(c) * F;
                    double acc = p[lay.b1 + c];
                    for (int j = 0; j < F; ++j) acc += w[j] * z[j];
                    pred.at(c, y, x) = window.back()->at(c, y, x) + acc;
                }
            } else {
                double* h = &ws.hidden[cell * s.hidden];
                for (int j = 0; j < s.hidden; ++j) {
                    const double* w = p + lay.w1 + static_cast<int64_t>(j) * F;
                    double acc = p[lay.b1 + j];
                    for (int i = 0; i < F; ++i) acc += w[i] * z[i];
                    h[j] = std::tanh(acc);
                }
                for (int c = 0; c < s.n_out; ++c) {
                    const double* w = p + lay.w2 + static_cast<int64_t>(c) * s.hidden;
                    double acc = p[lay.b2 + c];
                    for (int j = 0; j < s.hidden; ++j) acc += w[j] * h[j];
                    pred.at(c, y, x) = window.back()->at(c, y, x) + acc;
                }
            }
        }
    }
}

void model_backward(const Forecaster& model, const Window& window, const ModelWorkspace& ws,
                    const PmField& d_pred, std::vector<double>& d_params,
                    std::vector<PmField>* d_window) {
    const ModelShape& s = model.shape;
    const int nx = ws.nx, ny = ws.ny;
    if (nx == 0 || ny == 0) throw UsageError("model_backward without a matching forward");
    if (static_cast<int64_t>(d_params.size()) != s.param_count())
        throw UsageError("gradient buffer size mismatch");
    if (d_window) {
        if (static_cast<int>(d_window->size()) != s.t_in)
            throw UsageError("d_window must hold t_in fields");
        for (PmField& f : *d_window)
            if (f.nx != nx || f.ny != ny) f = PmField(nx, ny);
    }

    const int k = s.kernel, off = k / 2;
    const int F = s.features();
    const ParamLayout lay(s);
    const double* p = model.params.data();
    double* g = d_params.data();

    std::vector<int> xs(static_cast<size_t>(k)), ys(static_cast<size_t>(k));
    std::vector<double> d_pre(static_cast<size_t>(std::max(s.hidden, 1)));
    std::vector<double> d_z(static_cast<size_t>(F));

    for (int y = 0; y < ny; ++y) {
        for (int i = 0; i < k; ++i) ys[static_cast<size_t>(i)] = (y + i - off + ny) % ny;
        for (int x = 0; x < nx; ++x) {
            for (int i = 0; i < k; ++i) xs[static_cast<size_t>(i)] = (x + i - off + nx) % nx;
            const size_t cell = static_cast<size_t>(y) * nx + x;
            const double* z = &ws.features[cell * F];

            double d_out[8];  // n_out is 2; room to spare
            bool all_zero = true;
            for (int c = 0; c < s.n_out; ++c) {
                d_out[c] = d_pred.at(c, y, x);
                if (d_out[c] != 0.0) all_zero = false;
                // Residual path: the prediction adds the last frame's PM
                // directly.
                if (d_window) d_window->back().at(c, y, x) += d_out[c];
            }
            if (all_zero) continue;

            const bool need_dz = d_window != nullptr;
            if (need_dz) std::fill(d_z.begin(), d_z.end(), 0.0);

            if (s.hidden == 0) {
                for (int c = 0; c < s.n_out; ++c) {
                    const double dc = d_out[c];
                    if (dc == 0.0) continue;
                    double* gw = g + lay.w1 + static_cast<int64_t>(c) * F;
                    const double* w = p + lay.w1 + static_cast<int64_t>(c) * F;
                    for (int i = 0; i < F; ++i) gw[i] += dc * z[i];
                    g[lay.b1 + c] += dc;
                    if (need_dz)
                        for (int i = 0; i < F; ++i) d_z[static_cast<size_t>(i)] += dc * w[i];
                }
            } else {
                const double* h = &ws.hidden[cell * s.hidden];
                for (int j = 0; j < s.hidden; ++j) {
                    double dh = 0.0;
                    for (int c = 0; c < s.n_out; ++c)
                        dh += d_out[c] * p[lay.w2 + static_cast<int64_t>(c) * s.hidden + j];
                    d_pre[static_cast<size_t>(j)] = dh * (1.0 - h[j] * h[j]);
                }
                for (int c = 0; c < s.n_out; ++c) {
                    const double dc = d_out[c];
                    double* gw = g + lay.w2 + static_cast<int64_t>(c) * s.hidden;
                    for (int j = 0; j < s.hidden; ++j) gw[j] += dc * h[j];
                    g[lay.b2 + c] += dc;
                }
                for (int j = 0; j < s.hidden; ++j) {
                    const double dj = d_pre[static_cast<size_t>(j)];
                    if (dj == 0.0) continue;
                    double* gw = g + lay.w1 + static_cast<int64_t>(j) * F;
                    const double* w = p + lay.w1 + static_cast<int64_t>(j) * F;
                    for (int i = 0; i < F; ++i) gw[i] += dj * z[i];
                    g[lay.b1 + j] += dj;
                    if (need_dz)
                        for (int i = 0; i < F; ++i) d_z[static_cast<size_t>(i)] += dj * w[i];
                }
            }

            if (need_dz) {
                // Scatter feature gradients back onto the window's PM cells.
                // Wind channels are forcing, not part of any gradient path.
                int f = 0;
                for (int t = 0; t < s.t_in; ++t) {
                    PmField& dw = (*d_window)[static_cast<size_t>(t)];
                    for (int v = 0; v < s.n_vars; ++v) {
                        const double inv_std = 1.0 / model.norm_std[static_cast<size_t>(v)];
                        if (v < kPmVars) {
                            for (int ky = 0; ky < k; ++ky)
                                for (int kx = 0; kx < k; ++kx)
                                    dw.at(v, ys[static_cast<size_t>(ky)],
                                          xs[static_cast<size_t>(kx)]) +=
                                        d_z[static_cast<size_t>(f++)] * inv_std;
                        } else {
                            f += k * k;
                        }
                    }
                }
            }
        }
    }
}

GridField assemble_frame(const PmField& pred, const GridField& forcing_wind, bool clamp_pm) {
    GridField f(forcing_wind.nx, forcing_wind.ny, forcing_wind.n_vars, forcing_wind.time_index);
    for (int c = 0; c < kPmVars; ++c)
        for (int y = 0; y < f.ny; ++y)
            for (int x = 0; x < f.nx; ++x) {
                const double v = pred.at(c, y, x);
                f.at(c, y, x) = clamp_pm && v < 0.0 ? 0.0 : v;
            }
    std::copy(forcing_wind.var(kWindU).begin(), forcing_wind.var(kWindU).end(),
              f.var(kWindU).begin());
    std::copy(forcing_wind.var(kWindV).begin(), forcing_wind.var(kWindV).end(),
              f.var(kWindV).begin());
    return f;
}

void fit_normalization(Forecaster& model, const std::vector<const GridField*>& frames) {
    if (frames.empty()) throw UsageError("fit_normalization needs at least one frame");
    for (int v = 0; v < kStateVars; ++v) {
        double sum = 0.0;
        int64_t n = 0;
        for (const GridField* f : frames) {
            for (double x : f->var(v)) sum += x;
            n += static_cast<int64_t>(f->cells());
        }
        const double mean = sum / static_cast<double>(n);
        double ss = 0.0;
        for (const GridField* f : frames)
            for (double x : f->var(v)) ss += (x - mean) * (x - mean);
        const double sd = std::sqrt(ss / static_cast<double>(n));
        model.norm_mean[static_cast<size_t>(v)] = mean;
        model.norm_std[static_cast<size_t>(v)] = sd > 1e-6 ? sd : 1.0;
    }
}

}  // namespace fakerair
