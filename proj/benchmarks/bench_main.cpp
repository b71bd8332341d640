// Microbenchmarks for the hot paths: per-cell model forward/backward, one
// simulator step, IDW interpolation and the verification counting loop.

#include <benchmark/benchmark.h>

#include <vector>

#include "fakerair/config.hpp"
#include "fakerair/dataset.hpp"
#include "fakerair/losses.hpp"
#include "fakerair/metrics.hpp"
#include "fakerair/model.hpp"
#include "fakerair/rng.hpp"
#include "fakerair/sim.hpp"
#include "fakerair/stations.hpp"

namespace {

using namespace fakerair;

GridField random_frame(int nx, int ny, Rng& rng, int64_t t) {
    GridField f(nx, ny, kStateVars, t);
    for (double& v : f.values) v = 20.0 + 5.0 * rng.normal();
    for (double* p = f.var(kPm25).data(); p != f.var(kPm25).data() + f.cells(); ++p)
        if (*p < 0.0) *p = 0.0;
    for (double* p = f.var(kPm10).data(); p != f.var(kPm10).data() + f.cells(); ++p)
        if (*p < 0.0) *p = 0.0;
    return f;
}

struct ModelFixture {
    Forecaster model;
    GridField f0, f1;
    Window window;
    PmField pred;
    ModelWorkspace ws;

    explicit ModelFixture(int nx, int hidden) {
        Rng rng(7);
        ModelShape shape;
        shape.hidden = hidden;
        model = Forecaster::init(shape, 0.01, rng);
        f0 = random_frame(nx, nx, rng, 0);
        f1 = random_frame(nx, nx, rng, 1);
        window = {&f0, &f1};
        pred = PmField(nx, nx);
    }
};

void BM_ModelForward(benchmark::State& state) {
    ModelFixture fx(static_cast<int>(state.range(0)), 136);
    for (auto _ : state) {
        model_forward(fx.model, fx.window, fx.pred, fx.ws);
        benchmark::DoNotOptimize(fx.pred.values.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}
BENCHMARK(BM_ModelForward)->Arg(32)->Arg(64);

void BM_ModelBackward(benchmark::State& state) {
    ModelFixture fx(static_cast<int>(state.range(0)), 136);
    model_forward(fx.model, fx.window, fx.pred, fx.ws);
    PmField d_pred(fx.pred.nx, fx.pred.ny);
    for (double& v : d_pred.values) v = 1e-3;
    std::vector<double> d_params(fx.model.params.size(), 0.0);
    std::vector<PmField> d_window(2, PmField(fx.pred.nx, fx.pred.ny));
    for (auto _ : state) {
        model_backward(fx.model, fx.window, fx.ws, d_pred, d_params, &d_window);
        benchmark::DoNotOptimize(d_params.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}
BENCHMARK(BM_ModelBackward)->Arg(32)->Arg(64);

void BM_SimStep(benchmark::State& state) {
    RunConfig cfg;
    cfg.nx = cfg.ny = static_cast<int>(state.range(0));
    SimParams p = SimParams::from_config(cfg);
    Simulator sim(p, make_sources(cfg), cfg.seed);
    GridField f = sim.initial_state();
    for (auto _ : state) {
        f = sim.step(f);
        benchmark::DoNotOptimize(f.values.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}
BENCHMARK(BM_SimStep)->Arg(64);

void BM_IdwInterpolate(benchmark::State& state) {
    Rng rng(11);
    const int nx = 64;
    std::vector<Station> st;
    for (int i = 0; i < 24; ++i)
        st.push_back({i, rng.uniform() * (nx - 1), rng.uniform() * (nx - 1)});
    IdwInterpolator idw(nx, nx, st, 2.0);
    std::vector<double> vals(st.size());
    for (double& v : vals) v = 10.0 + 30.0 * rng.uniform();
    std::vector<double> out;
    for (auto _ : state) {
        idw.interpolate(vals, out);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * nx * nx);
}
BENCHMARK(BM_IdwInterpolate);

void BM_MulticlassCounting(benchmark::State& state) {
    Rng rng(13);
    const int n = 64 * 64;
    std::vector<int> truth(n), pred(n);
    for (int i = 0; i < n; ++i) {
        truth[i] = rng.uniform_int(0, 3);
        pred[i] = rng.uniform_int(0, 3);
    }
    for (auto _ : state) {
        MultiCounts c;
        for (int i = 0; i < n; ++i)
            c.add(static_cast<AqiClass>(truth[i]), static_cast<AqiClass>(pred[i]));
        const MulticlassMetrics m = multiclass_metrics(c);
        benchmark::DoNotOptimize(m.acc);
    }
    state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_MulticlassCounting);

}  // namespace

BENCHMARK_MAIN();
