#include <doctest.h>

#include <array>
#include <vector>

#include "fakerair/grpo.hpp"
#include "fakerair/losses.hpp"
#include "fakerair/model.hpp"
#include "test_support.hpp"

using namespace fakerair;
using namespace fakerair::testing;

namespace {

double mse_of(const Forecaster& model, const FieldSequence& seq, const ChannelWeights& w) {
    Window win{&seq.frames[0], &seq.frames[1]};
    PmField pred;
    ModelWorkspace ws;
    model_forward(model, win, pred, ws);
    return mse_loss(pred, seq.frames[2], w, nullptr);
}

}  // namespace

TEST_CASE("single-step mse gradient matches finite differences") {
    const FieldSequence seq = synthetic_sequence(6, 6, 3, 901);
    const ChannelWeights w;
    for (int hidden : {0, 6}) {
        CAPTURE(hidden);
        Forecaster model = small_model(hidden, 77);
        Window win{&seq.frames[0], &seq.frames[1]};
        PmField pred, d_pred;
        ModelWorkspace ws;
        model_forward(model, win, pred, ws);
        mse_loss(pred, seq.frames[2], w, &d_pred);
        std::vector<double> grad(model.params.size(), 0.0);
        model_backward(model, win, ws, d_pred, grad, nullptr);

        Rng probe_rng(5);
        const FdReport rep = fd_check(
            model.params, [&] { return mse_of(model, seq, w); }, grad, 40, probe_rng);
        CAPTURE(rep.worst_index);
        CAPTURE(rep.worst_analytic);
        CAPTURE(rep.worst_fd);
        CHECK(rep.max_rel_err < 1e-4);
    }
}

TEST_CASE("ta loss gradient matches finite differences at H=2 and H=4") {
    const FieldSequence seq = synthetic_sequence(6, 6, 8, 902);
    const ChannelWeights w;
    for (int H : {2, 4}) {
        CAPTURE(H);
        Forecaster model = small_model(6, 78);
        std::vector<double> grad(model.params.size(), 0.0);
        ta_loss(model, seq, 0, H, 0.5, w, &grad);

        Rng probe_rng(6);
        const FdReport rep = fd_check(
            model.params, [&] { return ta_loss(model, seq, 0, H, 0.5, w, nullptr); }, grad, 40,
            probe_rng);
        CAPTURE(rep.worst_index);
        CAPTURE(rep.worst_analytic);
        CAPTURE(rep.worst_fd);
        CHECK(rep.max_rel_err < 1e-4);
    }
}

TEST_CASE("grpo surrogate gradient matches finite differences at frozen noise") {
    const FieldSequence seq = synthetic_sequence(6, 6, 8, 903);
    RunConfig cfg;
    cfg.nx = cfg.ny = 6;
    cfg.sigma = 0.1;
    cfg.group_size = 4;
    cfg.tau = 0.5;
    Forecaster model = small_model(6, 79);

    for (int H : {1, 3}) {
        CAPTURE(H);
        Rng noise(Rng::derive(11, 0x4e, 0, static_cast<uint64_t>(H)));
        const GroupRollout group = collect_group(model, seq, 0, H, cfg, noise);
        std::vector<double> grad(model.params.size(), 0.0);
        group_surrogate(model, group, &grad);

        Rng probe_rng(7);
        const FdReport rep = fd_check(
            model.params, [&] { return group_surrogate(model, group, nullptr); }, grad, 40,
            probe_rng);
        CAPTURE(rep.worst_index);
        CAPTURE(rep.worst_analytic);
        CAPTURE(rep.worst_fd);
        CHECK(rep.max_rel_err < 1e-4);
    }
}

TEST_CASE("backward accumulates and doubles with repeated calls") {
    const FieldSequence seq = synthetic_sequence(5, 5, 3, 904);
    Forecaster model = small_model(4, 80);
    Window win{&seq.frames[0], &seq.frames[1]};
    PmField pred, d_pred(5, 5);
    ModelWorkspace ws;
    model_forward(model, win, pred, ws);
    for (double& v : d_pred.values) v = 0.25;

    std::vector<double> once(model.params.size(), 0.0);
    model_backward(model, win, ws, d_pred, once, nullptr);
    std::vector<double> twice(model.params.size(), 0.0);
    model_backward(model, win, ws, d_pred, twice, nullptr);
    model_backward(model, win, ws, d_pred, twice, nullptr);
    for (size_t i = 0; i < once.size(); ++i) CHECK(twice[i] == doctest::Approx(2.0 * once[i]));

    PmField zero(5, 5);
    std::vector<double> silent(model.params.size(), 0.0);
    model_backward(model, win, ws, zero, silent, nullptr);
    for (double g : silent) CHECK(g == 0.0);
}
