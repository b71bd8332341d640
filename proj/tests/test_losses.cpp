// Loss-layer checks: exact step-weight values, hand-computed MSE, rollout
// semantics (persistence, feedback, divergence reporting) and an independent
// replay oracle for the accumulated rollout loss.

#include <doctest.h>

#include <cmath>
#include <vector>

#include "fakerair/errors.hpp"
#include "fakerair/losses.hpp"
#include "fakerair/model.hpp"
#include "test_support.hpp"

using namespace fakerair;
using fakerair::testing::small_model;
using fakerair::testing::synthetic_sequence;

TEST_CASE("step weights reproduce the H=4, b=0.5 table exactly") {
    StepWeights w = step_weights(4, 0.5);
    REQUIRE(w.raw.size() == 4);
    const double raw_expect[4] = {0.5, 2.0 / 3.0, 5.0 / 6.0, 1.0};
    const double norm_expect[4] = {1.0 / 6.0, 2.0 / 9.0, 5.0 / 18.0, 1.0 / 3.0};
    for (int i = 0; i < 4; ++i) {
        CHECK(std::abs(w.raw[i] - raw_expect[i]) < 1e-12);
        CHECK(std::abs(w.normalized[i] - norm_expect[i]) < 1e-12);
    }
}

TEST_CASE("step weight properties over a grid of horizons and floors") {
    for (int h = 1; h <= 8; ++h) {
        for (double b : {0.1, 0.25, 0.5, 0.75, 1.0}) {
            StepWeights w = step_weights(h, b);
            REQUIRE(static_cast<int>(w.normalized.size()) == h);
            double sum = 0.0;
            for (int i = 0; i < h; ++i) {
                sum += w.normalized[i];
                if (i > 0) CHECK(w.normalized[i] >= w.normalized[i - 1]);
            }
            CHECK(std::abs(sum - 1.0) < 1e-12);
            if (b == 1.0)
                for (double v : w.normalized) CHECK(v == doctest::Approx(1.0 / h));
        }
    }
    SUBCASE("H=1 is a single unit weight for any floor") {
        StepWeights w = step_weights(1, 0.3);
        REQUIRE(w.normalized.size() == 1);
        CHECK(w.normalized[0] == 1.0);
    }
    SUBCASE("invalid arguments throw") {
        CHECK_THROWS_AS(step_weights(0, 0.5), UsageError);
        CHECK_THROWS_AS(step_weights(4, 0.0), UsageError);
        CHECK_THROWS_AS(step_weights(4, -0.2), UsageError);
        CHECK_THROWS_AS(step_weights(4, 1.2), UsageError);
    }
}

TEST_CASE("channel weights must sum to one") {
    ChannelWeights ok{0.3, 0.7};
    CHECK_NOTHROW(ok.validate());
    ChannelWeights bad{0.5, 0.6};
    CHECK_THROWS_AS(bad.validate(), UsageError);
}

TEST_CASE("mse loss matches a hand computation, value and gradient") {
    const int nx = 2, ny = 2;
    PmField pred(nx, ny);
    GridField target(nx, ny, kStateVars);
    ChannelWeights w{0.25, 0.75};
    // pm25: errors +1 each cell; pm10: error +2 in one cell only.
    for (int y = 0; y < ny; ++y)
        for (int x = 0; x < nx; ++x) {
            target.at(kPm25, y, x) = 10.0;
            target.at(kPm10, y, x) = 20.0;
            pred.at(0, y, x) = 11.0;
            pred.at(1, y, x) = 20.0;
        }
    pred.at(1, 1, 1) = 22.0;
    PmField grad(nx, ny);
    const double loss = mse_loss(pred, target, w, &grad);
    // 0.25 * mean(1,1,1,1) + 0.75 * mean(0,0,0,4) = 0.25 + 0.75
    CHECK(loss == doctest::Approx(1.0).epsilon(1e-12));
    for (int y = 0; y < ny; ++y)
        for (int x = 0; x < nx; ++x) {
            CHECK(grad.at(0, y, x) == doctest::Approx(2.0 * 0.25 * 1.0 / 4.0));
            const double e10 = (y == 1 && x == 1) ? 2.0 : 0.0;
            CHECK(grad.at(1, y, x) == doctest::Approx(2.0 * 0.75 * e10 / 4.0));
        }
}

TEST_CASE("zero-parameter model rolls out pure persistence") {
    FieldSequence seq = synthetic_sequence(8, 8, 8, 11);
    Forecaster m = small_model(4, 5);
    std::fill(m.params.begin(), m.params.end(), 0.0);
    ForecastTrajectory traj = rollout_predict(m, seq, 1, 4);
    const GridField& last_input = seq.frames[1 + m.shape.t_in - 1];
    REQUIRE(static_cast<int>(traj.preds.size()) == 4);
    for (const PmField& p : traj.preds)
        for (int c = 0; c < kPmVars; ++c)
            for (int y = 0; y < 8; ++y)
                for (int x = 0; x < 8; ++x) REQUIRE(p.at(c, y, x) == last_input.at(c, y, x));
}

TEST_CASE("perfect forecaster scores exactly zero") {
    // Time-frozen sequence: persistence is the perfect forecast.
    FieldSequence seq = synthetic_sequence(8, 8, 1, 21);
    for (int t = 1; t < 8; ++t) {
        GridField f = seq.frames[0];
        f.time_index = t;
        seq.frames.push_back(f);
    }
    Forecaster m = small_model(4, 5);
    std::fill(m.params.begin(), m.params.end(), 0.0);
    ChannelWeights w;
    CHECK(ta_loss(m, seq, 0, 4, 0.5, w, nullptr) == 0.0);
}

TEST_CASE("horizon 1 accumulation equals a single forward plus mse") {
    FieldSequence seq = synthetic_sequence(8, 8, 6, 33);
    Forecaster m = small_model(6, 77);
    ChannelWeights w{0.5, 0.5};
    const double l_ta = ta_loss(m, seq, 0, 1, 0.5, w, nullptr);

    Window win;
    for (int t = 0; t < m.shape.t_in; ++t) win.push_back(&seq.frames[t]);
    ModelWorkspace ws;
    PmField pred;
    pred = PmField(8, 8);
    model_forward(m, win, pred, ws);
    const double l_direct = mse_loss(pred, seq.frames[m.shape.t_in], w, nullptr);
    CHECK(l_ta == l_direct);  // same code path, bitwise identical
}

TEST_CASE("accumulated rollout loss matches an independent replay") {
    const int nx = 8, ny = 8, H = 4;
    FieldSequence seq = synthetic_sequence(nx, ny, 8, 55);
    Forecaster m = small_model(6, 13);
    ChannelWeights w{0.4, 0.6};
    const int t0 = 1;
    const double lib = ta_loss(m, seq, t0, H, 0.5, w, nullptr);

    // Replay: drive the model by hand, assembling feedback frames with the
    // raw (unclamped) predictions, and accumulate the weighted step MSEs.
    StepWeights sw = step_weights(H, 0.5);
    std::vector<GridField> fed;  // owned feedback frames
    fed.reserve(H);
    double expect = 0.0;
    for (int i = 0; i < H; ++i) {
        Window win;
        for (int t = 0; t < m.shape.t_in; ++t) {
            const int idx = t0 + i + t;  // window slides one frame per step
            const int n_truth = m.shape.t_in;  // first window is all truth
            if (i == 0 || t < n_truth - i) {
                win.push_back(&seq.frames[idx]);
            } else {
                win.push_back(&fed[idx - (t0 + m.shape.t_in)]);
            }
        }
        ModelWorkspace ws;
        PmField pred(nx, ny);
        model_forward(m, win, pred, ws);
        const GridField& target = seq.frames[t0 + m.shape.t_in + i];
        expect += sw.normalized[i] * mse_loss(pred, target, w, nullptr);
        fed.push_back(assemble_frame(pred, target, /*clamp_pm=*/false));
    }
    CHECK(lib == doctest::Approx(expect).epsilon(1e-13));
}

TEST_CASE("rollout divergence names the failing step") {
    FieldSequence seq = synthetic_sequence(8, 8, 8, 3);
    Forecaster m = small_model(0, 9);
    // A linear model with huge weights overflows once the first prediction
    // feeds back: step 1 is fine, a later step must be reported.
    for (double& p : m.params) p = 1e160;
    try {
        ta_loss(m, seq, 0, 4, 0.5, ChannelWeights{}, nullptr);
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("step") != std::string::npos);
    }
}

TEST_CASE("batch loss is the mean over windows, gradients included") {
    FieldSequence seq = synthetic_sequence(8, 8, 10, 91);
    Forecaster m = small_model(5, 17);
    ChannelWeights w;
    std::vector<int> starts = {0, 2, 4};
    std::vector<double> g_batch(m.params.size(), 0.0);
    const double l_batch = ta_loss_batch(m, seq, starts, 2, 0.5, w, &g_batch);

    double l_sum = 0.0;
    std::vector<double> g_sum(m.params.size(), 0.0);
    for (int s : starts) {
        std::vector<double> g(m.params.size(), 0.0);
        l_sum += ta_loss(m, seq, s, 2, 0.5, w, &g);
        for (size_t i = 0; i < g.size(); ++i) g_sum[i] += g[i];
    }
    CHECK(l_batch == doctest::Approx(l_sum / 3.0).epsilon(1e-13));
    for (size_t i = 0; i < g_sum.size(); ++i)
        CHECK(g_batch[i] == doctest::Approx(g_sum[i] / 3.0).epsilon(1e-10));
}

TEST_CASE("gradients accumulate across calls") {
    FieldSequence seq = synthetic_sequence(8, 8, 8, 7);
    Forecaster m = small_model(4, 23);
    ChannelWeights w;
    std::vector<double> g1(m.params.size(), 0.0);
    ta_loss(m, seq, 0, 3, 0.5, w, &g1);
    std::vector<double> g2(m.params.size(), 0.0);
    ta_loss(m, seq, 0, 3, 0.5, w, &g2);
    ta_loss(m, seq, 0, 3, 0.5, w, &g2);
    for (size_t i = 0; i < g1.size(); ++i) CHECK(g2[i] == doctest::Approx(2.0 * g1[i]));
}
