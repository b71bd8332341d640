// Stage-1 trainer behavior: reproducibility, zero-epoch identity, validation
// improvement over the near-persistence start, warm starts, divergence
// handling and the training log format.

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "fakerair/checkpoint.hpp"
#include "fakerair/dataset.hpp"
#include "fakerair/errors.hpp"
#include "fakerair/sft.hpp"

using namespace fakerair;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "fakerair-sft-tests";
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

RunConfig tiny_config() {
    RunConfig cfg;
    cfg.nx = 16;
    cfg.ny = 16;
    cfg.total_steps = 80;
    cfg.sim_spinup = 5;
    cfg.stations = 6;
    cfg.hidden = 8;
    cfg.sft_epochs = 3;
    cfg.sft_batch = 4;
    cfg.sft_stride = 2;
    cfg.sft_horizon = 4;
    return cfg;
}

const Dataset& tiny_dataset() {
    static const Dataset ds = generate_dataset(tiny_config());
    return ds;
}

}  // namespace

TEST_CASE("zero epochs return the quantized initial model") {
    RunConfig cfg = tiny_config();
    cfg.sft_epochs = 0;
    SftResult a = train_sft(cfg, tiny_dataset());
    SftResult b = train_sft(cfg, tiny_dataset());
    CHECK(a.best_epoch == -1);
    CHECK(a.final_val_loss == a.initial_val_loss);
    CHECK(a.log.empty());
    CHECK(a.model.params == b.model.params);
    // The advertised f32 storage policy holds in memory too.
    for (double v : a.model.params) CHECK(v == static_cast<double>(static_cast<float>(v)));
}

TEST_CASE("training is deterministic per seed and sensitive to it") {
    RunConfig cfg = tiny_config();
    SftResult a = train_sft(cfg, tiny_dataset());
    SftResult b = train_sft(cfg, tiny_dataset());
    CHECK(a.model.params == b.model.params);
    CHECK(a.final_val_loss == b.final_val_loss);
    REQUIRE(a.log.size() == b.log.size());
    for (size_t i = 0; i < a.log.size(); ++i) CHECK(a.log[i].loss == b.log[i].loss);

    RunConfig other = cfg;
    other.seed = cfg.seed + 1;
    // Same dataset, different training randomness: init and shuffles move.
    SftResult c = train_sft(other, tiny_dataset());
    CHECK(a.model.params != c.model.params);
}

TEST_CASE("a few epochs beat the near-persistence start on validation") {
    RunConfig cfg = tiny_config();
    SftResult r = train_sft(cfg, tiny_dataset());
    CHECK(r.final_val_loss < r.initial_val_loss);
    CHECK(r.best_epoch >= 0);
    CHECK(r.best_epoch < cfg.sft_epochs);
    SUBCASE("log covers every epoch with positive one-cycle rates") {
        int train_rows = 0, val_rows = 0, done_rows = 0;
        for (const TrainLogRow& row : r.log) {
            if (row.phase == "train") {
                ++train_rows;
                CHECK(row.lr > 0.0);
                CHECK(row.lr <= cfg.sft_peak_lr * (1.0 + 1e-12));
                CHECK(std::isfinite(row.loss));
            } else if (row.phase == "val") {
                ++val_rows;
            } else if (row.phase == "done") {
                ++done_rows;
                CHECK(row.loss == r.final_val_loss);
            }
        }
        CHECK(train_rows == cfg.sft_epochs);
        CHECK(val_rows == cfg.sft_epochs);
        CHECK(done_rows == 1);
    }
}

TEST_CASE("the training source changes the fit") {
    RunConfig fused = tiny_config();
    fused.sft_source = "fused";
    RunConfig obs = tiny_config();
    obs.sft_source = "obs";
    SftResult a = train_sft(fused, tiny_dataset());
    SftResult b = train_sft(obs, tiny_dataset());
    CHECK(a.model.params != b.model.params);
}

TEST_CASE("warm starts load the named checkpoint") {
    RunConfig cfg = tiny_config();
    SftResult first = train_sft(cfg, tiny_dataset());
    const fs::path ckpt = temp_dir() / "warm.fkrm";
    save_checkpoint(ckpt, first.model, cfg.config_hash());

    RunConfig warm = cfg;
    warm.sft_init_from = ckpt.string();
    warm.sft_epochs = 0;
    SftResult r = train_sft(warm, tiny_dataset());
    CHECK(r.model.params == first.model.params);
    CHECK(r.model.norm_mean == first.model.norm_mean);

    SUBCASE("a checkpoint from a different config is rejected") {
        save_checkpoint(ckpt, first.model, 0xabcdULL);
        CHECK_THROWS_AS(train_sft(warm, tiny_dataset()), DataError);
    }
    SUBCASE("a shape mismatch is rejected") {
        RunConfig tall = warm;
        tall.hidden = 16;
        // Same identity keys except model shape: the stored hash check fires
        // first (hidden is part of the identity), which is the right guard.
        CHECK_THROWS_AS(train_sft(tall, tiny_dataset()), DataError);
    }
}

TEST_CASE("an absurd learning rate aborts with a located error") {
    RunConfig cfg = tiny_config();
    cfg.sft_epochs = 1;
    cfg.sft_peak_lr = 1e160;
    try {
        train_sft(cfg, tiny_dataset());
        FAIL("expected NumericError");
    } catch (const NumericError& e) {
        const std::string msg = e.what();
        const bool located = msg.find("epoch") != std::string::npos ||
                             msg.find("step") != std::string::npos;
        CHECK(located);
    }
}

TEST_CASE("train log CSV round-trips the rows") {
    std::vector<TrainLogRow> rows = {{0, "train", 1.5, 0.003, 12},
                                     {0, "val", 1.25, 0.003, 0},
                                     {1, "done", 1.25, 0.0, 340}};
    const fs::path p = temp_dir() / "train_log.csv";
    write_train_log(p, rows);
    std::ifstream in(p);
    std::string line;
    REQUIRE(std::getline(in, line));
    CHECK(line == "epoch,phase,loss,lr,wall_ms");
    int n = 0;
    while (std::getline(in, line))
        if (!line.empty()) ++n;
    CHECK(n == 3);
}
