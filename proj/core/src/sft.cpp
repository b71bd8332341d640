#include "fakerair/sft.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "fakerair/checkpoint.hpp"
#include "fakerair/errors.hpp"
#include "fakerair/optimizer.hpp"
#include "fakerair/schedule.hpp"

namespace fakerair {
namespace {

struct Item {
    int seq = 0;  // index into the training sequence list
    int t0 = 0;
};

double val_loss_of(const Forecaster& model, const FieldSequence& val, const RunConfig& cfg,
                   const ChannelWeights& w) {
    const int T = model.shape.t_in;
    const int usable = val.size() - T - cfg.sft_horizon;
    if (usable < 0)
        throw DataError("validation split of " + std::to_string(val.size()) +
                        " steps is too short for horizon " + std::to_string(cfg.sft_horizon));
    // Cap the validation cost at ~64 windows.
    const int stride = std::max(1, usable / 64 + 1);
    std::vector<int> starts;
    for (int t0 = 0; t0 <= usable; t0 += stride) starts.push_back(t0);
    return ta_loss_batch(model, val, starts, cfg.sft_horizon, cfg.weight_floor, w, nullptr);
}

}  // namespace

SftResult train_sft(const RunConfig& cfg, const Dataset& ds) {
    cfg.validate();
    const auto t_start = std::chrono::steady_clock::now();

    const ModelShape shape = ModelShape::from_config(cfg);
    ChannelWeights weights{cfg.group_weight_pm25, 1.0 - cfg.group_weight_pm25};

    // Training sequences: the station-interpolated OBS view, plus the dense
    // fields as additional pairs in fused mode.
    std::vector<FieldSequence> seqs;
    seqs.push_back(obs_view(ds.train, cfg.idw_power));
    if (cfg.sft_source == "fused") seqs.push_back(ds.train.truth);

    SftResult res;
    if (!cfg.sft_init_from.empty()) {
        res.model = load_checkpoint(cfg.sft_init_from, cfg.config_hash());
        if (!(res.model.shape == shape))
            throw DataError("init checkpoint shape differs from the configured model");
        // Normalization stats travel with the checkpoint.
    } else {
        Rng init_rng(Rng::derive(cfg.seed, 0x49u));
        res.model = Forecaster::init(shape, cfg.init_std, init_rng);
        std::vector<const GridField*> frames;
        for (const FieldSequence& s : seqs)
            for (const GridField& f : s.frames) frames.push_back(&f);
        fit_normalization(res.model, frames);
    }
    // Keep in-memory parameters identical to their on-disk representation.
    res.model.quantize_to_f32();

    const int T = shape.t_in;
    std::vector<Item> items;
    for (int si = 0; si < static_cast<int>(seqs.size()); ++si) {
        const int usable = seqs[static_cast<size_t>(si)].size() - T - cfg.sft_horizon;
        for (int t0 = 0; t0 <= usable; t0 += cfg.sft_stride) items.push_back({si, t0});
    }
    if (items.empty())
        throw DataError("no training windows: split of " +
                        std::to_string(ds.train.truth.size()) + " steps, horizon " +
                        std::to_string(cfg.sft_horizon));

    res.initial_val_loss = val_loss_of(res.model, ds.val.truth, cfg, weights);
    res.final_val_loss = res.initial_val_loss;

    if (cfg.sft_epochs == 0) {
        res.best_epoch = -1;
        return res;
    }

    const long long batches_per_epoch =
        (static_cast<long long>(items.size()) + cfg.sft_batch - 1) / cfg.sft_batch;
    const long long total_steps = batches_per_epoch * cfg.sft_epochs;

    Adam opt(static_cast<int64_t>(res.model.params.size()));
    std::vector<double> grad(res.model.params.size(), 0.0);
    std::vector<double> scratch(res.model.params.size(), 0.0);

    Forecaster best = res.model;
    double best_val = res.initial_val_loss;
    int best_epoch = -1;
    long long global_step = 0;

    for (int epoch = 0; epoch < cfg.sft_epochs; ++epoch) {
        const auto t_epoch = std::chrono::steady_clock::now();
        std::vector<Item> order = items;
        Rng shuffle_rng(Rng::derive(cfg.seed, 0x53u, static_cast<uint64_t>(epoch)));
        for (size_t i = order.size(); i > 1; --i) {
            const size_t j = static_cast<size_t>(
                shuffle_rng.uniform_int(0, static_cast<int64_t>(i) - 1));
            std::swap(order[i - 1], order[j]);
        }

        double epoch_loss = 0.0;
        double last_lr = 0.0;
        for (size_t b = 0; b < static_cast<size_t>(batches_per_epoch); ++b) {
            const size_t from = b * static_cast<size_t>(cfg.sft_batch);
            const size_t to = std::min(order.size(), from + static_cast<size_t>(cfg.sft_batch));
            const double inv_n = 1.0 / static_cast<double>(to - from);

            std::fill(grad.begin(), grad.end(), 0.0);
            double batch_loss = 0.0;
            for (size_t i = from; i < to; ++i) {
                std::fill(scratch.begin(), scratch.end(), 0.0);
                batch_loss += ta_loss(res.model, seqs[static_cast<size_t>(order[i].seq)],
                                      order[i].t0, cfg.sft_horizon, cfg.weight_floor, weights,
                                      &scratch);
                for (size_t k = 0; k < grad.size(); ++k) grad[k] += scratch[k] * inv_n;
            }
            batch_loss *= inv_n;
            if (!std::isfinite(batch_loss))
                throw NumericError("SFT aborted: non-finite loss at epoch " +
                                   std::to_string(epoch) + ", batch " + std::to_string(b));
            epoch_loss += batch_loss;

            last_lr = one_cycle_lr(global_step, total_steps, cfg.sft_peak_lr);
            opt.step(res.model.params, grad, last_lr);
            ++global_step;
        }
        epoch_loss /= static_cast<double>(batches_per_epoch);

        // Validation selects the returned checkpoint; compare at f32
        // precision, the same values a saved checkpoint would reload.
        Forecaster snapshot = res.model;
        snapshot.quantize_to_f32();
        const double val = val_loss_of(snapshot, ds.val.truth, cfg, weights);
        if (val < best_val) {
            best_val = val;
            best = snapshot;
            best_epoch = epoch;
        }

        const auto wall = std::chrono::duration_cast<std::chrono::milliseconds>(
                              std::chrono::steady_clock::now() - t_epoch)
                              .count();
        res.log.push_back({epoch, "train", epoch_loss, last_lr, wall});
        res.log.push_back({epoch, "val", val, last_lr, 0});
    }

    res.model = best;
    res.final_val_loss = best_val;
    res.best_epoch = best_epoch;

    const auto total_wall = std::chrono::duration_cast<std::chrono::milliseconds>(
                                std::chrono::steady_clock::now() - t_start)
                                .count();
    res.log.push_back({cfg.sft_epochs, "done", best_val, 0.0, total_wall});
    return res;
}

void write_train_log(const std::filesystem::path& path, const std::vector<TrainLogRow>& rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + path.string());
    out << "epoch,phase,loss,lr,wall_ms\n";
    char buf[160];
    for (const TrainLogRow& r : rows) {
        std::snprintf(buf, sizeof buf, "%d,%s,%.8g,%.8g,%lld\n", r.epoch, r.phase.c_str(), r.loss,
                      r.lr, r.wall_ms);
        out << buf;
    }
    if (!out) throw DataError("write failure: " + path.string());
}

}  // namespace fakerair
