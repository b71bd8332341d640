// faker-air: single entry point for data generation, the two training
// stages, evaluation and the ablation suites. Exit codes: 0 success,
// 1 usage, 2 data/format, 3 numerical abort.

#include <cstdio>
#include <exception>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "fakerair/config.hpp"
#include "fakerair/errors.hpp"
#include "fakerair/pipeline.hpp"
#include "fakerair/version.hpp"

namespace {

using fakerair::RunConfig;

struct CliState {
    std::string config_path;
    std::vector<std::string> sets;
    std::string seed;
    std::string out;
    std::string data_dir;

    // train
    std::string stage;
    std::string epochs, horizon, weight_floor, init_from, source;
    std::string group_size, sigma, tau, kappa, h_min, h_max, reward, curriculum;
    std::string sft_checkpoint;

    // eval
    std::string checkpoint;
    std::string leads, overall, init_stride;
    bool dump_fields = false;

    // ablate
    std::string suite;
};

void add_common(CLI::App* cmd, CliState& st, bool needs_data) {
    cmd->add_option("--config", st.config_path, "configuration file (key=value lines)");
    cmd->add_option("--set", st.sets, "override a config key (key=value, repeatable)");
    cmd->add_option("--seed", st.seed, "override the run seed");
    cmd->add_option("--out", st.out, "output directory")->required();
    if (needs_data)
        cmd->add_option("--data-dir", st.data_dir, "directory produced by datagen")->required();
}

RunConfig build_config(const CLI::App* cmd, const CliState& st) {
    RunConfig cfg;
    if (!st.config_path.empty()) cfg = RunConfig::from_file(st.config_path);
    for (const std::string& kv : st.sets) {
        const size_t eq = kv.find('=');
        if (eq == std::string::npos)
            throw fakerair::UsageError("--set expects key=value, got '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    // Flags win over both the file and --set.
    const std::vector<std::pair<const char*, std::pair<const char*, const std::string*>>> flags = {
        {"--seed", {"seed", &st.seed}},
        {"--horizon", {"sft.horizon", &st.horizon}},
        {"--weight-floor", {"sft.weight_floor", &st.weight_floor}},
        {"--init-from", {"sft.init_from", &st.init_from}},
        {"--source", {"sft.source", &st.source}},
        {"--group-size", {"grpo.group", &st.group_size}},
        {"--sigma", {"grpo.sigma", &st.sigma}},
        {"--tau", {"grpo.tau", &st.tau}},
        {"--kappa", {"grpo.kappa", &st.kappa}},
        {"--h-min", {"grpo.h_min", &st.h_min}},
        {"--h-max", {"grpo.h_max", &st.h_max}},
        {"--reward", {"grpo.reward", &st.reward}},
        {"--curriculum", {"grpo.curriculum", &st.curriculum}},
        {"--leads", {"eval.leads", &st.leads}},
        {"--overall", {"eval.overall", &st.overall}},
        {"--init-stride", {"eval.init_stride", &st.init_stride}},
    };
    auto flag_given = [cmd](const char* name) {
        const CLI::Option* opt = cmd->get_option_no_throw(name);
        return opt != nullptr && opt->count() > 0;
    };
    for (const auto& [flag, target] : flags)
        if (flag_given(flag)) cfg.set(target.first, *target.second);
    if (flag_given("--epochs"))
        cfg.set(st.stage == "grpo" ? "grpo.epochs" : "sft.epochs", st.epochs);
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"faker-air: two-stage air-quality forecast training at desk scale"};
    app.set_version_flag("--version", std::string("faker-air ") + fakerair::kVersion);
    app.require_subcommand(1);

    CliState st;

    CLI::App* datagen = app.add_subcommand("datagen", "generate the synthetic dataset");
    add_common(datagen, st, false);

    CLI::App* train = app.add_subcommand("train", "run a training stage");
    add_common(train, st, true);
    train->add_option("--stage", st.stage, "sft or grpo")->required();
    train->add_option("--epochs", st.epochs, "epoch count for the selected stage");
    train->add_option("--horizon", st.horizon, "stage-1 rollout horizon");
    train->add_option("--weight-floor", st.weight_floor, "stage-1 step-weight floor");
    train->add_option("--init-from", st.init_from, "stage-1 warm start checkpoint");
    train->add_option("--source", st.source, "stage-1 training source: obs or fused");
    train->add_option("--group-size", st.group_size, "stage-2 rollouts per group");
    train->add_option("--sigma", st.sigma, "stage-2 policy noise scale");
    train->add_option("--tau", st.tau, "stage-2 advantage temperature");
    train->add_option("--kappa", st.kappa, "stage-2 curriculum slope");
    train->add_option("--h-min", st.h_min, "stage-2 curriculum start horizon");
    train->add_option("--h-max", st.h_max, "stage-2 curriculum cap horizon");
    train->add_option("--reward", st.reward, "stage-2 reward: aqi or mse");
    train->add_option("--curriculum", st.curriculum, "stage-2 curriculum: on or off");
    train->add_option("--sft-checkpoint", st.sft_checkpoint,
                      "stage-1 checkpoint (required for --stage grpo)");

    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
    add_common(eval_cmd, st, true);
    eval_cmd->add_option("--checkpoint", st.checkpoint, "checkpoint to evaluate")->required();
    eval_cmd->add_option("--leads", st.leads, "lead times in hours (list or 'default')");
    eval_cmd->add_option("--overall", st.overall, "overall aggregation: pooled or mean");
    eval_cmd->add_option("--init-stride", st.init_stride, "initialization stride");
    eval_cmd->add_flag("--dump-fields", st.dump_fields, "also write forecast fields (FKRF)");

    CLI::App* ablate = app.add_subcommand("ablate", "run a factorial comparison suite");
    add_common(ablate, st, true);
    ablate->add_option("--suite", st.suite, "sft-axes or grpo-axes")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
        app.exit(e);
        return 1;
    }

    try {
        if (datagen->parsed()) {
            run_datagen(build_config(datagen, st), st.out);
        } else if (train->parsed()) {
            if (st.stage != "sft" && st.stage != "grpo")
                throw fakerair::UsageError("--stage must be sft or grpo, got '" + st.stage + "'");
            const RunConfig cfg = build_config(train, st);
            if (st.stage == "sft") {
                run_train_sft(cfg, st.data_dir, st.out);
            } else {
                if (st.sft_checkpoint.empty())
                    throw fakerair::UsageError("--stage grpo requires --sft-checkpoint");
                run_train_grpo(cfg, st.data_dir, st.sft_checkpoint, st.out);
            }
        } else if (eval_cmd->parsed()) {
            run_eval(build_config(eval_cmd, st), st.checkpoint, st.data_dir, st.out,
                     st.dump_fields);
        } else if (ablate->parsed()) {
            run_ablate(st.suite, build_config(ablate, st), st.data_dir, st.out);
        }
    } catch (const fakerair::UsageError& e) {
        std::fprintf(stderr, "faker-air: usage error: %s\n", e.what());
        return 1;
    } catch (const fakerair::NumericError& e) {
        std::fprintf(stderr, "faker-air: numerical abort: %s\n", e.what());
        return 3;
    } catch (const fakerair::Error& e) {  // ConfigError, DataError
        std::fprintf(stderr, "faker-air: error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "faker-air: internal error: %s\n", e.what());
        return 3;
    }
    return 0;
}
