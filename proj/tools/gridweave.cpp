// Command-line driver: generate datasets, train policies, compute optimal
// dispatch, evaluate checkpoints, and join runs into comparison tables.
// Exit codes: 0 success, 2 configuration error, 3 runtime error.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gridweave/commands.hpp"
#include "gridweave/config.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool no_noise = false;
    std::string mode;
    int threads = gridweave::cli::default_threads();
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool needs_config = true) {
    auto* config = cmd->add_option("--config", opts.config_path, "experiment config JSON");
    if (needs_config) config->required();
    cmd->add_option("--out", opts.out_dir, "output directory");
    cmd->add_option("--seed", opts.seed, "seed override")
        ->each([&opts](const std::string&) { opts.seed_set = true; });
    cmd->add_flag("--no-noise", opts.no_noise, "disable generation noise");
    cmd->add_option("--mode", opts.mode, "cost mode: literal|economic")
        ->check(CLI::IsMember({"literal", "economic"}));
    cmd->add_option("--threads", opts.threads, "worker thread cap");
}

gridweave::cfg::ExperimentConfig load_config(const CommonOpts& opts) {
    auto config = gridweave::cfg::load_experiment_file(opts.config_path);
    if (opts.seed_set) config.env.seed = opts.seed;
    if (opts.no_noise) config.env.noise_enabled = false;
    if (!opts.mode.empty()) config.env.mode = gridweave::cost_mode_from_string(opts.mode);
    return config;
}

fs::path resolve_out(const CommonOpts& opts, const gridweave::cfg::ExperimentConfig& config,
                     const char* command) {
    if (!opts.out_dir.empty()) return opts.out_dir;
    if (!config.out_dir.empty()) return fs::path(config.out_dir) / command;
    return fs::path("gridweave-out") / command;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"hierarchical transactive microgrid simulator"};
    app.name("gridweave");
    app.require_subcommand(1);

    CommonOpts gen_opts, train_opts, oracle_opts, eval_opts;
    std::string algo = "a2c";
    std::string checkpoint;
    std::vector<std::string> run_dirs;
    std::string report_out = "gridweave-out/report";

    auto* gen = app.add_subcommand("generate", "emit the synthetic dataset as CSV");
    add_common(gen, gen_opts);

    auto* train = app.add_subcommand("train", "train a shared policy");
    add_common(train, train_opts);
    train->add_option("--algo", algo, "pg|a2c")->check(CLI::IsMember({"pg", "a2c"}));

    auto* oracle = app.add_subcommand("oracle", "optimal dispatch per household");
    add_common(oracle, oracle_opts);

    auto* eval = app.add_subcommand("evaluate", "score a trained checkpoint");
    add_common(eval, eval_opts);
    eval->add_option("--checkpoint", checkpoint, "checkpoint JSON")->required();

    auto* report = app.add_subcommand("report", "join run summaries into a table");
    report->add_option("runs", run_dirs, "run directories")->required();
    report->add_option("--out", report_out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (gen->parsed()) {
            auto config = load_config(gen_opts);
            gridweave::cli::cmd_generate(config, resolve_out(gen_opts, config, "generate"));
        } else if (train->parsed()) {
            auto config = load_config(train_opts);
            if (train->count("--algo") == 0) algo = to_string(config.algo);
            gridweave::cli::cmd_train(config, gridweave::agents::algo_from_string(algo),
                                      resolve_out(train_opts, config, "train"),
                                      train_opts.threads);
        } else if (oracle->parsed()) {
            auto config = load_config(oracle_opts);
            gridweave::cli::cmd_oracle(config, resolve_out(oracle_opts, config, "oracle"),
                                       oracle_opts.threads);
        } else if (eval->parsed()) {
            auto config = load_config(eval_opts);
            gridweave::cli::cmd_evaluate(config, checkpoint,
                                         resolve_out(eval_opts, config, "evaluate"));
        } else if (report->parsed()) {
            std::vector<fs::path> dirs(run_dirs.begin(), run_dirs.end());
            gridweave::cli::cmd_report(dirs, report_out);
        }
    } catch (const gridweave::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
