#pragma once

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "gridweave/agents.hpp"
#include "gridweave/config.hpp"
#include "gridweave/core.hpp"
#include "gridweave/datagen.hpp"
#include "gridweave/env.hpp"
#include "gridweave/io.hpp"
#include "gridweave/oracle.hpp"

namespace gridweave::cli {

using nlohmann::json;
namespace fs = std::filesystem;

inline int default_threads() {
    unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

namespace detail {

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
            .count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw RunError("cannot create output directory " + dir.string());
}

inline void write_json(const fs::path& path, const json& j) {
    io::write_file(path, j.dump(2) + "\n");
}

/// Timing is kept in its own block: it is the only part of any emitted
/// file that differs between identical reruns.
inline void write_run_summary(const fs::path& dir, const std::string& command,
                              const std::string& algo,
                              const cfg::ExperimentConfig& config,
                              const std::vector<std::string>& files, json stats,
                              double wall_seconds) {
    json j{{"format", "gridweave-run-summary"},
           {"version", 1},
           {"command", command},
           {"algo", algo},
           {"seed", config.env.seed},
           {"config_hash", cfg::config_hash(config)},
           {"files", files},
           {"stats", std::move(stats)},
           {"timing", json{{"wall_time_seconds", wall_seconds}}}};
    write_json(dir / "run_summary.json", j);
}

} // namespace detail

/// Emit the generated dataset as one CSV per series plus a manifest.
inline void cmd_generate(const cfg::ExperimentConfig& config, const fs::path& out) {
    detail::Stopwatch clock;
    detail::ensure_dir(out);
    auto households = config.env.flat_households();
    auto data = datagen::generate(households, config.env.grid, config.env.seed,
                                  config.env.horizon, config.env.noise_enabled,
                                  config.env.temperature_scaling);
    std::vector<std::string> files;
    for (size_t i = 0; i < households.size(); ++i) {
        std::string load_name = "load_" + households[i].id + ".csv";
        std::string pv_name = "pv_" + households[i].id + ".csv";
        io::write_file(out / load_name, io::series_csv(data.load[i]));
        io::write_file(out / pv_name, io::series_csv(data.pv[i]));
        files.push_back(load_name);
        files.push_back(pv_name);
    }
    io::write_file(out / "r_sd.csv", io::series_csv(data.r_sd));
    io::write_file(out / "r_bd.csv", io::series_csv(data.r_bd));
    io::write_file(out / "c.csv", io::series_csv(data.c));
    files.insert(files.end(), {"r_sd.csv", "r_bd.csv", "c.csv"});

    json manifest{{"format", "gridweave-dataset"},
                  {"version", 1},
                  {"seed", config.env.seed},
                  {"horizon", config.env.horizon},
                  {"noise", config.env.noise_enabled},
                  {"config_hash", cfg::config_hash(config)},
                  {"files", files}};
    detail::write_json(out / "manifest.json", manifest);
    files.push_back("manifest.json");

    detail::write_run_summary(out, "generate", "", config, files,
                              json{{"households", households.size()},
                                   {"horizon", config.env.horizon}},
                              clock.seconds());
}

inline std::string curve_csv(const std::vector<agents::CurvePoint>& curve) {
    std::string out = "iteration,mean_reward,mean_cost_price,mean_cost_emission\n";
    for (const auto& p : curve) {
        out += std::to_string(p.iteration);
        out += ',';
        out += io::fmt(p.mean_reward);
        out += ',';
        out += io::fmt(p.mean_cost_price);
        out += ',';
        out += io::fmt(p.mean_cost_emission);
        out += '\n';
    }
    return out;
}

/// Train a shared policy and persist checkpoint, learning curve, and
/// summary.
inline agents::TrainResult cmd_train(const cfg::ExperimentConfig& config,
                                     agents::Algo algo, const fs::path& out,
                                     int threads = default_threads()) {
    detail::Stopwatch clock;
    detail::ensure_dir(out);
    auto result = agents::train(config.env, algo, config.train, config.env.seed, threads);
    detail::write_json(out / "checkpoint.json",
                       cfg::checkpoint_to_json(result, config.train, config.env.seed));
    io::write_file(out / "curve.csv", curve_csv(result.curve));

    json stats;
    if (!result.curve.empty()) {
        const auto& last = result.curve.back();
        stats = json{{"iterations", result.curve.size()},
                     {"final_mean_reward", last.mean_reward},
                     {"final_mean_cost_price", last.mean_cost_price},
                     {"final_mean_cost_emission", last.mean_cost_emission}};
    } else {
        stats = json{{"iterations", 0}};
    }
    detail::write_run_summary(out, "train", agents::to_string(algo), config,
                              {"checkpoint.json", "curve.csv"}, stats,
                              clock.seconds());
    return result;
}

inline json score_report_to_json(const oracle::ScoreReport& report) {
    json houses = json::array();
    for (const auto& h : report.households)
        houses.push_back(json{{"id", h.id},
                              {"microgrid", h.microgrid},
                              {"price_score", h.price_score},
                              {"emission_score", h.emission_score},
                              {"scalar_score", h.scalar_score},
                              {"policy", json{{"cost_price", h.policy.price},
                                              {"cost_emission", h.policy.emission}}},
                              {"baseline", json{{"cost_price", h.baseline.price},
                                                {"cost_emission", h.baseline.emission}}}});
    json mgs = json::array();
    for (const auto& m : report.microgrids)
        mgs.push_back(json{{"price_score", m.price_score},
                           {"emission_score", m.emission_score},
                           {"scalar_score", m.scalar_score}});
    return json{{"households", houses},
                {"microgrids", mgs},
                {"distributor", json{{"price_score", report.distributor.price_score},
                                     {"emission_score", report.distributor.emission_score},
                                     {"scalar_score", report.distributor.scalar_score}}}};
}

inline std::string plan_csv(const oracle::DispatchPlan& plan) {
    std::string out = "t,command,soc,stage_cost_price,stage_cost_emission\n";
    for (size_t t = 0; t < plan.commands.size(); ++t) {
        out += std::to_string(t);
        out += ',';
        out += io::fmt(plan.commands[t]);
        out += ',';
        out += io::fmt(plan.soc_path[t + 1]);
        out += ',';
        out += io::fmt(plan.stage_cost_price[t]);
        out += ',';
        out += io::fmt(plan.stage_cost_emission[t]);
        out += '\n';
    }
    return out;
}

/// Per-household optimal dispatch plans plus scores against the
/// no-battery baseline.
inline oracle::ScoreReport cmd_oracle(const cfg::ExperimentConfig& config,
                                      const fs::path& out,
                                      int threads = default_threads(),
                                      int soc_levels = 201) {
    detail::Stopwatch clock;
    detail::ensure_dir(out);
    oracle::DispatchContext ctx(config.env, config.env.seed);
    auto baseline = ctx.no_battery_cost();

    const size_t n = ctx.n_households();
    std::vector<oracle::DispatchPlan> plans(n);
    size_t n_workers = std::min<size_t>(static_cast<size_t>(std::max(threads, 1)), n);
    auto worker = [&](size_t w) {
        for (size_t h = w; h < n; h += n_workers)
            plans[h] = oracle::optimal_dispatch_dp(ctx, h, soc_levels);
    };
    if (n_workers <= 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        for (size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker, w);
        for (auto& th : pool) th.join();
    }

    std::vector<CostSplit> costs(n);
    std::vector<std::string> files;
    for (size_t h = 0; h < n; ++h) {
        costs[h] = {plans[h].cost_price, plans[h].cost_emission};
        std::string name = "plan_" + ctx.household(h).id + ".csv";
        io::write_file(out / name, plan_csv(plans[h]));
        files.push_back(name);
    }
    auto report = oracle::make_score_report(config.env, costs, baseline);
    detail::write_json(out / "scores.json", score_report_to_json(report));
    files.push_back("scores.json");

    detail::write_run_summary(out, "oracle", "oracle", config, files,
                              json{{"price_score", report.distributor.price_score},
                                   {"emission_score", report.distributor.emission_score},
                                   {"scalar_score", report.distributor.scalar_score},
                                   {"soc_levels", soc_levels}},
                              clock.seconds());
    return report;
}

/// Greedy rollout of a trained checkpoint over the configured episode,
/// scored against the no-battery baseline.
inline oracle::ScoreReport cmd_evaluate(const cfg::ExperimentConfig& config,
                                        const fs::path& checkpoint_path,
                                        const fs::path& out) {
    detail::Stopwatch clock;
    detail::ensure_dir(out);
    auto ck = cfg::load_checkpoint_file(checkpoint_path);
    if (ck.obs_dim != kObservationDim || ck.actor.in != kObservationDim)
        throw ConfigError("checkpoint observation dimension " +
                          std::to_string(ck.obs_dim) + " does not match environment (" +
                          std::to_string(kObservationDim) + ")");
    if (ck.n_actions != config.env.n_actions)
        throw ConfigError("checkpoint action count " + std::to_string(ck.n_actions) +
                          " does not match config n_actions " +
                          std::to_string(config.env.n_actions));

    Environment env(config.env);
    auto rollout = agents::rollout_greedy(env, ck.actor, config.env.seed);
    oracle::DispatchContext ctx(config.env, config.env.seed);
    auto baseline = ctx.no_battery_cost();
    auto report = oracle::make_score_report(config.env, rollout.costs, baseline);

    std::ostringstream trace;
    env.write_trace_csv(trace);
    io::write_file(out / "trace.csv", trace.str());
    detail::write_json(out / "scores.json", score_report_to_json(report));

    double mean_reward = 0.0;
    const auto& actionable = env.actionable();
    for (size_t i : actionable) mean_reward += rollout.rewards[i];
    if (!actionable.empty()) mean_reward /= static_cast<double>(actionable.size());

    detail::write_run_summary(out, "evaluate", agents::to_string(ck.algo), config,
                              {"scores.json", "trace.csv"},
                              json{{"price_score", report.distributor.price_score},
                                   {"emission_score", report.distributor.emission_score},
                                   {"scalar_score", report.distributor.scalar_score},
                                   {"mean_reward", mean_reward}},
                              clock.seconds());
    return report;
}

/// Join run summaries into a comparison table (CSV plus aligned text).
inline void cmd_report(const std::vector<fs::path>& run_dirs, const fs::path& out) {
    if (run_dirs.empty()) throw ConfigError("report requires at least one run directory");
    detail::ensure_dir(out);

    struct Column {
        std::string label;
        json stats;
        double wall = 0.0;
    };
    std::vector<Column> columns;
    for (const auto& dir : run_dirs) {
        fs::path summary_path = dir / "run_summary.json";
        json j;
        try {
            j = json::parse(io::read_file(summary_path));
        } catch (const std::exception& e) {
            throw ConfigError("cannot read run summary " + summary_path.string() + ": " +
                              e.what());
        }
        if (j.value("format", "") != "gridweave-run-summary")
            throw ConfigError(summary_path.string() + " is not a run summary");
        Column col;
        col.label = dir.filename().string().empty() ? dir.string()
                                                    : dir.filename().string();
        col.stats = j.value("stats", json::object());
        col.wall = j.value("timing", json::object()).value("wall_time_seconds", 0.0);
        columns.push_back(std::move(col));
    }

    auto cell = [](const Column& c, const char* reward_key, const char* score_key) {
        if (c.stats.contains(reward_key)) return io::fmt(c.stats[reward_key].get<double>());
        if (score_key && c.stats.contains(score_key))
            return io::fmt(c.stats[score_key].get<double>());
        return std::string("-");
    };

    std::vector<std::pair<std::string, std::vector<std::string>>> rows;
    std::vector<std::string> row;
    for (const auto& c : columns) row.push_back(cell(c, "final_mean_reward", "mean_reward"));
    rows.emplace_back("reward", row);
    row.clear();
    for (const auto& c : columns) row.push_back(cell(c, "price_score", nullptr));
    rows.emplace_back("price_score", row);
    row.clear();
    for (const auto& c : columns) row.push_back(cell(c, "emission_score", nullptr));
    rows.emplace_back("emission_score", row);
    row.clear();
    for (const auto& c : columns) row.push_back(io::fmt(c.wall));
    rows.emplace_back("wall_time_seconds", row);

    std::string csv = "metric";
    for (const auto& c : columns) csv += "," + c.label;
    csv += '\n';
    for (const auto& [name, cells] : rows) {
        csv += name;
        for (const auto& v : cells) csv += "," + v;
        csv += '\n';
    }
    io::write_file(out / "report.csv", csv);

    // Aligned text rendering of the same table.
    std::vector<size_t> widths;
    widths.push_back(std::string("metric").size());
    for (const auto& [name, _] : rows) widths[0] = std::max(widths[0], name.size());
    for (size_t c = 0; c < columns.size(); ++c) {
        size_t w = columns[c].label.size();
        for (const auto& [_, cells] : rows) w = std::max(w, cells[c].size());
        widths.push_back(w);
    }
    auto pad = [](const std::string& s, size_t w) {
        return s + std::string(w - s.size(), ' ');
    };
    std::string txt = pad("metric", widths[0]);
    for (size_t c = 0; c < columns.size(); ++c) txt += "  " + pad(columns[c].label, widths[c + 1]);
    txt += '\n';
    for (const auto& [name, cells] : rows) {
        txt += pad(name, widths[0]);
        for (size_t c = 0; c < cells.size(); ++c) txt += "  " + pad(cells[c], widths[c + 1]);
        txt += '\n';
    }
    io::write_file(out / "report.txt", txt);
}

} // namespace gridweave::cli
