#pragma once

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <string>
#include <vector>

#include <json.hpp>

#include "gridweave/agents.hpp"
#include "gridweave/core.hpp"
#include "gridweave/env.hpp"
#include "gridweave/io.hpp"
#include "gridweave/rng.hpp"

namespace gridweave::cfg {

using nlohmann::json;

/// Full experiment description: environment, training setup, and the
/// default algorithm. Loaded from a single JSON document.
struct ExperimentConfig {
    EnvConfig env;
    agents::TrainConfig train;
    agents::Algo algo = agents::Algo::a2c;
    std::string out_dir;
};

namespace detail {

inline void reject_unknown(const json& obj, std::initializer_list<const char*> allowed,
                           const std::string& where) {
    for (const auto& [key, _] : obj.items()) {
        bool known = false;
        for (const char* a : allowed)
            if (key == a) {
                known = true;
                break;
            }
        if (!known) throw ConfigError("unknown key \"" + key + "\" in " + where);
    }
}

inline double num(const json& obj, const char* key, double fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number()) throw ConfigError(std::string(key) + " must be a number");
    return v.get<double>();
}

inline int integer(const json& obj, const char* key, int fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number_integer()) throw ConfigError(std::string(key) + " must be an integer");
    return v.get<int>();
}

inline bool boolean(const json& obj, const char* key, bool fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_boolean()) throw ConfigError(std::string(key) + " must be a boolean");
    return v.get<bool>();
}

inline std::string text(const json& obj, const char* key, const std::string& fallback) {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_string()) throw ConfigError(std::string(key) + " must be a string");
    return v.get<std::string>();
}

} // namespace detail

inline BatteryParams parse_battery(const json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": battery must be an object");
    detail::reject_unknown(j,
                           {"capacity", "efficiency", "soc_min", "soc_max",
                            "p_charge_max", "p_discharge_max", "sell_price", "buy_price"},
                           where + ".battery");
    BatteryParams b;
    b.capacity = detail::num(j, "capacity", 0.0);
    b.efficiency = detail::num(j, "efficiency", 1.0);
    b.soc_min = detail::num(j, "soc_min", 0.0);
    b.soc_max = detail::num(j, "soc_max", 1.0);
    b.p_charge_max = detail::num(j, "p_charge_max", 0.0);
    b.p_discharge_max = detail::num(j, "p_discharge_max", 0.0);
    b.sell_price = detail::num(j, "sell_price", 0.0);
    b.buy_price = detail::num(j, "buy_price", 0.0);
    return b;
}

inline HouseholdConfig parse_household(const json& j) {
    if (!j.is_object()) throw ConfigError("household entries must be objects");
    std::string id = detail::text(j, "id", "");
    detail::reject_unknown(j,
                           {"id", "profile_type", "profile_peak_load", "pv_peak_pv_gen",
                            "battery", "battery_random_soc_0", "position"},
                           "household \"" + id + "\"");
    HouseholdConfig h;
    h.id = id;
    h.profile_type = profile_from_string(detail::text(j, "profile_type", "family"));
    h.profile_peak_load = detail::num(j, "profile_peak_load", 0.0);
    h.pv_peak_pv_gen = detail::num(j, "pv_peak_pv_gen", 0.0);
    if (j.contains("battery")) h.battery = parse_battery(j.at("battery"), h.id);
    h.battery_random_soc_0 = detail::boolean(j, "battery_random_soc_0", false);
    h.position = detail::num(j, "position", -1.0);
    return h;
}

inline datagen::GridSourceModel parse_grid(const json& j) {
    if (!j.is_object()) throw ConfigError("grid must be an object");
    detail::reject_unknown(j,
                           {"nuclear_capacity", "nuclear_price", "gas_price",
                            "nuclear_emission", "gas_emission", "buyback_ratio"},
                           "grid");
    datagen::GridSourceModel g;
    g.nuclear_capacity = detail::num(j, "nuclear_capacity", 0.0);
    g.nuclear_price = detail::num(j, "nuclear_price", g.nuclear_price);
    g.gas_price = detail::num(j, "gas_price", g.gas_price);
    g.nuclear_emission = detail::num(j, "nuclear_emission", g.nuclear_emission);
    g.gas_emission = detail::num(j, "gas_emission", g.gas_emission);
    g.buyback_ratio = detail::num(j, "buyback_ratio", g.buyback_ratio);
    return g;
}

inline agents::TrainConfig parse_train(const json& j, agents::Algo& algo) {
    if (!j.is_object()) throw ConfigError("train must be an object");
    detail::reject_unknown(j,
                           {"algo", "n_actions", "lr_actor", "lr_critic", "hidden",
                            "gamma", "batch_size", "rollout_steps", "training_steps",
                            "entropy_coef", "full_return_pg"},
                           "train");
    agents::TrainConfig t;
    algo = agents::algo_from_string(detail::text(j, "algo", "a2c"));
    t.n_actions = detail::integer(j, "n_actions", t.n_actions);
    t.lr_actor = detail::num(j, "lr_actor", t.lr_actor);
    t.lr_critic = detail::num(j, "lr_critic", t.lr_critic);
    t.hidden = detail::integer(j, "hidden", t.hidden);
    t.gamma = detail::num(j, "gamma", t.gamma);
    t.batch_size = detail::integer(j, "batch_size", t.batch_size);
    t.rollout_steps = detail::integer(j, "rollout_steps", t.rollout_steps);
    t.training_steps = detail::integer(j, "training_steps", t.training_steps);
    t.entropy_coef = detail::num(j, "entropy_coef", t.entropy_coef);
    t.full_return_pg = detail::boolean(j, "full_return_pg", t.full_return_pg);
    return t;
}

inline ExperimentConfig parse_experiment(const json& j) {
    if (!j.is_object()) throw ConfigError("experiment config must be a JSON object");
    detail::reject_unknown(j,
                           {"seed", "horizon", "mode", "noise", "temperature_scaling",
                            "spread_microgrid", "spread_household", "grid", "train",
                            "microgrids", "out_dir"},
                           "experiment config");
    ExperimentConfig cfg;
    if (j.contains("seed")) {
        const auto& s = j.at("seed");
        if (!s.is_number_unsigned() && !s.is_number_integer())
            throw ConfigError("seed must be a non-negative integer");
        cfg.env.seed = s.get<std::uint64_t>();
    }
    cfg.env.horizon = detail::integer(j, "horizon", cfg.env.horizon);
    cfg.env.mode = cost_mode_from_string(detail::text(j, "mode", "economic"));
    cfg.env.noise_enabled = detail::boolean(j, "noise", true);
    cfg.env.temperature_scaling = detail::boolean(j, "temperature_scaling", false);
    cfg.env.spread_microgrid = detail::num(j, "spread_microgrid", cfg.env.spread_microgrid);
    cfg.env.spread_household = detail::num(j, "spread_household", cfg.env.spread_household);
    if (j.contains("grid")) cfg.env.grid = parse_grid(j.at("grid"));
    if (j.contains("train")) cfg.train = parse_train(j.at("train"), cfg.algo);
    cfg.env.n_actions = cfg.train.n_actions;
    cfg.out_dir = detail::text(j, "out_dir", "");

    if (!j.contains("microgrids"))
        throw ConfigError("experiment config requires \"microgrids\"");
    const auto& mgs = j.at("microgrids");
    if (!mgs.is_array()) throw ConfigError("microgrids must be an array of arrays");
    for (const auto& mg : mgs) {
        if (!mg.is_array()) throw ConfigError("each microgrid must be an array of households");
        std::vector<HouseholdConfig> houses;
        for (const auto& h : mg) houses.push_back(parse_household(h));
        cfg.env.microgrids.push_back(std::move(houses));
    }
    cfg.env.validate();
    cfg.train.validate();
    return cfg;
}

inline json battery_to_json(const BatteryParams& b) {
    return json{{"capacity", b.capacity},
                {"efficiency", b.efficiency},
                {"soc_min", b.soc_min},
                {"soc_max", b.soc_max},
                {"p_charge_max", b.p_charge_max},
                {"p_discharge_max", b.p_discharge_max},
                {"sell_price", b.sell_price},
                {"buy_price", b.buy_price}};
}

inline json household_to_json(const HouseholdConfig& h) {
    return json{{"id", h.id},
                {"profile_type", to_string(h.profile_type)},
                {"profile_peak_load", h.profile_peak_load},
                {"pv_peak_pv_gen", h.pv_peak_pv_gen},
                {"battery", battery_to_json(h.battery)},
                {"battery_random_soc_0", h.battery_random_soc_0},
                {"position", h.position}};
}

inline json train_to_json(const agents::TrainConfig& t, agents::Algo algo) {
    return json{{"algo", agents::to_string(algo)},
                {"n_actions", t.n_actions},
                {"lr_actor", t.lr_actor},
                {"lr_critic", t.lr_critic},
                {"hidden", t.hidden},
                {"gamma", t.gamma},
                {"batch_size", t.batch_size},
                {"rollout_steps", t.rollout_steps},
                {"training_steps", t.training_steps},
                {"entropy_coef", t.entropy_coef},
                {"full_return_pg", t.full_return_pg}};
}

/// Fully resolved config back to JSON; the canonical form behind the
/// config hash.
inline json experiment_to_json(const ExperimentConfig& cfg) {
    json mgs = json::array();
    for (const auto& mg : cfg.env.microgrids) {
        json houses = json::array();
        for (const auto& h : mg) houses.push_back(household_to_json(h));
        mgs.push_back(houses);
    }
    return json{{"seed", cfg.env.seed},
                {"horizon", cfg.env.horizon},
                {"mode", to_string(cfg.env.mode)},
                {"noise", cfg.env.noise_enabled},
                {"temperature_scaling", cfg.env.temperature_scaling},
                {"spread_microgrid", cfg.env.spread_microgrid},
                {"spread_household", cfg.env.spread_household},
                {"grid",
                 json{{"nuclear_capacity", cfg.env.grid.nuclear_capacity},
                      {"nuclear_price", cfg.env.grid.nuclear_price},
                      {"gas_price", cfg.env.grid.gas_price},
                      {"nuclear_emission", cfg.env.grid.nuclear_emission},
                      {"gas_emission", cfg.env.grid.gas_emission},
                      {"buyback_ratio", cfg.env.grid.buyback_ratio}}},
                {"train", train_to_json(cfg.train, cfg.algo)},
                {"microgrids", mgs}};
}

/// Stable fingerprint of the resolved config (seed excluded so reruns of
/// the same setup with a different seed are visibly related).
inline std::string config_hash(const ExperimentConfig& cfg) {
    json j = experiment_to_json(cfg);
    j.erase("seed");
    return io::hex64(rng::fnv1a(j.dump()));
}

inline ExperimentConfig load_experiment_file(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(io::read_file(path));
    } catch (const json::parse_error& e) {
        throw ConfigError("cannot parse " + path.string() + ": " + e.what());
    } catch (const RunError& e) {
        throw ConfigError(e.what());
    }
    return parse_experiment(j);
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

inline json mlp_to_json(const agents::MlpParams& p) {
    return json{{"in", p.in},     {"hidden", p.hidden}, {"out", p.out},
                {"w1", p.w1},     {"b1", p.b1},         {"w2", p.w2},
                {"b2", p.b2}};
}

inline agents::MlpParams mlp_from_json(const json& j) {
    agents::MlpParams p;
    p.in = j.at("in").get<int>();
    p.hidden = j.at("hidden").get<int>();
    p.out = j.at("out").get<int>();
    p.w1 = j.at("w1").get<std::vector<double>>();
    p.b1 = j.at("b1").get<std::vector<double>>();
    p.w2 = j.at("w2").get<std::vector<double>>();
    p.b2 = j.at("b2").get<std::vector<double>>();
    if (p.w1.size() != static_cast<size_t>(p.hidden) * p.in ||
        p.b1.size() != static_cast<size_t>(p.hidden) ||
        p.w2.size() != static_cast<size_t>(p.out) * p.hidden ||
        p.b2.size() != static_cast<size_t>(p.out) || !p.finite())
        throw ConfigError("checkpoint network has inconsistent shapes");
    return p;
}

inline constexpr int kCheckpointVersion = 1;

inline json checkpoint_to_json(const agents::TrainResult& result,
                               const agents::TrainConfig& tc, std::uint64_t seed) {
    json j{{"format", "gridweave-checkpoint"},
           {"version", kCheckpointVersion},
           {"algo", agents::to_string(result.algo)},
           {"obs_dim", kObservationDim},
           {"n_actions", tc.n_actions},
           {"seed", seed},
           {"train", train_to_json(tc, result.algo)},
           {"actor", mlp_to_json(result.actor)}};
    j["critic"] = result.algo == agents::Algo::a2c ? mlp_to_json(result.critic) : json();
    return j;
}

struct Checkpoint {
    agents::Algo algo = agents::Algo::a2c;
    int obs_dim = 0;
    int n_actions = 0;
    std::uint64_t seed = 0;
    agents::MlpParams actor;
    agents::MlpParams critic; // empty for pg
};

inline Checkpoint checkpoint_from_json(const json& j) {
    if (!j.is_object() || j.value("format", "") != "gridweave-checkpoint")
        throw ConfigError("not a gridweave checkpoint");
    if (j.value("version", 0) != kCheckpointVersion)
        throw ConfigError("unsupported checkpoint version");
    Checkpoint c;
    c.algo = agents::algo_from_string(j.at("algo").get<std::string>());
    c.obs_dim = j.at("obs_dim").get<int>();
    c.n_actions = j.at("n_actions").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.actor = mlp_from_json(j.at("actor"));
    if (c.algo == agents::Algo::a2c && !j.at("critic").is_null())
        c.critic = mlp_from_json(j.at("critic"));
    return c;
}

inline Checkpoint load_checkpoint_file(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(io::read_file(path));
    } catch (const json::parse_error& e) {
        throw ConfigError("cannot parse " + path.string() + ": " + e.what());
    }
    return checkpoint_from_json(j);
}

} // namespace gridweave::cfg
