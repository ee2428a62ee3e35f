#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "gridweave/core.hpp"
#include "gridweave/env.hpp"

namespace gridweave::oracle {

/// Optimal battery schedule for one household and the costs of executing
/// it. Commands use the battery_step convention; soc_path has one more
/// entry than commands.
struct DispatchPlan {
    std::vector<double> commands;
    std::vector<double> soc_path;
    std::vector<double> stage_cost_price;
    std::vector<double> stage_cost_emission;
    double cost_price = 0.0;
    double cost_emission = 0.0;
    /// Backward-pass optimum; equals the forward-summed scalar up to
    /// floating-point association.
    double optimal_value = 0.0;
    bool soc0_snapped = false;

    double scalar() const { return cost_price + cost_emission; }
};

/// Fixed one-episode setting the oracle optimizes against: episode data,
/// posted prices, and every other household pinned to zero action. Stage
/// costs run through the same market routing as the simulator, so replay
/// through the environment reproduces them.
class DispatchContext {
public:
    /// Optimize against the episode the simulator would generate for this
    /// seed; plans are then replayable via an Environment reset to it.
    DispatchContext(const EnvConfig& cfg, std::uint64_t seed)
        : DispatchContext(cfg,
                          datagen::generate(cfg.flat_households(), cfg.grid, seed,
                                            cfg.horizon, cfg.noise_enabled,
                                            cfg.temperature_scaling)) {}

    /// Optimize against explicitly provided series.
    DispatchContext(const EnvConfig& cfg, datagen::EpisodeData data)
        : cfg_(cfg), data_(std::move(data)), topo_(Topology::from_config(cfg)) {
        cfg_.validate();
        households_ = cfg_.flat_households();
        if (data_.load.size() != households_.size() ||
            data_.pv.size() != households_.size())
            throw ConfigError("episode data does not cover every household");
        if (data_.horizon != cfg_.horizon)
            throw ConfigError("episode data horizon does not match config");
        const int horizon = cfg_.horizon;
        for (int t = 0; t < horizon; ++t) {
            auto ts = static_cast<size_t>(t);
            prices_.push_back(make_price_set(data_.r_sd[ts], data_.r_bd[ts], data_.c[ts],
                                             cfg_.spread_microgrid,
                                             cfg_.spread_household));
            std::vector<EnergyBalance> row;
            row.reserve(households_.size());
            for (size_t i = 0; i < households_.size(); ++i)
                row.push_back(make_balance(data_.load[i][ts], data_.pv[i][ts], 0.0));
            zero_balances_.push_back(std::move(row));
        }
    }

    const EnvConfig& config() const { return cfg_; }
    std::uint64_t seed() const { return data_.seed; }
    int horizon() const { return cfg_.horizon; }
    size_t n_households() const { return households_.size(); }
    const HouseholdConfig& household(size_t i) const { return households_[i]; }
    const PriceSet& prices(int t) const { return prices_[static_cast<size_t>(t)]; }
    const datagen::EpisodeData& data() const { return data_; }

    /// Cost of household h at step t if its battery flow were e_batt while
    /// everyone else stays at zero action.
    CostSplit stage_cost(int t, size_t h, double e_batt) const {
        std::vector<EnergyBalance> balances = zero_balances_[static_cast<size_t>(t)];
        balances[h] = make_balance(balances[h].e_load, balances[h].e_pv, e_batt);
        RoutedStep routed = route_step(std::move(balances), topo_);
        return household_cost(routed.balances[h], prices_[static_cast<size_t>(t)],
                              cfg_.mode);
    }

    /// Episode costs of the all-zero-action run, one entry per household.
    std::vector<CostSplit> no_battery_cost() const {
        std::vector<CostSplit> totals(n_households());
        for (int t = 0; t < horizon(); ++t) {
            RoutedStep routed = route_step(zero_balances_[static_cast<size_t>(t)], topo_);
            for (size_t i = 0; i < n_households(); ++i)
                totals[i] += household_cost(routed.balances[i],
                                            prices_[static_cast<size_t>(t)],
                                            cfg_.mode);
        }
        return totals;
    }

    /// Start-of-episode state of charge, identical to the simulator's rule.
    double initial_soc(size_t h) const {
        return gridweave::initial_soc(households_[h], data_.seed);
    }

private:
    EnvConfig cfg_;
    datagen::EpisodeData data_;
    Topology topo_;
    std::vector<HouseholdConfig> households_;
    std::vector<PriceSet> prices_;
    std::vector<std::vector<EnergyBalance>> zero_balances_;
};

namespace detail {

/// Discretized per-household dispatch problem: states are lattice points
/// over [soc_min, soc_max]; an action moves to any lattice point reachable
/// within the rate limits, including staying put. Commands are chosen so
/// that executing them lands exactly on the target point, which keeps
/// plans replayable through the continuous dynamics.
struct Lattice {
    int levels = 0;
    double soc_min = 0.0;
    double spacing = 0.0;
    int max_up = 0;   // max lattice steps per charge
    int max_down = 0; // max lattice steps per discharge
    double capacity = 0.0;
    double efficiency = 1.0;

    static Lattice build(const BatteryParams& b, int soc_levels) {
        if (soc_levels < 2) throw ConfigError("soc_levels must be >= 2");
        Lattice lat;
        lat.levels = soc_levels;
        lat.soc_min = b.soc_min;
        lat.spacing = (b.soc_max - b.soc_min) / static_cast<double>(soc_levels - 1);
        lat.capacity = b.capacity;
        lat.efficiency = b.efficiency;
        lat.max_up = std::min<int>(
            soc_levels - 1,
            static_cast<int>(std::floor(b.p_charge_max * b.efficiency / lat.spacing + 1e-9)));
        lat.max_down = std::min<int>(
            soc_levels - 1,
            static_cast<int>(std::floor(b.p_discharge_max / lat.spacing + 1e-9)));
        return lat;
    }

    double soc_at(int k) const { return soc_min + spacing * static_cast<double>(k); }

    /// Command that moves d lattice steps (d > 0 charges, d < 0 discharges).
    double command(int d) const {
        double delta = spacing * static_cast<double>(d);
        return d > 0 ? delta / efficiency : delta;
    }

    /// Meter-side energy of that command.
    double meter_energy(int d) const {
        double delta = spacing * static_cast<double>(d);
        return d > 0 ? delta * capacity / efficiency : delta * capacity * efficiency;
    }

    int nearest_index(double soc) const {
        int k = static_cast<int>(std::lround((soc - soc_min) / spacing));
        return std::clamp(k, 0, levels - 1);
    }
};

/// Per-step stage costs indexed by lattice displacement.
struct StageTable {
    int max_down = 0;
    std::vector<std::vector<CostSplit>> cost; // [t][d + max_down]

    static StageTable build(const DispatchContext& ctx, size_t h, const Lattice& lat) {
        StageTable tab;
        tab.max_down = lat.max_down;
        tab.cost.resize(static_cast<size_t>(ctx.horizon()));
        for (int t = 0; t < ctx.horizon(); ++t) {
            auto& row = tab.cost[static_cast<size_t>(t)];
            row.resize(static_cast<size_t>(lat.max_down + lat.max_up + 1));
            for (int d = -lat.max_down; d <= lat.max_up; ++d)
                row[static_cast<size_t>(d + lat.max_down)] =
                    ctx.stage_cost(t, h, lat.meter_energy(d));
        }
        return tab;
    }

    const CostSplit& at(int t, int d) const {
        return cost[static_cast<size_t>(t)][static_cast<size_t>(d + max_down)];
    }
};

} // namespace detail

/// Trivial plan for a household with no usable battery: all-zero commands
/// at the no-battery cost.
inline DispatchPlan zero_plan(const DispatchContext& ctx, size_t h) {
    DispatchPlan plan;
    const int horizon = ctx.horizon();
    double soc = ctx.household(h).battery.capacity > 0.0 ? ctx.initial_soc(h) : 0.0;
    plan.commands.assign(static_cast<size_t>(horizon), 0.0);
    plan.soc_path.assign(static_cast<size_t>(horizon) + 1, soc);
    for (int t = 0; t < horizon; ++t) {
        CostSplit c = ctx.stage_cost(t, h, 0.0);
        plan.stage_cost_price.push_back(c.price);
        plan.stage_cost_emission.push_back(c.emission);
        plan.cost_price += c.price;
        plan.cost_emission += c.emission;
        plan.optimal_value += c.scalar();
    }
    return plan;
}

/// Exact backward dynamic program over the SoC lattice; minimizes the
/// scalar (price + emission) episode cost of one household against fixed
/// prices and zero-action neighbours.
inline DispatchPlan optimal_dispatch_dp(const DispatchContext& ctx, size_t h,
                                        int soc_levels = 201) {
    const auto& battery = ctx.household(h).battery;
    if (battery.capacity <= 0.0) return zero_plan(ctx, h);

    const auto lat = detail::Lattice::build(battery, soc_levels);
    const auto stages = detail::StageTable::build(ctx, h, lat);
    const int horizon = ctx.horizon();
    const int n = lat.levels;

    std::vector<std::vector<double>> value(static_cast<size_t>(horizon) + 1,
                                           std::vector<double>(static_cast<size_t>(n), 0.0));
    std::vector<std::vector<int>> choice(static_cast<size_t>(horizon),
                                         std::vector<int>(static_cast<size_t>(n), 0));

    for (int t = horizon - 1; t >= 0; --t) {
        for (int k = 0; k < n; ++k) {
            double best = std::numeric_limits<double>::infinity();
            int best_d = 0;
            int lo = -std::min(lat.max_down, k);
            int hi = std::min(lat.max_up, n - 1 - k);
            for (int d = lo; d <= hi; ++d) {
                double v = stages.at(t, d).scalar() +
                           value[static_cast<size_t>(t) + 1][static_cast<size_t>(k + d)];
                if (v < best) {
                    best = v;
                    best_d = d;
                }
            }
            value[static_cast<size_t>(t)][static_cast<size_t>(k)] = best;
            choice[static_cast<size_t>(t)][static_cast<size_t>(k)] = best_d;
        }
    }

    DispatchPlan plan;
    double soc0 = ctx.initial_soc(h);
    int k = lat.nearest_index(soc0);
    plan.soc0_snapped = std::abs(lat.soc_at(k) - soc0) > 1e-12;
    plan.optimal_value = value[0][static_cast<size_t>(k)];
    plan.soc_path.push_back(lat.soc_at(k));
    for (int t = 0; t < horizon; ++t) {
        int d = choice[static_cast<size_t>(t)][static_cast<size_t>(k)];
        const CostSplit& c = stages.at(t, d);
        plan.commands.push_back(lat.command(d));
        plan.stage_cost_price.push_back(c.price);
        plan.stage_cost_emission.push_back(c.emission);
        plan.cost_price += c.price;
        plan.cost_emission += c.emission;
        k += d;
        plan.soc_path.push_back(lat.soc_at(k));
    }
    return plan;
}

/// Exhaustive check of the dynamic program: enumerate every lattice action
/// sequence by memo-free recursion over the identical stage costs and
/// transition rule. Evaluation order matches the DP exactly, so the minima
/// are bitwise equal. Only viable for tiny instances.
struct BruteForceResult {
    DispatchPlan plan;
    std::uint64_t leaves = 0; // action sequences enumerated
};

inline BruteForceResult brute_force_dispatch(const DispatchContext& ctx, size_t h,
                                             int soc_levels) {
    const auto& battery = ctx.household(h).battery;
    if (ctx.horizon() > 6)
        throw ConfigError("brute_force_dispatch: horizon above enumeration bound (6)");
    if (soc_levels > 8)
        throw ConfigError("brute_force_dispatch: soc_levels above enumeration bound (8)");
    if (battery.capacity <= 0.0) return {zero_plan(ctx, h), 1};

    const auto lat = detail::Lattice::build(battery, soc_levels);
    const auto stages = detail::StageTable::build(ctx, h, lat);
    const int horizon = ctx.horizon();
    const int n = lat.levels;

    BruteForceResult result;

    // Recursive enumeration; shares the DP's evaluation order.
    auto recurse = [&](auto&& self, int t, int k) -> double {
        if (t == horizon) {
            ++result.leaves;
            return 0.0;
        }
        double best = std::numeric_limits<double>::infinity();
        int lo = -std::min(lat.max_down, k);
        int hi = std::min(lat.max_up, n - 1 - k);
        for (int d = lo; d <= hi; ++d)
            best = std::min(best, stages.at(t, d).scalar() + self(self, t + 1, k + d));
        return best;
    };

    // Leaf counting needs one full pass; path extraction re-expands the
    // chosen branch level by level without counting.
    double soc0 = ctx.initial_soc(h);
    int k0 = lat.nearest_index(soc0);
    result.plan.soc0_snapped = std::abs(lat.soc_at(k0) - soc0) > 1e-12;
    result.plan.optimal_value = recurse(recurse, 0, k0);
    result.plan.soc_path.push_back(lat.soc_at(k0));

    int k = k0;
    for (int t = 0; t < horizon; ++t) {
        double best = std::numeric_limits<double>::infinity();
        int best_d = 0;
        int lo = -std::min(lat.max_down, k);
        int hi = std::min(lat.max_up, n - 1 - k);
        std::uint64_t saved_leaves = result.leaves;
        for (int d = lo; d <= hi; ++d) {
            double v = stages.at(t, d).scalar() + recurse(recurse, t + 1, k + d);
            if (v < best) {
                best = v;
                best_d = d;
            }
        }
        result.leaves = saved_leaves; // extraction passes do not count
        const CostSplit& c = stages.at(t, best_d);
        result.plan.commands.push_back(lat.command(best_d));
        result.plan.stage_cost_price.push_back(c.price);
        result.plan.stage_cost_emission.push_back(c.emission);
        result.plan.cost_price += c.price;
        result.plan.cost_emission += c.emission;
        k += best_d;
        result.plan.soc_path.push_back(lat.soc_at(k));
    }
    return result;
}

/// Execute a plan in the real simulator (all other households zero-action)
/// and total the household's episode cost.
inline CostSplit replay_plan(const EnvConfig& cfg, std::uint64_t seed, size_t h,
                             const DispatchPlan& plan) {
    Environment env(cfg);
    env.reset(seed);
    const auto& actionable = env.actionable();
    CostSplit total;
    for (int t = 0; !env.done(); ++t) {
        std::vector<double> commands(actionable.size(), 0.0);
        for (size_t k = 0; k < actionable.size(); ++k)
            if (actionable[k] == h) commands[k] = plan.commands[static_cast<size_t>(t)];
        StepResult res = env.step_power(commands);
        total += household_cost(res.balances[h], res.prices[env.microgrid_of(h)],
                                cfg.mode);
    }
    return total;
}

// ---------------------------------------------------------------------------
// Performance metric
// ---------------------------------------------------------------------------

/// Relative cost change of a policy against the no-battery baseline;
/// negative is an improvement. A zero baseline scores zero.
inline double score(double policy_cost, double baseline_cost) {
    if (baseline_cost == 0.0) return 0.0;
    return (policy_cost - baseline_cost) / std::abs(baseline_cost);
}

struct HouseholdScore {
    std::string id;
    size_t microgrid = 0;
    double price_score = 0.0;
    double emission_score = 0.0;
    double scalar_score = 0.0;
    CostSplit policy;
    CostSplit baseline;
};

struct ScoreAggregate {
    double price_score = 0.0;
    double emission_score = 0.0;
    double scalar_score = 0.0;
};

/// Per-household scores with microgrid and distributor aggregates (means
/// over member households).
struct ScoreReport {
    std::vector<HouseholdScore> households;
    std::vector<ScoreAggregate> microgrids;
    ScoreAggregate distributor;
};

inline ScoreReport make_score_report(const EnvConfig& cfg,
                                     std::span<const CostSplit> policy_costs,
                                     std::span<const CostSplit> baseline_costs) {
    ScoreReport report;
    size_t flat = 0;
    for (size_t m = 0; m < cfg.microgrids.size(); ++m) {
        ScoreAggregate agg;
        for (const auto& house : cfg.microgrids[m]) {
            HouseholdScore hs;
            hs.id = house.id;
            hs.microgrid = m;
            hs.policy = policy_costs[flat];
            hs.baseline = baseline_costs[flat];
            hs.price_score = score(hs.policy.price, hs.baseline.price);
            hs.emission_score = score(hs.policy.emission, hs.baseline.emission);
            hs.scalar_score = score(hs.policy.scalar(), hs.baseline.scalar());
            agg.price_score += hs.price_score;
            agg.emission_score += hs.emission_score;
            agg.scalar_score += hs.scalar_score;
            report.households.push_back(std::move(hs));
            ++flat;
        }
        double n = static_cast<double>(cfg.microgrids[m].size());
        agg.price_score /= n;
        agg.emission_score /= n;
        agg.scalar_score /= n;
        report.microgrids.push_back(agg);
    }
    double n_all = static_cast<double>(report.households.size());
    for (const auto& hs : report.households) {
        report.distributor.price_score += hs.price_score / n_all;
        report.distributor.emission_score += hs.emission_score / n_all;
        report.distributor.scalar_score += hs.scalar_score / n_all;
    }
    return report;
}

} // namespace gridweave::oracle
