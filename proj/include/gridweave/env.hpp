#pragma once

#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "gridweave/core.hpp"
#include "gridweave/datagen.hpp"
#include "gridweave/io.hpp"
#include "gridweave/market.hpp"
#include "gridweave/rng.hpp"

namespace gridweave {

struct EnvConfig {
    std::vector<std::vector<HouseholdConfig>> microgrids;
    int horizon = datagen::kHoursPerDay;
    CostMode mode = CostMode::economic;
    bool noise_enabled = true;
    bool temperature_scaling = false;
    double spread_microgrid = 0.5;
    double spread_household = 0.5;
    datagen::GridSourceModel grid;
    int n_actions = 40;
    std::uint64_t seed = 0;

    void validate() const {
        if (microgrids.empty()) throw ConfigError("config needs at least one microgrid");
        std::vector<std::string> ids;
        for (const auto& mg : microgrids) {
            if (mg.empty()) throw ConfigError("microgrids must not be empty");
            for (const auto& h : mg) {
                h.validate();
                ids.push_back(h.id);
            }
        }
        std::sort(ids.begin(), ids.end());
        if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
            throw ConfigError("household ids must be unique");
        if (horizon < 1) throw ConfigError("horizon must be >= 1");
        if (!(spread_microgrid >= 0.0 && spread_microgrid <= 1.0) ||
            !(spread_household >= 0.0 && spread_household <= 1.0))
            throw ConfigError("price spreads must be in [0, 1]");
        if (n_actions < 2) throw ConfigError("n_actions must be >= 2");
        grid.validate();
    }

    std::vector<HouseholdConfig> flat_households() const {
        std::vector<HouseholdConfig> flat;
        for (const auto& mg : microgrids)
            for (const auto& h : mg) flat.push_back(h);
        return flat;
    }
};

/// Fixed-length per-household feature vector: time encoding, current
/// series values, battery state, posted prices, and the static household
/// attributes that make parameter sharing possible.
using Observation = std::vector<double>;
inline constexpr int kObservationDim = 18;

/// Market structure that never changes within an episode: which household
/// belongs to which microgrid and where everyone sits.
struct Topology {
    std::vector<std::vector<size_t>> groups; // flat indices per microgrid
    std::vector<double> positions;           // per flat household
    std::vector<double> mg_positions;        // per microgrid

    static Topology from_config(const EnvConfig& cfg) {
        Topology topo;
        size_t flat = 0;
        for (size_t m = 0; m < cfg.microgrids.size(); ++m) {
            std::vector<size_t> group;
            for (size_t j = 0; j < cfg.microgrids[m].size(); ++j) {
                const auto& h = cfg.microgrids[m][j];
                topo.positions.push_back(h.position >= 0.0
                                             ? h.position
                                             : static_cast<double>(j));
                group.push_back(flat++);
            }
            topo.groups.push_back(std::move(group));
            topo.mg_positions.push_back(static_cast<double>(m));
        }
        return topo;
    }
};

/// Start-of-episode state of charge: the soc-range midpoint, or a seeded
/// uniform draw when the household asks for a random start.
inline double initial_soc(const HouseholdConfig& h, std::uint64_t seed) {
    if (h.battery_random_soc_0) {
        auto g = rng::substream(seed, "soc0/" + h.id);
        return g.uniform(h.battery.soc_min, h.battery.soc_max);
    }
    return 0.5 * (h.battery.soc_min + h.battery.soc_max);
}

struct RoutedStep {
    std::vector<EnergyBalance> balances;
    std::vector<MicrogridBalance> microgrids;
    DistributorBalance distributor;
};

/// Fill the import/export channels of one step: local clearing inside each
/// microgrid, then inter-microgrid clearing of the residuals (allocated
/// pro rata to member households), then the bulk grid takes the rest.
inline RoutedStep route_step(std::vector<EnergyBalance> balances, const Topology& topo) {
    const size_t n_mg = topo.groups.size();

    std::vector<double> res_short(balances.size(), 0.0);
    std::vector<double> res_surp(balances.size(), 0.0);

    // Layer 1: local market per microgrid.
    for (const auto& group : topo.groups) {
        std::vector<double> nets(group.size());
        std::vector<double> pos(group.size());
        for (size_t k = 0; k < group.size(); ++k) {
            nets[k] = balances[group[k]].e_net;
            pos[k] = topo.positions[group[k]];
        }
        ClearingResult local = clear_greedy(nets, pos);
        for (size_t k = 0; k < group.size(); ++k) {
            auto& b = balances[group[k]];
            b.imp1 = local.buys[k];
            b.exp1 = local.sells[k];
            res_short[group[k]] = std::max(b.e_shortage - b.imp1, 0.0);
            res_surp[group[k]] = std::max(b.e_surplus - b.exp1, 0.0);
        }
    }

    // Layer 2: clear microgrid residuals against each other.
    std::vector<double> mg_nets(n_mg, 0.0);
    for (size_t m = 0; m < n_mg; ++m) {
        double s = 0.0, p = 0.0;
        for (size_t i : topo.groups[m]) {
            s += res_short[i];
            p += res_surp[i];
        }
        mg_nets[m] = s - p;
    }
    ClearingResult inter = clear_greedy(mg_nets, topo.mg_positions);

    for (size_t m = 0; m < n_mg; ++m) {
        const auto& group = topo.groups[m];
        if (inter.buys[m] > 0.0) {
            std::vector<double> member(group.size());
            for (size_t k = 0; k < group.size(); ++k) member[k] = res_short[group[k]];
            auto share = pro_rata(inter.buys[m], member);
            for (size_t k = 0; k < group.size(); ++k) balances[group[k]].imp2 = share[k];
        }
        if (inter.sells[m] > 0.0) {
            std::vector<double> member(group.size());
            for (size_t k = 0; k < group.size(); ++k) member[k] = res_surp[group[k]];
            auto share = pro_rata(inter.sells[m], member);
            for (size_t k = 0; k < group.size(); ++k) balances[group[k]].exp2 = share[k];
        }
    }

    // Layer 3: whatever is left trades with the bulk grid.
    for (size_t i = 0; i < balances.size(); ++i) {
        auto& b = balances[i];
        b.imp3 = std::max(res_short[i] - b.imp2, 0.0);
        b.exp3 = std::max(res_surp[i] - b.exp2, 0.0);
    }

    RoutedStep out;
    out.microgrids.reserve(n_mg);
    for (const auto& group : topo.groups) {
        std::vector<EnergyBalance> members;
        members.reserve(group.size());
        for (size_t i : group) members.push_back(balances[i]);
        out.microgrids.push_back(aggregate_microgrid(members));
    }
    out.distributor = aggregate_distributor(out.microgrids);
    out.balances = std::move(balances);
    return out;
}

struct StepResult {
    std::vector<Observation> observations; // per flat household, post-step
    std::vector<double> rewards;
    std::vector<EnergyBalance> balances;
    std::vector<MicrogridBalance> microgrids;
    std::vector<PriceSet> prices; // per microgrid
    DistributorBalance distributor;
    std::vector<double> microgrid_costs; // reported metric, one per microgrid
    double distributor_cost = 0.0;       // reported metric
    int t = 0;                           // time index after the step
    bool done = false;
};

struct TraceRow {
    int t;
    int microgrid;
    std::string household;
    double load, pv, batt_power, soc, net;
    double imp1, imp2, imp3, exp1, exp2, exp3;
    double reward, cost_price, cost_emission;
};

/// Episodic simulator. One instance owns one episode's mutable state;
/// distinct instances are fully independent.
class Environment {
public:
    explicit Environment(EnvConfig cfg) : cfg_(std::move(cfg)) {
        cfg_.validate();
        households_ = cfg_.flat_households();
        topo_ = Topology::from_config(cfg_);
        for (size_t m = 0, flat = 0; m < cfg_.microgrids.size(); ++m)
            for (size_t j = 0; j < cfg_.microgrids[m].size(); ++j, ++flat)
                mg_of_.push_back(m);
        for (size_t i = 0; i < households_.size(); ++i)
            if (households_[i].actionable()) actionable_.push_back(i);
        reset(cfg_.seed);
    }

    const EnvConfig& config() const { return cfg_; }
    size_t n_households() const { return households_.size(); }
    const std::vector<HouseholdConfig>& households() const { return households_; }
    const std::vector<size_t>& actionable() const { return actionable_; }
    const Topology& topology() const { return topo_; }
    size_t microgrid_of(size_t household) const { return mg_of_[household]; }
    const datagen::EpisodeData& data() const { return data_; }
    int time() const { return t_; }
    bool done() const { return t_ >= cfg_.horizon; }
    double soc(size_t household) const { return batteries_[household].soc; }

    /// Regenerate episode data and battery states for the given seed.
    std::vector<Observation> reset(std::uint64_t seed) {
        data_ = datagen::generate(households_, cfg_.grid, seed, cfg_.horizon,
                                  cfg_.noise_enabled, cfg_.temperature_scaling);
        batteries_.clear();
        for (const auto& h : households_)
            batteries_.push_back(BatteryState{initial_soc(h, seed)});
        t_ = 0;
        trace_.clear();
        return observations();
    }

    std::vector<Observation> reset() { return reset(cfg_.seed); }

    /// Posted prices for step t; a pure function of the exogenous signals.
    PriceSet price_set_at(int t) const {
        return make_price_set(data_.r_sd[static_cast<size_t>(t)],
                              data_.r_bd[static_cast<size_t>(t)],
                              data_.c[static_cast<size_t>(t)],
                              cfg_.spread_microgrid, cfg_.spread_household);
    }

    /// One action index per actionable household, mapped onto each
    /// battery's own command range.
    StepResult step(const std::vector<int>& actions) {
        if (actions.size() != actionable_.size())
            throw RunError("expected " + std::to_string(actionable_.size()) +
                           " actions, got " + std::to_string(actions.size()));
        std::vector<double> commands(actions.size());
        for (size_t k = 0; k < actions.size(); ++k)
            commands[k] = action_to_power(actions[k], cfg_.n_actions,
                                          households_[actionable_[k]].battery);
        return step_power(commands);
    }

    /// One power command per actionable household. Passive households
    /// always contribute zero battery flow.
    StepResult step_power(const std::vector<double>& commands) {
        if (done()) throw RunError("step() called on a finished episode");
        if (commands.size() != actionable_.size())
            throw RunError("expected " + std::to_string(actionable_.size()) +
                           " commands, got " + std::to_string(commands.size()));
        const auto t = static_cast<size_t>(t_);
        const PriceSet prices = price_set_at(t_);

        std::vector<EnergyBalance> balances(households_.size());
        for (size_t i = 0; i < households_.size(); ++i)
            balances[i] = make_balance(data_.load[i][t], data_.pv[i][t], 0.0);
        for (size_t k = 0; k < actionable_.size(); ++k) {
            size_t i = actionable_[k];
            auto res = battery_step(batteries_[i], households_[i].battery, commands[k]);
            batteries_[i] = res.state;
            balances[i] = make_balance(data_.load[i][t], data_.pv[i][t], res.e_batt);
        }

        RoutedStep routed = route_step(std::move(balances), topo_);

        StepResult result;
        result.balances = std::move(routed.balances);
        result.microgrids = std::move(routed.microgrids);
        result.distributor = routed.distributor;
        result.prices.assign(topo_.groups.size(), prices);
        result.rewards.resize(households_.size());
        for (size_t m = 0; m < result.microgrids.size(); ++m)
            result.microgrid_costs.push_back(
                microgrid_cost(result.microgrids[m], prices, cfg_.mode));
        result.distributor_cost = gridweave::distributor_cost(result.distributor,
                                                              prices, cfg_.mode);

        for (size_t i = 0; i < households_.size(); ++i) {
            CostSplit cost = household_cost(result.balances[i], prices, cfg_.mode);
            result.rewards[i] = reward_from_cost(i, cost);
            const auto& b = result.balances[i];
            trace_.push_back({t_, static_cast<int>(mg_of_[i]), households_[i].id,
                              b.e_load, b.e_pv, b.e_batt, batteries_[i].soc, b.e_net,
                              b.imp1, b.imp2, b.imp3, b.exp1, b.exp2, b.exp3,
                              result.rewards[i], cost.price, cost.emission});
        }

        ++t_;
        result.t = t_;
        result.done = done();
        result.observations = observations();
        return result;
    }

    /// Observations for the current time. After the last step the series
    /// and price slots read zero; only static attributes remain.
    std::vector<Observation> observations() const {
        std::vector<Observation> obs;
        obs.reserve(households_.size());
        const bool terminal = done();
        PriceSet prices{};
        if (!terminal) prices = price_set_at(t_);
        for (size_t i = 0; i < households_.size(); ++i) {
            const auto& h = households_[i];
            const auto t = static_cast<size_t>(t_);
            constexpr double kPi = 3.14159265358979323846;
            double angle = 2.0 * kPi * static_cast<double>(t_ % 24) / 24.0;
            Observation o;
            o.reserve(kObservationDim);
            o.push_back(std::sin(angle));
            o.push_back(std::cos(angle));
            o.push_back(terminal ? 0.0 : data_.load[i][t]);
            o.push_back(terminal ? 0.0 : data_.pv[i][t]);
            o.push_back(batteries_[i].soc);
            o.push_back(prices.r_sd);
            o.push_back(prices.r_bd);
            o.push_back(prices.c_t);
            o.push_back(prices.r_sh);
            o.push_back(prices.r_bh);
            o.push_back(h.profile_type == ProfileType::family ? 1.0 : 0.0);
            o.push_back(h.profile_type == ProfileType::business ? 1.0 : 0.0);
            o.push_back(h.profile_type == ProfileType::teenagers ? 1.0 : 0.0);
            o.push_back(h.profile_peak_load);
            o.push_back(h.pv_peak_pv_gen);
            o.push_back(h.battery.capacity);
            o.push_back(h.battery.p_charge_max);
            o.push_back(h.battery.p_discharge_max);
            obs.push_back(std::move(o));
        }
        return obs;
    }

    /// Rewards are negated scalar costs, scaled so a step costs about one
    /// unit at worst for a house running at peak on pure gas.
    double reward_from_cost(size_t household, const CostSplit& cost) const {
        double denom = households_[household].profile_peak_load *
                       (cfg_.grid.gas_price + cfg_.grid.gas_emission);
        if (denom <= 0.0) denom = 1.0; // peak-0 households fall back to unscaled
        return -cost.scalar() / denom;
    }

    const std::vector<TraceRow>& trace() const { return trace_; }

    void write_trace_csv(std::ostream& out) const {
        out << "t,microgrid_id,household_id,load,pv,batt_power,soc,net,"
               "imp1,imp2,imp3,exp1,exp2,exp3,reward,cost_price,cost_emission\n";
        for (const auto& r : trace_) {
            out << r.t << ',' << r.microgrid << ',' << r.household << ','
                << io::fmt(r.load) << ',' << io::fmt(r.pv) << ','
                << io::fmt(r.batt_power) << ',' << io::fmt(r.soc) << ','
                << io::fmt(r.net) << ',' << io::fmt(r.imp1) << ','
                << io::fmt(r.imp2) << ',' << io::fmt(r.imp3) << ','
                << io::fmt(r.exp1) << ',' << io::fmt(r.exp2) << ','
                << io::fmt(r.exp3) << ',' << io::fmt(r.reward) << ','
                << io::fmt(r.cost_price) << ',' << io::fmt(r.cost_emission) << '\n';
        }
    }

private:
    EnvConfig cfg_;
    std::vector<HouseholdConfig> households_;
    Topology topo_;
    std::vector<size_t> mg_of_;
    std::vector<size_t> actionable_;
    datagen::EpisodeData data_;
    std::vector<BatteryState> batteries_;
    std::vector<TraceRow> trace_;
    int t_ = 0;
};

} // namespace gridweave
