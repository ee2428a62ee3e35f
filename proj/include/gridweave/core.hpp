#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gridweave {

/// Raised for invalid configuration (bad bounds, malformed files, unknown
/// keys). The CLI maps it to exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raised for failures during a run (I/O, numerics). Exit code 3.
struct RunError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class ProfileType { family, business, teenagers };

inline const char* to_string(ProfileType p) {
    switch (p) {
        case ProfileType::family: return "family";
        case ProfileType::business: return "business";
        case ProfileType::teenagers: return "teenagers";
    }
    return "?";
}

inline ProfileType profile_from_string(const std::string& s) {
    if (s == "family") return ProfileType::family;
    if (s == "business") return ProfileType::business;
    if (s == "teenagers") return ProfileType::teenagers;
    throw ConfigError("unknown profile_type: " + s);
}

/// How surplus revenue enters the cost objective. `literal` counts revenue
/// as a positive cost term; `economic` (default) counts it as negative
/// cost, i.e. income.
enum class CostMode { literal, economic };

inline const char* to_string(CostMode m) {
    return m == CostMode::literal ? "literal" : "economic";
}

inline CostMode cost_mode_from_string(const std::string& s) {
    if (s == "literal") return CostMode::literal;
    if (s == "economic") return CostMode::economic;
    throw ConfigError("unknown cost mode: " + s);
}

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// Static battery attributes. Energies are normalized (capacity 1.0 = one
/// unit of storage); rates are fractions of capacity per hour. `efficiency`
/// applies one way on each of charge and discharge, so a full round trip
/// returns efficiency^2 of the energy drawn at the meter.
struct BatteryParams {
    double capacity = 0.0;
    double efficiency = 1.0;
    double soc_min = 0.0;
    double soc_max = 1.0;
    double p_charge_max = 0.0;
    double p_discharge_max = 0.0;
    // Tariffs for battery injection/withdrawal. Carried for bookkeeping;
    // no cost function uses them.
    double sell_price = 0.0;
    double buy_price = 0.0;

    void validate() const {
        if (capacity < 0.0) throw ConfigError("battery capacity must be >= 0");
        if (!(efficiency > 0.0 && efficiency <= 1.0))
            throw ConfigError("battery efficiency must be in (0, 1]");
        if (!(soc_min >= 0.0 && soc_min < soc_max && soc_max <= 1.0))
            throw ConfigError("battery soc bounds must satisfy 0 <= soc_min < soc_max <= 1");
        if (p_charge_max < 0.0 || p_discharge_max < 0.0)
            throw ConfigError("battery rate limits must be >= 0");
        if (sell_price < 0.0 || buy_price < 0.0)
            throw ConfigError("battery tariffs must be >= 0");
    }
};

struct BatteryState {
    double soc = 0.0; // fraction of capacity, within [soc_min, soc_max]
};

struct HouseholdConfig {
    std::string id;
    ProfileType profile_type = ProfileType::family;
    double profile_peak_load = 0.0;
    double pv_peak_pv_gen = 0.0;
    BatteryParams battery;
    bool battery_random_soc_0 = false;
    /// Market coordinate; negative means "use the index within the
    /// microgrid".
    double position = -1.0;

    /// Households without usable storage take no actions.
    bool actionable() const { return battery.capacity > 0.0; }

    void validate() const {
        if (id.empty()) throw ConfigError("household id must not be empty");
        if (profile_peak_load < 0.0) throw ConfigError(id + ": profile_peak_load must be >= 0");
        if (pv_peak_pv_gen < 0.0) throw ConfigError(id + ": pv_peak_pv_gen must be >= 0");
        battery.validate();
    }
};

/// Per-step energy flows of one household. Imports and exports are split by
/// the layer they were traded at: 1 = local (intra-microgrid), 2 =
/// inter-microgrid, 3 = bulk grid.
struct EnergyBalance {
    double e_load = 0.0;
    double e_pv = 0.0;
    double e_batt = 0.0; // + meter draw while charging, - injection while discharging
    double e_shortage = 0.0;
    double e_surplus = 0.0;
    double e_net = 0.0;
    double imp1 = 0.0, imp2 = 0.0, imp3 = 0.0;
    double exp1 = 0.0, exp2 = 0.0, exp3 = 0.0;
};

/// All prices that apply to one step. Selling prices (r_s*) are what a
/// buyer pays at that layer; buying prices (r_b*) are what a seller
/// receives. c_t is the bulk-grid emission rate.
struct PriceSet {
    double r_sh = 0.0, r_bh = 0.0; // household layer
    double r_sm = 0.0, r_bm = 0.0; // microgrid layer
    double r_sd = 0.0, r_bd = 0.0; // distributor layer
    double c_t = 0.0;

    bool non_negative() const {
        return r_sh >= 0 && r_bh >= 0 && r_sm >= 0 && r_bm >= 0 && r_sd >= 0 &&
               r_bd >= 0 && c_t >= 0;
    }

    /// Market-design ordering: selling is best paid locally, buying is
    /// cheapest locally. Maintained by the pricing policies.
    bool ordered() const {
        return r_bd <= r_bm && r_bm <= r_bh && r_bh <= r_sh && r_sh <= r_sm &&
               r_sm <= r_sd + c_t;
    }
};

struct MicrogridBalance {
    double e_shortage = 0.0;
    double e_surplus = 0.0;
    double e_net = 0.0;
    double imp2 = 0.0, imp3 = 0.0;
    double exp2 = 0.0, exp3 = 0.0;
};

struct DistributorBalance {
    double e_shortage = 0.0;
    double e_surplus = 0.0;
    double e_net = 0.0;
    double imp3 = 0.0;
    double exp3 = 0.0;
};

/// Price and emission components of a cost. The scalar objective treats the
/// emission rate as a price-equivalent penalty with weight 1.
struct CostSplit {
    double price = 0.0;
    double emission = 0.0;

    double scalar() const { return price + emission; }

    CostSplit& operator+=(const CostSplit& o) {
        price += o.price;
        emission += o.emission;
        return *this;
    }
};

// ---------------------------------------------------------------------------
// Battery dynamics
// ---------------------------------------------------------------------------

struct BatteryStepResult {
    BatteryState state;
    /// Meter-side energy for the step: positive draw while charging,
    /// negative injection while discharging.
    double e_batt = 0.0;
    /// |requested - executed| command fraction; nonzero when the command was
    /// projected onto the feasible set (rate limits or soc bounds).
    double projected = 0.0;
};

/// Advance one battery by one step (dt = 1 h). Commands are power fractions
/// of capacity: positive = charge (meter-side), negative = discharge
/// (internal-side). Infeasible commands are projected, never rejected.
inline BatteryStepResult battery_step(BatteryState state, const BatteryParams& p,
                                      double command) {
    BatteryStepResult r;
    r.state = state;
    if (p.capacity <= 0.0) {
        r.projected = std::abs(command);
        return r;
    }
    double cmd = std::clamp(command, -p.p_discharge_max, p.p_charge_max);
    if (cmd >= 0.0) {
        // stored = command * capacity * efficiency, bounded by headroom
        double stored_frac = std::min(cmd * p.efficiency, p.soc_max - state.soc);
        stored_frac = std::max(stored_frac, 0.0);
        r.state.soc = state.soc + stored_frac;
        r.e_batt = stored_frac * p.capacity / p.efficiency;
        r.projected = std::abs(command - stored_frac / p.efficiency);
    } else {
        // command counts internal energy; the meter sees it after the
        // one-way efficiency loss
        double withdrawn_frac = std::min(-cmd, state.soc - p.soc_min);
        withdrawn_frac = std::max(withdrawn_frac, 0.0);
        r.state.soc = state.soc - withdrawn_frac;
        r.e_batt = -withdrawn_frac * p.capacity * p.efficiency;
        r.projected = std::abs(command + withdrawn_frac);
    }
    return r;
}

// ---------------------------------------------------------------------------
// Layer accounting
// ---------------------------------------------------------------------------

/// Net position of one household: load - pv + battery. Non-negative means
/// shortage (energy must come from somewhere), negative means surplus.
inline double household_net(double e_load, double e_pv, double e_batt) {
    return e_load - e_pv + e_batt;
}

/// Start a balance from raw flows; import/export channels are filled in by
/// market clearing afterwards.
inline EnergyBalance make_balance(double e_load, double e_pv, double e_batt) {
    EnergyBalance b;
    b.e_load = e_load;
    b.e_pv = e_pv;
    b.e_batt = e_batt;
    b.e_net = household_net(e_load, e_pv, e_batt);
    b.e_shortage = std::max(b.e_net, 0.0);
    b.e_surplus = std::max(-b.e_net, 0.0);
    return b;
}

/// Household objective for one step. Shortage steps pay for imports (grid
/// imports additionally pay the emission penalty); surplus steps earn
/// export revenue, negated in economic mode.
inline CostSplit household_cost(const EnergyBalance& b, const PriceSet& p,
                                CostMode mode = CostMode::economic) {
    if (b.e_net >= 0.0) {
        return {b.imp3 * p.r_sd + b.imp2 * p.r_sm + b.imp1 * p.r_sh,
                b.imp3 * p.c_t};
    }
    double revenue = b.exp3 * p.r_bd + b.exp2 * p.r_bm + b.exp1 * p.r_bh;
    return {mode == CostMode::literal ? revenue : -revenue, 0.0};
}

/// Microgrid-level totals. Local (layer-1) trades cancel inside the
/// microgrid and do not appear here.
inline MicrogridBalance aggregate_microgrid(std::span<const EnergyBalance> balances) {
    MicrogridBalance m;
    for (const auto& b : balances) {
        m.imp2 += b.imp2;
        m.imp3 += b.imp3;
        m.exp2 += b.exp2;
        m.exp3 += b.exp3;
    }
    m.e_shortage = m.imp2 + m.imp3;
    m.e_surplus = m.exp2 + m.exp3;
    m.e_net = m.e_shortage - m.e_surplus;
    return m;
}

inline double microgrid_cost(const MicrogridBalance& m, const PriceSet& p,
                             CostMode mode = CostMode::economic) {
    if (m.e_net >= 0.0) return m.imp3 * (p.r_sd + p.c_t) + m.imp2 * p.r_sm;
    double revenue = m.exp3 * p.r_bd + m.exp2 * p.r_bm;
    return mode == CostMode::literal ? revenue : -revenue;
}

inline DistributorBalance aggregate_distributor(std::span<const MicrogridBalance> balances) {
    DistributorBalance d;
    for (const auto& m : balances) {
        d.imp3 += m.imp3;
        d.exp3 += m.exp3;
    }
    d.e_shortage = d.imp3;
    d.e_surplus = d.exp3;
    d.e_net = d.imp3 - d.exp3;
    return d;
}

inline double distributor_cost(const DistributorBalance& d, const PriceSet& p,
                               CostMode mode = CostMode::economic) {
    if (d.e_net >= 0.0) return d.imp3 * (p.r_sd + p.c_t);
    double revenue = d.exp3 * p.r_bd;
    return mode == CostMode::literal ? revenue : -revenue;
}

// ---------------------------------------------------------------------------
// Discrete action lattice
// ---------------------------------------------------------------------------

/// Map a discrete action index onto the battery command range. Index 0 is
/// full discharge, index n-1 full charge, linear in between.
inline double action_to_power(int index, int n_actions, const BatteryParams& p) {
    if (n_actions < 2) throw ConfigError("n_actions must be >= 2");
    if (index < 0 || index >= n_actions)
        throw std::out_of_range("action index " + std::to_string(index) +
                                " outside [0, " + std::to_string(n_actions) + ")");
    double lo = -p.p_discharge_max;
    double hi = p.p_charge_max;
    return lo + (hi - lo) * static_cast<double>(index) /
                    static_cast<double>(n_actions - 1);
}

} // namespace gridweave
