#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "gridweave/core.hpp"
#include "gridweave/rng.hpp"

namespace gridweave::datagen {

inline constexpr int kHoursPerDay = 24;

/// Normalized daily demand curve; peak value is exactly 1.
struct ProfileShape {
    ProfileType profile_type;
    std::array<double, kHoursPerDay> base_curve;
};

namespace detail {

// Fixed base curves. Family demand peaks in the morning and again in the
// early afternoon; business demand sits in the middle of the day;
// teenagers run late afternoon through the early morning hours.
inline constexpr std::array<double, kHoursPerDay> kFamilyCurve = {
    0.25, 0.20, 0.20, 0.20, 0.25, 0.35, 0.60, 0.90, 1.00, 0.85, 0.60, 0.55,
    0.60, 0.80, 0.90, 0.80, 0.60, 0.55, 0.50, 0.50, 0.45, 0.40, 0.35, 0.30};

inline constexpr std::array<double, kHoursPerDay> kBusinessCurve = {
    0.10, 0.10, 0.10, 0.10, 0.10, 0.15, 0.20, 0.35, 0.55, 0.80, 0.95, 1.00,
    0.95, 1.00, 0.95, 0.90, 0.80, 0.60, 0.40, 0.25, 0.15, 0.10, 0.10, 0.10};

inline constexpr std::array<double, kHoursPerDay> kTeenagersCurve = {
    0.85, 0.80, 0.75, 0.50, 0.35, 0.25, 0.20, 0.20, 0.20, 0.20, 0.25, 0.30,
    0.35, 0.35, 0.40, 0.45, 0.55, 0.70, 0.80, 0.90, 1.00, 0.95, 0.95, 0.90};

} // namespace detail

inline const ProfileShape& base_profile(ProfileType type) {
    static const ProfileShape family{ProfileType::family, detail::kFamilyCurve};
    static const ProfileShape business{ProfileType::business, detail::kBusinessCurve};
    static const ProfileShape teenagers{ProfileType::teenagers, detail::kTeenagersCurve};
    switch (type) {
        case ProfileType::business: return business;
        case ProfileType::teenagers: return teenagers;
        case ProfileType::family: break;
    }
    return family;
}

/// Bulk-grid generation mix. Nuclear is cheap and clean but capped; demand
/// beyond the cap is served by gas, which costs more and emits more.
struct GridSourceModel {
    /// Energy per step servable by nuclear; <= 0 means "auto": 60% of the
    /// maximum reference demand.
    double nuclear_capacity = 0.0;
    double nuclear_price = 0.2;
    double gas_price = 0.6;
    double nuclear_emission = 0.05;
    double gas_emission = 0.5;
    /// r_bd as a fraction of r_sd.
    double buyback_ratio = 0.5;

    void validate() const {
        if (nuclear_price < 0 || gas_price < 0 || nuclear_emission < 0 ||
            gas_emission < 0)
            throw ConfigError("grid prices and emissions must be >= 0");
        if (gas_price <= nuclear_price)
            throw ConfigError("gas_price must exceed nuclear_price");
        if (gas_emission <= nuclear_emission)
            throw ConfigError("gas_emission must exceed nuclear_emission");
        if (!(buyback_ratio >= 0.0 && buyback_ratio <= 1.0))
            throw ConfigError("buyback_ratio must be in [0, 1]");
    }
};

/// One generated episode: per-household demand and generation plus shared
/// grid signals, all of length `horizon`.
struct EpisodeData {
    std::uint64_t seed = 0;
    int horizon = kHoursPerDay;
    std::vector<std::string> household_ids;
    std::vector<std::vector<double>> load; // [household][t]
    std::vector<std::vector<double>> pv;   // [household][t]
    std::vector<double> r_sd;
    std::vector<double> r_bd;
    std::vector<double> c;
};

// Noise is read from the source model's variances: load ~ N(0, 0.01),
// pv ~ N(0, 0.1).
inline constexpr double kLoadNoiseStddev = 0.1;
inline const double kPvNoiseStddev = std::sqrt(0.1);

/// Optional demand modulation standing in for temperature dependence:
/// +-10% over the day, warmest mid-afternoon.
inline double temperature_factor(int t) {
    constexpr double kPi = 3.14159265358979323846;
    int h = ((t % kHoursPerDay) + kHoursPerDay) % kHoursPerDay;
    return 1.0 + 0.1 * std::sin(2.0 * kPi * (h - 9) / kHoursPerDay);
}

/// Demand series: scaled base curve plus additive Gaussian noise, floored
/// at zero. Noise applies at final scale, after peak scaling.
inline std::vector<double> gen_load(const ProfileShape& shape, double peak_load,
                                    int horizon, rng::SplitMix64& rng,
                                    bool noise_enabled,
                                    bool temperature_scaling = false) {
    std::vector<double> out(static_cast<size_t>(horizon));
    for (int t = 0; t < horizon; ++t) {
        double v = peak_load * shape.base_curve[static_cast<size_t>(t % kHoursPerDay)];
        if (temperature_scaling) v *= temperature_factor(t);
        if (noise_enabled) v += rng.normal(0.0, kLoadNoiseStddev);
        out[static_cast<size_t>(t)] = std::max(v, 0.0);
    }
    return out;
}

/// Daylight sine window: nonzero for hours 5..19, peaking at noon.
inline double pv_curve(int t, double pv_peak) {
    constexpr double kPi = 3.14159265358979323846;
    int h = ((t % kHoursPerDay) + kHoursPerDay) % kHoursPerDay;
    if (h < 5 || h > 19) return 0.0;
    return pv_peak * std::sin(kPi * (h - 5) / 14.0);
}

/// PV series: shifted sine with cloud noise inside the daylight window.
/// Houses without panels (pv_peak = 0) generate nothing, noise or not.
inline std::vector<double> gen_pv(double pv_peak, int horizon,
                                  rng::SplitMix64& rng, bool noise_enabled) {
    std::vector<double> out(static_cast<size_t>(horizon), 0.0);
    if (pv_peak <= 0.0) return out;
    for (int t = 0; t < horizon; ++t) {
        int h = ((t % kHoursPerDay) + kHoursPerDay) % kHoursPerDay;
        if (h < 5 || h > 19) continue;
        double v = pv_curve(t, pv_peak);
        if (noise_enabled) v += rng.normal(0.0, kPvNoiseStddev);
        out[static_cast<size_t>(t)] = std::max(v, 0.0);
    }
    return out;
}

/// Expected aggregate no-battery demand of a set of households: the sum of
/// their noiseless load curves. Drives the merit-order price model.
inline std::vector<double> reference_demand(std::span<const HouseholdConfig> households,
                                            int horizon,
                                            bool temperature_scaling = false) {
    std::vector<double> ref(static_cast<size_t>(horizon), 0.0);
    for (const auto& h : households) {
        const auto& curve = base_profile(h.profile_type).base_curve;
        for (int t = 0; t < horizon; ++t) {
            double v = h.profile_peak_load * curve[static_cast<size_t>(t % kHoursPerDay)];
            if (temperature_scaling) v *= temperature_factor(t);
            ref[static_cast<size_t>(t)] += v;
        }
    }
    return ref;
}

inline double resolve_nuclear_capacity(const GridSourceModel& model,
                                       std::span<const double> reference) {
    if (model.nuclear_capacity > 0.0) return model.nuclear_capacity;
    double peak = 0.0;
    for (double v : reference) peak = std::max(peak, v);
    return peak > 0.0 ? 0.6 * peak : 1.0;
}

struct GridSignals {
    std::vector<double> r_sd;
    std::vector<double> r_bd;
    std::vector<double> c;
};

/// Merit-order price and emission series. Nuclear serves demand up to its
/// capacity; the remainder is gas. Price and emission rate are both the
/// energy-share blend of the two sources, so they move together.
inline GridSignals gen_grid_signals(const GridSourceModel& model,
                                    std::span<const double> reference_demand) {
    if (model.nuclear_capacity < 0.0)
        throw ConfigError("nuclear_capacity must be > 0 (or 0 for automatic sizing)");
    double cap = resolve_nuclear_capacity(model, reference_demand);
    if (cap <= 0.0) throw ConfigError("nuclear_capacity must be > 0");
    GridSignals g;
    const size_t n = reference_demand.size();
    g.r_sd.resize(n);
    g.r_bd.resize(n);
    g.c.resize(n);
    for (size_t t = 0; t < n; ++t) {
        double demand = reference_demand[t];
        double nuclear_share = demand <= cap ? 1.0 : cap / demand;
        g.r_sd[t] = nuclear_share * model.nuclear_price +
                    (1.0 - nuclear_share) * model.gas_price;
        g.c[t] = nuclear_share * model.nuclear_emission +
                 (1.0 - nuclear_share) * model.gas_emission;
        g.r_bd[t] = model.buyback_ratio * g.r_sd[t];
    }
    return g;
}

/// Assemble a full episode. Every household gets its own named noise
/// substream, so the generated data for a household depends only on
/// (seed, its own config), not on who else is configured.
inline EpisodeData generate(std::span<const HouseholdConfig> households,
                            const GridSourceModel& model, std::uint64_t seed,
                            int horizon = kHoursPerDay, bool noise_enabled = true,
                            bool temperature_scaling = false) {
    if (horizon < 1) throw ConfigError("horizon must be >= 1");
    EpisodeData data;
    data.seed = seed;
    data.horizon = horizon;
    for (const auto& h : households) {
        data.household_ids.push_back(h.id);
        auto load_rng = rng::substream(seed, "load/" + h.id);
        auto pv_rng = rng::substream(seed, "pv/" + h.id);
        data.load.push_back(gen_load(base_profile(h.profile_type),
                                     h.profile_peak_load, horizon, load_rng,
                                     noise_enabled, temperature_scaling));
        data.pv.push_back(gen_pv(h.pv_peak_pv_gen, horizon, pv_rng, noise_enabled));
    }
    auto ref = reference_demand(households, horizon, temperature_scaling);
    auto signals = gen_grid_signals(model, ref);
    data.r_sd = std::move(signals.r_sd);
    data.r_bd = std::move(signals.r_bd);
    data.c = std::move(signals.c);
    return data;
}

} // namespace gridweave::datagen
