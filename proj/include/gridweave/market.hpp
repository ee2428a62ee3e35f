#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <utility>
#include <vector>

#include "gridweave/core.hpp"

namespace gridweave {

// ---------------------------------------------------------------------------
// Pricing policies
// ---------------------------------------------------------------------------

/// Place the microgrid-layer band symmetrically inside the grid spread
/// [r_bd, r_sd + c_t]. `spread` in [0, 1] is the fraction of the upstream
/// spread kept between r_sm and r_bm. Returns {r_sm, r_bm}.
inline std::pair<double, double> price_policy_distributor(double r_sd, double r_bd,
                                                          double c_t, double spread) {
    double hi = r_sd + c_t;
    double lo = r_bd;
    if (hi < lo) throw RunError("grid spread is negative: r_sd + c_t < r_bd");
    double mid = 0.5 * (lo + hi);
    double half = 0.5 * spread * (hi - lo);
    return {mid + half, mid - half};
}

/// Same placement one layer down: the household band sits inside
/// [r_bm, r_sm]. Returns {r_sh, r_bh}.
inline std::pair<double, double> price_policy_microgrid(double r_sm, double r_bm,
                                                        double spread) {
    if (r_sm < r_bm) throw RunError("microgrid spread is negative: r_sm < r_bm");
    double mid = 0.5 * (r_bm + r_sm);
    double half = 0.5 * spread * (r_sm - r_bm);
    return {mid + half, mid - half};
}

/// Build the full per-step price set from the exogenous grid signals.
inline PriceSet make_price_set(double r_sd, double r_bd, double c_t,
                               double spread_microgrid, double spread_household) {
    PriceSet p;
    p.r_sd = r_sd;
    p.r_bd = r_bd;
    p.c_t = c_t;
    auto [r_sm, r_bm] = price_policy_distributor(r_sd, r_bd, c_t, spread_microgrid);
    p.r_sm = r_sm;
    p.r_bm = r_bm;
    auto [r_sh, r_bh] = price_policy_microgrid(r_sm, r_bm, spread_household);
    p.r_sh = r_sh;
    p.r_bh = r_bh;
    return p;
}

// ---------------------------------------------------------------------------
// Greedy distance-based matching
// ---------------------------------------------------------------------------

/// Matched volumes for one clearing: buys[i] is what participant i bought
/// locally, sells[i] what it sold. Unmatched residue passes to the next
/// layer up.
struct ClearingResult {
    std::vector<double> buys;
    std::vector<double> sells;
    double matched = 0.0;
};

/// Match shortages against surpluses at one layer. Buyers are served in
/// descending order of shortage; each buyer fills from the nearest sellers
/// first (ties to the lower index). Partial fills are allowed, so the
/// total match is min(total shortage, total surplus).
inline ClearingResult clear_greedy(std::span<const double> nets,
                                   std::span<const double> positions) {
    const size_t n = nets.size();
    ClearingResult r;
    r.buys.assign(n, 0.0);
    r.sells.assign(n, 0.0);

    std::vector<size_t> buyers;
    std::vector<size_t> sellers;
    for (size_t i = 0; i < n; ++i) {
        if (nets[i] > 0.0) buyers.push_back(i);
        else if (nets[i] < 0.0) sellers.push_back(i);
    }
    if (buyers.empty() || sellers.empty()) return r;

    std::sort(buyers.begin(), buyers.end(), [&](size_t a, size_t b) {
        if (nets[a] != nets[b]) return nets[a] > nets[b];
        return a < b;
    });

    std::vector<double> remaining(n, 0.0);
    for (size_t s : sellers) remaining[s] = -nets[s];

    for (size_t b : buyers) {
        double need = nets[b];
        std::vector<size_t> order = sellers;
        std::sort(order.begin(), order.end(), [&](size_t x, size_t y) {
            double dx = std::abs(positions[x] - positions[b]);
            double dy = std::abs(positions[y] - positions[b]);
            if (dx != dy) return dx < dy;
            return x < y;
        });
        for (size_t s : order) {
            if (need <= 0.0) break;
            double q = std::min(need, remaining[s]);
            if (q <= 0.0) continue;
            r.buys[b] += q;
            r.sells[s] += q;
            remaining[s] -= q;
            need -= q;
            r.matched += q;
        }
        // A fully served buyer bought exactly its shortage; pin it so the
        // residual is an exact zero rather than accumulated dust.
        if (need <= 0.0) r.buys[b] = nets[b];
    }
    for (size_t s : sellers)
        if (remaining[s] <= 0.0) r.sells[s] = -nets[s];
    return r;
}

/// Split a matched volume across participants in proportion to their
/// residuals. Residuals must be non-negative and sum to at least `volume`.
/// Full coverage passes the residuals through untouched so that nothing
/// is left behind by rounding.
inline std::vector<double> pro_rata(double volume, std::span<const double> residuals) {
    std::vector<double> out(residuals.size(), 0.0);
    double total = std::accumulate(residuals.begin(), residuals.end(), 0.0);
    if (total <= 0.0 || volume <= 0.0) return out;
    if (volume >= total) {
        out.assign(residuals.begin(), residuals.end());
        return out;
    }
    for (size_t i = 0; i < residuals.size(); ++i)
        out[i] = volume * residuals[i] / total;
    return out;
}

} // namespace gridweave
