#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include "localcoin/node.hpp"
#include "localcoin/types.hpp"

namespace localcoin::adversary {

struct AttackError {
    std::string message;
};

// Analytic quantities of the virtual-cut analysis. d_tilde and d_bar are
// the corner-region and disc mean-distance factors; defaults are the values
// the protocol analysis works with.
struct AttackGeometry {
    double alpha = 1.0;    // |A| = alpha |U| / 2
    double gamma = 1.0;    // intra-A mean distance / aVd
    double zeta = 1.0;     // B-to-(A or B) mean distance / aVd
    double r_prime = 0.0;  // controlled-region radius
    double d_tilde = 0.45;
    double d_bar = 0.903;
};

// Smallest integer |M| with
//   2 alpha |M| n (zeta-1) + |M|^2 (zeta-1) + alpha^2 n^2 (gamma-1) > 0.
// gamma >= 1 means the intra-component distances already clear aVd and no
// colluders are needed. zeta <= 1 with gamma < 1 leaves the left side
// negative for every |M|: infeasible.
struct MinColluders {
    std::int64_t count = 0;
    double fraction = 0.0;
};

inline std::optional<MinColluders> min_colluders_virtual_cut(const AttackGeometry& g,
                                                             std::int64_t n) {
    if (g.zeta == 1.0 && g.gamma < 1.0) return std::nullopt;
    auto holds = [&](double m) {
        return 2.0 * g.alpha * m * n * (g.zeta - 1.0) + m * m * (g.zeta - 1.0) +
                   g.alpha * g.alpha * static_cast<double>(n) * n * (g.gamma - 1.0) >
               0.0;
    };
    if (g.gamma >= 1.0) return MinColluders{0, 0.0};
    if (g.zeta < 1.0) return std::nullopt;
    // Upward parabola negative at M=0; the positive root is
    //   alpha n (sqrt((zeta-gamma)/(zeta-1)) - 1).
    double root = g.alpha * n * (std::sqrt((g.zeta - g.gamma) / (g.zeta - 1.0)) - 1.0);
    std::int64_t m = static_cast<std::int64_t>(std::ceil(root));
    while (m > 0 && holds(static_cast<double>(m - 1))) --m;
    while (!holds(static_cast<double>(m))) ++m;
    return MinColluders{m, static_cast<double>(m) / static_cast<double>(n)};
}

// Area of the full annulus band that isolates an interior disc of radius
// r_prime: pi (r'^2 - (r'-2 r_cov)^2) = 4 pi r_cov (r' - r_cov).
inline std::optional<double> annulus_control_area(double r_prime, double r_cov) {
    if (!(r_prime > 2.0 * r_cov)) return std::nullopt;
    return 4.0 * std::numbers::pi * r_cov * (r_prime - r_cov);
}

// Corner variant: a quarter annulus suffices, and r' cannot shrink below
// aVd / d_tilde, so the area is at least pi r_cov (aVd/d_tilde - r_cov).
inline std::optional<double> corner_control_area(double aVd, double r_cov,
                                                 double d_tilde) {
    if (!(d_tilde > 0.0)) return std::nullopt;
    double r_prime = aVd / d_tilde;
    if (!(r_prime > r_cov)) return std::nullopt;
    return std::numbers::pi * r_cov * (r_prime - r_cov);
}

// Verification info should reach half the users: pi r^2 > 0.5 gives the
// radius, and aVd must exceed d_bar times it.
inline double min_avd_for_half_coverage(double d_bar) {
    if (!(d_bar > 0.0 && d_bar < 1.0))
        throw AttackError{"min_avd_for_half_coverage: d_bar must lie in (0,1)"};
    return d_bar * std::sqrt(0.5 / std::numbers::pi);
}

// With |U| - |M| users moving freely, all of them must avoid the controlled
// region for the cut to hold: (|R|/|D|)^(|U|-|M|).
inline double dynamic_attack_success_prob(double frac_R, std::int64_t n,
                                          std::int64_t m) {
    if (frac_R < 0.0 || frac_R > 1.0)
        throw AttackError{"dynamic_attack_success_prob: frac_R must be in [0,1]"};
    if (m > n) throw AttackError{"dynamic_attack_success_prob: m must be <= n"};
    return std::pow(frac_R, static_cast<double>(n - m));
}

// Double spending succeeds with probability at most 1/n^2 when
// n (aVd/lambda)^2 >= 2 log n and lambda * degree > n/2.
struct Theorem2Result {
    bool conditions_met = false;
    double bound = 0.0;
};

inline Theorem2Result theorem2_check(std::int64_t n, double aVd, double lambda_ratio,
                                     double degree) {
    if (!(lambda_ratio > 0.0))
        throw AttackError{"theorem2_check: lambda_ratio must be > 0"};
    Theorem2Result res;
    double ratio = aVd / lambda_ratio;
    bool c1 = n * ratio * ratio >= 2.0 * std::log(static_cast<double>(n));
    bool c2 = lambda_ratio * degree > static_cast<double>(n) / 2.0;
    res.conditions_met = c1 && c2;
    if (res.conditions_met) res.bound = 1.0 / (static_cast<double>(n) * n);
    return res;
}

// Orchestration plan for a double-spend scenario: the attacker mints
// fake_tx_count conflicting payments off one input, spaced by
// inter_fake_delay, optionally walking a scripted path between emissions.
// Colluders follow the forwarding policy; they never mint attestations for
// anyone but themselves.
struct AttackPlan {
    UserId attacker = 0;
    std::vector<UserId> colluders;   // explicit set; wins over colluder_count
    int colluder_count = 0;          // drawn uniformly from honest users
    int fake_tx_count = 2;
    double first_fake_s = 1.0;
    double inter_fake_delay_s = 10.0;
    ColluderPolicy colluder_policy = ColluderPolicy::forward_all;
    // suppress_cross_region only: nodes whose x falls inside the band at
    // scenario start become colluders (the silent membrane).
    std::optional<std::pair<double, double>> region_band;
    std::vector<UserId> pinned_receivers;  // else uniform over honest users
    // Scripted attacker relocations (tick, position).
    std::vector<std::pair<std::uint64_t, Location>> attacker_path;
};

}  // namespace localcoin::adversary
