#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "localcoin/rng.hpp"
#include "localcoin/types.hpp"

namespace localcoin::geom {

enum class PlacementKind { uniform, grid_poisson };

// User placement over the unit square. grid_poisson reproduces the 10x10
// cell model: per-cell counts are Poisson with rates scaled so the expected
// total is n, then padded/trimmed to exactly n so scenarios have a fixed
// population.
struct Placement {
    PlacementKind kind = PlacementKind::uniform;
    int n = 0;
    std::array<std::array<double, 10>, 10> grid_weights{};  // grid_poisson only
    bool torus = false;
};

inline Placement uniform_placement(int n, bool torus = false) {
    Placement p;
    p.kind = PlacementKind::uniform;
    p.n = n;
    p.torus = torus;
    return p;
}

inline double torus_distance(const Location& a, const Location& b) {
    double dx = std::fabs(a.x - b.x);
    double dy = std::fabs(a.y - b.y);
    dx = std::min(dx, 1.0 - dx);
    dy = std::min(dy, 1.0 - dy);
    return std::sqrt(dx * dx + dy * dy);
}

inline std::vector<Location> place_users(const Placement& p, Rng& rng) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<Location> pts;
    pts.reserve(p.n);
    if (p.kind == PlacementKind::uniform) {
        for (int i = 0; i < p.n; ++i) pts.push_back({U(rng), U(rng)});
        return pts;
    }
    double total = 0.0;
    for (const auto& row : p.grid_weights)
        for (double w : row) total += w;
    if (total <= 0.0) throw GeometryError{"grid_poisson weights must sum > 0"};
    for (int cy = 0; cy < 10; ++cy) {
        for (int cx = 0; cx < 10; ++cx) {
            double rate = p.grid_weights[cy][cx] / total * p.n;
            std::poisson_distribution<int> P(rate);
            int count = rate > 0.0 ? P(rng) : 0;
            for (int i = 0; i < count; ++i)
                pts.push_back({(cx + U(rng)) / 10.0, (cy + U(rng)) / 10.0});
        }
    }
    // Fix up the random total to exactly n.
    while (static_cast<int>(pts.size()) > p.n) {
        std::uniform_int_distribution<size_t> pick(0, pts.size() - 1);
        size_t k = pick(rng);
        pts[k] = pts.back();
        pts.pop_back();
    }
    std::vector<double> flat;
    for (const auto& row : p.grid_weights)
        for (double w : row) flat.push_back(w);
    std::discrete_distribution<int> cell_of(flat.begin(), flat.end());
    while (static_cast<int>(pts.size()) < p.n) {
        int c = cell_of(rng);
        int cx = c % 10, cy = c / 10;
        pts.push_back({(cx + U(rng)) / 10.0, (cy + U(rng)) / 10.0});
    }
    return pts;
}

// Uniform-grid spatial index; cell size equals the query radius so a
// neighbor query touches at most 9 cells.
class SpatialIndex {
public:
    SpatialIndex(const std::vector<Location>& pts, double radius, bool torus)
        : pts_(pts), r_(radius), torus_(torus) {
        cells_ = std::max(1, static_cast<int>(std::floor(1.0 / std::max(radius, 1e-9))));
        if (cells_ > 512) cells_ = 512;
        buckets_.resize(static_cast<size_t>(cells_) * cells_);
        for (size_t i = 0; i < pts.size(); ++i)
            buckets_[bucket_of(pts[i])].push_back(static_cast<int>(i));
    }

    template <typename F>
    void for_neighbors(int i, F&& fn) const {
        const Location& a = pts_[i];
        int bx = clampc(static_cast<int>(a.x * cells_));
        int by = clampc(static_cast<int>(a.y * cells_));
        // Wrapping can alias cells when the grid is tiny, so collect the
        // distinct cell ids before scanning.
        size_t cell_ids[9];
        int n_cells = 0;
        for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
                int cx = bx + dx, cy = by + dy;
                if (torus_) {
                    cx = (cx + cells_) % cells_;
                    cy = (cy + cells_) % cells_;
                } else if (cx < 0 || cy < 0 || cx >= cells_ || cy >= cells_) {
                    continue;
                }
                size_t cid = static_cast<size_t>(cy) * cells_ + cx;
                bool dup = false;
                for (int k = 0; k < n_cells; ++k)
                    if (cell_ids[k] == cid) dup = true;
                if (!dup) cell_ids[n_cells++] = cid;
            }
        }
        for (int k = 0; k < n_cells; ++k) {
            for (int j : buckets_[cell_ids[k]]) {
                if (j == i) continue;
                double d = torus_ ? torus_distance(a, pts_[j]) : distance(a, pts_[j]);
                if (d <= r_) fn(j);
            }
        }
    }

private:
    int clampc(int c) const { return std::clamp(c, 0, cells_ - 1); }

    size_t bucket_of(const Location& p) const {
        int bx = clampc(static_cast<int>(p.x * cells_));
        int by = clampc(static_cast<int>(p.y * cells_));
        return static_cast<size_t>(by) * cells_ + bx;
    }

    const std::vector<Location>& pts_;
    double r_;
    bool torus_;
    int cells_;
    std::vector<std::vector<int>> buckets_;
};

// Random geometric graph: an edge joins every pair at distance <= radius
// (inclusive; the threshold itself still connects).
struct Rgg {
    std::vector<Location> positions;
    double radius = 0.0;
    bool torus = false;
    std::vector<std::vector<int>> adjacency;

    int n() const { return static_cast<int>(positions.size()); }

    double mean_degree() const {
        if (positions.empty()) return 0.0;
        size_t total = 0;
        for (const auto& a : adjacency) total += a.size();
        return static_cast<double>(total) / positions.size();
    }
};

inline Rgg rgg_from_positions(std::vector<Location> pts, double r_cov, bool torus) {
    Rgg g;
    g.positions = std::move(pts);
    g.radius = r_cov;
    g.torus = torus;
    g.adjacency.resize(g.positions.size());
    SpatialIndex idx(g.positions, r_cov, torus);
    for (int i = 0; i < g.n(); ++i)
        idx.for_neighbors(i, [&](int j) { g.adjacency[i].push_back(j); });
    for (auto& adj : g.adjacency) std::sort(adj.begin(), adj.end());
    return g;
}

inline Rgg generate_rgg(const Placement& p, double r_cov, std::uint64_t seed) {
    if (p.n < 1) throw GeometryError{"generate_rgg: n must be >= 1"};
    if (!(r_cov > 0.0)) throw GeometryError{"generate_rgg: r_cov must be > 0"};
    Rng rng = make_rng(seed, 0x706c6163ULL /* placement stream */);
    return rgg_from_positions(place_users(p, rng), r_cov, p.torus);
}

// Vertex partition by breadth-first search.
inline std::vector<std::vector<int>> connected_components(const Rgg& g) {
    std::vector<std::vector<int>> comps;
    std::vector<char> seen(g.n(), 0);
    std::vector<int> stack;
    for (int s = 0; s < g.n(); ++s) {
        if (seen[s]) continue;
        comps.emplace_back();
        stack.push_back(s);
        seen[s] = 1;
        while (!stack.empty()) {
            int u = stack.back();
            stack.pop_back();
            comps.back().push_back(u);
            for (int v : g.adjacency[u]) {
                if (!seen[v]) {
                    seen[v] = 1;
                    stack.push_back(v);
                }
            }
        }
    }
    return comps;
}

inline double major_component_fraction(const Rgg& g) {
    if (g.n() < 1) throw GeometryError{"major_component_fraction: empty graph"};
    size_t best = 0;
    for (const auto& c : connected_components(g)) best = std::max(best, c.size());
    return static_cast<double>(best) / g.n();
}

inline bool is_connected(const Rgg& g) {
    return g.n() <= 1 || connected_components(g).size() == 1;
}

// n r^d >= 2 log n gives connectivity with probability >= 1 - 1/n^2 and
// mean degree pi^{d/2}/Gamma(1+d/2) n r^d.
struct Lemma1Result {
    bool satisfied = false;
    double connect_prob_bound = 0.0;
    double expected_degree = 0.0;
};

inline Lemma1Result lemma1_check(int n, double r_cov, int dim = 2) {
    if (n < 2) throw GeometryError{"lemma1_check: n must be >= 2"};
    Lemma1Result res;
    res.satisfied = n * std::pow(r_cov, dim) >= 2.0 * std::log(static_cast<double>(n));
    res.connect_prob_bound = 1.0 - 1.0 / (static_cast<double>(n) * n);
    double pi = std::numbers::pi;
    res.expected_degree =
        std::pow(pi, dim / 2.0) / std::tgamma(1.0 + dim / 2.0) * n * std::pow(r_cov, dim);
    return res;
}

// Path bound 2(l+1) with l = log_{1+beta}(n / (2 degree)).
inline double path_length_bound(double beta, double n, double degree) {
    if (!(beta > 0.0) || degree < 1.0)
        throw GeometryError{"path_length_bound: need beta > 0 and degree >= 1"};
    if (n < 2.0 * degree) return 2.0;
    double l = std::log(n / (2.0 * degree)) / std::log1p(beta);
    if (l <= 0.0) return 2.0;
    return 2.0 * (l + 1.0);
}

// Probability that a transaction between two users succeeds: both endpoints
// in the component, and at least mTr of the receiver's trusted peers able to
// co-sign.
inline double tx_success_probability(double p, double frac_c, int tn_size, int mTr) {
    if (p < 0.0 || p > 1.0 || frac_c < 0.0 || frac_c > 1.0)
        throw GeometryError{"tx_success_probability: p and frac_c must be in [0,1]"};
    if (mTr < 0) throw GeometryError{"tx_success_probability: mTr must be >= 0"};
    if (mTr > tn_size) return 0.0;
    double q = p * frac_c;
    // Tail sum over l = mTr..tn_size of C(tn,l) q^l (1-q)^(tn-l).
    double tail = 0.0;
    double coeff = 1.0;  // C(tn, l) built incrementally
    std::vector<double> terms(tn_size + 1);
    for (int l = 0; l <= tn_size; ++l) {
        terms[l] = coeff * std::pow(q, l) * std::pow(1.0 - q, tn_size - l);
        coeff = coeff * (tn_size - l) / (l + 1.0);
    }
    for (int l = mTr; l <= tn_size; ++l) tail += terms[l];
    tail = std::min(1.0, std::max(0.0, tail));
    return frac_c * frac_c * tail;
}

enum class Region { unit_square, disc, quarter_disc };

// How region points are drawn: area-uniform, or radius-and-angle uniform
// (denser near the center; kept as an explicit variant because some
// published constants stem from it).
enum class RegionSampling { area_uniform, radial_uniform };

struct DistanceEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::int64_t samples = 0;
};

inline Location sample_region(Region region, double radius, RegionSampling how,
                              Rng& rng) {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    switch (region) {
        case Region::unit_square:
            return {U(rng), U(rng)};
        case Region::disc: {
            if (how == RegionSampling::radial_uniform) {
                double r = U(rng) * radius;
                double th = U(rng) * 2.0 * std::numbers::pi;
                return {r * std::cos(th), r * std::sin(th)};
            }
            double r = radius * std::sqrt(U(rng));
            double th = U(rng) * 2.0 * std::numbers::pi;
            return {r * std::cos(th), r * std::sin(th)};
        }
        case Region::quarter_disc: {
            if (how == RegionSampling::radial_uniform) {
                double r = U(rng) * radius;
                double th = U(rng) * 0.5 * std::numbers::pi;
                return {r * std::cos(th), r * std::sin(th)};
            }
            double r = radius * std::sqrt(U(rng));
            double th = U(rng) * 0.5 * std::numbers::pi;
            return {r * std::cos(th), r * std::sin(th)};
        }
    }
    throw GeometryError{"sample_region: unknown region"};
}

// Monte-Carlo mean pairwise distance in the region, with standard error.
inline DistanceEstimate mean_pairwise_distance_estimate(
    Region region, double radius, std::int64_t samples, std::uint64_t seed,
    RegionSampling how = RegionSampling::area_uniform) {
    if (samples < 1000)
        throw GeometryError{"mean_pairwise_distance_estimate: samples must be >= 1e3"};
    Rng rng = make_rng(seed, 0x64697374ULL /* distance stream */);
    double sum = 0.0, sumsq = 0.0;
    for (std::int64_t i = 0; i < samples; ++i) {
        Location a = sample_region(region, radius, how, rng);
        Location b = sample_region(region, radius, how, rng);
        double d = distance(a, b);
        sum += d;
        sumsq += d * d;
    }
    DistanceEstimate est;
    est.samples = samples;
    est.mean = sum / samples;
    double var = std::max(0.0, sumsq / samples - est.mean * est.mean);
    est.std_error = std::sqrt(var / samples);
    return est;
}

// Percolation bookkeeping: density n r^2 against the published critical
// window [0.696, 3.372] and the empirical point 1.44.
enum class Phase { subcritical, critical_window, supercritical };

struct DensityReport {
    double density = 0.0;      // n r^2
    double mean_degree = 0.0;  // pi n r^2
    Phase phase = Phase::subcritical;
    double window_low = 0.696;
    double empirical_point = 1.44;
    double window_high = 3.372;
};

inline DensityReport critical_density_report(int n, double r_cov) {
    DensityReport rep;
    rep.density = n * r_cov * r_cov;
    rep.mean_degree = std::numbers::pi * rep.density;
    if (rep.density < rep.window_low)
        rep.phase = Phase::subcritical;
    else if (rep.density <= rep.window_high)
        rep.phase = Phase::critical_window;
    else
        rep.phase = Phase::supercritical;
    return rep;
}

}  // namespace localcoin::geom
