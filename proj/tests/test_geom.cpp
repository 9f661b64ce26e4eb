#include <catch2/catch_amalgamated.hpp>

#include "localcoin/geom.hpp"
#include "oracles.hpp"

using namespace localcoin;
using namespace localcoin::geom;

namespace {

Rgg brute_force_rgg(const std::vector<Location>& pts, double r, bool torus) {
    Rgg g;
    g.positions = pts;
    g.radius = r;
    g.torus = torus;
    g.adjacency.resize(pts.size());
    for (size_t i = 0; i < pts.size(); ++i)
        for (size_t j = i + 1; j < pts.size(); ++j) {
            double d = torus ? torus_distance(pts[i], pts[j]) : distance(pts[i], pts[j]);
            if (d <= r) {
                g.adjacency[i].push_back(static_cast<int>(j));
                g.adjacency[j].push_back(static_cast<int>(i));
            }
        }
    return g;
}

}  // namespace

TEST_CASE("edge rule is inclusive at exactly r_cov") {
    Rgg g = rgg_from_positions({{0.2, 0.5}, {0.5, 0.5}}, 0.3, false);
    REQUIRE(g.adjacency[0].size() == 1u);
    REQUIRE(g.adjacency[1].size() == 1u);

    Rgg apart = rgg_from_positions({{0.2, 0.5}, {0.50001, 0.5}}, 0.3, false);
    CHECK(apart.adjacency[0].empty());
}

TEST_CASE("single vertex graph has no edges and one component") {
    Rgg g = generate_rgg(uniform_placement(1), 0.2, 7);
    CHECK(g.adjacency[0].empty());
    CHECK(connected_components(g).size() == 1u);
    CHECK(major_component_fraction(g) == Catch::Approx(1.0));
}

TEST_CASE("spatial index agrees with the O(n^2) edge rule") {
    Rng rng(11);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Location> pts;
        for (int i = 0; i < 60; ++i) pts.push_back({U(rng), U(rng)});
        double r = 0.02 + 0.03 * trial;
        for (bool torus : {false, true}) {
            Rgg fast = rgg_from_positions(pts, r, torus);
            Rgg slow = brute_force_rgg(pts, r, torus);
            REQUIRE(fast.adjacency == slow.adjacency);
        }
    }
}

TEST_CASE("connected components match a union-find oracle on 100 random graphs") {
    Rng rng(2025);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<Location> pts;
        for (int i = 0; i < 50; ++i) pts.push_back({U(rng), U(rng)});
        double r = 0.05 + 0.002 * trial;
        Rgg g = rgg_from_positions(pts, r, false);

        oracle::UnionFind uf(50);
        for (int i = 0; i < 50; ++i)
            for (int j : g.adjacency[i]) uf.unite(i, j);

        auto comps = connected_components(g);
        REQUIRE(static_cast<int>(comps.size()) == uf.component_count());
        size_t total = 0;
        std::vector<int> sizes;
        for (const auto& c : comps) {
            total += c.size();
            sizes.push_back(static_cast<int>(c.size()));
        }
        REQUIRE(total == 50u);  // component partition covers all vertices
        auto oracle_sizes = uf.component_sizes();
        std::sort(sizes.begin(), sizes.end());
        std::sort(oracle_sizes.begin(), oracle_sizes.end());
        REQUIRE(sizes == oracle_sizes);
    }
}

TEST_CASE("major component fraction on hand-built graphs") {
    Rgg all = rgg_from_positions({{0.1, 0.1}, {0.12, 0.1}, {0.11, 0.12}}, 0.1, false);
    CHECK(major_component_fraction(all) == Catch::Approx(1.0));
    Rgg halves = rgg_from_positions(
        {{0.1, 0.1}, {0.12, 0.1}, {0.9, 0.9}, {0.88, 0.9}}, 0.1, false);
    CHECK(major_component_fraction(halves) == Catch::Approx(0.5));
}

TEST_CASE("major component fraction is non-decreasing in r_cov") {
    Rng rng(5);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    std::vector<Location> pts;
    for (int i = 0; i < 300; ++i) pts.push_back({U(rng), U(rng)});
    double prev = 0.0;
    for (double r = 0.01; r <= 0.21; r += 0.02) {
        double frac = major_component_fraction(rgg_from_positions(pts, r, false));
        REQUIRE(frac >= prev);
        prev = frac;
    }
}

TEST_CASE("lemma 1 arithmetic") {
    auto res = lemma1_check(1000, 0.2);
    CHECK(res.satisfied);  // 40 >= 13.8
    CHECK(res.connect_prob_bound == Catch::Approx(0.999999));
    CHECK(res.expected_degree == Catch::Approx(M_PI * 1000 * 0.04));

    auto low = lemma1_check(1000, 0.05);
    CHECK_FALSE(low.satisfied);  // 2.5 < 13.8
    CHECK_THROWS_AS(lemma1_check(1, 0.1), GeometryError);
}

TEST_CASE("torus mean degree approaches pi n r^2") {
    const int n = 1000;
    const double r = 0.05;
    std::vector<double> degrees;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Placement p = uniform_placement(n, true);
        Rgg g = generate_rgg(p, r, seed);
        degrees.push_back(g.mean_degree());
    }
    double expect = M_PI * n * r * r;
    CHECK(oracle::mean(degrees) == Catch::Approx(expect).epsilon(0.05));
}

TEST_CASE("path length bound") {
    CHECK(path_length_bound(1.0, 1024, 8) == Catch::Approx(14.0));
    CHECK(path_length_bound(2.0, 1024, 8) < path_length_bound(1.0, 1024, 8));
    CHECK(path_length_bound(1.0, 10, 8) == Catch::Approx(2.0));
    CHECK_THROWS_AS(path_length_bound(0.0, 100, 8), GeometryError);
}

TEST_CASE("BFS shortest paths respect the bound with ball-sampled expansion") {
    Rng rng(77);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        Rgg g = generate_rgg(uniform_placement(300), 0.13, seed);
        if (!is_connected(g)) continue;
        int n = g.n();
        // Empirical expansion: minimum vertex-boundary ratio |N(S)\S| / |S|
        // over sampled BFS balls of every radius, the tight sets of a
        // geometric graph. The path argument grows the reached set by this
        // ratio per hop.
        double beta = std::numeric_limits<double>::infinity();
        std::uniform_int_distribution<int> pick(0, n - 1);
        for (int s = 0; s < 100; ++s) {
            int root = pick(rng);
            auto dist = oracle::bfs_distances(g.adjacency, root);
            int max_radius = *std::max_element(dist.begin(), dist.end());
            for (int radius = 1; radius <= max_radius; ++radius) {
                std::vector<char> in_set(n, 0);
                int size = 0;
                for (int v = 0; v < n; ++v)
                    if (dist[v] >= 0 && dist[v] <= radius) {
                        in_set[v] = 1;
                        ++size;
                    }
                if (size == 0 || size > n / 2) break;
                std::set<int> frontier;
                for (int v = 0; v < n; ++v) {
                    if (!in_set[v]) continue;
                    for (int w : g.adjacency[v])
                        if (!in_set[w]) frontier.insert(w);
                }
                beta = std::min(beta, static_cast<double>(frontier.size()) / size);
            }
        }
        REQUIRE(beta > 0.0);
        REQUIRE(std::isfinite(beta));
        double bound = path_length_bound(beta, n, g.mean_degree());
        int worst = 0;
        for (int src = 0; src < n; src += 37) {
            auto dist = oracle::bfs_distances(g.adjacency, src);
            for (int v = 0; v < n; ++v) worst = std::max(worst, dist[v]);
        }
        CHECK(worst <= bound);
    }
}

TEST_CASE("eq 1 success probability: boundaries") {
    CHECK(tx_success_probability(0.7, 0.9, 10, 0) == Catch::Approx(0.81));
    CHECK(tx_success_probability(1.0, 1.0, 10, 4) == Catch::Approx(1.0));
    CHECK(tx_success_probability(0.5, 0.5, 10, 11) == 0.0);  // mTr > |TN|
    CHECK_THROWS_AS(tx_success_probability(1.5, 0.5, 10, 1), GeometryError);
}

TEST_CASE("eq 1 matches exhaustive enumeration") {
    const double p = 0.5, frac = 0.8;
    for (int tn = 1; tn <= 12; ++tn)
        for (int mTr = 0; mTr <= tn; ++mTr) {
            double got = tx_success_probability(p, frac, tn, mTr);
            double want =
                frac * frac * oracle::binomial_tail_bruteforce(tn, mTr, p * frac);
            REQUIRE(got == Catch::Approx(want).margin(1e-12));
        }
}

TEST_CASE("eq 1 monotonicity") {
    double prev = 1.0;
    for (int mTr = 0; mTr <= 10; ++mTr) {
        double v = tx_success_probability(0.6, 0.7, 10, mTr);
        REQUIRE(v <= prev + 1e-15);
        REQUIRE(v >= 0.0);
        REQUIRE(v <= 1.0);
        prev = v;
    }
    CHECK(tx_success_probability(0.3, 0.7, 10, 3) <=
          tx_success_probability(0.9, 0.7, 10, 3));
    CHECK(tx_success_probability(0.6, 0.3, 10, 3) <=
          tx_success_probability(0.6, 0.9, 10, 3));
}

TEST_CASE("mean pairwise distance constants") {
    auto disc1 = mean_pairwise_distance_estimate(Region::disc, 1.0, 200000, 9);
    CHECK(disc1.mean == Catch::Approx(128.0 / (45.0 * M_PI)).margin(0.004));
    CHECK(disc1.std_error < 0.002);

    // Area-uniform quarter disc; the constant is ~0.4738.
    auto qd = mean_pairwise_distance_estimate(Region::quarter_disc, 1.0, 200000, 9);
    CHECK(qd.mean == Catch::Approx(0.4738).margin(0.004));

    // Radius-and-angle-uniform sampling gives ~0.4533 instead.
    auto qd_radial = mean_pairwise_distance_estimate(
        Region::quarter_disc, 1.0, 200000, 9, RegionSampling::radial_uniform);
    CHECK(qd_radial.mean == Catch::Approx(0.4533).margin(0.004));

    auto sq = mean_pairwise_distance_estimate(Region::unit_square, 1.0, 200000, 9);
    CHECK(sq.mean == Catch::Approx(0.521405).margin(0.004));
}

TEST_CASE("mean pairwise distance scales linearly in the radius") {
    auto r1 = mean_pairwise_distance_estimate(Region::disc, 1.0, 100000, 3);
    auto r2 = mean_pairwise_distance_estimate(Region::disc, 2.0, 100000, 3);
    CHECK(r2.mean == Catch::Approx(2.0 * r1.mean).epsilon(0.02));
}

TEST_CASE("estimator standard error shrinks like 1/sqrt(samples)") {
    auto small = mean_pairwise_distance_estimate(Region::disc, 1.0, 10000, 4);
    auto large = mean_pairwise_distance_estimate(Region::disc, 1.0, 160000, 4);
    CHECK(small.std_error / large.std_error == Catch::Approx(4.0).epsilon(0.15));
    CHECK_THROWS_AS(mean_pairwise_distance_estimate(Region::disc, 1.0, 10, 4),
                    GeometryError);
}

TEST_CASE("critical density classification") {
    CHECK(critical_density_report(1000, 0.02).phase == Phase::subcritical);  // 0.4
    auto mid = critical_density_report(1000, 0.038);  // 1.444
    CHECK(mid.phase == Phase::critical_window);
    CHECK(mid.density == Catch::Approx(1.444));
    CHECK(mid.mean_degree == Catch::Approx(M_PI * 1.444));
    CHECK(critical_density_report(1000, 0.07).phase == Phase::supercritical);  // 4.9
}

TEST_CASE("giant component emergence brackets the critical window") {
    const int n = 2000;
    double below = 0.0, above = 1.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        double r_lo = std::sqrt(0.25 / n);  // density 0.25
        double r_hi = std::sqrt(6.0 / n);   // density 6.0
        below = std::max(
            below, major_component_fraction(generate_rgg(uniform_placement(n), r_lo, seed)));
        above = std::min(
            above, major_component_fraction(generate_rgg(uniform_placement(n), r_hi, seed)));
    }
    CHECK(below < 0.2);
    CHECK(above > 0.8);
}

TEST_CASE("grid poisson placement concentrates users and keeps n exact") {
    Placement p;
    p.kind = PlacementKind::grid_poisson;
    p.n = 1000;
    for (auto& row : p.grid_weights)
        for (auto& w : row) w = 0.0;
    p.grid_weights[0][0] = 3.0;
    p.grid_weights[9][9] = 1.0;
    Rng rng(42);
    auto pts = place_users(p, rng);
    REQUIRE(pts.size() == 1000u);
    int in_hot = 0;
    for (const auto& q : pts)
        if (q.x < 0.1 && q.y < 0.1) ++in_hot;
    CHECK(in_hot > 600);  // expected 750
    for (const auto& q : pts) {
        bool cell_a = q.x < 0.1 && q.y < 0.1;
        bool cell_b = q.x >= 0.9 && q.y >= 0.9;
        REQUIRE((cell_a || cell_b));
    }
}

TEST_CASE("rgg generation is deterministic for a fixed seed") {
    Rgg a = generate_rgg(uniform_placement(200), 0.08, 123);
    Rgg b = generate_rgg(uniform_placement(200), 0.08, 123);
    REQUIRE(a.adjacency == b.adjacency);
    for (int i = 0; i < a.n(); ++i) {
        REQUIRE(a.positions[i].x == b.positions[i].x);
        REQUIRE(a.positions[i].y == b.positions[i].y);
    }
    Rgg c = generate_rgg(uniform_placement(200), 0.08, 124);
    CHECK(a.adjacency != c.adjacency);
}
