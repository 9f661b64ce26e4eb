// Independent reference implementations the tests check the library against.
// Nothing in here may call into the code paths under test.
#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

namespace oracle {

// Plain union-find, used to cross-check component extraction.
class UnionFind {
public:
    explicit UnionFind(int n) : parent_(n) {
        std::iota(parent_.begin(), parent_.end(), 0);
    }

    int find(int x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    void unite(int a, int b) { parent_[find(a)] = find(b); }

    bool connected(int a, int b) { return find(a) == find(b); }

    int component_count() {
        int c = 0;
        for (int i = 0; i < static_cast<int>(parent_.size()); ++i)
            if (find(i) == i) ++c;
        return c;
    }

    std::vector<int> component_sizes() {
        std::vector<int> size(parent_.size(), 0);
        for (int i = 0; i < static_cast<int>(parent_.size()); ++i) size[find(i)]++;
        std::vector<int> out;
        for (int s : size)
            if (s > 0) out.push_back(s);
        return out;
    }

private:
    std::vector<int> parent_;
};

// Exhaustive enumeration over all 2^tn trusted-peer outcomes: probability
// that at least mTr peers can co-sign, each independently with probability q.
inline double binomial_tail_bruteforce(int tn, int mTr, double q) {
    double total = 0.0;
    for (std::uint32_t mask = 0; mask < (1u << tn); ++mask) {
        int successes = __builtin_popcount(mask);
        if (successes < mTr) continue;
        double p = 1.0;
        for (int i = 0; i < tn; ++i) p *= (mask >> i) & 1u ? q : 1.0 - q;
        total += p;
    }
    return total;
}

// Quarter-annulus area by midpoint quadrature in polar coordinates.
inline double quarter_annulus_area_numeric(double r_outer, double r_inner, int steps = 20000) {
    double sum = 0.0;
    double dr = (r_outer - r_inner) / steps;
    for (int i = 0; i < steps; ++i) {
        double r = r_inner + (i + 0.5) * dr;
        sum += r * dr;
    }
    return 0.25 * 2.0 * M_PI * sum;  // quarter of the full ring integral
}

// Unweighted BFS distances from a source over an adjacency list.
inline std::vector<int> bfs_distances(const std::vector<std::vector<int>>& adj, int src) {
    std::vector<int> dist(adj.size(), -1);
    std::vector<int> queue{src};
    dist[src] = 0;
    for (size_t h = 0; h < queue.size(); ++h) {
        int u = queue[h];
        for (int v : adj[u])
            if (dist[v] < 0) {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
    }
    return dist;
}

inline double mean(const std::vector<double>& xs) {
    if (xs.empty()) return 0.0;
    double s = 0.0;
    for (double x : xs) s += x;
    return s / xs.size();
}

}  // namespace oracle
