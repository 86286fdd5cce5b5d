#pragma once

// Independent brute-force oracles used by the test suites. These deliberately
// avoid the library's evaluation paths wherever the checked claim allows it.

#include "carleson/polyspace.hpp"
#include "carleson/tiles.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace oracle {

using namespace carleson;

/// Dense-grid oscillation norm: max - min over an m^ds grid.
inline double dense_norm(const PolyClass& Q, const RealBox& box, int m) {
    const int ds = box.dims();
    std::vector<int> ix(ds, 0);
    std::vector<double> x(ds);
    double mn = 0, mx = 0;
    bool first = true;
    while (true) {
        for (int k = 0; k < ds; ++k) x[k] = box.lo[k] + box.side(k) * ix[k] / (m - 1);
        double v = Q.eval(x);
        if (first) {
            mn = mx = v;
            first = false;
        } else {
            mn = std::min(mn, v);
            mx = std::max(mx, v);
        }
        int k = 0;
        while (k < ds && ++ix[k] == m) ix[k++] = 0;
        if (k == ds) break;
    }
    return mx - mn;
}

/// Greedy maximal separated subset of a 1D coefficient lattice, visited
/// nearest-first with the negative tie first (independent replay of the
/// 1-parameter net construction).
inline int greedy_net_size_1d(double radius, double sep, double step) {
    long long K = static_cast<long long>(std::ceil(radius / step)) + 1;
    std::vector<long long> order;
    for (long long k = -K; k <= K; ++k) order.push_back(k);
    std::sort(order.begin(), order.end(), [&](long long a, long long b) {
        double da = std::abs(a) * step, db = std::abs(b) * step;
        if (da != db) return da < db;
        return a < b;
    });
    // distances from integer lattice offsets, as the construction computes them
    std::vector<long long> centers;
    for (long long k : order) {
        bool ok = true;
        for (long long c : centers)
            if (std::abs(k - c) * step < sep) {
                ok = false;
                break;
            }
        if (ok) centers.push_back(k);
    }
    return static_cast<int>(centers.size());
}

/// Random polynomial class with coefficients in [-1, 1].
inline PolyClass random_poly(int ds, int d, std::mt19937_64& rng) {
    PolyClass q(ds, d);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < q.dim(); ++i) q.coeff(i) = u(rng);
    return q;
}

/// Independent membership oracle: replays the recursive cell-union definition
/// with dense-grid distances (nearest-center resolution at the top scale).
struct MembershipOracle {
    const TileLattice& lat;
    int grid = 101;

    int top_resolve(const PolyClass& Q) const {
        const auto& net = lat.net(0);
        RealBox rb = lat.cubes().real_box(0);
        int best = -1;
        double bd = 0;
        for (size_t i = 0; i < net.centers.size(); ++i) {
            double d = dense_norm(Q - net.centers[i], rb, grid);
            if (best < 0 || d < bd) {
                best = static_cast<int>(i);
                bd = d;
            }
        }
        return best;
    }

    // margin between the two nearest top cells (to skip degenerate ties)
    double top_margin(const PolyClass& Q) const {
        const auto& net = lat.net(0);
        RealBox rb = lat.cubes().real_box(0);
        double d1 = 1e300, d2 = 1e300;
        for (size_t i = 0; i < net.centers.size(); ++i) {
            double d = dense_norm(Q - net.centers[i], rb, grid);
            if (d < d1) {
                d2 = d1;
                d1 = d;
            } else
                d2 = std::min(d2, d);
        }
        return d2 - d1;
    }

    bool member(const PolyClass& Q, const Tile& p) const {
        // descend the top cell through the recorded assignments
        int cube = 0;
        int c = top_resolve(Q);
        while (cube != p.cube) {
            // move one scale down along the ancestor chain of p.cube
            int next = -1;
            for (int kid : lat.cubes().kids[cube])
                if (lat.cubes().contains(p.cube, kid)) next = kid;
            c = lat.descend_center(cube, c, next);
            cube = next;
        }
        return c == p.center;
    }
};

} // namespace oracle
