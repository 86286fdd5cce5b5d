#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"

#include "carleson/tiles.hpp"

#include <random>
#include <set>

using namespace carleson;

namespace {

// full-grid data over a 1D box with the given per-sample assignment rule
LinearizingData make_data(int D, int s_min, int s_max, std::vector<PolyClass> phases,
                          int subdiv = 1, uint64_t seed = 5,
                          const std::string& mode = "random") {
    LinearizingData data;
    data.box = WorkingBox{1, D, s_min, s_max, subdiv};
    data.phases = std::move(phases);
    const long long C = data.box.cells_per_axis();
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pu(0, static_cast<int>(data.phases.size()) - 1);
    for (long long i = 0; i < C; ++i) {
        Sample s;
        s.pos = {2 * i + 1};
        if (mode == "random") {
            s.phase = pu(rng);
            s.sigma_lo = std::uniform_int_distribution<int>(s_min, s_max)(rng);
            s.sigma_hi = std::uniform_int_distribution<int>(s.sigma_lo, s_max)(rng);
        } else {
            s.phase = 0;
            s.sigma_lo = s_min;
            s.sigma_hi = s_max;
        }
        data.samples.push_back(std::move(s));
    }
    return data;
}

// slopes are given as oscillation over the whole box
std::vector<PolyClass> affine_phases(std::vector<double> oscillations, double box_side) {
    std::vector<PolyClass> out;
    for (double a : oscillations) {
        PolyClass q(1, 1);
        q.coeff(0) = a / box_side;
        out.push_back(q);
    }
    return out;
}

} // namespace

TEST_CASE("single-scale lattice reduces to nearest top-net cells") {
    auto data = make_data(8, 2, 2, affine_phases({0.0, 0.4, -0.64}, 64.0));
    auto lat = TileLattice::build(data, LatticeParams{});
    CHECK(lat.cubes().size() == 1);
    oracle::MembershipOracle mo{lat};
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-0.02 / 64.0, 0.02 / 64.0);
    for (int trial = 0; trial < 60; ++trial) {
        PolyClass q(1, 1);
        q.coeff(0) = u(rng);
        if (mo.top_margin(q) < 1e-6) continue;
        int via_lattice = lat.resolve_center(0, q);
        CHECK(via_lattice == mo.top_resolve(q));
        double d = oracle::dense_norm(q - lat.net(0).centers[via_lattice],
                                      lat.cubes().real_box(0), 2001);
        CHECK(d <= 0.7 * 1.1 + 1e-9);
    }
}

TEST_CASE("each cube resolves a phase into exactly one cell") {
    auto data = make_data(4, 0, 2, affine_phases({0.0, 0.3, -0.4, 0.9}, 16.0));
    auto lat = TileLattice::build(data, LatticeParams{});
    for (int c = 0; c < lat.cubes().size(); ++c) {
        for (size_t q = 0; q < data.phases.size(); ++q) {
            int r = lat.resolved_phase_center(c, static_cast<int>(q));
            REQUIRE(r >= 0);
            REQUIRE(r < static_cast<int>(lat.net(c).centers.size()));
            int members = 0;
            for (size_t cc = 0; cc < lat.net(c).centers.size(); ++cc)
                if (lat.tile_membership(data.phases[q], Tile{c, static_cast<int>(cc)}))
                    ++members;
            CHECK(members == 1);
            CHECK(lat.tile_membership(data.phases[q], Tile{c, r}));
        }
    }
}

TEST_CASE("parent centers land on every child cell") {
    auto data = make_data(4, 0, 1, affine_phases({0.0}, 4.0));
    auto lat = TileLattice::build(data, LatticeParams{});
    for (int c = 0; c < lat.cubes().size(); ++c) {
        if (lat.cubes().parent_id[c] < 0) continue;
        const auto& pn = lat.net(lat.cubes().parent_id[c]);
        const auto& cn = lat.net(c);
        CHECK(pn.centers.size() >= cn.centers.size());
        std::vector<int> preimage(cn.centers.size(), 0);
        for (size_t j = 0; j < pn.centers.size(); ++j)
            ++preimage[lat.descend_center(lat.cubes().parent_id[c], static_cast<int>(j), c)];
        // materialized cells all receive at least one parent center
        for (int tid : lat.tiles_of_cube(c)) CHECK(preimage[lat.tile(tid).center] >= 1);
    }
}

TEST_CASE("assignment respects the 0.3/0.7 sandwich") {
    auto data = make_data(8, 0, 2, affine_phases({0.0, 0.8}, 64.0));
    auto lat = TileLattice::build(data, LatticeParams{});
    for (int c = 0; c < lat.cubes().size(); ++c) {
        int par = lat.cubes().parent_id[c];
        if (par < 0) continue;
        RealBox rb = lat.cubes().real_box(c);
        for (size_t j = 0; j < lat.net(par).centers.size(); ++j) {
            int a = lat.descend_center(par, static_cast<int>(j), c);
            double d_assigned =
                oracle::dense_norm(lat.net(par).centers[j] - lat.net(c).centers[a], rb, 801);
            CHECK(d_assigned <= 0.7 * 1.1 + 1e-9);
            for (size_t i = 0; i < lat.net(c).centers.size(); ++i) {
                double d = oracle::dense_norm(
                    lat.net(par).centers[j] - lat.net(c).centers[i], rb, 801);
                if (d <= 0.3 - 1e-9) CHECK(a == static_cast<int>(i));
            }
        }
    }
}

TEST_CASE("membership matches the brute-force descent oracle") {
    auto data = make_data(8, 0, 2, affine_phases({0.0, 0.45, -0.9}, 64.0));
    auto lat = TileLattice::build(data, LatticeParams{});
    oracle::MembershipOracle mo{lat};
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-0.15 / 64.0, 0.15 / 64.0);
    std::uniform_int_distribution<int> cu(0, lat.cubes().size() - 1);
    int checked = 0;
    for (int trial = 0; trial < 300; ++trial) {
        PolyClass q(1, 1);
        q.coeff(0) = u(rng);
        if (mo.top_margin(q) < 1e-6) continue;
        int cube = cu(rng);
        int c = lat.resolve_center(cube, q);
        CHECK(mo.member(q, Tile{cube, c}));
        ++checked;
    }
    CHECK(checked > 200);
}

TEST_CASE("membership respects the rigorous ball sandwich") {
    auto data = make_data(8, 0, 2, affine_phases({0.0, 0.6}, 64.0));
    LatticeParams params;
    auto lat = TileLattice::build(data, params);
    RealBox top_box = lat.cubes().real_box(0);
    const double region_reach = params.phase_radius + params.lambda_margin;
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(0.0, 1.3);
    int inner = 0, outer = 0;
    for (const Tile& p : lat.tiles()) {
        CHECK(lat.tile_membership(lat.center(p), p));
        RealBox rb = lat.cubes().real_box(p.cube);
        for (int trial = 0; trial < 10; ++trial) {
            PolyClass dir(1, 1);
            dir.coeff(0) = 1.0;
            double upn = bernstein_range(dir, rb, 2).width();
            double radius = u(rng) * (trial % 2 == 0 ? 1.0 : -1.0);
            PolyClass q = lat.center(p) + dir * (radius / upn);
            // membership assumes the declared phase region
            if (bernstein_range(q, top_box, 2).width() > region_reach) continue;
            auto info = lat.diff_norm(q, lat.center(p), p.cube);
            bool member = lat.tile_membership(q, p);
            if (info.outer.width() <= 0.2) {
                CHECK(member);
                ++inner;
            }
            if (info.attained_hi - info.attained_lo > 1.0) {
                CHECK(!member);
                ++outer;
            }
        }
    }
    CHECK(inner > 0);
    CHECK(outer > 0);
}

TEST_CASE("order relation is reflexive and spatially grounded") {
    auto data = make_data(8, 0, 2, affine_phases({0.0, 0.8, -0.8}, 64.0));
    auto lat = TileLattice::build(data, LatticeParams{});
    const auto& tiles = lat.tiles();
    for (size_t i = 0; i < tiles.size(); i += 5) CHECK(lat.order_le(tiles[i], tiles[i]));
    int c1 = -1, c2 = -1;
    for (int c = 0; c < lat.cubes().size(); ++c)
        if (lat.cubes().scale(c) == 0) (c1 < 0 ? c1 : c2) = c;
    REQUIRE(c2 >= 0);
    Tile a{c1, 0}, b{c2, 0};
    CHECK(!lat.order_le(a, b));
    CHECK(!lat.order_le(b, a));
}

TEST_CASE("region inclusion agrees with sampled-phase containment") {
    auto data = make_data(8, 0, 2, affine_phases({0.0, 0.4, -0.95}, 64.0));
    auto lat = TileLattice::build(data, LatticeParams{});
    oracle::MembershipOracle mo{lat};
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-0.2 / 64.0, 0.2 / 64.0);
    int tested = 0;
    for (const Tile& p1 : lat.tiles()) {
        if (tested > 12) break;
        for (const Tile& p2 : lat.tiles()) {
            if (p1.cube == p2.cube || !lat.cubes().contains(p1.cube, p2.cube)) continue;
            bool le = lat.order_le(p1, p2);
            ++tested;
            int both = 0, in2 = 0;
            for (int trial = 0; trial < 1000; ++trial) {
                PolyClass q(1, 1);
                q.coeff(0) = u(rng);
                if (mo.top_margin(q) < 1e-6) continue;
                bool m2 = lat.tile_membership(q, p2);
                bool m1 = lat.tile_membership(q, p1);
                if (m2) {
                    ++in2;
                    if (m1) ++both;
                }
            }
            if (le)
                CHECK(both == in2); // region(p2) inside region(p1)
            else
                CHECK(both == 0); // regions disjoint
            break;
        }
    }
    CHECK(tested > 0);
}

TEST_CASE("dilated order is reflexive and fails across disjoint cubes") {
    auto data = make_data(8, 0, 2, affine_phases({0.0, 0.8}, 64.0));
    auto lat = TileLattice::build(data, LatticeParams{});
    const Tile p = lat.tiles()[0];
    CHECK(lat.dilated_le(2.0, p, p));
    int c1 = -1, c2 = -1;
    for (int c = 0; c < lat.cubes().size(); ++c)
        if (lat.cubes().scale(c) == 0) (c1 < 0 ? c1 : c2) = c;
    CHECK(!lat.dilated_le(1.0, Tile{c1, 0}, Tile{c2, 0}));
}

TEST_CASE("certified dilated inclusion agrees with a sampling oracle") {
    auto data = make_data(8, 0, 2, affine_phases({0.0, 0.4}, 64.0));
    auto lat = TileLattice::build(data, LatticeParams{});
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int certified_true = 0;
    for (const Tile& p1 : lat.tiles()) {
        for (const Tile& p2 : lat.tiles()) {
            if (!lat.cubes().contains(p1.cube, p2.cube) || p1.cube == p2.cube) continue;
            if (!lat.dilated_le(2.0, p1, p2)) continue;
            ++certified_true;
            RealBox rb2 = lat.cubes().real_box(p2.cube);
            RealBox rb1 = lat.cubes().real_box(p1.cube);
            for (int trial = 0; trial < 200; ++trial) {
                PolyClass dir(1, 1);
                dir.coeff(0) = u(rng);
                if (dir.is_zero()) continue;
                double nn = oracle::dense_norm(dir, rb2, 801);
                PolyClass s = lat.center(p2) + dir * (2.0 / nn);
                double d1 = oracle::dense_norm(s - lat.center(p1), rb1, 801);
                CHECK(d1 <= 2.0 + 1e-6);
            }
            if (certified_true > 4) break;
        }
        if (certified_true > 4) break;
    }
    CHECK(certified_true > 0);
}

TEST_CASE("E sets follow the definition") {
    auto data = make_data(8, 0, 2, affine_phases({0.0, 0.5, -0.8}, 64.0), 1, 9, "random");
    auto lat = TileLattice::build(data, LatticeParams{});
    for (const Tile& p : lat.tiles()) {
        auto E = lat.compute_E(p, data);
        auto Eb = lat.compute_Ebar(p, data);
        std::set<int> es(E.begin(), E.end()), ebs(Eb.begin(), Eb.end());
        const int s = lat.cubes().scale(p.cube);
        for (size_t i = 0; i < data.samples.size(); ++i) {
            const Sample& x = data.samples[i];
            bool in_cube = lat.cubes().ibox(p.cube).contains_point(x.pos);
            bool member =
                in_cube && lat.resolved_phase_center(p.cube, x.phase) == p.center;
            bool inE = member && x.sigma_lo <= s && s <= x.sigma_hi;
            bool inEb = member && s <= x.sigma_hi;
            CHECK(es.count(static_cast<int>(i)) == size_t(inE));
            CHECK(ebs.count(static_cast<int>(i)) == size_t(inEb));
        }
    }
}

TEST_CASE("dilated E sets grow with lambda") {
    auto data = make_data(8, 0, 2, affine_phases({0.0, 0.5}, 64.0), 1, 31, "random");
    auto lat = TileLattice::build(data, LatticeParams{});
    for (const Tile& p : lat.tiles()) {
        auto e2 = lat.compute_E_dilated(2.0, p, data);
        auto e3 = lat.compute_E_dilated(3.0, p, data);
        std::set<int> s3(e3.begin(), e3.end());
        for (int i : e2) CHECK(s3.count(i));
    }
}

TEST_CASE("lattice rejects phases outside the declared region") {
    PolyClass far(1, 1);
    far.coeff(0) = 10.0; // oscillation 640 over the box, radius is 1
    auto data = make_data(8, 0, 2, {far});
    CHECK_THROWS_AS(TileLattice::build(data, LatticeParams{}), std::invalid_argument);
}
