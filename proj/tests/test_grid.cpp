#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "carleson/grid.hpp"

#include <set>

using namespace carleson;

namespace {

WorkingBox box_1d(int D, int s_min, int s_max, int subdiv = 1) {
    WorkingBox b;
    b.ds = 1;
    b.D = D;
    b.s_min = s_min;
    b.s_max = s_max;
    b.subdiv = subdiv;
    return b;
}

} // namespace

TEST_CASE("children partition a cube into D^ds pieces") {
    WorkingBox b = box_1d(4, 0, 1);
    GridCube I{1, {0}}; // [0,4)
    auto kids = children(b, I);
    REQUIRE(kids.size() == 4);
    for (int i = 0; i < 4; ++i) {
        CHECK(kids[i].s == 0);
        CHECK(kids[i].a[0] == i);
        CHECK(parent(b, kids[i]) == I);
    }
    // tick boxes tile the parent
    IBox pb = cube_ibox(b, I);
    Ticks covered = 0;
    for (const auto& k : kids) {
        IBox kb = cube_ibox(b, k);
        CHECK(pb.contains(kb));
        covered += kb.hi[0] - kb.lo[0];
    }
    CHECK(covered == pb.hi[0] - pb.lo[0]);
}

TEST_CASE("unit dilate is the identity") {
    WorkingBox b = box_1d(4, 0, 1);
    GridCube I{1, {0}};
    CHECK(dilate(b, I, 1) == cube_ibox(b, I));
}

TEST_CASE("concentric dilate triples the side") {
    WorkingBox b = box_1d(4, 0, 1);
    GridCube I{1, {1}}; // [4,8) in real units
    IBox d3 = dilate(b, I, 3);
    // side 3 * 4 = 12 around center 6: [0,12) in real units = [0,24) ticks
    CHECK(d3.lo[0] == 0);
    CHECK(d3.hi[0] == 24);
    CHECK(b.to_real(d3).lo[0] == doctest::Approx(0.0));
    CHECK(b.to_real(d3).hi[0] == doctest::Approx(12.0));
}

TEST_CASE("point regions meet exactly one cube") {
    WorkingBox b = box_1d(4, 0, 2);
    IBox pt;
    pt.lo = {9};
    pt.hi = {10};
    auto cs = cubes_intersecting(b, pt, 0);
    REQUIRE(cs.size() == 1);
    CHECK(cs[0].a[0] == 4); // ticks 8..10 cover cell 4 at scale 0 (side 2)
}

TEST_CASE("the full box is covered by all cubes of a scale") {
    WorkingBox b = box_1d(4, 0, 2);
    for (int s = 0; s <= 2; ++s) {
        auto cs = cubes_intersecting(b, b.full_ibox(), s);
        long long expect = 1;
        for (int k = s; k < 2; ++k) expect *= 4;
        CHECK(static_cast<long long>(cs.size()) == expect);
    }
}

TEST_CASE("triple dilate of an interior cube meets 3^ds cubes of its scale") {
    WorkingBox b = box_1d(4, 0, 2);
    GridCube I{0, {5}};
    auto cs = cubes_intersecting(b, dilate(b, I, 3), 0);
    CHECK(cs.size() == 3);

    // enumeration oracle: check every scale-0 cube directly
    int count = 0;
    IBox tri = dilate(b, I, 3);
    for (long long a = 0; a < 16; ++a) {
        IBox cb = cube_ibox(b, GridCube{0, {a}});
        if (cb.intersects(tri)) ++count;
    }
    CHECK(count == 3);
}

TEST_CASE("grid cubes are nested or disjoint") {
    WorkingBox b = box_1d(4, 0, 2);
    CubeIndex idx(b);
    for (int i = 0; i < idx.size(); ++i)
        for (int j = 0; j < idx.size(); ++j) {
            IBox a = idx.ibox(i), c = idx.ibox(j);
            if (!a.intersects(c)) continue;
            CHECK((a.contains(c) || c.contains(a)));
        }
}

TEST_CASE("scale counting inside a bigger cube") {
    WorkingBox b = box_1d(4, 0, 2);
    CubeIndex idx(b);
    GridCube big{2, {0}};
    int count = 0;
    for (int i = 0; i < idx.size(); ++i)
        if (idx.scale(i) == 0 && idx.ibox(idx.id_of(big)).contains(idx.ibox(i))) ++count;
    CHECK(count == 16); // D^{ds * (2-0)}
}

TEST_CASE("cube ids resolve points and parents") {
    WorkingBox b = box_1d(4, 0, 2, 2);
    CubeIndex idx(b);
    CHECK(idx.size() == 1 + 4 + 16);
    CHECK(idx.scale(0) == 2);
    std::vector<Ticks> p{17};
    int c0 = idx.id_of_point(p, 0);
    REQUIRE(c0 >= 0);
    CHECK(idx.ibox(c0).contains_point(p));
    int c1 = idx.parent_id[c0];
    CHECK(idx.ibox(c1).contains(idx.ibox(c0)));
    CHECK(idx.contains(c0, c1));
    CHECK(idx.contains(c0, 0));
    CHECK(!idx.contains(c1, c0));
}

TEST_CASE("scales outside the box are rejected") {
    WorkingBox b = box_1d(4, 0, 1);
    GridCube bottom{0, {0}};
    GridCube top{1, {0}};
    CHECK_THROWS_AS(children(b, bottom), std::out_of_range);
    CHECK_THROWS_AS(parent(b, top), std::out_of_range);
}
