#pragma once

#include "carleson/polyspace.hpp"

#include <cstdint>
#include <vector>

namespace carleson {

using Ticks = long long;

/// Integer half-open box [lo, hi) in tick units. One sample cell is 2 ticks
/// wide per axis, so concentric integer dilates of grid cubes stay integral.
struct IBox {
    std::vector<Ticks> lo, hi;

    int dims() const { return static_cast<int>(lo.size()); }
    bool contains(const IBox& o) const;
    bool intersects(const IBox& o) const;
    bool contains_point(const std::vector<Ticks>& p) const;
    bool operator==(const IBox& o) const = default;
};

/// The finite working window: D-adic cubes of scales s_min..s_max inside
/// [0, D^{s_max})^ds, sampled on a sub-grid of `subdiv` cells per finest
/// cube per axis.
struct WorkingBox {
    int ds = 1;
    int D = 8;
    int s_min = 0;
    int s_max = 2;
    int subdiv = 1;

    int num_scales() const { return s_max - s_min + 1; }
    Ticks side_ticks(int s) const; // 2 * subdiv * D^(s - s_min)
    Ticks box_side_ticks() const { return side_ticks(s_max); }
    long long cells_per_axis() const; // sample cells per axis
    double tick_len() const;          // length of one tick in real units
    IBox full_ibox() const;
    RealBox to_real(const IBox& b) const;
};

/// A D-adic grid cube identified by scale and integer corner indices:
/// cube = prod_i [D^s a_i, D^s (a_i + 1)).
struct GridCube {
    int s = 0;
    std::vector<long long> a;
    bool operator==(const GridCube& o) const = default;
};

GridCube parent(const WorkingBox& box, const GridCube& c);
std::vector<GridCube> children(const WorkingBox& box, const GridCube& c);
IBox cube_ibox(const WorkingBox& box, const GridCube& c);

/// Concentric dilate a*I with integer a >= 1 (side a * l(I)), unclipped.
IBox dilate(const WorkingBox& box, const GridCube& c, long long a);

/// All scale-s grid cubes of the working box meeting `region`.
std::vector<GridCube> cubes_intersecting(const WorkingBox& box, const IBox& region, int s);

/// Dense enumeration of every in-range cube, top scale first; the unique
/// scale-s_max cube has id 0.
struct CubeIndex {
    WorkingBox box;
    std::vector<GridCube> cubes;
    std::vector<int> parent_id;         // -1 at top scale
    std::vector<std::vector<int>> kids; // ids of D-adic children ('' at s_min)
    std::vector<int> scale_first;       // first id per scale (indexed s - s_min)

    explicit CubeIndex(const WorkingBox& b);
    int size() const { return static_cast<int>(cubes.size()); }
    int id_of(const GridCube& c) const;
    int id_of_point(const std::vector<Ticks>& p, int s) const;
    double volume(int id) const;
    RealBox real_box(int id) const;
    IBox ibox(int id) const { return cube_ibox(box, cubes[id]); }
    bool contains(int inner, int outer) const; // cube containment by ids
    int scale(int id) const { return cubes[id].s; }
};

} // namespace carleson
