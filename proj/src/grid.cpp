#include "carleson/grid.hpp"

#include <cmath>
#include <stdexcept>

namespace carleson {

bool IBox::contains(const IBox& o) const {
    for (int i = 0; i < dims(); ++i)
        if (o.lo[i] < lo[i] || o.hi[i] > hi[i]) return false;
    return true;
}

bool IBox::intersects(const IBox& o) const {
    for (int i = 0; i < dims(); ++i)
        if (o.hi[i] <= lo[i] || o.lo[i] >= hi[i]) return false;
    return true;
}

bool IBox::contains_point(const std::vector<Ticks>& p) const {
    for (int i = 0; i < dims(); ++i)
        if (p[i] < lo[i] || p[i] >= hi[i]) return false;
    return true;
}

Ticks WorkingBox::side_ticks(int s) const {
    if (s < s_min || s > s_max) throw std::out_of_range("WorkingBox: scale out of range");
    Ticks t = 2 * subdiv;
    for (int k = s_min; k < s; ++k) t *= D;
    return t;
}

long long WorkingBox::cells_per_axis() const {
    long long c = subdiv;
    for (int k = s_min; k < s_max; ++k) c *= D;
    return c;
}

double WorkingBox::tick_len() const {
    return std::pow(double(D), double(s_min)) / (2.0 * subdiv);
}

IBox WorkingBox::full_ibox() const {
    IBox b;
    b.lo.assign(ds, 0);
    b.hi.assign(ds, box_side_ticks());
    return b;
}

RealBox WorkingBox::to_real(const IBox& b) const {
    RealBox r;
    const double u = tick_len();
    r.lo.resize(ds);
    r.hi.resize(ds);
    for (int i = 0; i < ds; ++i) {
        r.lo[i] = b.lo[i] * u;
        r.hi[i] = b.hi[i] * u;
    }
    return r;
}

GridCube parent(const WorkingBox& box, const GridCube& c) {
    if (c.s >= box.s_max) throw std::out_of_range("parent: already at top scale");
    GridCube p;
    p.s = c.s + 1;
    p.a.resize(c.a.size());
    for (size_t i = 0; i < c.a.size(); ++i) {
        long long v = c.a[i];
        p.a[i] = (v >= 0 ? v / box.D : -((-v + box.D - 1) / box.D));
    }
    return p;
}

std::vector<GridCube> children(const WorkingBox& box, const GridCube& c) {
    if (c.s <= box.s_min) throw std::out_of_range("children: already at bottom scale");
    std::vector<GridCube> out;
    const int ds = box.ds;
    std::vector<long long> off(ds, 0);
    while (true) {
        GridCube k;
        k.s = c.s - 1;
        k.a.resize(ds);
        for (int i = 0; i < ds; ++i) k.a[i] = c.a[i] * box.D + off[i];
        out.push_back(std::move(k));
        int i = 0;
        while (i < ds && ++off[i] == box.D) off[i++] = 0;
        if (i == ds) break;
    }
    return out;
}

IBox cube_ibox(const WorkingBox& box, const GridCube& c) {
    IBox b;
    const Ticks side = box.side_ticks(c.s);
    b.lo.resize(box.ds);
    b.hi.resize(box.ds);
    for (int i = 0; i < box.ds; ++i) {
        b.lo[i] = c.a[i] * side;
        b.hi[i] = (c.a[i] + 1) * side;
    }
    return b;
}

IBox dilate(const WorkingBox& box, const GridCube& c, long long a) {
    if (a < 1) throw std::invalid_argument("dilate: factor must be >= 1");
    IBox b = cube_ibox(box, c);
    const Ticks half = (a - 1) * box.side_ticks(c.s) / 2;
    for (int i = 0; i < box.ds; ++i) {
        b.lo[i] -= half;
        b.hi[i] += half;
    }
    return b;
}

std::vector<GridCube> cubes_intersecting(const WorkingBox& box, const IBox& region, int s) {
    const Ticks side = box.side_ticks(s);
    long long per_axis = 1;
    for (int k = s; k < box.s_max; ++k) per_axis *= box.D;
    std::vector<long long> first(box.ds), last(box.ds);
    for (int i = 0; i < box.ds; ++i) {
        if (region.hi[i] <= region.lo[i]) return {};
        long long f = region.lo[i] >= 0 ? region.lo[i] / side
                                        : -((-region.lo[i] + side - 1) / side);
        long long l = (region.hi[i] - 1) >= 0
                          ? (region.hi[i] - 1) / side
                          : -((-(region.hi[i] - 1) + side - 1) / side);
        first[i] = std::max(f, 0LL);
        last[i] = std::min(l, per_axis - 1);
        if (first[i] > last[i]) return {};
    }
    std::vector<GridCube> out;
    std::vector<long long> cur = first;
    while (true) {
        GridCube c;
        c.s = s;
        c.a = cur;
        out.push_back(std::move(c));
        int i = 0;
        while (i < box.ds && ++cur[i] > last[i]) cur[i++] = first[i];
        if (i == box.ds) break;
    }
    return out;
}

CubeIndex::CubeIndex(const WorkingBox& b) : box(b) {
    scale_first.assign(box.num_scales(), 0);
    for (int s = box.s_max; s >= box.s_min; --s) {
        scale_first[s - box.s_min] = static_cast<int>(cubes.size());
        auto cs = cubes_intersecting(box, box.full_ibox(), s);
        for (auto& c : cs) cubes.push_back(std::move(c));
    }
    // scale_first currently holds offsets in top-down visit order; rebuild as
    // "first id at scale s" for direct lookup
    parent_id.assign(cubes.size(), -1);
    kids.assign(cubes.size(), {});
    for (int id = 0; id < size(); ++id) {
        if (cubes[id].s < box.s_max) {
            parent_id[id] = id_of(parent(box, cubes[id]));
            kids[parent_id[id]].push_back(id);
        }
    }
}

int CubeIndex::id_of(const GridCube& c) const {
    if (c.s < box.s_min || c.s > box.s_max) return -1;
    long long per_axis = 1;
    for (int k = c.s; k < box.s_max; ++k) per_axis *= box.D;
    long long idx = 0;
    for (int i = box.ds - 1; i >= 0; --i) {
        if (c.a[i] < 0 || c.a[i] >= per_axis) return -1;
        idx = idx * per_axis + c.a[i];
    }
    return scale_first[c.s - box.s_min] + static_cast<int>(idx);
}

int CubeIndex::id_of_point(const std::vector<Ticks>& p, int s) const {
    const Ticks side = box.side_ticks(s);
    GridCube c;
    c.s = s;
    c.a.resize(box.ds);
    for (int i = 0; i < box.ds; ++i) {
        if (p[i] < 0 || p[i] >= box.box_side_ticks()) return -1;
        c.a[i] = p[i] / side;
    }
    return id_of(c);
}

double CubeIndex::volume(int id) const {
    double side = box.side_ticks(cubes[id].s) * box.tick_len();
    double v = 1.0;
    for (int i = 0; i < box.ds; ++i) v *= side;
    return v;
}

RealBox CubeIndex::real_box(int id) const { return box.to_real(ibox(id)); }

bool CubeIndex::contains(int inner, int outer) const {
    if (cubes[inner].s > cubes[outer].s) return false;
    int cur = inner;
    while (cubes[cur].s < cubes[outer].s) cur = parent_id[cur];
    return cur == outer;
}

} // namespace carleson
