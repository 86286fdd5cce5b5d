#include "carleson/tiles.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <set>
#include <stdexcept>

namespace carleson {

double LinearizingData::cell_volume() const {
    double side = 2.0 * box.tick_len();
    double v = 1.0;
    for (int i = 0; i < box.ds; ++i) v *= side;
    return v;
}

std::vector<double> LinearizingData::sample_point(int i) const {
    const double u = box.tick_len();
    std::vector<double> x(box.ds);
    for (int k = 0; k < box.ds; ++k) x[k] = samples[i].pos[k] * u;
    return x;
}

void LinearizingData::validate() const {
    for (const auto& s : samples) {
        if (s.sigma_lo > s.sigma_hi)
            throw std::invalid_argument("LinearizingData: sigma_lo > sigma_hi");
        if (s.sigma_lo < box.s_min || s.sigma_hi > box.s_max)
            throw std::invalid_argument("LinearizingData: sigma window out of range");
        if (s.phase < 0 || s.phase >= static_cast<int>(phases.size()))
            throw std::invalid_argument("LinearizingData: phase index out of range");
    }
}

namespace {

std::mutex g_pair_cache_mu;

uint64_t pack_pair_key(Tile a, Tile b, int norm_cube) {
    if (b < a) std::swap(a, b);
    uint64_t k = 0;
    k = (k << 13) | uint64_t(uint32_t(a.cube));
    k = (k << 12) | uint64_t(uint32_t(a.center));
    k = (k << 13) | uint64_t(uint32_t(b.cube));
    k = (k << 12) | uint64_t(uint32_t(b.center));
    k = (k << 13) | uint64_t(uint32_t(norm_cube));
    return k;
}

} // namespace

TileLattice TileLattice::build(const LinearizingData& data, const LatticeParams& params) {
    data.validate();
    TileLattice L;
    L.box_ = data.box;
    L.params_ = params;
    L.idx_ = std::make_shared<CubeIndex>(data.box);
    const CubeIndex& idx = *L.idx_;
    const int ds = data.box.ds;
    const int nphases = static_cast<int>(data.phases.size());

    // declared phase region: every phase must lie within phase_radius of the
    // zero class in the top-box norm
    const RealBox top_box = idx.real_box(0);
    for (const auto& q : data.phases) {
        auto info = bernstein_range_info(q, top_box, params.norms.bernstein_levels);
        if (info.attained_hi - info.attained_lo > params.phase_radius)
            throw std::invalid_argument("TileLattice: phase outside the declared region");
    }

    // per-cube nets over the region reachable by phases and dilation targets
    const double region_radius = params.phase_radius + params.lambda_margin + params.margin;
    int deg = data.phases.empty() ? 1 : data.phases[0].degree();
    PolyClass center0(ds, deg);
    NetOpts nopts;
    nopts.bernstein_levels = params.norms.bernstein_levels;
    L.nets_.reserve(idx.size());
    for (int c = 0; c < idx.size(); ++c)
        L.nets_.push_back(
            build_net(ds, deg, idx.real_box(c), center0, region_radius, params.sep, nopts));

    // parent-center -> child-center assignment by nearest rigorous distance
    L.assign_.assign(idx.size(), {});
    for (int c = 0; c < idx.size(); ++c) {
        if (idx.parent_id[c] < 0) continue;
        const PolyNet& pn = L.nets_[idx.parent_id[c]];
        const PolyNet& cn = L.nets_[c];
        const RealBox cb = idx.real_box(c);
        auto& amap = L.assign_[c];
        amap.resize(pn.centers.size());
        for (size_t j = 0; j < pn.centers.size(); ++j) {
            int best = -1;
            double best_d = 0.0;
            for (size_t i = 0; i < cn.centers.size(); ++i) {
                double d = bernstein_range(pn.centers[j] - cn.centers[i], cb,
                                           params.norms.bernstein_levels)
                               .width();
                if (best < 0 || d < best_d) {
                    best = static_cast<int>(i);
                    best_d = d;
                }
            }
            amap[j] = best;
        }
    }

    // composed ancestor maps and norm-transfer bounds
    L.anc_.assign(idx.size(), {});
    L.rho_.assign(idx.size(), {});
    for (int c = 0; c < idx.size(); ++c) {
        int depth = data.box.s_max - idx.scale(c);
        L.anc_[c].resize(depth);
        L.rho_[c].resize(depth);
        for (int j = 0; j < depth; ++j) {
            if (j == 0) {
                L.anc_[c][0] = L.assign_[c];
            } else {
                const auto& prev = L.anc_[idx.parent_id[c]][j - 1];
                auto& m = L.anc_[c][j];
                m.resize(prev.size());
                for (size_t i = 0; i < m.size(); ++i) m[i] = L.assign_[c][prev[i]];
            }
            L.rho_[c][j] = norm_transfer_bound(
                ds, deg, idx.real_box(ancestor_at_build(idx, c, j + 1)), idx.real_box(c),
                params.norms);
        }
    }

    // samples per cube
    L.samples_in_cube_.assign(idx.size(), {});
    for (int i = 0; i < static_cast<int>(data.samples.size()); ++i) {
        for (int s = data.box.s_min; s <= data.box.s_max; ++s) {
            int c = idx.id_of_point(data.samples[i].pos, s);
            if (c >= 0) L.samples_in_cube_[c].push_back(i);
        }
    }

    // phase resolution at every cube (descent from the top cell)
    std::vector<int> top_res(nphases);
    for (int q = 0; q < nphases; ++q) top_res[q] = L.resolve_top(data.phases[q]);
    L.phase_center_.assign(idx.size(), std::vector<int>(nphases, -1));
    for (int c = 0; c < idx.size(); ++c) {
        int depth = data.box.s_max - idx.scale(c);
        for (int q = 0; q < nphases; ++q)
            L.phase_center_[c][q] = depth == 0 ? top_res[q] : L.anc_[c][depth - 1][top_res[q]];
    }

    // rigorous phase-to-center distances for phases present in each cube
    L.phase_up_.assign(idx.size(), {});
    for (int c = 0; c < idx.size(); ++c) {
        std::set<int> present;
        for (int i : L.samples_in_cube_[c]) present.insert(data.samples[i].phase);
        L.phase_up_[c].assign(nphases, {});
        const RealBox rb = idx.real_box(c);
        for (int q : present) {
            auto& row = L.phase_up_[c][q];
            row.resize(L.nets_[c].centers.size());
            for (size_t i = 0; i < row.size(); ++i)
                row[i] = bernstein_range(data.phases[q] - L.nets_[c].centers[i], rb,
                                         params.norms.bernstein_levels)
                             .width();
        }
    }

    // materialized tiles: cells hit by a phase of a sample in the cube, plus
    // dilation targets within lambda_margin; cells no top cell descends into
    // carry empty regions and are never materialized
    L.tiles_of_cube_.assign(idx.size(), {});
    for (int c = 0; c < idx.size(); ++c) {
        std::vector<char> reachable(L.nets_[c].centers.size(), 0);
        int depth = data.box.s_max - idx.scale(c);
        if (depth == 0) {
            std::fill(reachable.begin(), reachable.end(), 1);
        } else {
            for (int top_c : L.anc_[c][depth - 1]) reachable[top_c] = 1;
        }
        std::set<int> centers;
        std::set<int> present;
        for (int i : L.samples_in_cube_[c]) present.insert(data.samples[i].phase);
        for (int q : present) {
            centers.insert(L.phase_center_[c][q]);
            const auto& row = L.phase_up_[c][q];
            for (size_t i = 0; i < row.size(); ++i)
                if (row[i] <= params.lambda_margin) centers.insert(static_cast<int>(i));
        }
        for (int i : centers) {
            if (!reachable[i]) continue;
            Tile t{c, i};
            L.tiles_of_cube_[c].push_back(static_cast<int>(L.tiles_.size()));
            L.tile_ids_.emplace(t, static_cast<int>(L.tiles_.size()));
            L.tiles_.push_back(t);
        }
    }
    return L;
}

int TileLattice::ancestor_at_build(const CubeIndex& idx, int cube_id, int levels_up) {
    int c = cube_id;
    for (int i = 0; i < levels_up; ++i) c = idx.parent_id[c];
    return c;
}

int TileLattice::resolve_top(const PolyClass& Q) const {
    const PolyNet& tn = nets_[0];
    const RealBox rb = idx_->real_box(0);
    int best = -1;
    double best_d = 0.0;
    for (size_t i = 0; i < tn.centers.size(); ++i) {
        double d =
            bernstein_range(Q - tn.centers[i], rb, params_.norms.bernstein_levels).width();
        if (best < 0 || d < best_d) {
            best = static_cast<int>(i);
            best_d = d;
        }
    }
    return best;
}

int TileLattice::tile_id(const Tile& t) const {
    auto it = tile_ids_.find(t);
    return it == tile_ids_.end() ? -1 : it->second;
}

int TileLattice::ancestor_at(int cube_id, int s) const {
    int c = cube_id;
    while (idx_->scale(c) < s) c = idx_->parent_id[c];
    return c;
}

int TileLattice::descend_center(int cube_from, int center, int cube_to) const {
    if (cube_from == cube_to) return center;
    int depth = idx_->scale(cube_from) - idx_->scale(cube_to);
    if (depth <= 0 || ancestor_at(cube_to, idx_->scale(cube_from)) != cube_from)
        throw std::invalid_argument("descend_center: cube_to not inside cube_from");
    return anc_[cube_to][depth - 1][center];
}

int TileLattice::resolve_center(int cube_id, const PolyClass& Q) const {
    int top = resolve_top(Q);
    return descend_center(0, top, cube_id);
}

bool TileLattice::tile_membership(const PolyClass& Q, const Tile& p) const {
    return resolve_center(p.cube, Q) == p.center;
}

bool TileLattice::order_le(const Tile& p1, const Tile& p2) const {
    if (!idx_->contains(p1.cube, p2.cube)) return false;
    return descend_center(p2.cube, p2.center, p1.cube) == p1.center;
}

bool TileLattice::order_lt(const Tile& p1, const Tile& p2) const {
    return p1.cube != p2.cube && order_le(p1, p2);
}

RangeInfo TileLattice::diff_norm(const PolyClass& A, const PolyClass& B, int cube_id) const {
    return bernstein_range_info(A - B, idx_->real_box(cube_id),
                                params_.norms.bernstein_levels);
}

std::pair<double, double> TileLattice::center_diff_norm(const Tile& a, const Tile& b,
                                                        int norm_cube) const {
    uint64_t key = pack_pair_key(a, b, norm_cube);
    {
        std::lock_guard<std::mutex> lock(g_pair_cache_mu);
        auto it = pair_cache_.find(key);
        if (it != pair_cache_.end()) return it->second;
    }
    auto info = diff_norm(center(a), center(b), norm_cube);
    auto res = std::make_pair(info.attained_hi - info.attained_lo, info.outer.width());
    {
        std::lock_guard<std::mutex> lock(g_pair_cache_mu);
        pair_cache_.emplace(key, res);
    }
    return res;
}

double TileLattice::transfer_bound(int inner_cube, int outer_cube) const {
    if (inner_cube == outer_cube) return 1.0;
    int depth = idx_->scale(outer_cube) - idx_->scale(inner_cube);
    return rho_[inner_cube][depth - 1];
}

std::vector<PolyClass> TileLattice::ball_directions(const Tile& p, double radius,
                                                    int count) const {
    // deterministic extreme directions: signed shifted-monomial axes plus
    // alternating-sign diagonals, scaled to lie inside the ball
    const RealBox rb = idx_->real_box(p.cube);
    auto c = rb.center();
    const auto& mis = MultiIndexSet::get(center(p).ds(), center(p).degree());
    std::vector<PolyClass> axes;
    for (int j = 1; j < mis.size(); ++j)
        axes.push_back(shifted_monomial(center(p).ds(), center(p).degree(), mis.alphas[j], c));
    std::vector<PolyClass> dirs;
    for (const auto& e : axes) {
        dirs.push_back(e);
        dirs.push_back(e * -1.0);
    }
    if (axes.size() > 1) {
        PolyClass diag = axes[0], alt = axes[0];
        for (size_t j = 1; j < axes.size(); ++j) {
            diag = diag + axes[j];
            alt = (j % 2 == 0) ? alt + axes[j] : alt - axes[j];
        }
        dirs.push_back(diag);
        dirs.push_back(alt);
    }

    std::vector<PolyClass> out;
    for (auto& u : dirs) {
        double up = bernstein_range(u, rb, params_.norms.bernstein_levels).width();
        if (up <= 0.0) continue;
        out.push_back(center(p) + u * (radius / up));
        if (static_cast<int>(out.size()) >= count) break;
    }
    return out;
}

Cert TileLattice::ball_le(double a, const Tile& p1, double b, const Tile& p2,
                          bool strict_cube) const {
    if (!idx_->contains(p1.cube, p2.cube)) return Cert::False;
    if (strict_cube && p1.cube == p2.cube) return Cert::False;
    auto [lo, up] = center_diff_norm(p1, p2, p1.cube);
    if (p1.cube == p2.cube) {
        if (up + b <= a) return Cert::True;
        if (lo + b > a) return Cert::False;
        return Cert::Undecided;
    }
    double rho = transfer_bound(p1.cube, p2.cube);
    if (up + b * rho <= a) return Cert::True;
    // refute with certified points of the outer ball of p2
    for (const auto& S : ball_directions(p2, b * 0.999, 2 * center(p2).dim() + 2)) {
        auto info = diff_norm(S, center(p1), p1.cube);
        if (info.attained_hi - info.attained_lo > a) return Cert::False;
    }
    return Cert::Undecided;
}

Cert TileLattice::region_in_ball(double a, const Tile& p1, const Tile& p2,
                                 bool strict_cube) const {
    if (!idx_->contains(p1.cube, p2.cube)) return Cert::False;
    if (strict_cube && p1.cube == p2.cube) return Cert::False;
    auto [lo, up] = center_diff_norm(p1, p2, p1.cube);
    double rho = transfer_bound(p1.cube, p2.cube);
    if (up + 1.0 * rho <= a) return Cert::True;
    if (p1.cube == p2.cube && p1.center != p2.center && lo > a + 1.0) return Cert::False;
    // refute with points of the inner ball of the region of p2
    for (const auto& S : ball_directions(p2, 0.2 * 0.999, 2 * center(p2).dim() + 2)) {
        auto info = diff_norm(S, center(p1), p1.cube);
        if (info.attained_hi - info.attained_lo > a) return Cert::False;
    }
    return Cert::Undecided;
}

Cert TileLattice::balls_intersect(double b1, const Tile& p1, double b2,
                                  const Tile& p2) const {
    if (!idx_->contains(p1.cube, p2.cube))
        throw std::invalid_argument("balls_intersect: expects I_{p1} inside I_{p2}");
    auto [lo1, up1] = center_diff_norm(p1, p2, p1.cube);
    if (p1.cube == p2.cube) {
        if (up1 <= b1 + b2) return Cert::True;
        if (lo1 > b1 + b2) return Cert::False;
        return Cert::Undecided;
    }
    if (up1 <= b1) return Cert::True; // the center of p2 lies in both balls
    auto [lo2, up2] = center_diff_norm(p1, p2, p2.cube);
    if (up2 <= b2) return Cert::True; // the center of p1 lies in both balls
    double rho = transfer_bound(p1.cube, p2.cube);
    if (lo1 > b1 + b2 * rho) return Cert::False;
    return Cert::Undecided;
}

bool TileLattice::dilated_le(double lam, const Tile& p1, const Tile& p2) const {
    if (lam < 1.0) throw std::invalid_argument("dilated_le: lambda must be >= 1");
    return ball_le(lam, p1, lam, p2, false) == Cert::True;
}

std::vector<int> TileLattice::compute_E(const Tile& p, const LinearizingData& data) const {
    std::vector<int> out;
    const int s = idx_->scale(p.cube);
    for (int i : samples_in_cube_[p.cube]) {
        const Sample& x = data.samples[i];
        if (x.sigma_lo <= s && s <= x.sigma_hi &&
            phase_center_[p.cube][x.phase] == p.center)
            out.push_back(i);
    }
    return out;
}

std::vector<int> TileLattice::compute_Ebar(const Tile& p, const LinearizingData& data) const {
    std::vector<int> out;
    const int s = idx_->scale(p.cube);
    for (int i : samples_in_cube_[p.cube]) {
        const Sample& x = data.samples[i];
        if (s <= x.sigma_hi && phase_center_[p.cube][x.phase] == p.center) out.push_back(i);
    }
    return out;
}

std::vector<int> TileLattice::compute_E_dilated(double lam, const Tile& p,
                                                const LinearizingData& data) const {
    std::vector<int> out;
    const int s = idx_->scale(p.cube);
    for (int i : samples_in_cube_[p.cube]) {
        const Sample& x = data.samples[i];
        if (s > x.sigma_hi) continue;
        const auto& row = phase_up_[p.cube][x.phase];
        if (!row.empty() && row[p.center] <= lam) out.push_back(i);
    }
    return out;
}

} // namespace carleson
