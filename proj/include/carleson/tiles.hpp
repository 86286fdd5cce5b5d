#pragma once

#include "carleson/grid.hpp"
#include "carleson/polyspace.hpp"

#include <memory>
#include <optional>
#include <unordered_map>
#include <vector>

namespace carleson {

/// One quadrature cell of the sample grid: center position (odd ticks),
/// truncation window and the index of its phase in the declared phase set.
struct Sample {
    std::vector<Ticks> pos;
    int sigma_lo = 0;
    int sigma_hi = 0;
    int phase = 0;
};

/// The finite-range linearizing choices: per-sample scale window and phase.
struct LinearizingData {
    WorkingBox box;
    std::vector<PolyClass> phases;
    std::vector<Sample> samples;

    double cell_volume() const;
    std::vector<double> sample_point(int i) const; // real coordinates
    void validate() const;
};

/// A tile: a grid cube together with one cell of its polynomial net.
struct Tile {
    int cube = -1;
    int center = -1;
    bool operator==(const Tile&) const = default;
    bool operator<(const Tile& o) const {
        return cube != o.cube ? cube < o.cube : center < o.center;
    }
};

struct TileHash {
    size_t operator()(const Tile& t) const {
        return std::hash<long long>()((static_cast<long long>(t.cube) << 24) ^ t.center);
    }
};

struct LatticeParams {
    double sep = 0.7;
    double phase_radius = 1.0; // declared radius of the phase region (top norm)
    double margin = 2.0;       // net coverage slack beyond reachable centers
    double lambda_margin = 4.0; // materialization reach in ||.||_I around phases
    NormOpts norms{};
};

enum class Cert { True, False, Undecided };

/// The tile lattice: per-cube separated nets, parent-to-child assignment maps
/// realizing the cell partition, and the materialized tile set. Region
/// inclusion between tiles is decided exactly through composed assignments;
/// ball inclusions are certified predicates where undecided resolves to false.
class TileLattice {
  public:
    static TileLattice build(const LinearizingData& data, const LatticeParams& params);

    const WorkingBox& box() const { return box_; }
    const CubeIndex& cubes() const { return *idx_; }
    const LatticeParams& params() const { return params_; }
    const PolyNet& net(int cube_id) const { return nets_[cube_id]; }
    const PolyClass& center(const Tile& t) const { return nets_[t.cube].centers[t.center]; }

    const std::vector<Tile>& tiles() const { return tiles_; }
    const std::vector<int>& tiles_of_cube(int cube_id) const { return tiles_of_cube_[cube_id]; }
    int tile_id(const Tile& t) const;
    const Tile& tile(int id) const { return tiles_[id]; }

    const std::vector<int>& samples_in_cube(int cube_id) const {
        return samples_in_cube_[cube_id];
    }

    /// Center index at `cube_to` of the unique cell whose region contains the
    /// region of (cube_from, center); requires cube_to ⊆ cube_from.
    int descend_center(int cube_from, int center, int cube_to) const;

    /// Resolution of an arbitrary polynomial class at a cube: top-scale
    /// nearest-center cell followed by descent through the assignments.
    int resolve_center(int cube_id, const PolyClass& Q) const;
    int resolved_phase_center(int cube_id, int phase) const {
        return phase_center_[cube_id][phase];
    }

    bool tile_membership(const PolyClass& Q, const Tile& p) const;

    // Order relations (exact).
    bool order_le(const Tile& p1, const Tile& p2) const;
    bool order_lt(const Tile& p1, const Tile& p2) const;

    // Certified ball inclusion: I_{p1} ⊆ I_{p2} (proper if strict_cube) and
    // B_{I_{p2}}(Q_{p2}, b) ⊆ B_{I_{p1}}(Q_{p1}, a).
    Cert ball_le(double a, const Tile& p1, double b, const Tile& p2,
                 bool strict_cube = false) const;
    /// Same with the region of p2 in place of the ball (outer radius 1).
    Cert region_in_ball(double a, const Tile& p1, const Tile& p2,
                        bool strict_cube = false) const;
    /// B_{I_{p1}}(Q_{p1}, b1) ∩ B_{I_{p2}}(Q_{p2}, b2) ≠ ∅, for I_{p1} ⊆ I_{p2}.
    Cert balls_intersect(double b1, const Tile& p1, double b2, const Tile& p2) const;

    /// Certified decision of λp1 ≤ λp2; undecided resolves to false.
    bool dilated_le(double lam, const Tile& p1, const Tile& p2) const;

    // Sample subsets (indices into data.samples).
    std::vector<int> compute_E(const Tile& p, const LinearizingData& data) const;
    std::vector<int> compute_Ebar(const Tile& p, const LinearizingData& data) const;
    std::vector<int> compute_E_dilated(double lam, const Tile& p,
                                       const LinearizingData& data) const;

    /// Rigorous upper bound of ||Q_phase - center|| over the cube.
    double phase_center_dist_up(int cube_id, int phase, int center) const {
        return phase_up_[cube_id][phase][center];
    }

    /// Rigorous enclosure of ||A - B|| over a cube (memoized for net centers).
    RangeInfo diff_norm(const PolyClass& A, const PolyClass& B, int cube_id) const;
    std::pair<double, double> center_diff_norm(const Tile& a, const Tile& b,
                                               int norm_cube) const;

    /// Upper bound for sup{||S||_inner : ||S||_outer <= 1} for nested cubes.
    double transfer_bound(int inner_cube, int outer_cube) const;

  private:
    WorkingBox box_;
    LatticeParams params_;
    std::shared_ptr<CubeIndex> idx_;
    std::vector<PolyNet> nets_;
    std::vector<std::vector<int>> assign_;  // [cube]: parent net idx -> net idx
    std::vector<std::vector<std::vector<int>>> anc_; // [cube][j-1]: composed map
    std::vector<std::vector<double>> rho_;           // [cube][j-1]: transfer bound
    std::vector<Tile> tiles_;
    std::vector<std::vector<int>> tiles_of_cube_;
    std::unordered_map<Tile, int, TileHash> tile_ids_;
    std::vector<std::vector<int>> samples_in_cube_;
    std::vector<std::vector<int>> phase_center_;
    std::vector<std::vector<std::vector<double>>> phase_up_;
    mutable std::unordered_map<uint64_t, std::pair<double, double>> pair_cache_;

    int ancestor_at(int cube_id, int s) const;
    int resolve_top(const PolyClass& Q) const;
    static int ancestor_at_build(const CubeIndex& idx, int cube_id, int levels_up);
    std::vector<PolyClass> ball_directions(const Tile& p, double radius, int count) const;
};

} // namespace carleson
