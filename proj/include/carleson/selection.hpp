#pragma once

#include "carleson/stopping.hpp"

#include <optional>
#include <string>

namespace carleson {

struct SelectionParams {
    double C0 = 2.0;    // heavy-tile threshold constant
    double C_sep = 1.0; // bottom layers peeled per level: ceil(C_sep * n)
};

/// A convex collection of tiles below a top tile (labels follow the
/// decomposition bookkeeping: level n, generation k, class j, tree index l).
struct Tree {
    int n = 0, k = 0, j = 0, l = 0;
    Tile top;
    std::vector<int> members; // tile ids
};

struct Antichain {
    int n = 0, k = 0, j = 0;
    int id = 0;         // running index within (n,k)
    std::string origin; // residual-layer | aprime | peel | demoted-tree | convexity-spill
    std::vector<int> tiles;
};

/// Trees of one forest F_{n,k,j} (indices into Decomposition::trees).
struct ForestRef {
    int n = 0, k = 0, j = 0;
    std::vector<int> tree_indices;
};

struct Decomposition {
    std::vector<Tree> trees;
    std::vector<Antichain> antichains;
    std::vector<ForestRef> forests;
    std::vector<int> residual; // zero-density tiles
    std::vector<std::string> diagnostics;
    int n_levels = 0;
};

/// Certified lower bound of the dilation-penalized maximal density for every
/// tile of generation k, with the monotonicity pass applied (p1 <= p2 implies
/// dens[p1] >= dens[p2], exactly).
struct DensityField {
    int k = 0;
    std::vector<double> dens; // indexed by tile id; -1 outside generation k
};

DensityField compute_density(const TileLattice& lat, const LinearizingData& data,
                             const StoppingForest& forest, int k);

std::vector<int> heavy_tiles(const TileLattice& lat, const StoppingForest& forest,
                             const DensityField& dens, int n, double C0);

/// Output of the per-(n,k) forest selection.
struct ForestSelection {
    std::vector<Tree> trees;           // labeled (n,k,j,l)
    std::vector<Antichain> antichains; // all emitted antichains
    std::vector<std::string> diagnostics;
};

ForestSelection select_forests(const TileLattice& lat, const LinearizingData& data,
                               const StoppingForest& forest, const DensityField& dens,
                               int n, int k, const SelectionParams& params);

/// Runs the per-level selections, subtracts previous heavy down-sets, and
/// assembles the exact partition of all tiles; throws std::logic_error on a
/// partition violation.
Decomposition build_decomposition(const TileLattice& lat, const LinearizingData& data,
                                  const StoppingForest& forest,
                                  const SelectionParams& params);

/// Splits a tree into its boundary part (2 I_p escapes the top cube) and the
/// normal remainder.
std::pair<std::vector<int>, std::vector<int>> boundary_split(const TileLattice& lat,
                                                             const Tree& tree);

/// Greedy packing of normal trees into rows with pairwise disjoint top cubes,
/// larger tops first. Returns indices into `trees`.
std::vector<std::vector<int>> rows(const TileLattice& lat, const std::vector<Tree>& trees);

struct SeparationResult {
    bool ok = true;
    std::optional<Tile> witness;
    double measured = 0.0; // Delta(p, Q_other) at the witness
};

/// Checks Delta-separation of two trees with rigorous lower norm bounds.
SeparationResult separation_check(const TileLattice& lat, const Tree& t1, const Tree& t2,
                                  double Delta);

/// Longest-chain-below index for each listed tile (exact order); every level
/// set is an antichain.
std::vector<int> mirsky_layers(const TileLattice& lat, const std::vector<int>& tiles);

} // namespace carleson
