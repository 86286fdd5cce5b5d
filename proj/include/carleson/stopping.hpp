#pragma once

#include "carleson/tiles.hpp"

#include <stdexcept>

namespace carleson {

struct StoppingParams {
    double C_count = 2.0;     // threshold constant for the exceptional sets
    double delta_stop = 0.5;  // required support-decay factor per generation
    int n_max = 0;            // 0 = derive losslessly from the sample count
    double C_count_cap = 1e6; // calibration gives up beyond this
};

struct SupportDecayError : std::runtime_error {
    SupportDecayError(int gen, int cube, double measured, double allowed)
        : std::runtime_error("stopping: support decay violated"),
          generation(gen), cube(cube), measured(measured), allowed(allowed) {}
    int generation;
    int cube;
    double measured;
    double allowed;
};

/// The stopping hierarchy: exceptional-cube generations F_k, cumulative cube
/// classes, the induced partition of cubes (and tiles) into generations.
struct StoppingForest {
    std::vector<std::vector<int>> F;      // F[k]: pairwise disjoint cube ids
    std::vector<std::vector<bool>> tilde; // tilde[k][cube]: cube below some F_k cube
    std::vector<int> gen_of_cube;         // generation k of every in-range cube
    std::vector<std::vector<int>> P;      // P[k]: tile ids of generation k
    std::vector<int> gen_of_tile;
    int n_max = 0;
    double C_count_used = 0.0;

    int generations() const { return static_cast<int>(F.size()); }
};

/// |Ebar(p)| / |I_p| with the quadrature weight folded in.
double ebar_ratio(const TileLattice& lat, const LinearizingData& data, const Tile& p);

int derive_n_max(const LinearizingData& data);

/// Single pass of the generation loop; throws SupportDecayError when the
/// configured (C_count, delta_stop) pair fails.
StoppingForest build_stopping_forest(const TileLattice& lat, const LinearizingData& data,
                                     const StoppingParams& params);

/// Doubles C_count until the support-decay condition holds; the value used is
/// recorded in the result.
StoppingForest build_stopping_forest_calibrated(const TileLattice& lat,
                                                const LinearizingData& data,
                                                StoppingParams params);

struct MaximalTileSet {
    int n = 0, k = 0;
    std::vector<int> tiles; // ids; pairwise <-incomparable, ratio >= 2^-n
};

MaximalTileSet maximal_tiles(const TileLattice& lat, const LinearizingData& data,
                             const StoppingForest& forest, int n, int k);

/// Covering multiplicity of the spatial cubes of `tiles` at a point.
int counting_function(const TileLattice& lat, const std::vector<int>& tiles,
                      const std::vector<Ticks>& point);

/// Max of the counting function over all sample points.
int max_multiplicity(const TileLattice& lat, const LinearizingData& data,
                     const std::vector<int>& tiles);

} // namespace carleson
