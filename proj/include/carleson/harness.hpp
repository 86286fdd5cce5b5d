#pragma once

#include "carleson/op.hpp"
#include "carleson/selection.hpp"

#include <cstdint>
#include <random>
#include <string>

namespace carleson {

struct ExperimentConfig {
    int ds = 1;
    int d = 1;
    int D = 8;
    int s_min = 0;
    int s_max = 2;
    int subdiv = 1;
    double kappa_sep = 4.0;
    double delta_stop = 0.5;
    double C_count = 2.0;
    double C0 = 2.0;
    double C_sep = 1.0;
    double sep = 0.7;
    double phase_radius = 1.0;
    double net_margin = 2.0;
    double lambda_margin = 4.0;
    int bernstein_levels = 2;
    int phase_count = 6;
    int scale_cap = 4; // desk-scale guard on s_max - s_min + 1
    std::string kernel = "hilbert";
    std::string preset = "random"; // random | single-phase | clustered | heavy-chain
    uint64_t seed = 1;
    bool suite_structure = true;
    bool suite_decay = true;
    bool suite_appendix = true;

    void validate() const;
    WorkingBox working_box() const;
    LatticeParams lattice_params() const;
    StoppingParams stopping_params() const;
    SelectionParams selection_params() const;
};

struct Instance {
    ExperimentConfig cfg;
    uint64_t seed = 0;
    LinearizingData data;
    std::vector<char> F, G;  // sample subsets
    std::vector<cplx> f, g;  // grid functions
};

Instance generate_instance(const ExperimentConfig& cfg, uint64_t seed);

/// Everything the suites derive from an instance once.
struct BuiltInstance {
    Instance inst;
    TileLattice lattice;
    StoppingForest forest;
    Decomposition dec;
    double C_count_used = 0.0;

    static BuiltInstance build(const Instance& inst);
};

struct CheckRecord {
    std::string id;
    std::string claim;    // the checked statement, in words
    std::string status;   // pass | fail | info | skipped
    bool hard = false;    // participates in the exit-code gate
    double measured = 0.0;
    double fitted = 0.0;
    std::string witness;
};

struct Report {
    std::string schema = "carleson-report/1";
    std::string suite;
    uint64_t seed = 0;
    std::string timestamp; // excluded from determinism comparisons
    std::vector<CheckRecord> checks;

    bool hard_fail() const;
    void add(CheckRecord r) { checks.push_back(std::move(r)); }
};

Report run_structure_suite(const BuiltInstance& b);
Report run_decay_suite(const BuiltInstance& b);
Report run_appendix_suite(const BuiltInstance& b);

/// Decomposition integrity: exact partition, certified antichains, convexity
/// and top condition for every tree. Returns human-readable violations.
std::vector<std::string> verify_decomposition(const TileLattice& lat,
                                              const LinearizingData& data,
                                              const StoppingForest& forest,
                                              const Decomposition& dec);

// --- calibration -----------------------------------------------------------

struct ParentGrowthResult {
    int violations = 0;
    double min_ratio = 0.0; // rigorous lower(parent) / rigorous upper(child)
};

ParentGrowthResult parent_growth_check(int ds, int d, int D, double kappa_sep, int trials,
                                       uint64_t seed, int bernstein_levels = 2);

/// Smallest D from `candidates` whose rigorous parent-growth ratio exceeds
/// kappa_sep on every trial.
int calibrate_D(int ds, int d, double kappa_sep, const std::vector<int>& candidates,
                int trials, uint64_t seed);

// --- fault injection ---------------------------------------------------------

enum class Fault { MoveTile, MergeRows, BreakAntichain };

struct FaultOutcome {
    bool applicable = true;
    bool caught = false;
    std::string witness;
};

FaultOutcome inject_and_check(const BuiltInstance& b, Fault fault);

// --- small numeric helpers ---------------------------------------------------

struct LinFit {
    double slope = 0.0;
    double intercept = 0.0;
};

LinFit linfit(std::span<const double> x, std::span<const double> y);

/// Random trees within one stopping generation (valid: convex, certified top),
/// for the fitted-decay experiments.
std::vector<Tree> make_random_trees(const TileLattice& lat, const LinearizingData& data,
                                    const StoppingForest& forest, int count,
                                    std::mt19937_64& rng);

std::vector<cplx> random_grid_function(int n, std::mt19937_64& rng);

/// Indicator masks as diagonal row/column restrictions of a matrix.
OperatorMatrix masked(const OperatorMatrix& m, const std::vector<char>* rows,
                      const std::vector<char>* cols);

/// ||A^H B|| estimated by power iteration without forming the product.
double adjoint_product_norm(const OperatorMatrix& A, const OperatorMatrix& B);

} // namespace carleson
