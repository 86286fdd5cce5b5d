#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace carleson {

/// Enumeration of multi-indices alpha in `dims` variables with |alpha| <= deg,
/// in graded lexicographic order. Index 0 is the constant index (0,...,0).
struct MultiIndexSet {
    int dims = 0;
    int deg = 0;
    std::vector<std::vector<int>> alphas;

    static const MultiIndexSet& get(int dims, int deg);
    int size() const { return static_cast<int>(alphas.size()); }
};

/// Dimension of the space of polynomials in `dims` variables of degree <= deg
/// modulo constants: C(dims+deg, deg) - 1.
int quotient_dim(int dims, int deg);

double binomial(int n, int k);

/// Axis-aligned box in R^dims used as the domain of oscillation norms.
struct RealBox {
    std::vector<double> lo, hi;

    int dims() const { return static_cast<int>(lo.size()); }
    double side(int i) const { return hi[i] - lo[i]; }
    double center(int i) const { return 0.5 * (lo[i] + hi[i]); }
    std::vector<double> center() const;
    bool contains(const RealBox& other, double tol = 1e-12) const;

    /// Cube centered at `c` with half-side `r` (the L^inf ball B(c, r)).
    static RealBox ball(std::span<const double> c, double r);
};

/// A real polynomial in `ds` variables of degree <= d modulo additive
/// constants. The stored representative has zero constant term, so eval()
/// returns the representative's value; only differences of values are
/// meaningful for the class.
class PolyClass {
  public:
    PolyClass() = default;
    PolyClass(int ds, int d);

    int ds() const { return ds_; }
    int degree() const { return d_; }
    int dim() const { return static_cast<int>(c_.size()); }

    /// Coefficient of the monomial with quotient index i (graded-lex over
    /// multi-indices with 0 < |alpha| <= d).
    double coeff(int i) const { return c_[i]; }
    double& coeff(int i) { return c_[i]; }
    const std::vector<double>& coeffs() const { return c_; }

    double eval(std::span<const double> x) const;
    bool is_zero() const;

    PolyClass operator+(const PolyClass& o) const;
    PolyClass operator-(const PolyClass& o) const;
    PolyClass operator*(double s) const;
    bool operator==(const PolyClass& o) const = default;

    /// Strict total order on coefficient vectors (lexicographic); used for
    /// deterministic tie-breaking.
    static bool lex_less(const PolyClass& a, const PolyClass& b);

  private:
    int ds_ = 0, d_ = 0;
    std::vector<double> c_;
    friend PolyClass shifted_monomial(int ds, int d, const std::vector<int>& alpha,
                                      std::span<const double> c);
};

/// The shifted monomial (x - c)^alpha as a PolyClass (constant term dropped).
PolyClass shifted_monomial(int ds, int d, const std::vector<int>& alpha,
                           std::span<const double> c);

/// Two-sided bound on the range of a polynomial over a box.
struct RangeBound {
    double lo = 0.0;
    double hi = 0.0;
    bool rigorous = false;
    double width() const { return hi - lo; }
};

/// Enclosure plus attained values (exact evaluations at subdivision-cell
/// corners, hence certified inner bounds for the range).
struct RangeInfo {
    RangeBound outer;
    double attained_lo = 0.0;
    double attained_hi = 0.0;
};

/// Tensor-product Bernstein enclosure of the range of Q over `box`,
/// subdivided `levels` times per axis. The enclosure never widens as
/// `levels` grows.
RangeBound bernstein_range(const PolyClass& Q, const RealBox& box, int levels = 2);

RangeInfo bernstein_range_info(const PolyClass& Q, const RealBox& box, int levels = 2);

enum class NormMode { Sampled, RigorousUpper, RigorousLower };

struct NormOpts {
    int bernstein_levels = 2;
    int sample_grid = 33; // points per axis in Sampled mode
};

/// Oscillation norm of Q over a box: sup_{x,x' in box} |Q(x) - Q(x')|.
/// Sampled and RigorousLower under-estimate, RigorousUpper over-estimates.
double cube_norm(const PolyClass& Q, const RealBox& box, NormMode mode,
                 const NormOpts& opts = {});

struct NormScaling {
    double ratio;     // ||Q||_{B(x,R)} / ||Q||_{B(x,r)}
    double env_lo;    // R/r
    double env_hi;    // (R/r)^d
};

/// Ratio of oscillation norms of Q over the concentric cubes B(x,R), B(x,r).
/// Throws std::invalid_argument for the zero class.
NormScaling norm_scaling_ratio(const PolyClass& Q, std::span<const double> x,
                               double r, double R, const NormOpts& opts = {});

/// For each quotient basis element (x - basis_center)^alpha, an upper bound
/// on |coefficient| valid for every polynomial with oscillation <= 1 over
/// `box`. Derived from Lagrange interpolation on a tensor node grid.
std::vector<double> coeff_bounds_unit_osc(int ds, int d, const RealBox& box,
                                          std::span<const double> basis_center);

/// Upper bound for sup{ ||S||_to : ||S||_from <= 1 } over the quotient space.
/// Capped at 1 when `to` is contained in `from` (norm monotonicity).
double norm_transfer_bound(int ds, int d, const RealBox& from, const RealBox& to,
                           const NormOpts& opts = {});

/// A sep-separated net of polynomial classes over a box, with certified
/// separation and (on the candidate lattice) certified covering.
struct PolyNet {
    RealBox domain;
    double sep = 0.7;
    std::vector<PolyClass> centers;
    std::vector<std::vector<int>> lattice_coords; // per center, coords in the candidate lattice
    std::vector<double> step;                     // per quotient basis element
};

struct NetError : std::runtime_error {
    explicit NetError(const std::string& what) : std::runtime_error(what) {}
};

struct NetOpts {
    int bernstein_levels = 3;
    // mesh = step_safety * sep/8; at 1.0 lattice points can sit exactly sep
    // apart, which the separation certificate accepts
    double step_safety = 1.0;
    // covering is certified at sep*(1+cover_slack): with inexact range
    // bounds a candidate at the exact separation boundary can be neither
    // certifiably separated nor certifiably covered at sep itself
    double cover_slack = 0.02;
};

/// Greedy maximal separated subset of an axis-aligned candidate lattice in
/// coefficient space. Candidates are visited nearest-to-center first (ties in
/// lexicographic order) and inserted when certified >= sep from all previous
/// centers; a candidate inside the declared region that cannot be certified
/// covered at sep*(1+cover_slack) raises NetError (the lattice or the bounds
/// are too coarse and the caller must refine).
PolyNet build_net(int ds, int d, const RealBox& domain, const PolyClass& region_center,
                  double region_radius, double sep, const NetOpts& opts = {});

} // namespace carleson
