#pragma once

#include "carleson/selection.hpp"
#include "carleson/tiles.hpp"

#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace carleson {

using cplx = std::complex<double>;

inline cplx unit_phase(double t) { return std::polar(1.0, 2.0 * M_PI * t); }

/// Smooth dyadic partition of unity: psi(t) = eta(t) - eta(D t) with eta the
/// normalized integral of exp(-1/(u(1-u))), identically 1 below 1/4 and 0
/// above 1/2. The dyadic sums telescope exactly.
class PartitionOfUnity {
  public:
    explicit PartitionOfUnity(int D);
    double eta(double t) const;
    double psi(double t) const { return eta(t) - eta(D_ * t); }
    int D() const { return D_; }

  private:
    int D_;
    std::vector<double> table_; // cumulative quadrature of the bump on [0,1]
};

/// A Calderon-Zygmund kernel with its Hoelder exponent and size constant.
struct Kernel {
    int ds = 1;
    double tau = 1.0;
    double size_const = 1.0;
    std::string name;
    std::function<double(std::span<const double>, std::span<const double>)> eval;

    static Kernel hilbert();       // 1/(x-y), ds = 1
    static Kernel riesz(int ds);   // (x1-y1)/|x-y|^{ds+1}
    static Kernel by_name(const std::string& name, int ds);
};

/// K_s(x,y) = K(x,y) psi(D^{-s} |x-y|); zero on the diagonal.
double kernel_slice(const Kernel& K, const PartitionOfUnity& pou, int s,
                    std::span<const double> x, std::span<const double> y);

/// Dense operator matrix on the sample grid, quadrature weight folded in.
struct OperatorMatrix {
    int n = 0;
    std::string provenance;
    std::vector<cplx> a; // row-major

    static OperatorMatrix zero(int n, std::string provenance);
    cplx& at(int i, int j) { return a[size_t(i) * n + j]; }
    cplx at(int i, int j) const { return a[size_t(i) * n + j]; }
    void add(const OperatorMatrix& o);
    OperatorMatrix adjoint() const;
    OperatorMatrix multiply(const OperatorMatrix& o) const;
    std::vector<cplx> apply(std::span<const cplx> f) const;
    std::vector<cplx> apply_adjoint(std::span<const cplx> f) const;
    void mask_rows(const std::vector<char>& keep);
    void mask_cols(const std::vector<char>& keep);
    double frobenius() const;
};

/// Per-sample values of every phase (used by the modulation factors).
std::vector<std::vector<double>> phase_values(const LinearizingData& data);

OperatorMatrix tile_matrix(const TileLattice& lat, const LinearizingData& data,
                           const Kernel& K, const PartitionOfUnity& pou, const Tile& p);

/// Direct assembly of the adjoint formula (for the consistency check).
OperatorMatrix tile_matrix_adjoint_direct(const TileLattice& lat,
                                          const LinearizingData& data, const Kernel& K,
                                          const PartitionOfUnity& pou, const Tile& p);

OperatorMatrix set_matrix(const TileLattice& lat, const LinearizingData& data,
                          const Kernel& K, const PartitionOfUnity& pou,
                          std::span<const int> tile_ids, std::string provenance);

enum class TruncationMode { Sharp, Smooth };

struct MaximalWitness {
    int phase = -1;
    double lo = 0.0, hi = 0.0; // radii (sharp) or scales (smooth)
};

/// Brute-force sup over the declared phase net and all truncation pairs.
std::vector<double> maximal_operator_apply(const LinearizingData& data, const Kernel& K,
                                           const PartitionOfUnity& pou,
                                           std::span<const cplx> f, TruncationMode mode,
                                           std::vector<MaximalWitness>* witnesses = nullptr);

/// Hardy-Littlewood maximal function over grid-aligned cubes of every integer
/// side (in sample cells) and every translate at cell granularity.
std::vector<double> hl_maximal(const LinearizingData& data, std::span<const double> absf);
std::vector<double> hl_maximal_q(const LinearizingData& data, std::span<const cplx> f,
                                 double q);

/// Non-tangential maximal truncation: sup over convex scale windows and
/// nearby base points.
std::vector<double> nontangential_truncated(const LinearizingData& data, const Kernel& K,
                                            const PartitionOfUnity& pou,
                                            std::span<const cplx> f, double C_nt);

/// Averaging projection onto a disjoint family of cubes (zero outside).
std::vector<cplx> projection_PJ(const LinearizingData& data, const std::vector<IBox>& cubes,
                                std::span<const cplx> f);

enum class OpNormMethod { PowerIteration, Svd };

struct OpNormInfo {
    bool converged = true;
    int iterations = 0;
    double residual = 0.0;
};

/// Largest singular value. Power iteration runs on A*A with a deterministic
/// seeded start, tolerance 1e-8, at most 1000 iterations.
double op_norm(const OperatorMatrix& m, OpNormMethod method, OpNormInfo* info = nullptr);

struct VdcResult {
    double lhs = 0.0;
    double rhs = 0.0;
    double delta = 1.0;
};

/// Oscillatory-integral bound data: lhs = |∫ e(Q) psi|, delta = ||Q||_J + 1,
/// rhs = max translation modulus over a deterministic direction/radius grid.
VdcResult vdc_bound(const std::function<cplx(std::span<const double>)>& psi,
                    const RealBox& J, const PolyClass& Q, int quad_per_axis = 256,
                    const NormOpts& norm_opts = {});

/// sup_lambda lambda * mu(|g| > lambda)^{1/p} with mu = counting x weight.
double weak_lorentz_norm(std::span<const double> absg, double weight, double p);

} // namespace carleson
