#include "carleson/op.hpp"

#include "carleson/parallel.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <random>
#include <stdexcept>

namespace carleson {

// ---------------------------------------------------------------------------
// Partition of unity
// ---------------------------------------------------------------------------

PartitionOfUnity::PartitionOfUnity(int D) : D_(D) {
    if (D < 2) throw std::invalid_argument("PartitionOfUnity: D must be >= 2");
    // cumulative trapezoid quadrature of exp(-1/(u(1-u))) on [0,1]
    const int N = 16384;
    table_.assign(N + 1, 0.0);
    auto bump = [](double u) {
        if (u <= 0.0 || u >= 1.0) return 0.0;
        return std::exp(-1.0 / (u * (1.0 - u)));
    };
    double acc = 0.0, prev = bump(0.0);
    const double h = 1.0 / N;
    for (int i = 1; i <= N; ++i) {
        double cur = bump(i * h);
        acc += 0.5 * (prev + cur) * h;
        table_[i] = acc;
        prev = cur;
    }
    for (auto& v : table_) v /= acc; // normalized cumulative: S(0)=0, S(1)=1
}

double PartitionOfUnity::eta(double t) const {
    if (t <= 0.25) return 1.0;
    if (t >= 0.5) return 0.0;
    double u = (t - 0.25) * 4.0;
    double x = u * (table_.size() - 1);
    int i = std::min<int>(static_cast<int>(x), static_cast<int>(table_.size()) - 2);
    double frac = x - i;
    double s = table_[i] * (1.0 - frac) + table_[i + 1] * frac;
    return 1.0 - s;
}

// ---------------------------------------------------------------------------
// Kernels
// ---------------------------------------------------------------------------

namespace {

double euclid(std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
    return std::sqrt(s);
}

} // namespace

Kernel Kernel::hilbert() {
    Kernel k;
    k.ds = 1;
    k.tau = 1.0;
    k.size_const = 1.0;
    k.name = "hilbert";
    k.eval = [](std::span<const double> x, std::span<const double> y) {
        return 1.0 / (x[0] - y[0]);
    };
    return k;
}

Kernel Kernel::riesz(int ds) {
    Kernel k;
    k.ds = ds;
    k.tau = 1.0;
    k.size_const = 1.0;
    k.name = "riesz";
    k.eval = [ds](std::span<const double> x, std::span<const double> y) {
        double r = euclid(x, y);
        return (x[0] - y[0]) / std::pow(r, ds + 1);
    };
    return k;
}

Kernel Kernel::by_name(const std::string& name, int ds) {
    if (name == "hilbert") {
        if (ds != 1) throw std::invalid_argument("hilbert kernel is one-dimensional");
        return hilbert();
    }
    if (name == "riesz") return riesz(ds);
    throw std::invalid_argument("unknown kernel: " + name);
}

double kernel_slice(const Kernel& K, const PartitionOfUnity& pou, int s,
                    std::span<const double> x, std::span<const double> y) {
    double r = euclid(x, y);
    if (r == 0.0) return 0.0;
    double t = std::pow(double(pou.D()), double(-s)) * r;
    double p = pou.psi(t);
    if (p == 0.0) return 0.0;
    return K.eval(x, y) * p;
}

// ---------------------------------------------------------------------------
// OperatorMatrix
// ---------------------------------------------------------------------------

OperatorMatrix OperatorMatrix::zero(int n, std::string provenance) {
    OperatorMatrix m;
    m.n = n;
    m.provenance = std::move(provenance);
    m.a.assign(size_t(n) * n, cplx(0.0, 0.0));
    return m;
}

void OperatorMatrix::add(const OperatorMatrix& o) {
    if (o.n != n) throw std::invalid_argument("OperatorMatrix::add: dimension mismatch");
    for (size_t i = 0; i < a.size(); ++i) a[i] += o.a[i];
}

OperatorMatrix OperatorMatrix::adjoint() const {
    OperatorMatrix m = zero(n, provenance + "*");
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m.at(j, i) = std::conj(at(i, j));
    return m;
}

OperatorMatrix OperatorMatrix::multiply(const OperatorMatrix& o) const {
    if (o.n != n) throw std::invalid_argument("OperatorMatrix::multiply: dimension mismatch");
    OperatorMatrix m = zero(n, provenance + "." + o.provenance);
    parallel_for(n, [&](long long lo, long long hi) {
        for (long long i = lo; i < hi; ++i)
            for (int k = 0; k < n; ++k) {
                cplx v = at(int(i), k);
                if (v == cplx(0.0, 0.0)) continue;
                for (int j = 0; j < n; ++j) m.at(int(i), j) += v * o.at(k, j);
            }
    });
    return m;
}

std::vector<cplx> OperatorMatrix::apply(std::span<const cplx> f) const {
    if (static_cast<int>(f.size()) != n)
        throw std::invalid_argument("OperatorMatrix::apply: dimension mismatch");
    std::vector<cplx> out(n, cplx(0.0, 0.0));
    for (int i = 0; i < n; ++i) {
        cplx s(0.0, 0.0);
        const cplx* row = &a[size_t(i) * n];
        for (int j = 0; j < n; ++j) s += row[j] * f[j];
        out[i] = s;
    }
    return out;
}

std::vector<cplx> OperatorMatrix::apply_adjoint(std::span<const cplx> f) const {
    if (static_cast<int>(f.size()) != n)
        throw std::invalid_argument("OperatorMatrix::apply_adjoint: dimension mismatch");
    std::vector<cplx> out(n, cplx(0.0, 0.0));
    for (int i = 0; i < n; ++i) {
        const cplx* row = &a[size_t(i) * n];
        const cplx fi = f[i];
        for (int j = 0; j < n; ++j) out[j] += std::conj(row[j]) * fi;
    }
    return out;
}

void OperatorMatrix::mask_rows(const std::vector<char>& keep) {
    for (int i = 0; i < n; ++i)
        if (!keep[i])
            for (int j = 0; j < n; ++j) at(i, j) = cplx(0.0, 0.0);
}

void OperatorMatrix::mask_cols(const std::vector<char>& keep) {
    for (int j = 0; j < n; ++j)
        if (!keep[j])
            for (int i = 0; i < n; ++i) at(i, j) = cplx(0.0, 0.0);
}

double OperatorMatrix::frobenius() const {
    double s = 0.0;
    for (const auto& v : a) s += std::norm(v);
    return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// Tile operators
// ---------------------------------------------------------------------------

std::vector<std::vector<double>> phase_values(const LinearizingData& data) {
    std::vector<std::vector<double>> pv(data.phases.size());
    const int n = static_cast<int>(data.samples.size());
    for (size_t q = 0; q < data.phases.size(); ++q) {
        pv[q].resize(n);
        for (int i = 0; i < n; ++i) pv[q][i] = data.phases[q].eval(data.sample_point(i));
    }
    return pv;
}

namespace {

void add_tile_entries(OperatorMatrix& m, const TileLattice& lat,
                      const LinearizingData& data, const Kernel& K,
                      const PartitionOfUnity& pou,
                      const std::vector<std::vector<double>>& pv, const Tile& p) {
    const int n = static_cast<int>(data.samples.size());
    const int s = lat.cubes().scale(p.cube);
    const double w = data.cell_volume();
    auto E = lat.compute_E(p, data);
    std::vector<std::vector<double>> pts(n);
    for (int j = 0; j < n; ++j) pts[j] = data.sample_point(j);
    for (int i : E) {
        const int q = data.samples[i].phase;
        for (int j = 0; j < n; ++j) {
            double ks = kernel_slice(K, pou, s, pts[i], pts[j]);
            if (ks == 0.0) continue;
            m.at(i, j) += unit_phase(pv[q][i] - pv[q][j]) * ks * w;
        }
    }
}

} // namespace

OperatorMatrix tile_matrix(const TileLattice& lat, const LinearizingData& data,
                           const Kernel& K, const PartitionOfUnity& pou, const Tile& p) {
    auto pv = phase_values(data);
    OperatorMatrix m = OperatorMatrix::zero(static_cast<int>(data.samples.size()), "tile");
    add_tile_entries(m, lat, data, K, pou, pv, p);
    return m;
}

OperatorMatrix tile_matrix_adjoint_direct(const TileLattice& lat,
                                          const LinearizingData& data, const Kernel& K,
                                          const PartitionOfUnity& pou, const Tile& p) {
    auto pv = phase_values(data);
    const int n = static_cast<int>(data.samples.size());
    const int s = lat.cubes().scale(p.cube);
    const double w = data.cell_volume();
    OperatorMatrix m = OperatorMatrix::zero(n, "tile*");
    auto E = lat.compute_E(p, data);
    for (int i : E) {
        const int q = data.samples[i].phase;
        auto xi = data.sample_point(i);
        for (int j = 0; j < n; ++j) {
            auto yj = data.sample_point(j);
            double ks = kernel_slice(K, pou, s, xi, yj);
            if (ks == 0.0) continue;
            m.at(j, i) += unit_phase(-pv[q][i] + pv[q][j]) * ks * w;
        }
    }
    return m;
}

OperatorMatrix set_matrix(const TileLattice& lat, const LinearizingData& data,
                          const Kernel& K, const PartitionOfUnity& pou,
                          std::span<const int> tile_ids, std::string provenance) {
    auto pv = phase_values(data);
    OperatorMatrix m =
        OperatorMatrix::zero(static_cast<int>(data.samples.size()), std::move(provenance));
    for (int tid : tile_ids) add_tile_entries(m, lat, data, K, pou, pv, lat.tile(tid));
    return m;
}

// ---------------------------------------------------------------------------
// Maximal operators
// ---------------------------------------------------------------------------

std::vector<double> maximal_operator_apply(const LinearizingData& data, const Kernel& K,
                                           const PartitionOfUnity& pou,
                                           std::span<const cplx> f, TruncationMode mode,
                                           std::vector<MaximalWitness>* witnesses) {
    const int n = static_cast<int>(data.samples.size());
    const double w = data.cell_volume();
    const int smin = data.box.s_min, smax = data.box.s_max;
    std::vector<std::vector<double>> pts(n);
    for (int j = 0; j < n; ++j) pts[j] = data.sample_point(j);

    std::vector<double> out(n, 0.0);
    if (witnesses) witnesses->assign(n, {});

    if (mode == TruncationMode::Smooth) {
        const int S = smax - smin + 1;
        for (size_t q = 0; q < data.phases.size(); ++q) {
            std::vector<cplx> mod(n);
            for (int j = 0; j < n; ++j)
                mod[j] = unit_phase(data.phases[q].eval(pts[j])) * f[j] * w;
            // prefix over scales of the per-scale contributions
            std::vector<std::vector<cplx>> prefix(S + 1,
                                                  std::vector<cplx>(n, cplx(0.0, 0.0)));
            for (int si = 0; si < S; ++si) {
                parallel_for(n, [&](long long lo, long long hi) {
                    for (long long i = lo; i < hi; ++i) {
                        cplx acc(0.0, 0.0);
                        for (int j = 0; j < n; ++j) {
                            double ks = kernel_slice(K, pou, smin + si, pts[i], pts[j]);
                            if (ks != 0.0) acc += ks * mod[j];
                        }
                        prefix[si + 1][i] = prefix[si][i] + acc;
                    }
                });
            }
            for (int i = 0; i < n; ++i) {
                for (int a = 0; a < S; ++a)
                    for (int b = a; b < S; ++b) {
                        double v = std::abs(prefix[b + 1][i] - prefix[a][i]);
                        if (v > out[i]) {
                            out[i] = v;
                            if (witnesses)
                                (*witnesses)[i] = {static_cast<int>(q), double(smin + a),
                                                   double(smin + b)};
                        }
                    }
            }
        }
        return out;
    }

    // sharp truncations on the half-power radius grid
    std::vector<double> radii;
    for (int s = smin - 1; s <= smax + 1; ++s) {
        radii.push_back(std::pow(double(data.box.D), double(s)));
        radii.push_back(std::pow(double(data.box.D), double(s) + 0.5));
    }
    std::sort(radii.begin(), radii.end());
    const int G = static_cast<int>(radii.size());
    for (size_t q = 0; q < data.phases.size(); ++q) {
        std::vector<cplx> mod(n);
        for (int j = 0; j < n; ++j)
            mod[j] = unit_phase(data.phases[q].eval(pts[j])) * f[j] * w;
        parallel_for(n, [&](long long lo, long long hi) {
            std::vector<cplx> bucket(G + 1);
            for (long long i = lo; i < hi; ++i) {
                std::fill(bucket.begin(), bucket.end(), cplx(0.0, 0.0));
                for (int j = 0; j < n; ++j) {
                    if (j == i) continue;
                    double r = euclid(pts[i], pts[j]);
                    int b = static_cast<int>(
                        std::lower_bound(radii.begin(), radii.end(), r) - radii.begin());
                    if (b >= G) continue; // beyond the largest truncation radius
                    bucket[b] += K.eval(pts[i], pts[j]) * mod[j];
                }
                // prefix over buckets, then max over contiguous runs
                std::vector<cplx> pre(G + 1, cplx(0.0, 0.0));
                for (int b = 0; b < G; ++b) pre[b + 1] = pre[b] + bucket[b];
                for (int a = 0; a < G; ++a)
                    for (int b = a; b < G; ++b) {
                        double v = std::abs(pre[b + 1] - pre[a]);
                        if (v > out[i]) {
                            out[i] = v;
                            if (witnesses)
                                (*witnesses)[i] = {static_cast<int>(q),
                                                   a == 0 ? 0.0 : radii[a - 1], radii[b]};
                        }
                    }
            }
        });
    }
    return out;
}

namespace {

// cell-lattice helpers for the maximal function
struct CellGrid {
    int ds;
    long long C; // cells per axis
    std::vector<int> cell_of_sample;
    std::vector<int> sample_of_cell;
};

CellGrid make_cell_grid(const LinearizingData& data) {
    CellGrid g;
    g.ds = data.box.ds;
    g.C = data.box.cells_per_axis();
    long long total = 1;
    for (int k = 0; k < g.ds; ++k) total *= g.C;
    if (static_cast<long long>(data.samples.size()) != total)
        throw std::invalid_argument("maximal function requires the full sample grid");
    g.cell_of_sample.resize(data.samples.size());
    g.sample_of_cell.assign(total, -1);
    for (size_t i = 0; i < data.samples.size(); ++i) {
        long long idx = 0;
        for (int k = g.ds - 1; k >= 0; --k) {
            long long coord = (data.samples[i].pos[k] - 1) / 2;
            idx = idx * g.C + coord;
        }
        g.cell_of_sample[i] = static_cast<int>(idx);
        g.sample_of_cell[idx] = static_cast<int>(i);
    }
    return g;
}

// forward sliding-window max of length m along one axis of a flat array
void sliding_max_axis(std::vector<double>& v, const std::vector<long long>& dims, int axis,
                      long long m) {
    long long stride = 1;
    for (int k = 0; k < axis; ++k) stride *= dims[k];
    long long len = dims[axis];
    long long lines = 1;
    for (size_t k = 0; k < dims.size(); ++k)
        if (static_cast<int>(k) != axis) lines *= dims[k];
    std::vector<double> buf(len);
    for (long long line = 0; line < lines; ++line) {
        // base offset of this line in the flat array
        long long rem = line, base = 0;
        long long acc = 1;
        for (size_t k = 0; k < dims.size(); ++k) {
            if (static_cast<int>(k) == axis) {
                acc *= dims[k];
                continue;
            }
            long long coord = rem % dims[k];
            rem /= dims[k];
            base += coord * acc;
            acc *= dims[k];
        }
        for (long long t = 0; t < len; ++t) buf[t] = v[base + t * stride];
        std::deque<long long> dq;
        std::vector<double> res(len);
        long long right = 0;
        for (long long t = 0; t < len; ++t) {
            while (right < std::min(len, t + m)) {
                while (!dq.empty() && buf[dq.back()] <= buf[right]) dq.pop_back();
                dq.push_back(right);
                ++right;
            }
            while (!dq.empty() && dq.front() < t) dq.pop_front();
            res[t] = buf[dq.front()];
        }
        for (long long t = 0; t < len; ++t) v[base + t * stride] = res[t];
    }
}

} // namespace

std::vector<double> hl_maximal(const LinearizingData& data, std::span<const double> absf) {
    CellGrid g = make_cell_grid(data);
    const int ds = g.ds;
    const long long C = g.C;

    // |f| on the cell lattice
    std::vector<double> cell(absf.size());
    for (size_t i = 0; i < absf.size(); ++i) cell[g.cell_of_sample[i]] = absf[i];

    // prefix sums with a leading zero layer per axis
    std::vector<long long> pdims(ds, C + 1);
    long long ptotal = 1;
    for (int k = 0; k < ds; ++k) ptotal *= (C + 1);
    std::vector<double> prefix(ptotal, 0.0);
    {
        std::vector<long long> ix(ds, 0);
        while (true) {
            bool onface = false;
            for (int k = 0; k < ds; ++k)
                if (ix[k] == 0) onface = true;
            if (!onface) {
                long long pidx = 0, cidx = 0;
                for (int k = ds - 1; k >= 0; --k) pidx = pidx * (C + 1) + ix[k];
                for (int k = ds - 1; k >= 0; --k) cidx = cidx * C + (ix[k] - 1);
                double v = cell[cidx];
                // inclusion-exclusion over the 2^ds corner offsets
                for (int mask = 1; mask < (1 << ds); ++mask) {
                    long long q = 0;
                    bool ok = true;
                    for (int k = ds - 1; k >= 0; --k) {
                        long long c = ix[k] - ((mask >> k) & 1);
                        if (c < 0) ok = false;
                        q = q * (C + 1) + c;
                    }
                    if (!ok) continue;
                    v += (__builtin_popcount(mask) % 2 == 1 ? 1.0 : -1.0) * prefix[q];
                }
                prefix[pidx] = v;
            }
            int k = 0;
            while (k < ds && ++ix[k] == C + 1) ix[k++] = 0;
            if (k == ds) break;
        }
    }
    auto box_sum = [&](const std::vector<long long>& lo, const std::vector<long long>& hi) {
        // sum over cells [lo, hi) clamped to [0, C)
        double s = 0.0;
        for (int mask = 0; mask < (1 << ds); ++mask) {
            long long q = 0;
            double sign = 1.0;
            for (int k = ds - 1; k >= 0; --k) {
                long long c = ((mask >> k) & 1) ? std::max(0LL, std::min(C, lo[k]))
                                                : std::max(0LL, std::min(C, hi[k]));
                if ((mask >> k) & 1) sign = -sign;
                q = q * (C + 1) + c;
            }
            s += sign * prefix[q];
        }
        return s;
    };

    std::vector<double> best(cell.size(), 0.0);
    for (long long m = 1; m <= 2 * C; ++m) {
        // window averages indexed by corner offset idx = corner + (m-1)
        std::vector<long long> dims(ds, C + m - 1);
        long long total = 1;
        for (int k = 0; k < ds; ++k) total *= dims[k];
        std::vector<double> val(total, 0.0);
        std::vector<long long> ix(ds, 0);
        std::vector<long long> lo(ds), hi(ds);
        double volume = std::pow(double(m), ds);
        while (true) {
            for (int k = 0; k < ds; ++k) {
                lo[k] = ix[k] - (m - 1);
                hi[k] = lo[k] + m;
            }
            long long idx = 0;
            for (int k = ds - 1; k >= 0; --k) idx = idx * dims[k] + ix[k];
            val[idx] = box_sum(lo, hi) / volume;
            int k = 0;
            while (k < ds && ++ix[k] == dims[k]) ix[k++] = 0;
            if (k == ds) break;
        }
        for (int axis = 0; axis < ds; ++axis) sliding_max_axis(val, dims, axis, m);
        // cell x reads position x in the corner-index grid
        std::vector<long long> cx(ds, 0);
        while (true) {
            long long cidx = 0, vidx = 0;
            for (int k = ds - 1; k >= 0; --k) {
                cidx = cidx * C + cx[k];
                vidx = vidx * dims[k] + cx[k];
            }
            best[cidx] = std::max(best[cidx], val[vidx]);
            int k = 0;
            while (k < ds && ++cx[k] == C) cx[k++] = 0;
            if (k == ds) break;
        }
    }

    std::vector<double> out(absf.size());
    for (size_t i = 0; i < absf.size(); ++i) out[i] = best[g.cell_of_sample[i]];
    return out;
}

std::vector<double> hl_maximal_q(const LinearizingData& data, std::span<const cplx> f,
                                 double q) {
    if (!(q >= 1.0)) throw std::invalid_argument("hl_maximal_q: need q >= 1");
    std::vector<double> powed(f.size());
    for (size_t i = 0; i < f.size(); ++i) powed[i] = std::pow(std::abs(f[i]), q);
    auto m = hl_maximal(data, powed);
    for (auto& v : m) v = std::pow(v, 1.0 / q);
    return m;
}

std::vector<double> nontangential_truncated(const LinearizingData& data, const Kernel& K,
                                            const PartitionOfUnity& pou,
                                            std::span<const cplx> f, double C_nt) {
    const int n = static_cast<int>(data.samples.size());
    const int smin = data.box.s_min, smax = data.box.s_max;
    const int S = smax - smin + 1;
    const double w = data.cell_volume();
    std::vector<std::vector<double>> pts(n);
    for (int j = 0; j < n; ++j) pts[j] = data.sample_point(j);

    std::vector<std::vector<cplx>> prefix(S + 1, std::vector<cplx>(n, cplx(0.0, 0.0)));
    for (int si = 0; si < S; ++si) {
        parallel_for(n, [&](long long lo, long long hi) {
            for (long long i = lo; i < hi; ++i) {
                cplx acc(0.0, 0.0);
                for (int j = 0; j < n; ++j) {
                    double ks = kernel_slice(K, pou, smin + si, pts[i], pts[j]);
                    if (ks != 0.0) acc += ks * f[j] * w;
                }
                prefix[si + 1][i] = prefix[si][i] + acc;
            }
        });
    }
    std::vector<double> out(n, 0.0);
    for (int i = 0; i < n; ++i) {
        for (int a = 0; a < S; ++a) {
            double radius = C_nt * std::pow(double(data.box.D), double(smin + a));
            for (int ii = 0; ii < n; ++ii) {
                if (euclid(pts[i], pts[ii]) > radius) continue;
                for (int b = a; b < S; ++b)
                    out[i] = std::max(out[i], std::abs(prefix[b + 1][ii] - prefix[a][ii]));
            }
        }
    }
    return out;
}

std::vector<cplx> projection_PJ(const LinearizingData& data, const std::vector<IBox>& cubes,
                                std::span<const cplx> f) {
    for (size_t a = 0; a < cubes.size(); ++a)
        for (size_t b = a + 1; b < cubes.size(); ++b)
            if (cubes[a].intersects(cubes[b]))
                throw std::invalid_argument("projection_PJ: overlapping cubes");
    std::vector<cplx> out(f.size(), cplx(0.0, 0.0));
    for (const auto& box : cubes) {
        cplx sum(0.0, 0.0);
        int cnt = 0;
        std::vector<int> members;
        for (size_t i = 0; i < data.samples.size(); ++i) {
            if (box.contains_point(data.samples[i].pos)) {
                sum += f[i];
                ++cnt;
                members.push_back(static_cast<int>(i));
            }
        }
        if (cnt == 0) continue;
        cplx avg = sum / double(cnt);
        for (int i : members) out[i] = avg;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Norms
// ---------------------------------------------------------------------------

namespace {

double vec_norm(std::span<const cplx> v) {
    double s = 0.0;
    for (const auto& x : v) s += std::norm(x);
    return std::sqrt(s);
}

} // namespace

double op_norm(const OperatorMatrix& m, OpNormMethod method, OpNormInfo* info) {
    if (method == OpNormMethod::Svd) {
        if (m.n > 2000) throw std::invalid_argument("op_norm: svd limited to n <= 2000");
        Eigen::MatrixXcd A(m.n, m.n);
        for (int i = 0; i < m.n; ++i)
            for (int j = 0; j < m.n; ++j) A(i, j) = m.at(i, j);
        Eigen::BDCSVD<Eigen::MatrixXcd> svd(A);
        if (info) *info = {true, 0, 0.0};
        return m.n == 0 ? 0.0 : svd.singularValues()(0);
    }
    // power iteration on A*A with a deterministic seeded start
    std::mt19937_64 rng(0x9E3779B97F4A7C15ull);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::vector<cplx> v(m.n);
    for (auto& x : v) x = cplx(uni(rng), uni(rng));
    double nv = vec_norm(v);
    if (nv == 0.0 || m.n == 0) return 0.0;
    for (auto& x : v) x /= nv;

    double sigma = 0.0;
    const double tol = 1e-8;
    const int max_iter = 1000;
    int it = 0;
    double diff = 0.0;
    for (it = 0; it < max_iter; ++it) {
        auto u = m.apply(v);
        auto z = m.apply_adjoint(u);
        double s = vec_norm(u); // ||Av|| for unit v
        double zn = vec_norm(z);
        diff = std::abs(s - sigma);
        sigma = s;
        if (zn == 0.0) {
            if (info) *info = {true, it + 1, 0.0};
            return 0.0;
        }
        for (int i = 0; i < m.n; ++i) v[i] = z[i] / zn;
        if (diff <= tol * std::max(1.0, sigma)) {
            if (info) *info = {true, it + 1, diff};
            return sigma;
        }
    }
    if (info) *info = {false, it, diff};
    return sigma;
}

VdcResult vdc_bound(const std::function<cplx(std::span<const double>)>& psi,
                    const RealBox& J, const PolyClass& Q, int quad_per_axis,
                    const NormOpts& norm_opts) {
    VdcResult r;
    const int ds = J.dims();
    r.delta = cube_norm(Q, J, NormMode::RigorousUpper, norm_opts) + 1.0;
    double side = 0.0;
    for (int k = 0; k < ds; ++k) side = std::max(side, J.side(k));
    const double rmax = std::pow(r.delta, -1.0 / Q.degree()) * side;

    // supported evaluator
    auto psi0 = [&](std::span<const double> x) -> cplx {
        for (int k = 0; k < ds; ++k)
            if (x[k] < J.lo[k] || x[k] >= J.hi[k]) return cplx(0.0, 0.0);
        return psi(x);
    };

    // midpoint quadrature over J expanded by rmax
    RealBox E = J;
    for (int k = 0; k < ds; ++k) {
        E.lo[k] -= rmax;
        E.hi[k] += rmax;
    }
    std::vector<long long> npts(ds);
    double w = 1.0;
    for (int k = 0; k < ds; ++k) {
        double frac = E.side(k) / J.side(k);
        npts[k] = std::max<long long>(2, llround(quad_per_axis * frac));
        w *= E.side(k) / npts[k];
    }

    std::vector<std::vector<double>> grid;
    {
        std::vector<long long> ix(ds, 0);
        std::vector<double> x(ds);
        while (true) {
            for (int k = 0; k < ds; ++k)
                x[k] = E.lo[k] + E.side(k) * (ix[k] + 0.5) / npts[k];
            grid.push_back(x);
            int k = 0;
            while (k < ds && ++ix[k] == npts[k]) ix[k++] = 0;
            if (k == ds) break;
        }
    }

    cplx lhs(0.0, 0.0);
    std::vector<cplx> base(grid.size());
    for (size_t i = 0; i < grid.size(); ++i) {
        base[i] = psi0(grid[i]);
        if (base[i] != cplx(0.0, 0.0)) lhs += unit_phase(Q.eval(grid[i])) * base[i];
    }
    r.lhs = std::abs(lhs) * w;

    // deterministic translation grid: 64 directions x 16 radii
    std::vector<std::vector<double>> dirs;
    if (ds == 1) {
        dirs.push_back({1.0});
        dirs.push_back({-1.0});
    } else if (ds == 2) {
        for (int a = 0; a < 64; ++a) {
            double th = 2.0 * M_PI * a / 64.0;
            dirs.push_back({std::cos(th), std::sin(th)});
        }
    } else {
        for (int k = 0; k < ds; ++k) {
            std::vector<double> e(ds, 0.0);
            e[k] = 1.0;
            dirs.push_back(e);
            e[k] = -1.0;
            dirs.push_back(e);
        }
    }
    double rhs = 0.0;
    std::vector<double> shifted(ds);
    for (const auto& dir : dirs) {
        for (int ri = 1; ri <= 16; ++ri) {
            double rad = rmax * 0.999 * ri / 16.0;
            double acc = 0.0;
            for (size_t i = 0; i < grid.size(); ++i) {
                for (int k = 0; k < ds; ++k) shifted[k] = grid[i][k] - rad * dir[k];
                acc += std::abs(base[i] - psi0(shifted));
            }
            rhs = std::max(rhs, acc * w);
        }
    }
    r.rhs = rhs;
    return r;
}

double weak_lorentz_norm(std::span<const double> absg, double weight, double p) {
    if (!(p > 0.0)) throw std::invalid_argument("weak_lorentz_norm: p must be positive");
    std::vector<double> v(absg.begin(), absg.end());
    std::sort(v.begin(), v.end(), std::greater<double>());
    double best = 0.0;
    for (size_t i = 0; i < v.size(); ++i) {
        if (v[i] <= 0.0) break;
        double mu = weight * double(i + 1); // measure of {|g| >= v[i]} cut at rank i
        best = std::max(best, v[i] * std::pow(mu, 1.0 / p));
    }
    return best;
}

} // namespace carleson
