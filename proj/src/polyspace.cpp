#include "carleson/polyspace.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <unordered_map>

namespace carleson {

namespace {

void enumerate_rec(int dims, int deg, int total, std::vector<int>& cur,
                   std::vector<std::vector<std::vector<int>>>& by_degree) {
    if (static_cast<int>(cur.size()) == dims) {
        by_degree[total].push_back(cur);
        return;
    }
    for (int e = 0; e + total <= deg; ++e) {
        cur.push_back(e);
        enumerate_rec(dims, deg, total + e, cur, by_degree);
        cur.pop_back();
    }
}

} // namespace

const MultiIndexSet& MultiIndexSet::get(int dims, int deg) {
    static std::mutex mu;
    static std::map<std::pair<int, int>, MultiIndexSet> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_pair(dims, deg);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;

    MultiIndexSet s;
    s.dims = dims;
    s.deg = deg;
    std::vector<std::vector<std::vector<int>>> by_degree(deg + 1);
    std::vector<int> cur;
    enumerate_rec(dims, deg, 0, cur, by_degree);
    for (int t = 0; t <= deg; ++t) {
        std::sort(by_degree[t].begin(), by_degree[t].end());
        for (auto& a : by_degree[t]) s.alphas.push_back(std::move(a));
    }
    return cache.emplace(key, std::move(s)).first->second;
}

double binomial(int n, int k) {
    if (k < 0 || k > n) return 0.0;
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

int quotient_dim(int dims, int deg) {
    return MultiIndexSet::get(dims, deg).size() - 1;
}

std::vector<double> RealBox::center() const {
    std::vector<double> c(lo.size());
    for (size_t i = 0; i < lo.size(); ++i) c[i] = 0.5 * (lo[i] + hi[i]);
    return c;
}

bool RealBox::contains(const RealBox& other, double tol) const {
    for (int i = 0; i < dims(); ++i)
        if (other.lo[i] < lo[i] - tol || other.hi[i] > hi[i] + tol) return false;
    return true;
}

RealBox RealBox::ball(std::span<const double> c, double r) {
    RealBox b;
    b.lo.resize(c.size());
    b.hi.resize(c.size());
    for (size_t i = 0; i < c.size(); ++i) {
        b.lo[i] = c[i] - r;
        b.hi[i] = c[i] + r;
    }
    return b;
}

PolyClass::PolyClass(int ds, int d) : ds_(ds), d_(d) {
    if (ds < 1 || d < 1) throw std::invalid_argument("PolyClass: ds and d must be >= 1");
    c_.assign(quotient_dim(ds, d), 0.0);
}

double PolyClass::eval(std::span<const double> x) const {
    const auto& mis = MultiIndexSet::get(ds_, d_);
    double v = 0.0;
    for (int i = 1; i < mis.size(); ++i) {
        double m = 1.0;
        const auto& a = mis.alphas[i];
        for (int k = 0; k < ds_; ++k)
            for (int e = 0; e < a[k]; ++e) m *= x[k];
        v += c_[i - 1] * m;
    }
    return v;
}

bool PolyClass::is_zero() const {
    for (double v : c_)
        if (v != 0.0) return false;
    return true;
}

PolyClass PolyClass::operator+(const PolyClass& o) const {
    PolyClass r = *this;
    for (size_t i = 0; i < c_.size(); ++i) r.c_[i] += o.c_[i];
    return r;
}

PolyClass PolyClass::operator-(const PolyClass& o) const {
    PolyClass r = *this;
    for (size_t i = 0; i < c_.size(); ++i) r.c_[i] -= o.c_[i];
    return r;
}

PolyClass PolyClass::operator*(double s) const {
    PolyClass r = *this;
    for (auto& v : r.c_) v *= s;
    return r;
}

bool PolyClass::lex_less(const PolyClass& a, const PolyClass& b) {
    return a.c_ < b.c_;
}

PolyClass shifted_monomial(int ds, int d, const std::vector<int>& alpha,
                           std::span<const double> c) {
    // Expand prod_k (x_k - c_k)^{alpha_k} and drop the constant term.
    const auto& mis = MultiIndexSet::get(ds, d);
    std::vector<double> full(mis.size(), 0.0);
    full[0] = 1.0;
    for (int k = 0; k < ds; ++k) {
        for (int e = 0; e < alpha[k]; ++e) {
            std::vector<double> next(mis.size(), 0.0);
            for (int i = 0; i < mis.size(); ++i) {
                if (full[i] == 0.0) continue;
                // multiply monomial i by (x_k - c_k)
                std::vector<int> up = mis.alphas[i];
                up[k] += 1;
                auto it = std::lower_bound(
                    mis.alphas.begin(), mis.alphas.end(), up,
                    [](const std::vector<int>& a, const std::vector<int>& b) {
                        int ta = 0, tb = 0;
                        for (int v : a) ta += v;
                        for (int v : b) tb += v;
                        if (ta != tb) return ta < tb;
                        return a < b;
                    });
                next[it - mis.alphas.begin()] += full[i];
                next[i] -= c[k] * full[i];
            }
            full = std::move(next);
        }
    }
    PolyClass r(ds, d);
    for (int i = 1; i < mis.size(); ++i) r.coeff(i - 1) = full[i];
    return r;
}

// ---------------------------------------------------------------------------
// Bernstein machinery
// ---------------------------------------------------------------------------

namespace {

// Dense tensor of per-axis-degree-<=d coefficients; index stride (d+1)^k.
struct Tensor {
    int ds, d;
    std::vector<double> v;
    Tensor(int ds_, int d_) : ds(ds_), d(d_), v(size_t(std::pow(d_ + 1, ds_)), 0.0) {}
    int stride(int axis) const {
        int s = 1;
        for (int k = 0; k < axis; ++k) s *= (d + 1);
        return s;
    }
};

Tensor monomial_tensor(const PolyClass& Q) {
    const auto& mis = MultiIndexSet::get(Q.ds(), Q.degree());
    Tensor t(Q.ds(), Q.degree());
    for (int i = 1; i < mis.size(); ++i) {
        size_t idx = 0, s = 1;
        for (int k = 0; k < Q.ds(); ++k) {
            idx += size_t(mis.alphas[i][k]) * s;
            s *= (Q.degree() + 1);
        }
        t.v[idx] = Q.coeff(i - 1);
    }
    return t;
}

// In-place per-axis transform of the 1D slices of a tensor.
template <typename F>
void for_each_slice(Tensor& t, int axis, F&& f) {
    const int n1 = t.d + 1;
    const int st = t.stride(axis);
    const size_t total = t.v.size();
    std::vector<double> buf(n1);
    // iterate over all positions with index 0 along `axis`
    for (size_t base = 0; base < total; ++base) {
        if ((base / st) % n1 != 0) continue;
        for (int i = 0; i < n1; ++i) buf[i] = t.v[base + size_t(i) * st];
        f(buf);
        for (int i = 0; i < n1; ++i) t.v[base + size_t(i) * st] = buf[i];
    }
}

// Substitute x_axis = a + w * t_axis.
void affine_substitute(Tensor& t, int axis, double a, double w) {
    const int d = t.d;
    for_each_slice(t, axis, [&](std::vector<double>& c) {
        std::vector<double> out(d + 1, 0.0);
        for (int i = 0; i <= d; ++i) {
            double wi = std::pow(w, i);
            double acc = 0.0;
            for (int j = i; j <= d; ++j)
                acc += c[j] * binomial(j, i) * std::pow(a, j - i);
            out[i] = acc * wi;
        }
        c = out;
    });
}

// Monomial -> Bernstein coefficients of degree d on [0,1] along one axis.
void to_bernstein(Tensor& t, int axis) {
    const int d = t.d;
    for_each_slice(t, axis, [&](std::vector<double>& a) {
        std::vector<double> b(d + 1, 0.0);
        for (int j = 0; j <= d; ++j) {
            double acc = 0.0;
            for (int i = 0; i <= j; ++i)
                acc += binomial(j, i) / binomial(d, i) * a[i];
            b[j] = acc;
        }
        a = b;
    });
}

void decasteljau_split(const std::vector<double>& b, std::vector<double>& left,
                       std::vector<double>& right) {
    const int n = static_cast<int>(b.size()) - 1;
    std::vector<double> t = b;
    left.assign(n + 1, 0.0);
    right.assign(n + 1, 0.0);
    left[0] = t[0];
    right[n] = t[n];
    for (int r = 1; r <= n; ++r) {
        for (int i = 0; i <= n - r; ++i) t[i] = 0.5 * (t[i] + t[i + 1]);
        left[r] = t[0];
        right[n - r] = t[n - r];
    }
}

void split_tensor(const Tensor& t, int axis, Tensor& a, Tensor& b) {
    a = t;
    b = t;
    const int n1 = t.d + 1;
    const int st = t.stride(axis);
    std::vector<double> buf(n1), l, r;
    for (size_t base = 0; base < t.v.size(); ++base) {
        if ((base / st) % n1 != 0) continue;
        for (int i = 0; i < n1; ++i) buf[i] = t.v[base + size_t(i) * st];
        decasteljau_split(buf, l, r);
        for (int i = 0; i < n1; ++i) {
            a.v[base + size_t(i) * st] = l[i];
            b.v[base + size_t(i) * st] = r[i];
        }
    }
}

// Corner coefficients of a Bernstein tensor are exact polynomial values.
void scan_cell(const Tensor& t, RangeInfo& info, bool& first) {
    const int n1 = t.d + 1;
    for (size_t idx = 0; idx < t.v.size(); ++idx) {
        double v = t.v[idx];
        bool corner = true;
        size_t rem = idx;
        for (int k = 0; k < t.ds; ++k) {
            int ik = rem % n1;
            rem /= n1;
            if (ik != 0 && ik != t.d) {
                corner = false;
                break;
            }
        }
        if (first) {
            info.outer.lo = info.outer.hi = v;
            if (corner) {
                info.attained_lo = info.attained_hi = v;
            }
            first = false;
            if (!corner) {
                // initialize attained from index 0 later; handled below
            }
        }
        info.outer.lo = std::min(info.outer.lo, v);
        info.outer.hi = std::max(info.outer.hi, v);
        if (corner) {
            info.attained_lo = std::min(info.attained_lo, v);
            info.attained_hi = std::max(info.attained_hi, v);
        }
    }
}

} // namespace

RangeInfo bernstein_range_info(const PolyClass& Q, const RealBox& box, int levels) {
    if (box.dims() != Q.ds())
        throw std::invalid_argument("bernstein_range: box dimension mismatch");
    Tensor t = monomial_tensor(Q);
    for (int k = 0; k < Q.ds(); ++k) affine_substitute(t, k, box.lo[k], box.side(k));
    for (int k = 0; k < Q.ds(); ++k) to_bernstein(t, k);

    RangeInfo info;
    // attained bounds start from the first corner value (index 0: value at box.lo)
    info.attained_lo = info.attained_hi = t.v[0];
    bool first = true;

    // subdivide `levels` times along every axis
    std::vector<Tensor> cells{t};
    for (int lev = 0; lev < levels; ++lev) {
        for (int axis = 0; axis < Q.ds(); ++axis) {
            std::vector<Tensor> next;
            next.reserve(cells.size() * 2);
            for (auto& c : cells) {
                Tensor a(Q.ds(), Q.degree()), b(Q.ds(), Q.degree());
                split_tensor(c, axis, a, b);
                next.push_back(std::move(a));
                next.push_back(std::move(b));
            }
            cells = std::move(next);
        }
    }
    for (auto& c : cells) scan_cell(c, info, first);
    info.outer.rigorous = true;
    return info;
}

RangeBound bernstein_range(const PolyClass& Q, const RealBox& box, int levels) {
    return bernstein_range_info(Q, box, levels).outer;
}

double cube_norm(const PolyClass& Q, const RealBox& box, NormMode mode,
                 const NormOpts& opts) {
    if (box.dims() != Q.ds())
        throw std::invalid_argument("cube_norm: dimension mismatch between Q and box");
    switch (mode) {
        case NormMode::RigorousUpper:
            return bernstein_range_info(Q, box, opts.bernstein_levels).outer.width();
        case NormMode::RigorousLower: {
            auto info = bernstein_range_info(Q, box, opts.bernstein_levels);
            return info.attained_hi - info.attained_lo;
        }
        case NormMode::Sampled: {
            const int m = std::max(2, opts.sample_grid);
            const int ds = Q.ds();
            std::vector<double> x(ds);
            std::vector<int> ix(ds, 0);
            double mn = 0.0, mx = 0.0;
            bool first = true;
            while (true) {
                for (int k = 0; k < ds; ++k)
                    x[k] = box.lo[k] + box.side(k) * ix[k] / (m - 1);
                double v = Q.eval(x);
                if (first) {
                    mn = mx = v;
                    first = false;
                } else {
                    mn = std::min(mn, v);
                    mx = std::max(mx, v);
                }
                int k = 0;
                while (k < ds && ++ix[k] == m) ix[k++] = 0;
                if (k == ds) break;
            }
            return mx - mn;
        }
    }
    return 0.0;
}

NormScaling norm_scaling_ratio(const PolyClass& Q, std::span<const double> x, double r,
                               double R, const NormOpts& opts) {
    if (Q.is_zero())
        throw std::invalid_argument("norm_scaling_ratio: zero polynomial class");
    if (!(r > 0.0) || !(R >= r))
        throw std::invalid_argument("norm_scaling_ratio: need 0 < r <= R");
    double small = cube_norm(Q, RealBox::ball(x, r), NormMode::Sampled, opts);
    double big = cube_norm(Q, RealBox::ball(x, R), NormMode::Sampled, opts);
    NormScaling s;
    s.ratio = big / small;
    s.env_lo = R / r;
    s.env_hi = std::pow(R / r, Q.degree());
    return s;
}

std::vector<double> coeff_bounds_unit_osc(int ds, int d, const RealBox& box,
                                          std::span<const double> basis_center) {
    const auto& mis = MultiIndexSet::get(ds, d);
    const int n = mis.size();
    // tensor node grid with d+1 uniform points per axis
    const int m = d + 1;
    int nodes = 1;
    for (int k = 0; k < ds; ++k) nodes *= m;
    if (nodes < n)
        throw std::logic_error("coeff_bounds_unit_osc: node grid smaller than basis");

    Eigen::MatrixXd V(nodes, n);
    std::vector<int> ix(ds, 0);
    std::vector<double> x(ds);
    for (int row = 0; row < nodes; ++row) {
        int rem = row;
        for (int k = 0; k < ds; ++k) {
            ix[k] = rem % m;
            rem /= m;
            x[k] = box.lo[k] + box.side(k) * (m == 1 ? 0.5 : double(ix[k]) / (m - 1));
        }
        for (int j = 0; j < n; ++j) {
            double v = 1.0;
            const auto& a = mis.alphas[j];
            for (int k = 0; k < ds; ++k)
                for (int e = 0; e < a[k]; ++e) v *= (x[k] - basis_center[k]);
            V(row, j) = v;
        }
    }
    // values of S - S(node_0) at the nodes determine the coefficients; the
    // first column of the pseudoinverse multiplies a zero value and is skipped.
    Eigen::MatrixXd pinv =
        V.completeOrthogonalDecomposition().pseudoInverse(); // n x nodes
    std::vector<double> bounds(n - 1, 0.0);
    for (int j = 1; j < n; ++j) {
        double s = 0.0;
        for (int row = 1; row < nodes; ++row) s += std::abs(pinv(j, row));
        bounds[j - 1] = s;
    }
    return bounds;
}

double norm_transfer_bound(int ds, int d, const RealBox& from, const RealBox& to,
                           const NormOpts& opts) {
    const auto& mis = MultiIndexSet::get(ds, d);
    auto c_to = to.center();
    auto L = coeff_bounds_unit_osc(ds, d, from, c_to);
    double bound = 0.0;
    for (int j = 1; j < mis.size(); ++j) {
        PolyClass e = shifted_monomial(ds, d, mis.alphas[j], c_to);
        double up = bernstein_range(e, to, opts.bernstein_levels).width();
        bound += L[j - 1] * up;
    }
    if (from.contains(to)) bound = std::min(bound, 1.0);
    return bound;
}

// ---------------------------------------------------------------------------
// Nets
// ---------------------------------------------------------------------------

namespace {

struct VecHash {
    size_t operator()(const std::vector<int>& v) const {
        size_t h = 1469598103934665603ull;
        for (int x : v) {
            h ^= size_t(uint32_t(x));
            h *= 1099511628211ull;
        }
        return h;
    }
};

} // namespace

PolyNet build_net(int ds, int d, const RealBox& domain, const PolyClass& region_center,
                  double region_radius, double sep, const NetOpts& opts) {
    if (region_radius < 0.0) throw std::invalid_argument("build_net: negative radius");
    if (!(sep > 0.0)) throw std::invalid_argument("build_net: sep must be positive");

    PolyNet net;
    net.domain = domain;
    net.sep = sep;

    const auto& mis = MultiIndexSet::get(ds, d);
    const int dq = mis.size() - 1;
    auto c = domain.center();

    // quotient basis of shifted monomials and their oscillation over the domain
    std::vector<PolyClass> basis;
    std::vector<double> up(dq), lo(dq);
    for (int j = 1; j < mis.size(); ++j) {
        basis.push_back(shifted_monomial(ds, d, mis.alphas[j], c));
        auto info = bernstein_range_info(basis.back(), domain, opts.bernstein_levels);
        up[j - 1] = info.outer.width();
        lo[j - 1] = info.attained_hi - info.attained_lo;
        if (!(up[j - 1] > 0.0)) throw NetError("build_net: degenerate domain box");
    }

    // mesh sep/8: half the spec bound, so that the covering radius of
    // arbitrary region points (candidate covering + one rounding step)
    // stays below the tile-sandwich budget
    net.step.resize(dq);
    for (int j = 0; j < dq; ++j)
        net.step[j] = opts.step_safety * sep / (8.0 * dq * up[j]);

    if (region_radius == 0.0) {
        net.centers.push_back(region_center);
        net.lattice_coords.push_back(std::vector<int>(dq, 0));
        return net;
    }

    auto L = coeff_bounds_unit_osc(ds, d, domain, c);
    std::vector<int> K(dq);
    long long count = 1;
    for (int j = 0; j < dq; ++j) {
        K[j] = static_cast<int>(std::ceil(L[j] * region_radius / net.step[j])) + 1;
        count *= (2LL * K[j] + 1);
        if (count > 40'000'000LL)
            throw NetError("build_net: candidate lattice too large for this (ds,d,radius)");
    }

    auto cand_poly = [&](const std::vector<int>& k) {
        PolyClass p = region_center;
        for (int j = 0; j < dq; ++j)
            if (k[j] != 0) p = p + basis[j] * (k[j] * net.step[j]);
        return p;
    };

    // cache of difference-norm enclosures keyed by lattice offset
    std::unordered_map<std::vector<int>, std::pair<double, double>, VecHash> diff_cache;
    auto diff_bounds = [&](const std::vector<int>& a,
                           const std::vector<int>& b) -> std::pair<double, double> {
        std::vector<int> dk(dq);
        for (int j = 0; j < dq; ++j) dk[j] = a[j] - b[j];
        for (int j = 0; j < dq; ++j)
            if (dk[j] != 0) {
                if (dk[j] < 0)
                    for (auto& v : dk) v = -v;
                break;
            }
        auto it = diff_cache.find(dk);
        if (it != diff_cache.end()) return it->second;
        PolyClass diff(ds, d);
        for (int j = 0; j < dq; ++j)
            if (dk[j] != 0) diff = diff + basis[j] * (dk[j] * net.step[j]);
        auto info = bernstein_range_info(diff, domain, opts.bernstein_levels);
        auto res = std::make_pair(info.attained_hi - info.attained_lo, info.outer.width());
        diff_cache.emplace(std::move(dk), res);
        return res;
    };

    // enumerate the whole candidate lattice and visit it nearest-first
    std::vector<std::vector<int>> cands;
    {
        std::vector<int> k(dq);
        for (int j = 0; j < dq; ++j) k[j] = -K[j];
        while (true) {
            cands.push_back(k);
            int j = 0;
            while (j < dq && ++k[j] > K[j]) k[j++] = -K[j];
            if (j == dq) break;
        }
    }
    const std::vector<int> origin(dq, 0);
    std::vector<double> key(cands.size());
    for (size_t i = 0; i < cands.size(); ++i) key[i] = diff_bounds(cands[i], origin).second;
    std::vector<size_t> order(cands.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (key[a] != key[b]) return key[a] < key[b];
        return cands[a] < cands[b];
    });

    const double cover_radius = sep * (1.0 + opts.cover_slack);
    int uncovered = 0;
    for (size_t oi : order) {
        const auto& k = cands[oi];
        bool blocked = false, covered = false;
        for (const auto& ck : net.lattice_coords) {
            // cheap triangle upper bound short-circuits clear cases
            double cheap = 0.0;
            for (int j = 0; j < dq; ++j)
                cheap += std::abs(k[j] - ck[j]) * net.step[j] * up[j];
            if (cheap < sep) {
                blocked = covered = true;
                break;
            }
            auto [dlo, dhi] = diff_bounds(k, ck);
            if (dlo < sep) {
                blocked = true;
                if (dhi <= cover_radius) {
                    covered = true;
                    break;
                }
            }
        }
        if (!blocked) {
            net.centers.push_back(cand_poly(k));
            net.lattice_coords.push_back(k);
        } else if (!covered) {
            // only candidates inside the declared region need a coverage certificate
            if (diff_bounds(k, origin).second <= region_radius) ++uncovered;
        }
    }
    if (uncovered > 0)
        throw NetError("build_net: covering certificate failed for " +
                       std::to_string(uncovered) + " in-region candidates");
    return net;
}

} // namespace carleson
