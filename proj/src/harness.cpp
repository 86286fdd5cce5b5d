#include "carleson/harness.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace carleson {

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

void ExperimentConfig::validate() const {
    if (ds < 1 || ds > 3) throw std::invalid_argument("config: ds out of range");
    if (d < 1 || d > 3) throw std::invalid_argument("config: d out of range");
    if (D < 2) throw std::invalid_argument("config: D must be >= 2");
    if (s_min > s_max) throw std::invalid_argument("config: s_min > s_max");
    if (s_max - s_min + 1 > scale_cap)
        throw std::invalid_argument("config: scale range exceeds the desk-scale cap");
    if (subdiv < 1) throw std::invalid_argument("config: subdiv must be >= 1");
    if (phase_count < 1) throw std::invalid_argument("config: phase_count must be >= 1");
}

WorkingBox ExperimentConfig::working_box() const {
    WorkingBox b;
    b.ds = ds;
    b.D = D;
    b.s_min = s_min;
    b.s_max = s_max;
    b.subdiv = subdiv;
    return b;
}

LatticeParams ExperimentConfig::lattice_params() const {
    LatticeParams p;
    p.sep = sep;
    p.phase_radius = phase_radius;
    p.margin = net_margin;
    p.lambda_margin = lambda_margin;
    p.norms.bernstein_levels = bernstein_levels;
    return p;
}

StoppingParams ExperimentConfig::stopping_params() const {
    StoppingParams p;
    p.C_count = C_count;
    p.delta_stop = delta_stop;
    return p;
}

SelectionParams ExperimentConfig::selection_params() const {
    SelectionParams p;
    p.C0 = C0;
    p.C_sep = C_sep;
    return p;
}

// ---------------------------------------------------------------------------
// Instance generation
// ---------------------------------------------------------------------------

namespace {

uint64_t mix_seed(uint64_t seed, uint64_t salt) {
    uint64_t z = seed + 0x9E3779B97F4A7C15ull * (salt + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

std::vector<char> random_cell_box(const WorkingBox& box, std::mt19937_64& rng,
                                  double fraction) {
    const long long C = box.cells_per_axis();
    long long total = 1;
    for (int k = 0; k < box.ds; ++k) total *= C;
    long long side = std::max<long long>(
        1, llround(std::pow(fraction * double(total), 1.0 / box.ds)));
    side = std::min(side, C);
    std::vector<long long> corner(box.ds);
    for (int k = 0; k < box.ds; ++k)
        corner[k] = std::uniform_int_distribution<long long>(0, C - side)(rng);
    std::vector<char> mask(total, 0);
    std::vector<long long> ix(box.ds, 0);
    for (long long idx = 0; idx < total; ++idx) {
        long long rem = idx;
        bool inside = true;
        for (int k = 0; k < box.ds; ++k) {
            long long coord = rem % C;
            rem /= C;
            if (coord < corner[k] || coord >= corner[k] + side) inside = false;
        }
        mask[idx] = inside ? 1 : 0;
        (void)ix;
    }
    return mask;
}

} // namespace

std::vector<cplx> random_grid_function(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<cplx> f(n);
    double nrm = 0.0;
    for (auto& v : f) {
        v = cplx(g(rng), g(rng));
        nrm += std::norm(v);
    }
    nrm = std::sqrt(nrm);
    if (nrm > 0)
        for (auto& v : f) v /= nrm;
    return f;
}

Instance generate_instance(const ExperimentConfig& cfg, uint64_t seed) {
    cfg.validate();
    Instance inst;
    inst.cfg = cfg;
    inst.seed = seed;
    inst.data.box = cfg.working_box();
    const WorkingBox& box = inst.data.box;
    const long long C = box.cells_per_axis();
    long long total = 1;
    for (int k = 0; k < box.ds; ++k) total *= C;

    // full sample grid, axis 0 fastest
    inst.data.samples.resize(total);
    for (long long idx = 0; idx < total; ++idx) {
        Sample s;
        s.pos.resize(box.ds);
        long long rem = idx;
        for (int k = 0; k < box.ds; ++k) {
            s.pos[k] = 2 * (rem % C) + 1;
            rem /= C;
        }
        s.sigma_lo = box.s_min;
        s.sigma_hi = box.s_max;
        s.phase = 0;
        inst.data.samples[idx] = std::move(s);
    }

    std::mt19937_64 rng(mix_seed(seed, 1));

    // phase set: either the zero class alone or draws from a net over the box
    if (cfg.preset == "single-phase" || cfg.preset == "heavy-chain") {
        inst.data.phases = {PolyClass(cfg.ds, cfg.d)};
    } else {
        RealBox top = box.to_real(box.full_ibox());
        NetOpts nopts;
        nopts.bernstein_levels = cfg.bernstein_levels;
        PolyNet pool = build_net(cfg.ds, cfg.d, top, PolyClass(cfg.ds, cfg.d),
                                 cfg.phase_radius * 0.9, 0.35, nopts);
        std::vector<int> order(pool.centers.size());
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        int want = std::min<int>(cfg.phase_count, static_cast<int>(order.size()));
        for (int i = 0; i < want; ++i) inst.data.phases.push_back(pool.centers[order[i]]);
        if (inst.data.phases.empty()) inst.data.phases.push_back(PolyClass(cfg.ds, cfg.d));
    }
    const int nphases = static_cast<int>(inst.data.phases.size());

    // per-sample phases and truncation windows
    if (cfg.preset == "random") {
        // geometric phase weights; block-structured truncation ceilings with a
        // per-block mixing fraction so tile densities spread over levels
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        const int blocks = static_cast<int>(std::min<long long>(C, 64));
        const size_t nblocks = size_t(std::pow(double(blocks), box.ds));
        std::vector<int> ceiling(nblocks, box.s_max);
        std::vector<double> mix(nblocks, 1.0);
        for (size_t bi = 0; bi < nblocks; ++bi) {
            double x = u01(rng);
            int cb = box.s_max;
            while (cb > box.s_min && x < 0.35) {
                x = u01(rng);
                --cb;
            }
            ceiling[bi] = cb;
            mix[bi] = u01(rng);
        }
        for (auto& s : inst.data.samples) {
            double x = u01(rng);
            int q = 0;
            while (q + 1 < nphases && x < 0.5) {
                x = u01(rng);
                ++q;
            }
            s.phase = q;
            long long bidx = 0;
            for (int k = box.ds - 1; k >= 0; --k)
                bidx = bidx * blocks + ((s.pos[k] / 2) * blocks) / C;
            int hi = ceiling[bidx];
            if (hi > box.s_min && u01(rng) >= mix[bidx])
                hi = std::uniform_int_distribution<int>(box.s_min, hi - 1)(rng);
            s.sigma_hi = hi;
            s.sigma_lo = std::uniform_int_distribution<int>(box.s_min, hi)(rng);
        }
    } else if (cfg.preset == "clustered") {
        // a few dominant phases, heavy-tailed assignment
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (auto& s : inst.data.samples) {
            double x = u(rng);
            if (x < 0.7)
                s.phase = 0;
            else if (x < 0.9)
                s.phase = std::min(1, nphases - 1);
            else
                s.phase = std::uniform_int_distribution<int>(0, nphases - 1)(rng);
            int lo = std::uniform_int_distribution<int>(box.s_min, box.s_max)(rng);
            s.sigma_lo = lo;
            s.sigma_hi = box.s_max;
        }
    }
    // single-phase and heavy-chain keep phase 0 with the full window

    inst.F = random_cell_box(box, rng, 1.0 / 16.0);
    inst.G = random_cell_box(box, rng, 1.0 / 16.0);
    std::mt19937_64 rng_f(mix_seed(seed, 2));
    inst.f = random_grid_function(static_cast<int>(total), rng_f);
    inst.g = random_grid_function(static_cast<int>(total), rng_f);
    inst.data.validate();
    return inst;
}

BuiltInstance BuiltInstance::build(const Instance& inst) {
    BuiltInstance b{inst,
                    TileLattice::build(inst.data, inst.cfg.lattice_params()),
                    StoppingForest{},
                    Decomposition{},
                    0.0};
    b.forest =
        build_stopping_forest_calibrated(b.lattice, inst.data, inst.cfg.stopping_params());
    b.C_count_used = b.forest.C_count_used;
    b.dec = build_decomposition(b.lattice, inst.data, b.forest,
                                inst.cfg.selection_params());
    return b;
}

// ---------------------------------------------------------------------------
// Decomposition verification
// ---------------------------------------------------------------------------

namespace {

std::string tile_str(const TileLattice& lat, const Tile& t) {
    return "(" + std::to_string(t.cube) + "," + std::to_string(t.center) + ")";
}

std::string tile_str_id(const TileLattice& lat, int tid) {
    return tile_str(lat, lat.tile(tid));
}

} // namespace

std::vector<std::string> verify_decomposition(const TileLattice& lat,
                                              const LinearizingData& data,
                                              const StoppingForest& forest,
                                              const Decomposition& dec) {
    std::vector<std::string> out;
    std::vector<int> claimed(lat.tiles().size(), 0);
    for (const auto& t : dec.trees)
        for (int tid : t.members) ++claimed[tid];
    for (const auto& a : dec.antichains)
        for (int tid : a.tiles) ++claimed[tid];
    for (int tid : dec.residual) ++claimed[tid];
    for (size_t tid = 0; tid < claimed.size(); ++tid)
        if (claimed[tid] != 1)
            out.push_back("partition: tile " + tile_str_id(lat, static_cast<int>(tid)) +
                          " claimed " + std::to_string(claimed[tid]) + " times");

    for (const auto& a : dec.antichains) {
        for (size_t i = 0; i < a.tiles.size(); ++i)
            for (size_t j = i + 1; j < a.tiles.size(); ++j) {
                const Tile &p = lat.tile(a.tiles[i]), &q = lat.tile(a.tiles[j]);
                if (lat.order_lt(p, q) || lat.order_lt(q, p))
                    out.push_back("antichain n=" + std::to_string(a.n) + ",k=" +
                                  std::to_string(a.k) + ",id=" + std::to_string(a.id) +
                                  ": comparable pair " + tile_str(lat, p) + " " +
                                  tile_str(lat, q));
            }
    }

    for (const auto& t : dec.trees) {
        std::vector<char> inT(lat.tiles().size(), 0);
        for (int tid : t.members) inT[tid] = 1;
        for (int tid : t.members) {
            if (forest.gen_of_tile[tid] != t.k)
                out.push_back("tree (" + std::to_string(t.n) + "," + std::to_string(t.k) +
                              "," + std::to_string(t.j) + "," + std::to_string(t.l) +
                              "): member outside generation");
            if (lat.ball_le(4.0, lat.tile(tid), 4.0, t.top) != Cert::True)
                out.push_back("tree (" + std::to_string(t.n) + "," + std::to_string(t.k) +
                              "," + std::to_string(t.j) + "," + std::to_string(t.l) +
                              "): top condition fails at " + tile_str_id(lat, tid));
        }
        // exact convexity
        for (int a : t.members)
            for (int b : t.members) {
                const Tile &p1 = lat.tile(a), &p2 = lat.tile(b);
                if (!lat.order_lt(p1, p2)) continue;
                int cube = lat.cubes().parent_id[p1.cube];
                while (cube >= 0 && cube != p2.cube) {
                    int c = lat.descend_center(p2.cube, p2.center, cube);
                    int q = lat.tile_id({cube, c});
                    if (q >= 0 && forest.gen_of_tile[q] == t.k && !inT[q])
                        out.push_back("tree (" + std::to_string(t.n) + "," +
                                      std::to_string(t.k) + "," + std::to_string(t.j) +
                                      "," + std::to_string(t.l) + "): convexity gap at " +
                                      tile_str_id(lat, q));
                    cube = lat.cubes().parent_id[cube];
                }
            }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Structure suite
// ---------------------------------------------------------------------------

bool Report::hard_fail() const {
    for (const auto& c : checks)
        if (c.hard && c.status == "fail") return true;
    return false;
}

namespace {

CheckRecord make_rec(std::string id, std::string claim, bool ok, double measured = 0.0,
                     std::string witness = {}, bool hard = false) {
    CheckRecord r;
    r.id = std::move(id);
    r.claim = std::move(claim);
    r.status = ok ? "pass" : "fail";
    r.hard = hard;
    r.measured = measured;
    r.witness = std::move(witness);
    return r;
}

CheckRecord info_rec(std::string id, std::string claim, double measured,
                     std::string witness = {}) {
    CheckRecord r;
    r.id = std::move(id);
    r.claim = std::move(claim);
    r.status = "info";
    r.measured = measured;
    r.witness = std::move(witness);
    return r;
}

} // namespace

Report run_structure_suite(const BuiltInstance& b) {
    const TileLattice& lat = b.lattice;
    const LinearizingData& data = b.inst.data;
    const StoppingForest& forest = b.forest;
    Report rep;
    rep.suite = "structure";
    rep.seed = b.inst.seed;
    std::mt19937_64 rng(mix_seed(b.inst.seed, 7));

    // E-set disjointness and containment per cube
    {
        bool ok = true;
        std::string wit;
        for (int c = 0; c < lat.cubes().size() && ok; ++c) {
            std::set<int> seen;
            for (int tid : lat.tiles_of_cube(c)) {
                for (int si : lat.compute_E(lat.tile(tid), data)) {
                    if (!seen.insert(si).second) {
                        ok = false;
                        wit = "cube " + std::to_string(c) + " sample " + std::to_string(si);
                        break;
                    }
                }
            }
        }
        rep.add(make_rec("e-disjoint", "per-cube E sets are pairwise disjoint", ok, 0, wit));
    }
    {
        bool ok = true;
        std::string wit;
        for (size_t i = 0; i < lat.tiles().size() && ok; ++i) {
            const Tile& p = lat.tile(static_cast<int>(i));
            auto E = lat.compute_E(p, data);
            auto Eb = lat.compute_Ebar(p, data);
            std::set<int> ebar(Eb.begin(), Eb.end());
            for (int si : E)
                if (!ebar.count(si)) {
                    ok = false;
                    wit = "tile " + tile_str(lat, p);
                    break;
                }
            IBox ib = lat.cubes().ibox(p.cube);
            for (int si : Eb)
                if (!ib.contains_point(data.samples[si].pos)) {
                    ok = false;
                    wit = "tile " + tile_str(lat, p);
                    break;
                }
        }
        rep.add(make_rec("e-subset", "E(p) inside Ebar(p) inside I_p", ok, 0, wit));
    }
    {
        bool ok = true;
        std::string wit;
        int tested = 0;
        for (size_t i = 0; i < lat.tiles().size() && tested < 50; i += 7, ++tested) {
            const Tile& p = lat.tile(static_cast<int>(i));
            auto e1 = lat.compute_E_dilated(2.0, p, data);
            auto e2 = lat.compute_E_dilated(4.0, p, data);
            std::set<int> big(e2.begin(), e2.end());
            for (int si : e1)
                if (!big.count(si)) {
                    ok = false;
                    wit = tile_str(lat, p);
                }
        }
        rep.add(make_rec("e-dilated-monotone",
                         "dilated E sets grow with the dilation parameter", ok, 0, wit));
    }

    // order relation sanity on sampled tile triples
    {
        bool ok = true;
        std::string wit;
        const auto& tiles = lat.tiles();
        if (!tiles.empty()) {
            std::uniform_int_distribution<int> u(0, static_cast<int>(tiles.size()) - 1);
            for (int trial = 0; trial < 500 && ok; ++trial) {
                const Tile &a = tiles[u(rng)], &bb = tiles[u(rng)], &c = tiles[u(rng)];
                if (lat.order_lt(a, a)) {
                    ok = false;
                    wit = "irreflexive " + tile_str(lat, a);
                }
                if (lat.order_le(a, bb) && lat.order_le(bb, a) && !(a == bb)) {
                    ok = false;
                    wit = "antisymmetric " + tile_str(lat, a);
                }
                if (lat.order_le(a, bb) && lat.order_le(bb, c) && !lat.order_le(a, c)) {
                    ok = false;
                    wit = "transitive " + tile_str(lat, a);
                }
            }
        }
        rep.add(make_rec("order-partial-order",
                         "tile order is a partial order (sampled triples)", ok, 0, wit));
    }

    // region sandwich via rigorous bounds; samples stay inside the declared
    // phase region where membership is defined
    {
        int violations = 0;
        int tiles_tested = 0;
        std::string wit;
        const RealBox top_box = lat.cubes().real_box(0);
        const double reach = b.inst.cfg.phase_radius + b.inst.cfg.lambda_margin;
        std::uniform_real_distribution<double> ur(0.0, 1.3);
        for (size_t i = 0; i < lat.tiles().size(); ++i) {
            const Tile& p = lat.tile(static_cast<int>(i));
            ++tiles_tested;
            RealBox rb = lat.cubes().real_box(p.cube);
            auto c = rb.center();
            const auto& mis = MultiIndexSet::get(data.phases[0].ds(), data.phases[0].degree());
            for (int trial = 0; trial < 20; ++trial) {
                PolyClass u(data.phases[0].ds(), data.phases[0].degree());
                for (int jj = 1; jj < mis.size(); ++jj) {
                    double coef = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
                    u = u + shifted_monomial(u.ds(), u.degree(), mis.alphas[jj], c) * coef;
                }
                double upn = bernstein_range(u, rb, 2).width();
                if (upn <= 0) continue;
                double radius = ur(rng);
                PolyClass Q = lat.center(p) + u * (radius / upn);
                if (bernstein_range(Q, top_box, 2).width() > reach) continue;
                auto info = lat.diff_norm(Q, lat.center(p), p.cube);
                bool member = lat.tile_membership(Q, p);
                if (info.outer.width() <= 0.2 && !member) ++violations;
                if (info.attained_hi - info.attained_lo > 1.0 && member) ++violations;
                if (violations == 1 && wit.empty()) wit = "tile " + tile_str(lat, p);
            }
            if (tiles_tested >= 120) break;
        }
        rep.add(make_rec("tile-ball-sandwich",
                         "membership holds inside radius 0.2 and fails beyond radius 1",
                         violations == 0, violations, wit));
    }

    // stopping structure
    {
        bool ok = !forest.F.empty();
        std::string wit;
        if (ok)
            for (int c = 0; c < lat.cubes().size(); ++c)
                if ((lat.cubes().scale(c) == data.box.s_max) !=
                    (std::find(forest.F[0].begin(), forest.F[0].end(), c) !=
                     forest.F[0].end())) {
                    ok = false;
                    wit = "cube " + std::to_string(c);
                }
        rep.add(make_rec("stopping-top-generation",
                         "generation zero is exactly the top scale", ok, 0, wit));
    }
    {
        bool ok = true;
        std::string wit;
        for (int c = 0; c < lat.cubes().size(); ++c)
            if (forest.gen_of_cube[c] < 0) {
                ok = false;
                wit = "cube " + std::to_string(c);
            }
        rep.add(make_rec("stopping-partition", "every cube has exactly one generation", ok,
                         0, wit, true));
    }
    {
        // Whitney property of every recorded cube class
        bool ok = true;
        std::string wit;
        for (size_t k = 0; k < forest.tilde.size() && ok; ++k) {
            for (int c = 0; c < lat.cubes().size() && ok; ++c) {
                if (!forest.tilde[k][c]) continue;
                IBox tri = dilate(data.box, lat.cubes().cubes[c], 3);
                for (int s = data.box.s_min; s < lat.cubes().scale(c) && ok; ++s)
                    for (const auto& gc : cubes_intersecting(data.box, tri, s)) {
                        if (!tri.contains(cube_ibox(data.box, gc))) continue;
                        int id2 = lat.cubes().id_of(gc);
                        if (id2 >= 0 && !forest.tilde[k][id2]) {
                            ok = false;
                            wit = "k=" + std::to_string(k) + " cube " + std::to_string(id2);
                        }
                    }
            }
        }
        rep.add(make_rec("stopping-whitney",
                         "cube classes contain all smaller cubes inside triple dilates",
                         ok, 0, wit));
    }
    {
        // support decay, measured
        double worst = 0.0;
        for (int k = 0; k + 1 < forest.generations(); ++k) {
            for (int f : forest.F[k]) {
                double sum = 0.0;
                for (int f2 : forest.F[k + 1])
                    if (lat.cubes().contains(f2, f)) sum += lat.cubes().volume(f2);
                worst = std::max(worst, sum / lat.cubes().volume(f));
            }
        }
        rep.add(make_rec("stopping-support-decay",
                         "child exceptional mass decays by the configured factor",
                         worst <= b.inst.cfg.delta_stop, worst));
    }

    // maximal tile sets: antichain property and counting constant
    {
        bool ok = true;
        double cfit = 0.0;
        std::string wit;
        for (int k = 0; k < forest.generations(); ++k)
            for (int n = 1; n <= forest.n_max; ++n) {
                auto M = maximal_tiles(lat, data, forest, n, k);
                for (size_t i = 0; i < M.tiles.size() && ok; ++i)
                    for (size_t j = i + 1; j < M.tiles.size() && ok; ++j)
                        if (lat.order_lt(lat.tile(M.tiles[i]), lat.tile(M.tiles[j])) ||
                            lat.order_lt(lat.tile(M.tiles[j]), lat.tile(M.tiles[i]))) {
                            ok = false;
                            wit = "n=" + std::to_string(n) + ",k=" + std::to_string(k);
                        }
                int mult = max_multiplicity(lat, data, M.tiles);
                cfit = std::max(cfit, mult / (std::ldexp(1.0, n) * std::log(n + 1.0)));
            }
        rep.add(make_rec("maximal-tiles-antichain",
                         "maximal qualifying tiles are pairwise incomparable", ok, 0, wit));
        rep.add(info_rec("maximal-tiles-counting",
                         "overlap of maximal-tile cubes against 2^n log(n+1)", cfit));
    }

    // densities
    {
        bool range_ok = true, mono_ok = true, heavy_ok = true;
        std::string wit;
        const int dimQ = quotient_dim(b.inst.cfg.ds, b.inst.cfg.d);
        for (int k = 0; k < forest.generations(); ++k) {
            DensityField f = compute_density(lat, data, forest, k);
            for (int tid : forest.P[k]) {
                if (f.dens[tid] < 0.0 || f.dens[tid] > std::ldexp(1.0, -dimQ) + 1e-12) {
                    range_ok = false;
                    wit = tile_str_id(lat, tid);
                }
            }
            std::vector<char> in(lat.tiles().size(), 0);
            for (int tid : forest.P[k]) in[tid] = 1;
            for (int tid : forest.P[k])
                for (int d2 : lat.tiles_of_cube(lat.tile(tid).cube))
                    (void)d2;
            for (int tid : forest.P[k]) {
                const Tile& p = lat.tile(tid);
                int a = lat.cubes().parent_id[p.cube];
                while (a >= 0) {
                    for (int tid2 : lat.tiles_of_cube(a)) {
                        if (!in[tid2]) continue;
                        if (lat.descend_center(a, lat.tile(tid2).center, p.cube) ==
                                p.center &&
                            f.dens[tid] < f.dens[tid2] - 1e-15) {
                            mono_ok = false;
                            wit = tile_str_id(lat, tid);
                        }
                    }
                    a = lat.cubes().parent_id[a];
                }
            }
            for (int n = 1; n <= forest.n_max; ++n) {
                auto H = heavy_tiles(lat, forest, f, n, b.inst.cfg.C0);
                std::vector<char> inH(lat.tiles().size(), 0);
                for (int tid : H) inH[tid] = 1;
                for (int tid : H) {
                    const Tile& p = lat.tile(tid);
                    // every tile below (within P_k) must be heavy as well
                    int a2 = lat.cubes().parent_id[p.cube];
                    (void)a2;
                    for (int d3 : forest.P[k]) {
                        if (lat.order_le(lat.tile(d3), p) && !inH[d3]) {
                            heavy_ok = false;
                            wit = tile_str_id(lat, d3);
                        }
                    }
                }
            }
        }
        rep.add(make_rec("density-range", "densities live in [0, 2^-dimQ]", range_ok));
        rep.add(make_rec("density-monotone", "density is monotone along the tile order",
                         mono_ok, 0, wit));
        rep.add(make_rec("heavy-down-set", "heavy tile sets are down subsets", heavy_ok, 0,
                         wit));
    }

    // decomposition integrity
    {
        auto violations = verify_decomposition(lat, data, forest, b.dec);
        std::string wit = violations.empty() ? "" : violations.front();
        bool part_ok = true, anti_ok = true, tree_ok = true, top_ok = true;
        for (const auto& v : violations) {
            if (v.rfind("partition:", 0) == 0) part_ok = false;
            if (v.rfind("antichain", 0) == 0) anti_ok = false;
            if (v.find("convexity") != std::string::npos) tree_ok = false;
            if (v.find("top condition") != std::string::npos) top_ok = false;
        }
        rep.add(make_rec("decomposition-partition",
                         "every tile lies in exactly one constituent", part_ok, 0, wit,
                         true));
        rep.add(make_rec("antichain-certified", "emitted antichains are antichains",
                         anti_ok, 0, wit, true));
        rep.add(make_rec("tree-convex", "emitted trees are convex", tree_ok, 0, wit, true));
        rep.add(make_rec("tree-top-condition",
                         "every tree member passes the dilated top test", top_ok, 0, wit,
                         true));
    }

    // forests: counting, cross-tree incomparability, separation
    {
        double cfit = 0.0;
        bool incomp_ok = true;
        bool sep_ok = true;
        double worst_delta = -1.0;
        std::string wit;
        for (const auto& fr : b.dec.forests) {
            std::vector<int> tops;
            for (int ti : fr.tree_indices) tops.push_back(b.dec.trees[ti].top.cube);
            std::vector<int> pseudo;
            for (int ti : fr.tree_indices) {
                // counting uses top cubes: reuse max_multiplicity via fake tiles
                pseudo.push_back(-1);
            }
            std::vector<int> cnt(data.samples.size(), 0);
            for (int cu : tops)
                for (int si : lat.samples_in_cube(cu)) ++cnt[si];
            int mult = *std::max_element(cnt.begin(), cnt.end());
            cfit = std::max(cfit,
                            mult / (std::ldexp(1.0, fr.n) * std::log(fr.n + 1.0)));
            const double delta_n =
                std::pow(b.inst.cfg.kappa_sep, std::ceil(b.inst.cfg.C_sep * fr.n)) * 9.0;
            for (size_t a = 0; a < fr.tree_indices.size(); ++a)
                for (size_t bb = a + 1; bb < fr.tree_indices.size(); ++bb) {
                    const Tree& t1 = b.dec.trees[fr.tree_indices[a]];
                    const Tree& t2 = b.dec.trees[fr.tree_indices[bb]];
                    for (int x : t1.members)
                        for (int y : t2.members)
                            if (lat.order_lt(lat.tile(x), lat.tile(y)) ||
                                lat.order_lt(lat.tile(y), lat.tile(x))) {
                                incomp_ok = false;
                                wit = tile_str_id(lat, x);
                            }
                    auto sr = separation_check(lat, t1, t2, delta_n);
                    if (!sr.ok) {
                        sep_ok = false;
                        worst_delta = sr.measured;
                    }
                }
        }
        rep.add(info_rec("forest-top-counting",
                         "overlap of forest top cubes against 2^n log(n+1)", cfit));
        rep.add(make_rec("forest-cross-tree-incomparable",
                         "tiles of distinct trees in a forest are incomparable", incomp_ok,
                         0, wit));
        rep.add(make_rec("forest-separation",
                         "trees within a forest are pairwise separated at the level bound",
                         sep_ok, worst_delta));
    }

    // rows and boundary parts
    {
        bool rows_ok = true;
        double rows_cfit = 0.0;
        bool bd_ok = true;
        std::string wit;
        for (const auto& fr : b.dec.forests) {
            std::vector<Tree> normals;
            for (int ti : fr.tree_indices) {
                const Tree& t = b.dec.trees[ti];
                auto [bd, nm] = boundary_split(lat, t);
                std::vector<char> inT(lat.tiles().size(), 0);
                for (int tid : t.members) inT[tid] = 1;
                for (int tid : bd) {
                    // boundary parts are up-sets within the tree
                    const Tile& p = lat.tile(tid);
                    for (int other : t.members)
                        if (lat.order_le(p, lat.tile(other))) {
                            bool other_bd =
                                std::find(bd.begin(), bd.end(), other) != bd.end();
                            if (!other_bd) {
                                bd_ok = false;
                                wit = tile_str_id(lat, other);
                            }
                        }
                }
                Tree nt = t;
                nt.members = nm;
                if (!nm.empty()) normals.push_back(std::move(nt));
            }
            auto rws = rows(lat, normals);
            rows_cfit = std::max(rows_cfit, rws.size() / (std::ldexp(1.0, fr.n) *
                                                          std::log(fr.n + 1.0)));
            for (const auto& row : rws)
                for (size_t a = 0; a < row.size(); ++a)
                    for (size_t bb = a + 1; bb < row.size(); ++bb)
                        if (lat.cubes()
                                .ibox(normals[row[a]].top.cube)
                                .intersects(lat.cubes().ibox(normals[row[bb]].top.cube))) {
                            rows_ok = false;
                            wit = "forest n=" + std::to_string(fr.n);
                        }
        }
        rep.add(make_rec("rows-disjoint-tops", "rows pack trees with disjoint top cubes",
                         rows_ok, 0, wit));
        rep.add(info_rec("rows-count", "row count against 2^n log(n+1)", rows_cfit));
        rep.add(make_rec("boundary-up-set", "boundary parts are up-sets in their tree",
                         bd_ok, 0, wit));
    }

    // selection diagnostics surfaced
    rep.add(info_rec("selection-diagnostics", "fallbacks recorded during selection",
                     double(b.dec.diagnostics.size()),
                     b.dec.diagnostics.empty() ? "" : b.dec.diagnostics.front()));
    return rep;
}

// ---------------------------------------------------------------------------
// Decay suite
// ---------------------------------------------------------------------------

LinFit linfit(std::span<const double> x, std::span<const double> y) {
    LinFit f;
    const size_t n = x.size();
    if (n < 2) return f;
    double mx = 0, my = 0;
    for (size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double cov = 0, var = 0;
    for (size_t i = 0; i < n; ++i) {
        cov += (x[i] - mx) * (y[i] - my);
        var += (x[i] - mx) * (x[i] - mx);
    }
    f.slope = var > 0 ? cov / var : 0.0;
    f.intercept = my - f.slope * mx;
    return f;
}

double adjoint_product_norm(const OperatorMatrix& A, const OperatorMatrix& B) {
    // power iteration on (A^H B)^H (A^H B)
    std::mt19937_64 rng(0xC0FFEEULL);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::vector<cplx> v(B.n);
    for (auto& x : v) x = cplx(uni(rng), uni(rng));
    double norm0 = 0.0;
    for (auto& x : v) norm0 += std::norm(x);
    norm0 = std::sqrt(norm0);
    for (auto& x : v) x /= norm0;
    double sigma = 0.0;
    for (int it = 0; it < 200; ++it) {
        auto w1 = B.apply(v);
        auto w2 = A.apply_adjoint(w1); // (A^H B) v
        double s = 0.0;
        for (auto& x : w2) s += std::norm(x);
        s = std::sqrt(s);
        auto w3 = A.apply(w2);
        auto w4 = B.apply_adjoint(w3);
        double zn = 0.0;
        for (auto& x : w4) zn += std::norm(x);
        zn = std::sqrt(zn);
        double diff = std::abs(s - sigma);
        sigma = s;
        if (zn == 0.0) return 0.0;
        for (size_t i = 0; i < v.size(); ++i) v[i] = w4[i] / zn;
        if (diff <= 1e-10 * std::max(1.0, sigma)) break;
    }
    return sigma;
}

OperatorMatrix masked(const OperatorMatrix& m, const std::vector<char>* rows_keep,
                      const std::vector<char>* cols_keep) {
    OperatorMatrix out = m;
    if (rows_keep) out.mask_rows(*rows_keep);
    if (cols_keep) out.mask_cols(*cols_keep);
    return out;
}

std::vector<Tree> make_random_trees(const TileLattice& lat, const LinearizingData& data,
                                    const StoppingForest& forest, int count,
                                    std::mt19937_64& rng) {
    std::vector<Tree> out;
    std::vector<int> top_candidates;
    for (size_t i = 0; i < lat.tiles().size(); ++i)
        if (lat.cubes().scale(lat.tile(static_cast<int>(i)).cube) > data.box.s_min)
            top_candidates.push_back(static_cast<int>(i));
    if (top_candidates.empty()) return out;
    std::uniform_int_distribution<int> u(0, static_cast<int>(top_candidates.size()) - 1);
    int guard = 0;
    while (static_cast<int>(out.size()) < count && ++guard < count * 40) {
        int top_id = top_candidates[u(rng)];
        const Tile top = lat.tile(top_id);
        const int k = forest.gen_of_tile[top_id];
        // half the trees avoid the bottom scale, where densities saturate
        const int min_scale = (guard % 2 == 0) ? data.box.s_min : data.box.s_min + 1;
        std::vector<int> members;
        for (int tid : forest.P[k]) {
            const Tile& q = lat.tile(tid);
            if (q.cube == top.cube) continue;
            if (lat.cubes().scale(q.cube) < min_scale) continue;
            if (!lat.cubes().contains(q.cube, top.cube)) continue;
            if (lat.ball_le(4.0, q, 4.0, top) == Cert::True) members.push_back(tid);
        }
        if (members.empty()) continue;
        // random thinning from below, then convexity closure by dropping
        std::shuffle(members.begin(), members.end(), rng);
        members.resize(std::max<size_t>(1, members.size() - members.size() / 3));
        std::sort(members.begin(), members.end());
        std::vector<char> inT(lat.tiles().size(), 0);
        for (int tid : members) inT[tid] = 1;
        bool changed = true;
        while (changed) {
            changed = false;
            for (size_t a = 0; a < members.size() && !changed; ++a) {
                if (!inT[members[a]]) continue;
                for (size_t bb = 0; bb < members.size() && !changed; ++bb) {
                    if (!inT[members[bb]]) continue;
                    const Tile &p1 = lat.tile(members[a]), &p2 = lat.tile(members[bb]);
                    if (!lat.order_lt(p1, p2)) continue;
                    int cube = lat.cubes().parent_id[p1.cube];
                    while (cube >= 0 && cube != p2.cube) {
                        int c = lat.descend_center(p2.cube, p2.center, cube);
                        int q = lat.tile_id({cube, c});
                        if (q >= 0 && forest.gen_of_tile[q] == k && !inT[q]) {
                            inT[members[a]] = 0;
                            changed = true;
                            break;
                        }
                        cube = lat.cubes().parent_id[cube];
                    }
                }
            }
        }
        Tree t;
        t.k = k;
        t.top = top;
        for (int tid : members)
            if (inT[tid]) t.members.push_back(tid);
        if (!t.members.empty()) out.push_back(std::move(t));
    }
    return out;
}

Report run_decay_suite(const BuiltInstance& b) {
    const TileLattice& lat = b.lattice;
    const LinearizingData& data = b.inst.data;
    Report rep;
    rep.suite = "decay";
    rep.seed = b.inst.seed;
    std::mt19937_64 rng(mix_seed(b.inst.seed, 11));

    Kernel K = Kernel::by_name(b.inst.cfg.kernel, b.inst.cfg.ds);
    PartitionOfUnity pou(b.inst.cfg.D);
    const int n = static_cast<int>(data.samples.size());

    // tiles with nonempty E drive every operator
    std::vector<int> active;
    for (size_t i = 0; i < lat.tiles().size(); ++i)
        if (!lat.compute_E(lat.tile(static_cast<int>(i)), data).empty())
            active.push_back(static_cast<int>(i));

    OperatorMatrix full = set_matrix(lat, data, K, pou, active, "full");
    double full_norm = op_norm(full, OpNormMethod::PowerIteration);
    rep.add(info_rec("op-norm-full", "norm of the full linearized operator", full_norm));

    // linearized operator agrees with the direct sum over scales
    {
        auto pv = phase_values(data);
        std::vector<cplx> direct(n, cplx(0, 0));
        std::vector<std::vector<double>> pts(n);
        for (int j = 0; j < n; ++j) pts[j] = data.sample_point(j);
        for (int i = 0; i < n; ++i) {
            const Sample& s = data.samples[i];
            cplx acc(0, 0);
            for (int sc = s.sigma_lo; sc <= s.sigma_hi; ++sc)
                for (int j = 0; j < n; ++j) {
                    double ks = kernel_slice(K, pou, sc, pts[i], pts[j]);
                    if (ks != 0.0)
                        acc += unit_phase(pv[s.phase][i] - pv[s.phase][j]) * ks *
                               b.inst.f[j] * data.cell_volume();
                }
            direct[i] = acc;
        }
        auto via_tiles = full.apply(b.inst.f);
        double err = 0.0;
        for (int i = 0; i < n; ++i) err = std::max(err, std::abs(direct[i] - via_tiles[i]));
        rep.add(make_rec("linearized-consistency",
                         "tile sum reproduces the truncated modulated operator", err <= 1e-9,
                         err));
    }

    // adjoint consistency on sampled tiles
    {
        double worst = 0.0;
        int tested = 0;
        for (size_t i = 0; i < active.size() && tested < 12; i += 3, ++tested) {
            const Tile& p = lat.tile(active[i]);
            auto m = tile_matrix(lat, data, K, pou, p);
            auto ad = m.adjoint();
            auto direct = tile_matrix_adjoint_direct(lat, data, K, pou, p);
            for (int r = 0; r < n; ++r)
                for (int c = 0; c < n; ++c)
                    worst = std::max(worst, std::abs(ad.at(r, c) - direct.at(r, c)));
        }
        rep.add(make_rec("adjoint-consistency",
                         "adjoint assembly matches the conjugate transpose", worst <= 1e-12,
                         worst));
    }

    // rows: exact mutual orthogonality (greedy rows, plus the singleton-row
    // decomposition whenever a forest carries more than one tree)
    {
        double worst = 0.0;
        bool any = false;
        for (const auto& fr : b.dec.forests) {
            std::vector<Tree> normals;
            for (int ti : fr.tree_indices) {
                const Tree& t = b.dec.trees[ti];
                auto [bd, nm] = boundary_split(lat, t);
                if (nm.empty()) continue;
                Tree nt = t;
                nt.members = nm;
                normals.push_back(std::move(nt));
            }
            if (normals.size() < 2) continue;
            std::vector<OperatorMatrix> tree_mats;
            for (const auto& t : normals)
                tree_mats.push_back(set_matrix(lat, data, K, pou, t.members, "tree"));
            for (size_t a2 = 0; a2 < tree_mats.size(); ++a2)
                for (size_t b2 = a2 + 1; b2 < tree_mats.size(); ++b2) {
                    any = true;
                    worst =
                        std::max(worst, adjoint_product_norm(tree_mats[a2], tree_mats[b2]));
                }
            auto rws = rows(lat, normals);
            if (rws.size() < 2) continue;
            std::vector<OperatorMatrix> mats;
            for (const auto& row : rws) {
                std::vector<int> ids;
                for (int ri : row)
                    ids.insert(ids.end(), normals[ri].members.begin(),
                               normals[ri].members.end());
                mats.push_back(set_matrix(lat, data, K, pou, ids, "row"));
            }
            for (size_t a2 = 0; a2 < mats.size(); ++a2)
                for (size_t b2 = a2 + 1; b2 < mats.size(); ++b2) {
                    any = true;
                    worst = std::max(worst, adjoint_product_norm(mats[a2], mats[b2]));
                }
        }
        CheckRecord r = make_rec("rows-orthogonal",
                                 "row operators of one forest annihilate each other",
                                 worst <= 1e-12, worst);
        if (!any) r.status = "skipped";
        rep.add(r);
    }

    // tree estimate: norm against density^(1/2)
    {
        auto trees = make_random_trees(lat, data, b.forest, 24, rng);
        std::vector<double> lx, ly;
        std::map<int, DensityField> dens_by_k;
        for (const auto& t : trees) {
            if (!dens_by_k.count(t.k))
                dens_by_k.emplace(t.k, compute_density(lat, data, b.forest, t.k));
            double dens = 0.0;
            for (int tid : t.members) dens = std::max(dens, dens_by_k[t.k].dens[tid]);
            if (dens <= 0.0) continue;
            auto m = set_matrix(lat, data, K, pou, t.members, "tree");
            double nm = op_norm(m, OpNormMethod::PowerIteration);
            if (nm <= 1e-14) continue;
            lx.push_back(std::log(dens));
            ly.push_back(std::log(nm));
        }
        if (lx.size() >= 8) {
            LinFit f = linfit(lx, ly);
            bool ok = f.slope >= 0.3 && f.slope <= 0.7;
            CheckRecord r = make_rec("tree-norm-vs-density",
                                     "tree operator norms scale like density^(1/2)", ok,
                                     f.slope);
            r.fitted = f.slope;
            rep.add(r);
        } else {
            CheckRecord r;
            r.id = "tree-norm-vs-density";
            r.claim = "tree operator norms scale like density^(1/2)";
            r.status = "skipped";
            r.witness = "too few usable random trees";
            rep.add(r);
        }
    }

    // antichain and boundary-part decay across levels
    {
        std::map<int, std::vector<int>> anti_by_n, bd_by_n;
        for (const auto& a : b.dec.antichains)
            anti_by_n[a.n].insert(anti_by_n[a.n].end(), a.tiles.begin(), a.tiles.end());
        for (const auto& t : b.dec.trees) {
            auto [bd, nm] = boundary_split(lat, t);
            if (!bd.empty())
                bd_by_n[t.n].insert(bd_by_n[t.n].end(), bd.begin(), bd.end());
        }
        auto fit_decay = [&](const std::map<int, std::vector<int>>& by_n,
                             const std::string& id, const std::string& claim) {
            std::vector<double> lx, ly;
            for (const auto& [lev, ids] : by_n) {
                if (ids.empty()) continue;
                auto m = set_matrix(lat, data, K, pou, ids, id);
                double nm = op_norm(m, OpNormMethod::PowerIteration);
                if (nm <= 1e-14) continue;
                lx.push_back(double(lev));
                ly.push_back(std::log2(nm));
            }
            if (lx.size() >= 3) {
                LinFit f = linfit(lx, ly);
                CheckRecord r = make_rec(id, claim, f.slope < 0.0, f.slope);
                r.fitted = f.slope;
                rep.add(r);
            } else {
                CheckRecord r;
                r.id = id;
                r.claim = claim;
                r.status = "skipped";
                r.witness = "fewer than three populated levels";
                rep.add(r);
            }
        };
        fit_decay(anti_by_n, "antichain-decay",
                  "antichain operator norms decay exponentially in the level");
        fit_decay(bd_by_n, "boundary-decay",
                  "boundary-part operator norms decay exponentially in the level");
    }

    // forest norms against 2^{-n/2}
    {
        std::vector<double> lx, ly;
        for (const auto& fr : b.dec.forests) {
            std::vector<int> ids;
            for (int ti : fr.tree_indices) {
                const Tree& t = b.dec.trees[ti];
                auto [bd, nm] = boundary_split(lat, t);
                ids.insert(ids.end(), nm.begin(), nm.end());
            }
            if (ids.empty()) continue;
            auto m = set_matrix(lat, data, K, pou, ids, "forest");
            double nm2 = op_norm(m, OpNormMethod::PowerIteration);
            if (nm2 <= 1e-14) continue;
            lx.push_back(double(fr.n));
            ly.push_back(std::log2(nm2));
        }
        if (lx.size() >= 3) {
            LinFit f = linfit(lx, ly);
            CheckRecord r = make_rec("forest-decay",
                                     "forest operator norms decay in the level", f.slope < 0,
                                     f.slope);
            r.fitted = f.slope;
            rep.add(r);
        } else {
            CheckRecord r;
            r.id = "forest-decay";
            r.claim = "forest operator norms decay in the level";
            r.status = "skipped";
            r.witness = "fewer than three populated forests";
            rep.add(r);
        }
    }

    // orthogonality across stopping generations
    {
        std::vector<double> lx, ly;
        for (int k = 0; k + 1 < b.forest.generations(); ++k) {
            auto trees = make_random_trees(lat, data, b.forest, 6, rng);
            for (const auto& t : trees) {
                if (t.k != k) continue;
                auto m = set_matrix(lat, data, K, pou, t.members, "tree");
                for (int k2 = k + 1; k2 < b.forest.generations(); ++k2) {
                    std::vector<char> keep(n, 0);
                    bool anyc = false;
                    for (int f2 : b.forest.F[k2])
                        for (int si : lat.samples_in_cube(f2)) {
                            keep[si] = 1;
                            anyc = true;
                        }
                    if (!anyc) continue;
                    auto mm = masked(m, nullptr, &keep);
                    double nm2 = op_norm(mm, OpNormMethod::PowerIteration);
                    if (nm2 <= 1e-14) continue;
                    lx.push_back(double(k2 - k));
                    ly.push_back(std::log(nm2));
                }
            }
        }
        if (lx.size() >= 3) {
            LinFit f = linfit(lx, ly);
            CheckRecord r = make_rec("generation-cut-decay",
                                     "tree operators shrink on later exceptional sets",
                                     f.slope < 0, f.slope);
            r.fitted = f.slope;
            rep.add(r);
        } else {
            CheckRecord r;
            r.id = "generation-cut-decay";
            r.claim = "tree operators shrink on later exceptional sets";
            r.status = "skipped";
            r.witness = "instance has a single populated generation pairing";
            rep.add(r);
        }
    }

    // localized sweeps
    auto sweep = [&](const std::vector<char>& set, bool mask_rows_side,
                     const std::string& id, const std::string& claim) {
        std::vector<double> lx, ly, norms;
        bool monotone = true;
        double prev = -1.0;
        for (int e = 1; e <= 4; ++e) {
            double nu = std::ldexp(1.0, -e);
            std::vector<double> ind(n, 0.0);
            for (int i = 0; i < n; ++i) ind[i] = set[i] ? 1.0 : 0.0;
            auto m1 = hl_maximal(data, ind);
            std::vector<char> tilde(n, 0);
            for (int i = 0; i < n; ++i) tilde[i] = m1[i] > nu ? 1 : 0;
            std::vector<char> keep_rows(n, 1), keep_cols(n, 1);
            if (mask_rows_side) {
                // 1_G T 1_{complement of tilde G}
                for (int i = 0; i < n; ++i) {
                    keep_rows[i] = set[i];
                    keep_cols[i] = !tilde[i];
                }
            } else {
                // 1_{complement of tilde F} T 1_F
                for (int i = 0; i < n; ++i) {
                    keep_rows[i] = !tilde[i];
                    keep_cols[i] = set[i];
                }
            }
            auto mm = masked(full, &keep_rows, &keep_cols);
            double nm2 = op_norm(mm, OpNormMethod::PowerIteration);
            norms.push_back(nm2);
            if (prev >= 0 && nm2 > prev + 1e-12) monotone = false;
            prev = nm2;
            lx.push_back(std::log(nu));
            ly.push_back(std::log(std::max(nm2, 1e-15)));
        }
        // norms are recorded for nu = 1/2 downward; decay means the norm
        // decreases as nu does, i.e. positive slope of log norm in log nu
        LinFit f = linfit(lx, ly);
        bool ok = monotone && f.slope >= 0.2;
        CheckRecord r = make_rec(id, claim, ok, f.slope);
        r.fitted = f.slope;
        std::ostringstream os;
        os << "norms";
        for (double v : norms) os << " " << v;
        r.witness = os.str();
        rep.add(r);
    };
    sweep(b.inst.G, true, "loc-sweep-g",
          "localized norms decay in the level-set parameter on the output side");
    sweep(b.inst.F, false, "loc-sweep-f",
          "localized norms decay in the level-set parameter on the input side");

    // sharp versus smooth truncations dominated by the maximal function
    {
        double cfit = 0.0;
        for (int trial = 0; trial < 10; ++trial) {
            auto f = random_grid_function(n, rng);
            auto sharp = maximal_operator_apply(data, K, pou, f, TruncationMode::Sharp);
            auto smooth = maximal_operator_apply(data, K, pou, f, TruncationMode::Smooth);
            std::vector<double> absf(n);
            for (int i = 0; i < n; ++i) absf[i] = std::abs(f[i]);
            auto mf = hl_maximal(data, absf);
            for (int i = 0; i < n; ++i) {
                if (mf[i] <= 1e-14) continue;
                cfit = std::max(cfit, std::abs(sharp[i] - smooth[i]) / mf[i]);
            }
        }
        rep.add(info_rec("sharp-smooth-hl",
                         "sharp and smooth truncations differ by a maximal-function term",
                         cfit));
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Appendix suite
// ---------------------------------------------------------------------------

Report run_appendix_suite(const BuiltInstance& b) {
    const LinearizingData& data = b.inst.data;
    Report rep;
    rep.suite = "appendix";
    rep.seed = b.inst.seed;
    std::mt19937_64 rng(mix_seed(b.inst.seed, 13));
    const int ds = b.inst.cfg.ds;
    const int d = b.inst.cfg.d;
    const int n = static_cast<int>(data.samples.size());

    RealBox J;
    J.lo.assign(ds, 0.0);
    J.hi.assign(ds, 1.0);

    auto ramp = [&](std::span<const double> x) -> cplx {
        double v = 1.0;
        for (int k = 0; k < ds; ++k) v *= (x[k] - J.lo[k]) / (J.hi[k] - J.lo[k]);
        return cplx(v, 0.0);
    };
    auto bump = [&](std::span<const double> x) -> cplx {
        double v = 1.0;
        for (int k = 0; k < ds; ++k) {
            double t = (x[k] - J.lo[k]) / (J.hi[k] - J.lo[k]);
            v *= (t <= 0 || t >= 1) ? 0.0 : std::exp(-1.0 / (t * (1.0 - t))) * 54.6;
        }
        return cplx(v, 0.0);
    };

    // zero-phase control of the oscillatory bound
    {
        double cfit = 0.0;
        PolyClass zero(ds, d);
        for (int trial = 0; trial < 100; ++trial) {
            double a = std::uniform_real_distribution<double>(0.2, 1.0)(rng);
            double c = std::uniform_real_distribution<double>(0.2, 1.0)(rng);
            auto psi = [&](std::span<const double> x) -> cplx {
                return a * ramp(x) + c * bump(x);
            };
            auto r = vdc_bound(psi, J, zero, 256);
            if (r.rhs > 0) cfit = std::max(cfit, r.lhs / r.rhs);
        }
        rep.add(make_rec("vdc-zero-phase",
                         "oscillatory bound controls the plain integral at zero phase",
                         cfit <= 10.0, cfit));
    }

    // delta sweep: single constant across levels and near-critical decay
    {
        double cfit = 0.0;
        std::vector<double> lx, ly;
        const auto& mis = MultiIndexSet::get(ds, d);
        for (double delta : {1.0, 4.0, 16.0, 64.0}) {
            double worst = 0.0;
            for (int trial = 0; trial < 100; ++trial) {
                PolyClass Q(ds, d);
                if (delta > 1.0) {
                    for (int j = 1; j < mis.size(); ++j) {
                        double coef =
                            std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
                        Q = Q + shifted_monomial(ds, d, mis.alphas[j], J.center()) * coef;
                    }
                    double nn = cube_norm(Q, J, NormMode::RigorousUpper);
                    if (nn <= 0) continue;
                    Q = Q * ((delta - 1.0) / nn);
                }
                double a = std::uniform_real_distribution<double>(0.2, 1.0)(rng);
                double c = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
                auto psi = [&](std::span<const double> x) -> cplx {
                    return a * ramp(x) + c * bump(x);
                };
                auto r = vdc_bound(psi, J, Q, 256);
                if (r.rhs > 0) worst = std::max(worst, r.lhs / r.rhs);
            }
            cfit = std::max(cfit, worst);
            // decay family: pure ramp with a linear phase of prescribed size
            PolyClass lin(ds, d);
            std::vector<int> e1(ds, 0);
            e1[0] = 1;
            lin = shifted_monomial(ds, d, e1, std::vector<double>(ds, 0.0));
            double nn = cube_norm(lin, J, NormMode::RigorousUpper);
            PolyClass Q = lin * ((delta - 1.0) / nn);
            auto r = vdc_bound(ramp, J, Q, 1024);
            lx.push_back(std::log(delta));
            ly.push_back(std::log(std::max(r.lhs, 1e-300)));
        }
        rep.add(make_rec("vdc-ratio-bound",
                         "a single constant bounds the oscillatory ratio across levels",
                         cfit <= 10.0, cfit));
        LinFit f = linfit(lx, ly);
        const double target = -double(1.0) / d; // tau/d with tau = 1
        bool ok = f.slope <= target / 3.0 && f.slope >= target * 3.0;
        CheckRecord r = make_rec("vdc-decay-family",
                                 "ramp-family decay matches the claimed exponent within 3x",
                                 ok, f.slope);
        r.fitted = f.slope;
        rep.add(r);
    }

    // extrapolation chain on a discrete measure space
    {
        const double w = data.cell_volume();
        std::vector<double> absg(n);
        for (int i = 0; i < n; ++i) absg[i] = std::abs(b.inst.g[i]);
        const double p = 1.5, q = 2.0;
        // chain G_0 = X, G_{m+1} = half of G_m holding the largest |g|
        std::vector<int> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](int a, int c) { return absg[a] > absg[c]; });
        std::vector<char> cur(n, 1);
        double A = 0.0;
        long long cur_count = n;
        while (cur_count > 0) {
            long long next_count = cur_count / 2;
            std::vector<char> next(n, 0);
            long long taken = 0;
            for (int idx : order) {
                if (!cur[idx]) continue;
                if (taken >= next_count) break;
                next[idx] = 1;
                ++taken;
            }
            std::vector<double> diffvals;
            for (int i = 0; i < n; ++i)
                if (cur[i] && !next[i]) diffvals.push_back(absg[i]);
            double wl = weak_lorentz_norm(diffvals, w, q);
            double mu = w * double(cur_count);
            A = std::max(A, wl / std::pow(mu, 1.0 / q - 1.0 / p));
            cur = std::move(next);
            cur_count = next_count;
        }
        double gnorm = weak_lorentz_norm(absg, w, p);
        double cfit = A > 0 ? gnorm / A : 0.0;
        rep.add(make_rec("extrapolation-chain",
                         "halving chains upgrade localized weak bounds to the global one",
                         cfit <= 10.0, cfit));
    }

    // localized maximal-function sweep
    {
        std::vector<double> ind(n, 0.0);
        for (int i = 0; i < n; ++i) ind[i] = b.inst.G[i] ? 1.0 : 0.0;
        auto m1 = hl_maximal(data, ind);
        std::vector<double> lx, ly;
        bool monotone = true;
        double prev = -1.0;
        std::vector<std::vector<cplx>> testers;
        for (int t = 0; t < 24; ++t) testers.push_back(random_grid_function(n, rng));
        for (int e = 1; e <= 4; ++e) {
            double nu = std::ldexp(1.0, -e);
            std::vector<char> tilde(n, 0);
            for (int i = 0; i < n; ++i) tilde[i] = m1[i] > nu ? 1 : 0;
            double best = 0.0;
            for (const auto& f : testers) {
                std::vector<cplx> masked_f(n, cplx(0, 0));
                for (int i = 0; i < n; ++i)
                    if (!tilde[i]) masked_f[i] = f[i];
                std::vector<double> absf(n);
                for (int i = 0; i < n; ++i) absf[i] = std::abs(masked_f[i]);
                auto mf = hl_maximal(data, absf);
                double num = 0.0, den = 0.0;
                for (int i = 0; i < n; ++i) {
                    if (b.inst.G[i]) num += mf[i] * mf[i];
                    den += std::norm(f[i]);
                }
                if (den > 0) best = std::max(best, std::sqrt(num / den));
            }
            if (prev >= 0 && best > prev + 1e-12) monotone = false;
            prev = best;
            lx.push_back(std::log(nu));
            ly.push_back(std::log(std::max(best, 1e-15)));
        }
        LinFit f = linfit(lx, ly);
        bool ok = monotone && f.slope >= 0.2;
        CheckRecord r = make_rec("m-loc-sweep",
                                 "localized maximal-function norms decay in the parameter",
                                 ok, f.slope);
        r.fitted = f.slope;
        rep.add(r);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Calibration
// ---------------------------------------------------------------------------

ParentGrowthResult parent_growth_check(int ds, int d, int D, double kappa_sep, int trials,
                                       uint64_t seed, int bernstein_levels) {
    ParentGrowthResult out;
    out.min_ratio = 1e300;
    std::mt19937_64 rng(mix_seed(seed, 17));
    NormOpts opts;
    opts.bernstein_levels = bernstein_levels;
    const auto& mis = MultiIndexSet::get(ds, d);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    std::uniform_int_distribution<int> pos(0, D - 1);
    for (int t = 0; t < trials; ++t) {
        // random child cube of the unit parent cube
        RealBox parent;
        parent.lo.assign(ds, 0.0);
        parent.hi.assign(ds, 1.0);
        RealBox child;
        child.lo.resize(ds);
        child.hi.resize(ds);
        for (int k = 0; k < ds; ++k) {
            int a = pos(rng);
            child.lo[k] = double(a) / D;
            child.hi[k] = double(a + 1) / D;
        }
        PolyClass Q(ds, d);
        bool zero = true;
        for (int j = 1; j < mis.size(); ++j) {
            double c = coef(rng);
            if (c != 0.0) zero = false;
            Q = Q + shifted_monomial(ds, d, mis.alphas[j], std::vector<double>(ds, 0.0)) * c;
        }
        if (zero) continue;
        double lo_parent = cube_norm(Q, parent, NormMode::RigorousLower, opts);
        double up_child = cube_norm(Q, child, NormMode::RigorousUpper, opts);
        if (up_child <= 0.0) continue;
        double ratio = lo_parent / up_child;
        out.min_ratio = std::min(out.min_ratio, ratio);
        if (ratio < kappa_sep * (1.0 - 1e-9)) ++out.violations;
    }
    return out;
}

int calibrate_D(int ds, int d, double kappa_sep, const std::vector<int>& candidates,
                int trials, uint64_t seed) {
    for (int D : candidates) {
        auto r = parent_growth_check(ds, d, D, kappa_sep, trials, seed);
        if (r.violations == 0) return D;
    }
    return -1;
}

// ---------------------------------------------------------------------------
// Fault injection
// ---------------------------------------------------------------------------

FaultOutcome inject_and_check(const BuiltInstance& b, Fault fault) {
    const TileLattice& lat = b.lattice;
    FaultOutcome out;
    Decomposition mutated = b.dec;

    if (fault == Fault::MoveTile) {
        // move a member into a tree whose top cube cannot dominate it
        for (size_t src = 0; src < mutated.trees.size(); ++src) {
            for (size_t dst = 0; dst < mutated.trees.size(); ++dst) {
                if (src == dst) continue;
                for (int tid : mutated.trees[src].members) {
                    if (!lat.cubes().contains(lat.tile(tid).cube,
                                              mutated.trees[dst].top.cube)) {
                        auto& sm = mutated.trees[src].members;
                        sm.erase(std::find(sm.begin(), sm.end(), tid));
                        mutated.trees[dst].members.push_back(tid);
                        auto v = verify_decomposition(lat, b.inst.data, b.forest, mutated);
                        out.caught = !v.empty();
                        if (!v.empty()) out.witness = v.front();
                        return out;
                    }
                }
            }
        }
        // fall back to duplicating a tile into a second constituent
        if (!mutated.trees.empty() && !mutated.trees[0].members.empty()) {
            int tid = mutated.trees[0].members[0];
            if (mutated.antichains.empty()) {
                Antichain a;
                a.n = 1;
                a.k = mutated.trees[0].k;
                a.origin = "fault";
                mutated.antichains.push_back(a);
            }
            mutated.antichains[0].tiles.push_back(tid);
            auto v = verify_decomposition(lat, b.inst.data, b.forest, mutated);
            out.caught = !v.empty();
            if (!v.empty()) out.witness = v.front();
            return out;
        }
        out.applicable = false;
        return out;
    }

    if (fault == Fault::BreakAntichain) {
        for (auto& a : mutated.antichains) {
            for (int tid : a.tiles) {
                const Tile& p = lat.tile(tid);
                if (lat.cubes().scale(p.cube) == b.inst.data.box.s_min) continue;
                for (int kid : lat.cubes().kids[p.cube]) {
                    int c = lat.descend_center(p.cube, p.center, kid);
                    int q = lat.tile_id({kid, c});
                    if (q >= 0) {
                        a.tiles.push_back(q);
                        auto v =
                            verify_decomposition(lat, b.inst.data, b.forest, mutated);
                        out.caught = !v.empty();
                        if (!v.empty()) out.witness = v.front();
                        return out;
                    }
                }
            }
        }
        out.applicable = false;
        return out;
    }

    // MergeRows: a corrupted row grouping must break top disjointness
    for (const auto& fr : b.dec.forests) {
        std::vector<Tree> normals;
        for (int ti : fr.tree_indices) {
            const Tree& t = b.dec.trees[ti];
            auto [bd, nm] = boundary_split(lat, t);
            if (nm.empty()) continue;
            Tree nt = t;
            nt.members = nm;
            normals.push_back(std::move(nt));
        }
        if (normals.empty()) continue;
        auto rws = rows(lat, normals);
        std::vector<int> merged = rws[0];
        if (rws.size() >= 2)
            merged.insert(merged.end(), rws[1].begin(), rws[1].end());
        else
            merged.push_back(rws[0][0]); // duplicate a tree into its own row
        for (size_t a = 0; a < merged.size(); ++a)
            for (size_t bb = a + 1; bb < merged.size(); ++bb)
                if (lat.cubes()
                        .ibox(normals[merged[a]].top.cube)
                        .intersects(lat.cubes().ibox(normals[merged[bb]].top.cube))) {
                    out.caught = true;
                    out.witness = "merged rows share overlapping tops (trees " +
                                  std::to_string(merged[a]) + "," +
                                  std::to_string(merged[bb]) + ")";
                    return out;
                }
        out.caught = false;
        return out;
    }
    out.applicable = false;
    return out;
}

} // namespace carleson
