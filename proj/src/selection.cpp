#include "carleson/selection.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace carleson {

namespace {

// all cube ids strictly inside `cube`
void descendants_rec(const CubeIndex& idx, int cube, std::vector<int>& out) {
    for (int kid : idx.kids[cube]) {
        out.push_back(kid);
        descendants_rec(idx, kid, out);
    }
}

std::vector<int> descendant_cubes(const CubeIndex& idx, int cube) {
    std::vector<int> out;
    descendants_rec(idx, cube, out);
    return out;
}

// tiles of `set` strictly below p (exact order via descent)
std::vector<int> strictly_below(const TileLattice& lat, const std::vector<char>& in_set,
                                const Tile& p) {
    std::vector<int> out;
    for (int d : descendant_cubes(lat.cubes(), p.cube)) {
        int c = lat.descend_center(p.cube, p.center, d);
        int tid = lat.tile_id({d, c});
        if (tid >= 0 && in_set[tid]) out.push_back(tid);
    }
    return out;
}

// tiles of `set` strictly above p
std::vector<int> strictly_above(const TileLattice& lat, const std::vector<char>& in_set,
                                const Tile& p) {
    std::vector<int> out;
    int a = lat.cubes().parent_id[p.cube];
    while (a >= 0) {
        for (int tid : lat.tiles_of_cube(a)) {
            if (!in_set[tid]) continue;
            if (lat.descend_center(a, lat.tile(tid).center, p.cube) == p.center)
                out.push_back(tid);
        }
        a = lat.cubes().parent_id[a];
    }
    return out;
}

std::vector<char> mask_of(size_t n, const std::vector<int>& ids) {
    std::vector<char> m(n, 0);
    for (int id : ids) m[id] = 1;
    return m;
}

} // namespace

std::vector<int> mirsky_layers(const TileLattice& lat, const std::vector<int>& tiles) {
    std::vector<char> in = mask_of(lat.tiles().size(), tiles);
    // process small cubes first: tile ids are cube-major with the top cube
    // first, so descending id order visits ascending scales
    std::vector<int> order = tiles;
    std::sort(order.begin(), order.end(), std::greater<int>());
    std::vector<int> layer(lat.tiles().size(), -1);
    for (int tid : order) {
        int best = -1;
        for (int q : strictly_below(lat, in, lat.tile(tid)))
            best = std::max(best, layer[q]);
        layer[tid] = best + 1;
    }
    std::vector<int> result(tiles.size());
    for (size_t i = 0; i < tiles.size(); ++i) result[i] = layer[tiles[i]];
    return result;
}

DensityField compute_density(const TileLattice& lat, const LinearizingData& data,
                             const StoppingForest& forest, int k) {
    DensityField f;
    f.k = k;
    f.dens.assign(lat.tiles().size(), -1.0);
    if (k >= forest.generations()) return f;
    const auto& Pk = forest.P[k];
    const int ds = data.box.ds;
    const int deg = data.phases.empty() ? 1 : data.phases[0].degree();
    const int dimQ = quotient_dim(ds, deg);
    const double w = data.cell_volume();

    // sorted per-tile profiles of rigorous phase distances (samples in the
    // cube with the scale condition), so |E_dilated(lam)| is a binary search
    std::vector<std::vector<double>> profile(lat.tiles().size());
    for (int tid : Pk) {
        const Tile& p = lat.tile(tid);
        const int s = lat.cubes().scale(p.cube);
        auto& pr = profile[tid];
        for (int si : lat.samples_in_cube(p.cube)) {
            const Sample& x = data.samples[si];
            if (s > x.sigma_hi) continue;
            pr.push_back(lat.phase_center_dist_up(p.cube, x.phase, p.center));
        }
        std::sort(pr.begin(), pr.end());
    }

    std::vector<double> lambdas;
    for (int j = 4; j <= 4 * forest.n_max; ++j) lambdas.push_back(std::pow(2.0, j / 4.0));

    std::vector<char> inPk = mask_of(lat.tiles().size(), Pk);
    for (int tid : Pk) {
        const Tile& p = lat.tile(tid);
        double best = 0.0;
        int cube2 = p.cube;
        while (cube2 >= 0) {
            if (forest.gen_of_cube[cube2] == k) {
                for (int tid2 : lat.tiles_of_cube(cube2)) {
                    const Tile& q = lat.tile(tid2);
                    double lam_min;
                    if (tid2 == tid) {
                        lam_min = 0.0;
                    } else if (cube2 == p.cube) {
                        continue; // same-cube distinct centers never satisfy lam q >= lam p
                    } else {
                        auto [lo, up] = lat.center_diff_norm(p, q, p.cube);
                        (void)lo;
                        double rho = lat.transfer_bound(p.cube, cube2);
                        if (rho >= 1.0) continue;
                        lam_min = up / (1.0 - rho);
                    }
                    const double volq = lat.cubes().volume(q.cube);
                    for (double lam : lambdas) {
                        if (lam < lam_min) continue;
                        const auto& pr = profile[tid2];
                        auto cnt = std::upper_bound(pr.begin(), pr.end(), lam) - pr.begin();
                        if (cnt == 0) continue;
                        best = std::max(best, std::pow(lam, -dimQ) * double(cnt) * w / volq);
                    }
                }
            }
            cube2 = lat.cubes().parent_id[cube2];
        }
        f.dens[tid] = best;
    }

    // exact monotonicity pass: dens(p) >= dens(q) whenever p <= q in P_k
    std::vector<char> in = inPk;
    for (int tid : Pk) {
        double m = f.dens[tid];
        for (int q : strictly_above(lat, in, lat.tile(tid))) m = std::max(m, f.dens[q]);
        f.dens[tid] = m;
    }
    return f;
}

std::vector<int> heavy_tiles(const TileLattice& lat, const StoppingForest& forest,
                             const DensityField& dens, int n, double C0) {
    std::vector<int> out;
    if (dens.k >= forest.generations()) return out;
    const double thr = C0 * std::ldexp(1.0, -n);
    for (int tid : forest.P[dens.k])
        if (dens.dens[tid] > thr) out.push_back(tid);
    return out;
}

namespace {

struct AntichainSink {
    const TileLattice& lat;
    std::vector<Antichain>& out;
    int n, k;
    int next_id = 0;

    // emits `tiles` as certified antichains; Mirsky-splits when needed
    void emit(const std::vector<int>& tiles, int j, const std::string& origin,
              std::vector<std::string>* diags) {
        if (tiles.empty()) return;
        bool ok = true;
        for (size_t a = 0; a < tiles.size() && ok; ++a)
            for (size_t b = a + 1; b < tiles.size() && ok; ++b)
                if (lat.order_lt(lat.tile(tiles[a]), lat.tile(tiles[b])) ||
                    lat.order_lt(lat.tile(tiles[b]), lat.tile(tiles[a])))
                    ok = false;
        if (ok) {
            out.push_back({n, k, j, next_id++, origin, tiles});
            return;
        }
        if (diags)
            diags->push_back("antichain certification failed (origin=" + origin +
                             ", n=" + std::to_string(n) + ", k=" + std::to_string(k) +
                             "); split into layers");
        auto layers = mirsky_layers(lat, tiles);
        int height = *std::max_element(layers.begin(), layers.end()) + 1;
        for (int l = 0; l < height; ++l) {
            std::vector<int> part;
            for (size_t i = 0; i < tiles.size(); ++i)
                if (layers[i] == l) part.push_back(tiles[i]);
            out.push_back({n, k, j, next_id++, origin + "-layer", part});
        }
    }
};

} // namespace

ForestSelection select_forests(const TileLattice& lat, const LinearizingData& data,
                               const StoppingForest& forest, const DensityField& dens,
                               int n, int k, const SelectionParams& params) {
    ForestSelection sel;
    if (k >= forest.generations()) return sel;
    const size_t ntiles = lat.tiles().size();
    AntichainSink sink{lat, sel.antichains, n, k};

    std::vector<int> H = heavy_tiles(lat, forest, dens, n, params.C0);
    std::vector<char> inH = mask_of(ntiles, H);
    MaximalTileSet M = maximal_tiles(lat, data, forest, n, k);

    // tiles hanging below a dilated maximal tile
    std::vector<int> C;
    std::vector<char> inC(ntiles, 0);
    for (int tid : forest.P[k]) {
        const Tile& p = lat.tile(tid);
        for (int mid : M.tiles) {
            const Tile& m = lat.tile(mid);
            if (!lat.cubes().contains(p.cube, m.cube)) continue;
            if (lat.ball_le(2.0, p, 100.0, m, /*strict_cube=*/true) == Cert::True) {
                C.push_back(tid);
                inC[tid] = 1;
                break;
            }
        }
    }

    // the heavy remainder splits into layers (the proof bounds the height by n)
    {
        std::vector<int> rem;
        for (int tid : H)
            if (!inC[tid]) rem.push_back(tid);
        if (!rem.empty()) {
            auto layers = mirsky_layers(lat, rem);
            int height = *std::max_element(layers.begin(), layers.end()) + 1;
            if (height > n) {
                // reconstruct a witness chain by walking down the layer index
                std::vector<char> inRem = mask_of(ntiles, rem);
                std::vector<int> layer_of(ntiles, -1);
                for (size_t i = 0; i < rem.size(); ++i) layer_of[rem[i]] = layers[i];
                int cur = rem[std::max_element(layers.begin(), layers.end()) -
                              layers.begin()];
                std::string chain;
                while (cur >= 0) {
                    chain += " (" + std::to_string(lat.tile(cur).cube) + "," +
                             std::to_string(lat.tile(cur).center) + ")";
                    int next = -1;
                    for (int q : strictly_below(lat, inRem, lat.tile(cur)))
                        if (layer_of[q] == layer_of[cur] - 1) {
                            next = q;
                            break;
                        }
                    cur = next;
                }
                sel.diagnostics.push_back(
                    "remainder chain height " + std::to_string(height) + " exceeds n=" +
                    std::to_string(n) + " at k=" + std::to_string(k) + "; witness" + chain);
            }
            for (int l = 0; l < height; ++l) {
                std::vector<int> part;
                for (size_t i = 0; i < rem.size(); ++i)
                    if (layers[i] == l) part.push_back(rem[i]);
                sink.emit(part, -1, "residual-layer", &sel.diagnostics);
            }
        }
    }

    // partition C into classes by the dyadic size of B(p)
    std::map<int, std::vector<int>> classes;
    for (int tid : C) {
        const Tile& p = lat.tile(tid);
        int cnt = 0;
        for (int mid : M.tiles) {
            const Tile& m = lat.tile(mid);
            if (!lat.cubes().contains(p.cube, m.cube)) continue;
            if (lat.region_in_ball(100.0, p, m) == Cert::True) ++cnt;
        }
        if (cnt == 0) {
            sel.diagnostics.push_back("tile with empty dilated-maximal witness set at n=" +
                                      std::to_string(n) + ", k=" + std::to_string(k));
            sink.emit({tid}, -1, "bcount-zero", &sel.diagnostics);
            continue;
        }
        int j = 0;
        while ((2 << j) <= cnt) ++j; // 2^j <= cnt < 2^{j+1}
        classes[j].push_back(tid);
    }

    for (auto& [j, Cj] : classes) {
        std::vector<char> inCj = mask_of(ntiles, Cj);

        // top candidates: no strictly larger tile with meeting dilated regions
        std::vector<int> U;
        for (int uid : Cj) {
            const Tile& u = lat.tile(uid);
            bool blocked = false;
            for (int pid : Cj) {
                const Tile& p = lat.tile(pid);
                if (p.cube == u.cube || !lat.cubes().contains(u.cube, p.cube)) continue;
                if (lat.balls_intersect(100.0, u, 100.0, p) == Cert::True) {
                    blocked = true;
                    break;
                }
            }
            if (!blocked) U.push_back(uid);
        }

        // down sets hanging below each candidate
        std::map<int, std::vector<int>> D;
        std::vector<char> inAnyD(ntiles, 0);
        for (int uid : U) {
            const Tile& u = lat.tile(uid);
            std::vector<int> du;
            for (int pid : Cj) {
                if (lat.region_in_ball(2.0, lat.tile(pid), u, /*strict_cube=*/true) ==
                    Cert::True)
                    du.push_back(pid);
            }
            if (!du.empty()) {
                for (int pid : du) inAnyD[pid] = 1;
                D.emplace(uid, std::move(du));
            }
        }

        // leftover antichain
        {
            std::vector<int> aprime;
            for (int tid : Cj)
                if (!inAnyD[tid]) aprime.push_back(tid);
            sink.emit(aprime, j, "aprime", &sel.diagnostics);
        }

        // equivalence classes of candidates via witnessed links
        std::vector<int> Us;
        for (auto& [uid, du] : D) Us.push_back(uid);
        auto linked = [&](int a, int b) {
            for (int pid : D[a])
                if (lat.region_in_ball(10.0, lat.tile(pid), lat.tile(b)) == Cert::True)
                    return true;
            return false;
        };
        std::map<int, std::vector<char>> edge;
        for (int a : Us) {
            auto& row = edge[a];
            row.assign(Us.size(), 0);
            for (size_t bi = 0; bi < Us.size(); ++bi) row[bi] = linked(a, Us[bi]) ? 1 : 0;
        }
        // verify the relation behaves like an equivalence before using compone
        for (size_t ai = 0; ai < Us.size(); ++ai)
            for (size_t bi = 0; bi < Us.size(); ++bi) {
                if (!edge[Us[ai]][bi]) continue;
                if (!edge[Us[bi]][ai])
                    sel.diagnostics.push_back("link relation asymmetric at n=" +
                                              std::to_string(n) + ", k=" + std::to_string(k));
                for (size_t ci = 0; ci < Us.size(); ++ci)
                    if (edge[Us[bi]][ci] && !edge[Us[ai]][ci])
                        sel.diagnostics.push_back("link relation intransitive at n=" +
                                                  std::to_string(n) +
                                                  ", k=" + std::to_string(k));
            }
        // connected components of the symmetrized relation
        std::map<int, int> comp;
        int ncomp = 0;
        for (int a : Us) {
            if (comp.count(a)) continue;
            std::vector<int> stack{a};
            comp[a] = ncomp;
            while (!stack.empty()) {
                int x = stack.back();
                stack.pop_back();
                for (size_t bi = 0; bi < Us.size(); ++bi) {
                    int b = Us[bi];
                    if (comp.count(b)) continue;
                    size_t xi = std::find(Us.begin(), Us.end(), x) - Us.begin();
                    if (edge[x][bi] || edge[b][xi]) {
                        comp[b] = ncomp;
                        stack.push_back(b);
                    }
                }
            }
            ++ncomp;
        }

        // assemble trees per component, peel shared bottom layers
        std::vector<std::vector<int>> tree_tiles(ncomp);
        std::vector<Tile> tops(ncomp, Tile{});
        std::vector<int> top_ids(ncomp, -1);
        for (int a : Us) {
            int ci = comp[a];
            if (top_ids[ci] < 0 || lat.tile(a) < lat.tile(top_ids[ci])) {
                top_ids[ci] = a;
                tops[ci] = lat.tile(a);
            }
            for (int pid : D[a]) tree_tiles[ci].push_back(pid);
        }
        for (auto& tt : tree_tiles) {
            std::sort(tt.begin(), tt.end());
            tt.erase(std::unique(tt.begin(), tt.end()), tt.end());
        }

        std::vector<int> all;
        for (auto& tt : tree_tiles) all.insert(all.end(), tt.begin(), tt.end());
        std::vector<char> remaining = mask_of(ntiles, all);
        const int L = static_cast<int>(std::ceil(params.C_sep * n));
        for (int l = 1; l <= L; ++l) {
            std::vector<int> minimal;
            for (int tid : all) {
                if (!remaining[tid]) continue;
                if (strictly_below(lat, remaining, lat.tile(tid)).empty())
                    minimal.push_back(tid);
            }
            if (minimal.empty()) break;
            for (int tid : minimal) remaining[tid] = 0;
            sink.emit(minimal, j, "peel", &sel.diagnostics);
        }

        int l_index = 0;
        for (int ci = 0; ci < ncomp; ++ci) {
            std::vector<int> members;
            for (int tid : tree_tiles[ci])
                if (remaining[tid]) members.push_back(tid);
            if (members.empty()) continue;

            // exact convexity repair: spill lower endpoints of violations
            std::vector<int> spill;
            std::vector<char> inT = mask_of(ntiles, members);
            bool changed = true;
            while (changed) {
                changed = false;
                for (size_t a = 0; a < members.size() && !changed; ++a) {
                    if (!inT[members[a]]) continue;
                    const Tile& p1 = lat.tile(members[a]);
                    for (size_t b = 0; b < members.size() && !changed; ++b) {
                        if (!inT[members[b]]) continue;
                        const Tile& p2 = lat.tile(members[b]);
                        if (!lat.order_lt(p1, p2)) continue;
                        int cube = lat.cubes().parent_id[p1.cube];
                        while (cube >= 0 && cube != p2.cube && !changed) {
                            int c = lat.descend_center(p2.cube, p2.center, cube);
                            int q = lat.tile_id({cube, c});
                            if (q >= 0 && forest.gen_of_tile[q] == k && !inT[q]) {
                                inT[members[a]] = 0;
                                spill.push_back(members[a]);
                                changed = true;
                            }
                            cube = lat.cubes().parent_id[cube];
                        }
                    }
                }
            }
            std::vector<int> kept;
            for (int tid : members)
                if (inT[tid]) kept.push_back(tid);

            // certified top condition; otherwise the whole component is demoted
            bool top_ok = true;
            for (int tid : kept)
                if (lat.ball_le(4.0, lat.tile(tid), 4.0, tops[ci]) != Cert::True) {
                    top_ok = false;
                    break;
                }
            if (!spill.empty()) {
                sel.diagnostics.push_back("convexity repair spilled " +
                                          std::to_string(spill.size()) + " tiles at n=" +
                                          std::to_string(n) + ", k=" + std::to_string(k));
                sink.emit(spill, j, "convexity-spill", &sel.diagnostics);
            }
            if (!top_ok) {
                sel.diagnostics.push_back("top condition failed; tree demoted at n=" +
                                          std::to_string(n) + ", k=" + std::to_string(k));
                sink.emit(kept, j, "demoted-tree", &sel.diagnostics);
                continue;
            }
            if (!kept.empty()) {
                Tree t;
                t.n = n;
                t.k = k;
                t.j = j;
                t.l = l_index++;
                t.top = tops[ci];
                t.members = kept;
                sel.trees.push_back(std::move(t));
            }
        }
    }
    return sel;
}

Decomposition build_decomposition(const TileLattice& lat, const LinearizingData& data,
                                  const StoppingForest& forest,
                                  const SelectionParams& params) {
    Decomposition dec;
    // the density floor sits below the Ebar-ratio floor by the dilation
    // penalty and the heavy constant; extend the level range accordingly
    const int deg = data.phases.empty() ? 1 : data.phases[0].degree();
    const int dimQ = quotient_dim(data.box.ds, deg);
    dec.n_levels = forest.n_max + dimQ +
                   static_cast<int>(std::ceil(std::log2(std::max(1.0, params.C0)))) + 1;
    const size_t ntiles = lat.tiles().size();
    std::vector<int> claimed(ntiles, 0);

    for (int k = 0; k < forest.generations(); ++k) {
        DensityField dens = compute_density(lat, data, forest, k);
        std::vector<char> Hprev(ntiles, 0);
        std::vector<char> Hcur(ntiles, 0);
        for (int n = 1; n <= dec.n_levels; ++n) {
            auto H = heavy_tiles(lat, forest, dens, n, params.C0);
            std::fill(Hcur.begin(), Hcur.end(), 0);
            for (int tid : H) Hcur[tid] = 1;
            bool same = true;
            for (int tid : forest.P[k])
                if (Hcur[tid] != Hprev[tid]) {
                    same = false;
                    break;
                }
            if (same) continue; // nothing new at this level

            ForestSelection sel = select_forests(lat, data, forest, dens, n, k, params);
            for (auto& d : sel.diagnostics) dec.diagnostics.push_back(std::move(d));

            std::map<int, std::vector<int>> forest_groups;
            for (auto& t : sel.trees) {
                std::vector<int> members;
                for (int tid : t.members)
                    if (Hcur[tid] && !Hprev[tid]) members.push_back(tid);
                if (members.empty()) continue;
                Tree out = t;
                out.members = std::move(members);
                forest_groups[out.j].push_back(static_cast<int>(dec.trees.size()));
                for (int tid : out.members) ++claimed[tid];
                dec.trees.push_back(std::move(out));
            }
            for (auto& [j, idxs] : forest_groups)
                dec.forests.push_back({n, k, j, idxs});
            for (auto& a : sel.antichains) {
                std::vector<int> tiles;
                for (int tid : a.tiles)
                    if (Hcur[tid] && !Hprev[tid]) tiles.push_back(tid);
                if (tiles.empty()) continue;
                Antichain out = a;
                out.tiles = std::move(tiles);
                for (int tid : out.tiles) ++claimed[tid];
                dec.antichains.push_back(std::move(out));
            }
            Hprev = Hcur;
        }
        for (int tid : forest.P[k])
            if (!Hprev[tid]) {
                dec.residual.push_back(tid);
                ++claimed[tid];
            }
    }

    for (size_t tid = 0; tid < ntiles; ++tid)
        if (claimed[tid] != 1)
            throw std::logic_error("decomposition: tile (" +
                                   std::to_string(lat.tile(tid).cube) + "," +
                                   std::to_string(lat.tile(tid).center) + ") claimed " +
                                   std::to_string(claimed[tid]) + " times");
    return dec;
}

std::pair<std::vector<int>, std::vector<int>> boundary_split(const TileLattice& lat,
                                                             const Tree& tree) {
    std::vector<int> bd, normal;
    IBox top = lat.cubes().ibox(tree.top.cube);
    for (int tid : tree.members) {
        IBox dbl = dilate(lat.box(), lat.cubes().cubes[lat.tile(tid).cube], 2);
        if (top.contains(dbl))
            normal.push_back(tid);
        else
            bd.push_back(tid);
    }
    return {bd, normal};
}

std::vector<std::vector<int>> rows(const TileLattice& lat, const std::vector<Tree>& trees) {
    std::vector<int> order(trees.size());
    for (size_t i = 0; i < trees.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        double va = lat.cubes().volume(trees[a].top.cube);
        double vb = lat.cubes().volume(trees[b].top.cube);
        if (va != vb) return va > vb;
        return trees[a].top < trees[b].top;
    });
    std::vector<std::vector<int>> out;
    std::vector<char> used(trees.size(), 0);
    size_t remaining = trees.size();
    while (remaining > 0) {
        std::vector<int> row;
        std::vector<IBox> boxes;
        for (int i : order) {
            if (used[i]) continue;
            IBox b = lat.cubes().ibox(trees[i].top.cube);
            bool clash = false;
            for (const auto& o : boxes)
                if (b.intersects(o)) {
                    clash = true;
                    break;
                }
            if (clash) continue;
            row.push_back(i);
            boxes.push_back(std::move(b));
            used[i] = 1;
            --remaining;
        }
        out.push_back(std::move(row));
    }
    return out;
}

SeparationResult separation_check(const TileLattice& lat, const Tree& t1, const Tree& t2,
                                  double Delta) {
    SeparationResult r;
    auto clause = [&](const Tree& a, const Tree& b) {
        for (int tid : a.members) {
            const Tile& p = lat.tile(tid);
            if (!lat.cubes().contains(p.cube, b.top.cube)) continue;
            auto info = lat.diff_norm(lat.center(p), lat.center(b.top), p.cube);
            double delta_p = (info.attained_hi - info.attained_lo) + 1.0;
            if (!(delta_p > Delta)) {
                r.ok = false;
                r.witness = p;
                r.measured = delta_p;
                return;
            }
        }
    };
    clause(t1, t2);
    if (r.ok) clause(t2, t1);
    return r;
}

} // namespace carleson
