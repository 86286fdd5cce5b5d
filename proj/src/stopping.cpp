#include "carleson/stopping.hpp"

#include <algorithm>
#include <cmath>

namespace carleson {

double ebar_ratio(const TileLattice& lat, const LinearizingData& data, const Tile& p) {
    auto eb = lat.compute_Ebar(p, data);
    return eb.size() * data.cell_volume() / lat.cubes().volume(p.cube);
}

int derive_n_max(const LinearizingData& data) {
    if (data.samples.size() < 2) return 1;
    return static_cast<int>(std::ceil(std::log2(double(data.samples.size())))) + 1;
}

namespace {

// <-maximal elements of a tile-id collection (exact, via the composed
// assignment maps of the lattice)
std::vector<int> maximal_filter(const TileLattice& lat, const std::vector<int>& ids) {
    std::vector<char> in(lat.tiles().size(), 0);
    for (int id : ids) in[id] = 1;
    const CubeIndex& idx = lat.cubes();
    std::vector<int> out;
    for (int id : ids) {
        const Tile& p = lat.tile(id);
        bool dominated = false;
        int anc = idx.parent_id[p.cube];
        while (anc >= 0 && !dominated) {
            for (int tid : lat.tiles_of_cube(anc)) {
                if (!in[tid]) continue;
                if (lat.descend_center(anc, lat.tile(tid).center, p.cube) == p.center) {
                    dominated = true;
                    break;
                }
            }
            anc = idx.parent_id[anc];
        }
        if (!dominated) out.push_back(id);
    }
    return out;
}

} // namespace

StoppingForest build_stopping_forest(const TileLattice& lat, const LinearizingData& data,
                                     const StoppingParams& params) {
    const CubeIndex& idx = lat.cubes();
    const int ncubes = idx.size();
    const int nsamples = static_cast<int>(data.samples.size());

    StoppingForest out;
    out.n_max = params.n_max > 0 ? params.n_max : derive_n_max(data);
    out.C_count_used = params.C_count;
    out.gen_of_cube.assign(ncubes, -1);

    std::vector<double> ratio(lat.tiles().size());
    for (size_t i = 0; i < lat.tiles().size(); ++i)
        ratio[i] = ebar_ratio(lat, data, lat.tile(i));

    std::vector<bool> cur(ncubes, true); // tilde C_0: every in-range cube
    std::vector<int> Fk;
    for (int c = 0; c < ncubes; ++c)
        if (idx.scale(c) == data.box.s_max) Fk.push_back(c);

    int k = 0;
    while (true) {
        out.F.push_back(Fk);
        out.tilde.push_back(cur);

        // <-maximal tiles over the current cube class, per density level n
        std::vector<std::vector<int>> Mn(out.n_max + 1);
        {
            std::vector<int> qual;
            for (int n = 1; n <= out.n_max; ++n) {
                qual.clear();
                const double thr = std::ldexp(1.0, -n);
                for (size_t i = 0; i < lat.tiles().size(); ++i)
                    if (cur[lat.tile(i).cube] && ratio[i] >= thr)
                        qual.push_back(static_cast<int>(i));
                Mn[n] = maximal_filter(lat, qual);
            }
        }

        // exceptional set per F: union over n of high-multiplicity points
        std::vector<bool> flagged(nsamples, false);
        std::vector<bool> next(ncubes, false);
        bool any = false;
        for (int f : Fk) {
            std::vector<bool> bf(nsamples, false);
            std::vector<int> cnt(nsamples);
            for (int n = 1; n <= out.n_max; ++n) {
                std::fill(cnt.begin(), cnt.end(), 0);
                for (int tid : Mn[n]) {
                    int tc = lat.tile(tid).cube;
                    if (!idx.contains(tc, f)) continue;
                    for (int si : lat.samples_in_cube(tc)) ++cnt[si];
                }
                const double thr =
                    params.C_count * std::ldexp(1.0, n) * std::log(double(n) + 1.0);
                for (int si = 0; si < nsamples; ++si)
                    if (cnt[si] >= thr) bf[si] = true;
            }
            // grid cubes inside the exceptional set
            for (int c = 0; c < ncubes; ++c) {
                if (!idx.contains(c, f)) continue;
                bool inside = true;
                for (int si : lat.samples_in_cube(c))
                    if (!bf[si]) {
                        inside = false;
                        break;
                    }
                if (inside && !lat.samples_in_cube(c).empty()) {
                    next[c] = true;
                    any = true;
                }
            }
        }

        if (any) {
            // minimal Whitney closure: I in class, I' inside 3I at a smaller
            // scale => I' in class
            std::vector<int> work;
            for (int c = 0; c < ncubes; ++c)
                if (next[c]) work.push_back(c);
            while (!work.empty()) {
                int c = work.back();
                work.pop_back();
                IBox tri = dilate(data.box, idx.cubes[c], 3);
                for (int s = data.box.s_min; s < idx.scale(c); ++s) {
                    for (const auto& gc : cubes_intersecting(data.box, tri, s)) {
                        if (!tri.contains(cube_ibox(data.box, gc))) continue;
                        int id2 = idx.id_of(gc);
                        if (id2 >= 0 && !next[id2]) {
                            next[id2] = true;
                            work.push_back(id2);
                        }
                    }
                }
            }
        }

        // close the generation: cubes leaving the class now get generation k
        for (int c = 0; c < ncubes; ++c)
            if (cur[c] && !next[c]) out.gen_of_cube[c] = k;

        if (!any) break;

        // next F: maximal cubes of the new class
        std::vector<int> Fn;
        for (int c = 0; c < ncubes; ++c) {
            if (!next[c]) continue;
            int par = idx.parent_id[c];
            bool top = true;
            while (par >= 0) {
                if (next[par]) {
                    top = false;
                    break;
                }
                par = idx.parent_id[par];
            }
            if (top) Fn.push_back(c);
        }

        // support decay per stopping parent
        for (int f : Fk) {
            double sum = 0.0;
            for (int f2 : Fn)
                if (idx.contains(f2, f)) sum += idx.volume(f2);
            double allowed = params.delta_stop * idx.volume(f);
            if (sum > allowed) throw SupportDecayError(k, f, sum, allowed);
        }
        // every new cube must be below some previous-generation cube
        for (int f2 : Fn) {
            bool ok = false;
            for (int f : Fk)
                if (idx.contains(f2, f)) {
                    ok = true;
                    break;
                }
            if (!ok) throw std::logic_error("stopping: orphan exceptional cube");
        }

        cur = std::move(next);
        Fk = std::move(Fn);
        ++k;
        if (k > 64) throw std::logic_error("stopping: generation loop failed to terminate");
    }

    // tile generations
    out.P.assign(out.generations(), {});
    out.gen_of_tile.assign(lat.tiles().size(), -1);
    for (size_t i = 0; i < lat.tiles().size(); ++i) {
        int g = out.gen_of_cube[lat.tile(i).cube];
        out.gen_of_tile[i] = g;
        out.P[g].push_back(static_cast<int>(i));
    }
    return out;
}

StoppingForest build_stopping_forest_calibrated(const TileLattice& lat,
                                                const LinearizingData& data,
                                                StoppingParams params) {
    while (true) {
        try {
            return build_stopping_forest(lat, data, params);
        } catch (const SupportDecayError&) {
            params.C_count *= 2.0;
            if (params.C_count > params.C_count_cap) throw;
        }
    }
}

MaximalTileSet maximal_tiles(const TileLattice& lat, const LinearizingData& data,
                             const StoppingForest& forest, int n, int k) {
    MaximalTileSet out;
    out.n = n;
    out.k = k;
    if (k >= forest.generations()) return out;
    const double thr = std::ldexp(1.0, -n);
    std::vector<int> qual;
    for (int tid : forest.P[k])
        if (ebar_ratio(lat, data, lat.tile(tid)) >= thr) qual.push_back(tid);
    out.tiles = maximal_filter(lat, qual);
    return out;
}

int counting_function(const TileLattice& lat, const std::vector<int>& tiles,
                      const std::vector<Ticks>& point) {
    int c = 0;
    for (int tid : tiles)
        if (lat.cubes().ibox(lat.tile(tid).cube).contains_point(point)) ++c;
    return c;
}

int max_multiplicity(const TileLattice& lat, const LinearizingData& data,
                     const std::vector<int>& tiles) {
    std::vector<int> cnt(data.samples.size(), 0);
    for (int tid : tiles)
        for (int si : lat.samples_in_cube(lat.tile(tid).cube)) ++cnt[si];
    int m = 0;
    for (int v : cnt) m = std::max(m, v);
    return m;
}

} // namespace carleson
