#include "carleson/report_io.hpp"

#include <json.hpp>

#include <cstring>
#include <fstream>
#include <sstream>

namespace carleson {

using ojson = nlohmann::ordered_json;

namespace {

ojson config_json(const ExperimentConfig& c) {
    ojson j;
    j["ds"] = c.ds;
    j["d"] = c.d;
    j["D"] = c.D;
    j["s_min"] = c.s_min;
    j["s_max"] = c.s_max;
    j["subdiv"] = c.subdiv;
    j["kappa_sep"] = c.kappa_sep;
    j["delta_stop"] = c.delta_stop;
    j["C_count"] = c.C_count;
    j["C0"] = c.C0;
    j["C_sep"] = c.C_sep;
    j["sep"] = c.sep;
    j["phase_radius"] = c.phase_radius;
    j["net_margin"] = c.net_margin;
    j["lambda_margin"] = c.lambda_margin;
    j["bernstein_levels"] = c.bernstein_levels;
    j["phase_count"] = c.phase_count;
    j["scale_cap"] = c.scale_cap;
    j["kernel"] = c.kernel;
    j["preset"] = c.preset;
    j["seed"] = c.seed;
    j["suite_structure"] = c.suite_structure;
    j["suite_decay"] = c.suite_decay;
    j["suite_appendix"] = c.suite_appendix;
    return j;
}

} // namespace

std::string config_to_json(const ExperimentConfig& cfg) {
    return config_json(cfg).dump(2);
}

ExperimentConfig config_from_json(const std::string& text) {
    ojson j = ojson::parse(text);
    ExperimentConfig c;
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j[key].get<std::decay_t<decltype(field)>>();
    };
    get("ds", c.ds);
    get("d", c.d);
    get("D", c.D);
    get("s_min", c.s_min);
    get("s_max", c.s_max);
    get("subdiv", c.subdiv);
    get("kappa_sep", c.kappa_sep);
    get("delta_stop", c.delta_stop);
    get("C_count", c.C_count);
    get("C0", c.C0);
    get("C_sep", c.C_sep);
    get("sep", c.sep);
    get("phase_radius", c.phase_radius);
    get("net_margin", c.net_margin);
    get("lambda_margin", c.lambda_margin);
    get("bernstein_levels", c.bernstein_levels);
    get("phase_count", c.phase_count);
    get("scale_cap", c.scale_cap);
    get("kernel", c.kernel);
    get("preset", c.preset);
    get("seed", c.seed);
    get("suite_structure", c.suite_structure);
    get("suite_decay", c.suite_decay);
    get("suite_appendix", c.suite_appendix);
    return c;
}

std::string report_to_json(const Report& rep, const ExperimentConfig& cfg) {
    ojson j;
    j["schema"] = rep.schema;
    j["suite"] = rep.suite;
    j["seed"] = rep.seed;
    j["timestamp"] = rep.timestamp;
    j["config"] = config_json(cfg);
    ojson checks = ojson::array();
    for (const auto& c : rep.checks) {
        ojson r;
        r["id"] = c.id;
        r["claim"] = c.claim;
        r["status"] = c.status;
        r["hard"] = c.hard;
        r["measured"] = c.measured;
        r["fitted"] = c.fitted;
        r["witness"] = c.witness;
        checks.push_back(std::move(r));
    }
    j["checks"] = std::move(checks);
    j["hard_fail"] = rep.hard_fail();
    return j.dump(2);
}

std::string report_to_csv(const Report& rep) {
    std::ostringstream os;
    os << "id,claim,status,hard,measured,fitted,witness\n";
    auto esc = [](const std::string& s) {
        std::string r = "\"";
        for (char ch : s) {
            if (ch == '"') r += "\"\"";
            else r += ch;
        }
        return r + "\"";
    };
    for (const auto& c : rep.checks)
        os << c.id << "," << esc(c.claim) << "," << c.status << "," << (c.hard ? 1 : 0)
           << "," << c.measured << "," << c.fitted << "," << esc(c.witness) << "\n";
    return os.str();
}

std::string lattice_snapshot_json(const TileLattice& lat) {
    ojson j;
    j["schema"] = "carleson-lattice/1";
    const auto& box = lat.box();
    j["box"] = {{"ds", box.ds},   {"D", box.D},           {"s_min", box.s_min},
                {"s_max", box.s_max}, {"subdiv", box.subdiv}};
    ojson nets = ojson::array();
    for (int c = 0; c < lat.cubes().size(); ++c) {
        ojson nc;
        nc["cube"] = c;
        nc["scale"] = lat.cubes().scale(c);
        ojson centers = ojson::array();
        for (const auto& q : lat.net(c).centers) centers.push_back(q.coeffs());
        nc["centers"] = std::move(centers);
        nets.push_back(std::move(nc));
    }
    j["nets"] = std::move(nets);
    ojson tiles = ojson::array();
    for (const auto& t : lat.tiles()) tiles.push_back({t.cube, t.center});
    j["tiles"] = std::move(tiles);
    return j.dump();
}

std::string decomposition_json(const TileLattice& lat, const Decomposition& dec) {
    ojson j;
    j["schema"] = "carleson-decomposition/1";
    ojson trees = ojson::array();
    for (const auto& t : dec.trees) {
        ojson tj;
        tj["n"] = t.n;
        tj["k"] = t.k;
        tj["j"] = t.j;
        tj["l"] = t.l;
        tj["top"] = {t.top.cube, t.top.center};
        ojson ms = ojson::array();
        for (int tid : t.members) ms.push_back({lat.tile(tid).cube, lat.tile(tid).center});
        tj["members"] = std::move(ms);
        trees.push_back(std::move(tj));
    }
    j["trees"] = std::move(trees);
    ojson antis = ojson::array();
    for (const auto& a : dec.antichains) {
        ojson aj;
        aj["n"] = a.n;
        aj["k"] = a.k;
        aj["j"] = a.j;
        aj["id"] = a.id;
        aj["origin"] = a.origin;
        ojson ts = ojson::array();
        for (int tid : a.tiles) ts.push_back({lat.tile(tid).cube, lat.tile(tid).center});
        aj["tiles"] = std::move(ts);
        antis.push_back(std::move(aj));
    }
    j["antichains"] = std::move(antis);
    ojson res = ojson::array();
    for (int tid : dec.residual) res.push_back({lat.tile(tid).cube, lat.tile(tid).center});
    j["residual"] = std::move(res);
    j["diagnostics"] = dec.diagnostics;
    return j.dump();
}

void write_matrix_binary(const OperatorMatrix& m, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path);
    os.write("CARLMAT1", 8);
    uint32_t n = static_cast<uint32_t>(m.n);
    uint32_t plen = static_cast<uint32_t>(m.provenance.size());
    os.write(reinterpret_cast<const char*>(&n), 4);
    os.write(reinterpret_cast<const char*>(&plen), 4);
    os.write(m.provenance.data(), plen);
    os.write(reinterpret_cast<const char*>(m.a.data()),
             static_cast<std::streamsize>(m.a.size() * sizeof(cplx)));
}

OperatorMatrix read_matrix_binary(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path);
    char magic[8];
    is.read(magic, 8);
    if (std::memcmp(magic, "CARLMAT1", 8) != 0)
        throw std::runtime_error("bad matrix file magic");
    uint32_t n = 0, plen = 0;
    is.read(reinterpret_cast<char*>(&n), 4);
    is.read(reinterpret_cast<char*>(&plen), 4);
    std::string prov(plen, '\0');
    is.read(prov.data(), plen);
    OperatorMatrix m = OperatorMatrix::zero(static_cast<int>(n), prov);
    is.read(reinterpret_cast<char*>(m.a.data()),
            static_cast<std::streamsize>(m.a.size() * sizeof(cplx)));
    if (!is) throw std::runtime_error("truncated matrix file");
    return m;
}

std::string matrix_to_json(const OperatorMatrix& m) {
    ojson j;
    j["schema"] = "carleson-matrix/1";
    j["n"] = m.n;
    j["provenance"] = m.provenance;
    ojson rows = ojson::array();
    for (int i = 0; i < m.n; ++i) {
        ojson row = ojson::array();
        for (int c = 0; c < m.n; ++c) {
            row.push_back(m.at(i, c).real());
            row.push_back(m.at(i, c).imag());
        }
        rows.push_back(std::move(row));
    }
    j["entries"] = std::move(rows);
    return j.dump(); // minified
}

// ---------------------------------------------------------------------------
// SVG artifacts
// ---------------------------------------------------------------------------

namespace {

struct Range {
    double lo = 0, hi = 1;
    void feed(double v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
};

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

} // namespace

std::string curves_svg(const std::vector<Series>& series, const std::string& title,
                       const std::string& xlabel, const std::string& ylabel) {
    const int W = 640, H = 420, ML = 70, MR = 20, MT = 40, MB = 50;
    double xlo = 1e300, xhi = -1e300, ylo = 1e300, yhi = -1e300;
    for (const auto& s : series)
        for (auto [x, y] : s.second) {
            xlo = std::min(xlo, x);
            xhi = std::max(xhi, x);
            ylo = std::min(ylo, y);
            yhi = std::max(yhi, y);
        }
    if (xlo > xhi) {
        xlo = 0;
        xhi = 1;
        ylo = 0;
        yhi = 1;
    }
    if (xhi == xlo) xhi = xlo + 1;
    if (yhi == ylo) yhi = ylo + 1;
    auto px = [&](double x) { return ML + (x - xlo) / (xhi - xlo) * (W - ML - MR); };
    auto py = [&](double y) { return H - MB - (y - ylo) / (yhi - ylo) * (H - MT - MB); };
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
       << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
       << title << "</text>\n";
    os << "<line x1=\"" << ML << "\" y1=\"" << H - MB << "\" x2=\"" << W - MR << "\" y2=\""
       << H - MB << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << ML << "\" y1=\"" << MT << "\" x2=\"" << ML << "\" y2=\""
       << H - MB << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"" << H - 12
       << "\" text-anchor=\"middle\" font-size=\"12\">" << xlabel << "</text>\n";
    os << "<text x=\"16\" y=\"" << H / 2
       << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 " << H / 2
       << ")\">" << ylabel << "</text>\n";
    for (int t = 0; t <= 4; ++t) {
        double xv = xlo + (xhi - xlo) * t / 4, yv = ylo + (yhi - ylo) * t / 4;
        os << "<text x=\"" << px(xv) << "\" y=\"" << H - MB + 16
           << "\" text-anchor=\"middle\" font-size=\"10\">" << xv << "</text>\n";
        os << "<text x=\"" << ML - 8 << "\" y=\"" << py(yv) + 4
           << "\" text-anchor=\"end\" font-size=\"10\">" << yv << "</text>\n";
    }
    int ci = 0;
    for (const auto& s : series) {
        const char* col = kColors[ci % 6];
        os << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\"";
        for (auto [x, y] : s.second) os << px(x) << "," << py(y) << " ";
        os << "\"/>\n";
        for (auto [x, y] : s.second)
            os << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"2.5\" fill=\""
               << col << "\"/>\n";
        os << "<text x=\"" << W - MR - 6 << "\" y=\"" << MT + 16 + 14 * ci
           << "\" text-anchor=\"end\" font-size=\"11\" fill=\"" << col << "\">" << s.first
           << "</text>\n";
        ++ci;
    }
    os << "</svg>\n";
    return os.str();
}

std::string histogram_svg(const std::vector<double>& values, int bins,
                          const std::string& title) {
    std::vector<Series> dummy;
    if (values.empty() || bins < 1) return curves_svg(dummy, title, "", "");
    double lo = values[0], hi = values[0];
    for (double v : values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (hi == lo) hi = lo + 1;
    std::vector<int> count(bins, 0);
    for (double v : values) {
        int b = std::min(bins - 1, static_cast<int>((v - lo) / (hi - lo) * bins));
        ++count[b];
    }
    const int W = 640, H = 420, ML = 70, MR = 20, MT = 40, MB = 50;
    int cmax = *std::max_element(count.begin(), count.end());
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
       << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
       << title << "</text>\n";
    double bw = double(W - ML - MR) / bins;
    for (int b = 0; b < bins; ++b) {
        double h = cmax > 0 ? double(count[b]) / cmax * (H - MT - MB) : 0.0;
        os << "<rect x=\"" << ML + b * bw << "\" y=\"" << H - MB - h << "\" width=\""
           << bw * 0.92 << "\" height=\"" << h << "\" fill=\"#1f77b4\"/>\n";
    }
    os << "<line x1=\"" << ML << "\" y1=\"" << H - MB << "\" x2=\"" << W - MR << "\" y2=\""
       << H - MB << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << ML << "\" y=\"" << H - MB + 16 << "\" font-size=\"10\">" << lo
       << "</text>\n<text x=\"" << W - MR << "\" y=\"" << H - MB + 16
       << "\" text-anchor=\"end\" font-size=\"10\">" << hi << "</text>\n";
    os << "</svg>\n";
    return os.str();
}

} // namespace carleson
