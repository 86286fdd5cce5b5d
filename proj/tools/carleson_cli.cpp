#include "carleson/harness.hpp"
#include "carleson/report_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace carleson;

namespace {

ExperimentConfig load_config(const std::string& path) {
    ExperimentConfig cfg;
    if (!path.empty()) {
        std::ifstream is(path);
        if (!is) throw std::runtime_error("cannot open config " + path);
        std::stringstream ss;
        ss << is.rdbuf();
        cfg = config_from_json(ss.str());
    }
    if (const char* env = std::getenv("CARLESON_SEED")) cfg.seed = std::strtoull(env, nullptr, 10);
    cfg.validate();
    return cfg;
}

void write_file(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream os(path);
    os << content;
}

std::string now_string() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[64];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

int run_suites(const ExperimentConfig& cfg, const std::string& suite, int seeds,
               const std::string& outdir) {
    bool any_hard_fail = false;
    for (int s = 0; s < seeds; ++s) {
        uint64_t seed = cfg.seed + s;
        std::cout << "== seed " << seed << " ==\n";
        auto inst = generate_instance(cfg, seed);
        auto built = BuiltInstance::build(inst);
        std::vector<Report> reports;
        if ((suite == "structure" || suite == "all") && cfg.suite_structure)
            reports.push_back(run_structure_suite(built));
        if ((suite == "decay" || suite == "all") && cfg.suite_decay)
            reports.push_back(run_decay_suite(built));
        if ((suite == "appendix" || suite == "all") && cfg.suite_appendix)
            reports.push_back(run_appendix_suite(built));
        for (auto& rep : reports) {
            rep.timestamp = now_string();
            for (const auto& c : rep.checks)
                std::cout << "  [" << c.status << "] " << c.id
                          << (c.witness.empty() ? "" : "  (" + c.witness + ")") << "\n";
            if (rep.hard_fail()) any_hard_fail = true;
            if (!outdir.empty())
                write_file(fs::path(outdir) / (rep.suite + "-seed" + std::to_string(seed) +
                                               ".json"),
                           report_to_json(rep, cfg));
        }
    }
    return any_hard_fail ? 1 : 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"tile-decomposition laboratory for maximally modulated singular integrals"};
    app.require_subcommand(1);

    std::string config_path, outdir, suite = "all", report_in;
    int seeds = 1, trials = 1000;
    int ds = 1, d = 1;
    double kappa = 4.0;

    auto* cal = app.add_subcommand("calibrate", "choose D for the parent-growth factor");
    cal->add_option("--ds", ds);
    cal->add_option("--d", d);
    cal->add_option("--kappa", kappa);
    cal->add_option("--trials", trials);

    auto* build = app.add_subcommand("build", "build and snapshot lattice + decomposition");
    build->add_option("--config", config_path);
    build->add_option("--out", outdir)->required();

    auto* verify = app.add_subcommand("verify", "run the verification suites");
    verify->add_option("--config", config_path);
    verify->add_option("--suite", suite)
        ->check(CLI::IsMember({"structure", "decay", "appendix", "all"}));
    verify->add_option("--seeds", seeds);
    verify->add_option("--out", outdir);

    auto* bench = app.add_subcommand("bench", "time the pipeline stages");
    bench->add_option("--config", config_path);

    auto* report = app.add_subcommand("report", "convert a report JSON to CSV and SVG");
    report->add_option("--in", report_in)->required();
    report->add_option("--out", outdir)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (cal->parsed()) {
            std::vector<int> candidates{4, 8, 16, 32, 64};
            for (int D : candidates) {
                auto r = parent_growth_check(ds, d, D, kappa, trials, 1);
                std::cout << "D=" << D << "  violations=" << r.violations
                          << "  min_ratio=" << r.min_ratio << "\n";
            }
            int best = calibrate_D(ds, d, kappa, candidates, trials, 1);
            if (best < 0) {
                std::cout << "no candidate D satisfies kappa=" << kappa << "\n";
                return 1;
            }
            std::cout << "calibrated D=" << best << "\n";
            return 0;
        }
        if (build->parsed()) {
            ExperimentConfig cfg = load_config(config_path);
            auto inst = generate_instance(cfg, cfg.seed);
            auto built = BuiltInstance::build(inst);
            write_file(fs::path(outdir) / "lattice.json",
                       lattice_snapshot_json(built.lattice));
            write_file(fs::path(outdir) / "decomposition.json",
                       decomposition_json(built.lattice, built.dec));
            write_file(fs::path(outdir) / "config.json", config_to_json(cfg));
            std::cout << "tiles=" << built.lattice.tiles().size()
                      << " generations=" << built.forest.generations()
                      << " trees=" << built.dec.trees.size()
                      << " antichains=" << built.dec.antichains.size()
                      << " residual=" << built.dec.residual.size() << "\n";
            return 0;
        }
        if (verify->parsed()) {
            ExperimentConfig cfg = load_config(config_path);
            return run_suites(cfg, suite, seeds, outdir);
        }
        if (bench->parsed()) {
            ExperimentConfig cfg = load_config(config_path);
            auto t0 = std::chrono::steady_clock::now();
            auto inst = generate_instance(cfg, cfg.seed);
            auto t1 = std::chrono::steady_clock::now();
            auto lattice = TileLattice::build(inst.data, cfg.lattice_params());
            auto t2 = std::chrono::steady_clock::now();
            auto forest =
                build_stopping_forest_calibrated(lattice, inst.data, cfg.stopping_params());
            auto t3 = std::chrono::steady_clock::now();
            auto dec = build_decomposition(lattice, inst.data, forest,
                                           cfg.selection_params());
            auto t4 = std::chrono::steady_clock::now();
            auto ms = [](auto a, auto b) {
                return std::chrono::duration_cast<std::chrono::milliseconds>(b - a).count();
            };
            std::cout << "generate " << ms(t0, t1) << " ms\n"
                      << "lattice  " << ms(t1, t2) << " ms\n"
                      << "stopping " << ms(t2, t3) << " ms\n"
                      << "selection " << ms(t3, t4) << " ms\n"
                      << "tiles=" << lattice.tiles().size()
                      << " trees=" << dec.trees.size() << "\n";
            return 0;
        }
        if (report->parsed()) {
            std::ifstream is(report_in);
            if (!is) throw std::runtime_error("cannot open " + report_in);
            std::stringstream ss;
            ss << is.rdbuf();
            auto j = nlohmann::json::parse(ss.str());
            Report rep;
            rep.suite = j.value("suite", "unknown");
            rep.seed = j.value("seed", 0ull);
            for (const auto& c : j["checks"]) {
                CheckRecord r;
                r.id = c.value("id", "");
                r.claim = c.value("claim", "");
                r.status = c.value("status", "");
                r.hard = c.value("hard", false);
                r.measured = c.value("measured", 0.0);
                r.fitted = c.value("fitted", 0.0);
                r.witness = c.value("witness", "");
                rep.checks.push_back(std::move(r));
            }
            write_file(fs::path(outdir) / (rep.suite + ".csv"), report_to_csv(rep));
            // decay curves from sweep witnesses ("norms v1 v2 ...")
            std::vector<Series> series;
            for (const auto& c : rep.checks) {
                if (c.witness.rfind("norms", 0) != 0) continue;
                std::istringstream ws(c.witness.substr(5));
                std::vector<std::pair<double, double>> pts;
                double v;
                int e = 1;
                while (ws >> v) {
                    pts.push_back({-double(e), std::log2(std::max(v, 1e-15))});
                    ++e;
                }
                if (!pts.empty()) series.push_back({c.id, std::move(pts)});
            }
            if (!series.empty())
                write_file(fs::path(outdir) / (rep.suite + "-decay.svg"),
                           curves_svg(series, "localized norm decay", "log2 parameter",
                                      "log2 norm"));
            std::vector<double> measured;
            for (const auto& c : rep.checks)
                if (c.status == "info" || c.status == "pass") measured.push_back(c.measured);
            write_file(fs::path(outdir) / (rep.suite + "-measured.svg"),
                       histogram_svg(measured, 16, "measured check values"));
            std::cout << "wrote artifacts to " << outdir << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
