#include "chernbox/config.hpp"
#include "chernbox/ensemble.hpp"
#include "chernbox/localization.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace chernbox;
using fmtutil::csv_double;
using fmtutil::json_double;
using fmtutil::json_escape;

constexpr double kDecouplingTolerance = 1e-8;
constexpr double kHsTolerance = 1e-2;

int fail_config(const std::vector<std::string>& details) {
    std::string s = "{\"error\": {\"type\": \"config\", \"details\": [";
    for (std::size_t i = 0; i < details.size(); ++i) {
        if (i) s += ", ";
        s += "\"" + json_escape(details[i]) + "\"";
    }
    s += "]}}";
    std::cout << s << "\n";
    return 2;
}

int fail_runtime(const std::string& message) {
    std::cout << "{\"error\": {\"type\": \"runtime\", \"message\": \"" << json_escape(message)
              << "\"}}\n";
    return 1;
}

std::string resolve_outdir(const RunConfig& cfg) {
    if (!cfg.out.empty()) return cfg.out;
    if (const char* env = std::getenv("CHERNBOX_OUTDIR"); env && *env) return env;
    return ".";
}

std::string output_path(const RunConfig& cfg, const std::string& fallback_stem,
                        const std::string& ext) {
    const std::string dir = resolve_outdir(cfg);
    std::filesystem::create_directories(dir);
    const std::string stem = cfg.stem.empty() ? fallback_stem : cfg.stem;
    return dir + "/" + stem + ext;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    f << text;
    if (!f) throw std::runtime_error("short write to " + path);
}

// Single-realization index report through the ensemble machinery (N = 1).
IndexReport single_report(const RunConfig& cfg, bool with_marker) {
    EnsembleSpec spec;
    spec.delta = cfg.delta;
    spec.L = cfg.L;
    spec.eta = cfg.eta;
    spec.t = cfg.t;
    spec.a = cfg.a;
    spec.b = cfg.b;
    spec.window_fraction = cfg.f;
    spec.boundary_width = cfg.w;
    spec.edge_threshold = cfg.theta;
    spec.realizations = 1;
    spec.master_seed = cfg.master_seed.value_or(0);
    spec.compute_marker = with_marker;
    spec.compute_momentum_chern = with_marker;
    spec.momentum_grid = cfg.kgrid;
    spec.workers = 1;
    EnsembleResult res = run_ensemble(build_qwz_kernel(cfg.delta), spec);
    if (res.reports.at(0).failed) throw std::runtime_error(res.reports.at(0).error);
    return res.reports.at(0);
}

EnsembleSpec ensemble_spec(const RunConfig& cfg) {
    EnsembleSpec spec;
    spec.delta = cfg.delta;
    spec.L = cfg.L;
    spec.eta = cfg.eta;
    spec.t = cfg.t;
    spec.a = cfg.a;
    spec.b = cfg.b;
    spec.window_fraction = cfg.f;
    spec.boundary_width = cfg.w;
    spec.edge_threshold = cfg.theta;
    spec.realizations = cfg.N;
    spec.master_seed = cfg.master_seed.value_or(0);
    spec.compute_marker = true;
    spec.compute_momentum_chern = true;
    spec.momentum_grid = cfg.kgrid;
    spec.workers = cfg.workers;
    return spec;
}

std::string aggregates_json(const EnsembleResult& res) {
    std::string s = "{\"edge\": " + detail::json_mean(res.aggregates.edge);
    s += ", \"marker\": " + detail::json_mean(res.aggregates.marker);
    s += ", \"refined\": " + detail::json_mean(res.aggregates.refined) + "}";
    return s;
}

std::string momentum_chern_json(const EnsembleResult& res) {
    for (const IndexReport& rep : res.reports)
        if (!rep.failed && rep.momentum_chern) return std::to_string(*rep.momentum_chern);
    return "null";
}

int run_chern(const RunConfig& cfg, const std::vector<std::string>& keys) {
    const auto kernel = build_qwz_kernel(cfg.delta);
    const ChernResult res = chern_number_fhs(kernel, 0.0, cfg.kgrid);
    std::cout << "{\"chern\": " << res.chern << ", \"raw_sum\": " << json_double(res.raw_sum)
              << ", \"grid\": " << res.grid << ", \"gap_at_fermi\": " << json_double(res.gap_at_fermi)
              << ", \"config\": " << config_json(cfg, keys) << "}\n";
    return 0;
}

int run_band(const RunConfig& cfg, const std::vector<std::string>& keys) {
    const auto kernel = build_qwz_kernel(cfg.delta);
    std::ostringstream csv;
    csv << "k1,k2";
    for (int c = 1; c <= kernel.d; ++c) csv << ",lambda_" << c;
    csv << "\n";
    const int n = cfg.kgrid;
    for (int j1 = 0; j1 < n; ++j1)
        for (int j2 = 0; j2 < n; ++j2) {
            const double k1 = 2.0 * std::numbers::pi * j1 / n;
            const double k2 = 2.0 * std::numbers::pi * j2 / n;
            const auto bands = hermitian_eigenvalues(bloch_matrix(kernel, {k1, k2}).h);
            csv << csv_double(k1) << "," << csv_double(k2);
            for (int c = 0; c < kernel.d; ++c) csv << "," << csv_double(bands(c));
            csv << "\n";
        }
    const std::string path = output_path(cfg, "band", ".csv");
    write_text(path, csv.str());
    std::cout << "{\"path\": \"" << json_escape(path) << "\", \"rows\": " << n * n
              << ", \"config\": " << config_json(cfg, keys) << "}\n";
    return 0;
}

int run_gap(const RunConfig& cfg, const std::vector<std::string>& keys) {
    const auto kernel = build_qwz_kernel(cfg.delta);
    const GapResult res = verify_gap(kernel, cfg.lambda, std::max(cfg.kgrid, 8));
    std::cout << "{\"gapped\": " << (res.gapped ? "true" : "false")
              << ", \"width\": " << json_double(res.width) << ", \"grid_used\": " << res.grid_used
              << ", \"config\": " << config_json(cfg, keys) << "}\n";
    return 0;
}

int run_edge_index(const RunConfig& cfg, const std::vector<std::string>& keys, bool with_marker) {
    const IndexReport rep = single_report(cfg, with_marker);
    std::string body = "{\"report\": " + detail::json_report(rep);
    const std::string path = output_path(cfg, with_marker ? "marker" : "edge-index", ".json");
    body += ", \"path\": \"" + json_escape(path) + "\"";
    body += ", \"config\": " + config_json(cfg, keys) + "}";
    write_text(path, body + "\n");
    std::cout << body << "\n";
    return 0;
}

int run_ensemble_cmd(const RunConfig& cfg, const std::vector<std::string>& keys) {
    const EnsembleResult res = run_ensemble(build_qwz_kernel(cfg.delta), ensemble_spec(cfg));
    const std::string dir = resolve_outdir(cfg);
    std::filesystem::create_directories(dir);
    const std::string stem = dir + "/" + (cfg.stem.empty() ? "ensemble" : cfg.stem);
    persist(res, stem);
    std::cout << "{\"aggregates\": " << aggregates_json(res) << ", \"failures\": " << res.failures
              << ", \"n\": " << res.spec.realizations
              << ", \"momentum_chern\": " << momentum_chern_json(res)
              << ", \"wall_seconds\": " << json_double(res.wall_seconds) << ", \"path_json\": \""
              << json_escape(stem + ".json") << "\", \"path_csv\": \"" << json_escape(stem + ".csv")
              << "\", \"config\": " << config_json(cfg, keys) << "}\n";
    return 0;
}

int run_sweep(const RunConfig& cfg, const std::vector<std::string>& keys) {
    std::vector<std::string> errors;
    const std::vector<double> grid = parse_double_list("tgrid", cfg.tgrid, errors);
    if (!errors.empty()) return fail_config(errors);
    EnsembleSpec spec = ensemble_spec(cfg);
    spec.t = 0.0;
    const SweepResult sweep =
        deformation_sweep(build_qwz_kernel(cfg.delta), spec, grid, cfg.independent_omega);
    const std::string dir = resolve_outdir(cfg);
    std::filesystem::create_directories(dir);
    const std::string base = cfg.stem.empty() ? "sweep-t" : cfg.stem;
    std::string body = "{\"t_values\": [";
    std::string paths = "[";
    std::string aggs = "[";
    for (std::size_t j = 0; j < sweep.results.size(); ++j) {
        const std::string stem = dir + "/" + base + "_t" + std::to_string(j);
        persist(sweep.results[j], stem);
        if (j) {
            body += ", ";
            paths += ", ";
            aggs += ", ";
        }
        body += json_double(sweep.t_values[j]);
        paths += "\"" + json_escape(stem + ".json") + "\"";
        aggs += aggregates_json(sweep.results[j]);
    }
    body += "], \"aggregates\": " + aggs + "], \"paths\": " + paths + "]";
    body += ", \"config\": " + config_json(cfg, keys) + "}";
    write_text(dir + "/" + base + ".json", body + "\n");
    std::cout << body << "\n";
    return 0;
}

int run_green(const RunConfig& cfg, const std::vector<std::string>& keys) {
    const auto kernel = build_qwz_kernel(cfg.delta);
    const GreenSampleSet scan =
        fractional_moment_scan(kernel, cfg.L, cfg.t, cfg.eta, cfg.lambda, cfg.epsilon, cfg.s, cfg.N,
                               cfg.master_seed.value_or(0));
    std::ostringstream csv;
    csv << "r,mean,stderr\n";
    for (std::size_t i = 0; i < scan.distances.size(); ++i) {
        std::vector<double> column;
        column.reserve(scan.values.size());
        for (const auto& row : scan.values) column.push_back(row[i]);
        const MeanStderr m = mean_stderr(column);
        csv << scan.distances[i] << "," << csv_double(m.mean) << "," << csv_double(m.stderr_) << "\n";
    }
    const std::string path = output_path(cfg, "green", ".csv");
    write_text(path, csv.str());
    std::cout << "{\"alpha\": " << json_double(scan.alpha_fit) << ", \"c\": " << json_double(scan.c_fit)
              << ", \"r2\": " << json_double(scan.r2_fit) << ", \"realizations\": " << scan.realizations
              << ", \"failures\": " << scan.failures << ", \"path\": \"" << json_escape(path)
              << "\", \"config\": " << config_json(cfg, keys) << "}\n";
    return 0;
}

int run_lifshitz(const RunConfig& cfg, const std::vector<std::string>& keys) {
    std::vector<std::string> errors;
    const std::vector<int> L_list = parse_int_list("Llist", cfg.Llist, errors);
    if (!errors.empty()) return fail_config(errors);
    const auto kernel = build_qwz_kernel(cfg.delta);
    const LifshitzEstimate est =
        lifshitz_probe(kernel, L_list, cfg.beta, cfg.eta, cfg.N, cfg.master_seed.value_or(0));
    std::ostringstream csv;
    csv << "L,hits,p,ci_lo,ci_hi\n";
    for (std::size_t i = 0; i < est.L_list.size(); ++i)
        csv << est.L_list[i] << "," << est.hits[i] << "," << csv_double(est.p[i]) << ","
            << csv_double(est.ci[i].lo) << "," << csv_double(est.ci[i].hi) << "\n";
    const std::string path = output_path(cfg, "lifshitz", ".csv");
    write_text(path, csv.str());
    std::string body = "{\"L\": [";
    for (std::size_t i = 0; i < est.L_list.size(); ++i)
        body += (i ? ", " : "") + std::to_string(est.L_list[i]);
    body += "], \"p\": [";
    for (std::size_t i = 0; i < est.p.size(); ++i) body += (i ? ", " : "") + json_double(est.p[i]);
    body += "], \"slope\": " + json_double(est.slope);
    body += ", \"slope_min\": " + json_double(est.slope_min);
    body += ", \"slope_max\": " + json_double(est.slope_max);
    body += ", \"r2\": " + json_double(est.r2);
    body += ", \"path\": \"" + json_escape(path) + "\"";
    body += ", \"config\": " + config_json(cfg, keys) + "}";
    std::cout << body << "\n";
    return 0;
}

int run_decouple(const RunConfig& cfg, const std::vector<std::string>& keys) {
    const auto kernel = build_qwz_kernel(cfg.delta);
    const double residual = decoupling_residual(kernel, cfg.M, cfg.L, cplx(0.0, cfg.zim), cfg.eta,
                                                cfg.master_seed.value_or(0));
    std::cout << "{\"residual\": " << json_double(residual) << ", \"tolerance\": "
              << json_double(kDecouplingTolerance)
              << ", \"pass\": " << (residual <= kDecouplingTolerance ? "true" : "false")
              << ", \"config\": " << config_json(cfg, keys) << "}\n";
    return 0;
}

int run_hs_check(const RunConfig& cfg, const std::vector<std::string>& keys) {
    const int n = cfg.dim;
    SplitMix64 rng(cfg.master_seed.value_or(0));
    Matrix a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            a(i, j) = cplx(2.0 * rng.next_double() - 1.0, 2.0 * rng.next_double() - 1.0);
    Matrix h = 0.5 * (a + a.adjoint());
    const RealVector evals = hermitian_eigenvalues(h);
    const double radius = std::max(std::abs(evals(0)), std::abs(evals(n - 1)));
    if (radius > 0.0) h *= 3.0 / radius;
    const SwitchFunction rho(cfg.a, cfg.b);
    const double deviation = hs_validate(h, rho, cfg.order, cfg.step);
    std::cout << "{\"deviation\": " << json_double(deviation) << ", \"tolerance\": "
              << json_double(kHsTolerance)
              << ", \"pass\": " << (deviation <= kHsTolerance ? "true" : "false")
              << ", \"dim\": " << n << ", \"config\": " << config_json(cfg, keys) << "}\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    using namespace chernbox;
    RunConfig cfg;

    // The config file must be known before CLI flags are applied on top.
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--config" && i + 1 < argc) cfg.config = argv[i + 1];
        else if (arg.rfind("--config=", 0) == 0) cfg.config = arg.substr(9);
    }
    std::vector<std::string> config_errors;
    if (!cfg.config.empty()) {
        std::ifstream f(cfg.config, std::ios::binary);
        if (!f) return fail_config({"cannot read config file \"" + cfg.config + "\""});
        std::ostringstream text;
        text << f.rdbuf();
        const auto entries = parse_ini(text.str(), config_errors);
        apply_entries(cfg, entries, config_errors);
        if (!config_errors.empty()) return fail_config(config_errors);
    }

    CLI::App app{"chernbox: edge and bulk topological indices for finite disordered samples"};
    app.require_subcommand(1);
    std::string config_dummy;
    app.add_option("--config", config_dummy, "INI config file (key = value); flags override it")
        ->expected(1);

    std::string seed_text;
    const auto add_seed = [&](CLI::App* sub) {
        sub->add_option("--seed", seed_text,
                        "master seed for disorder sampling (required when sampling happens)");
    };

    auto* c_chern = app.add_subcommand("chern", "momentum-space Chern number of the clean model");
    c_chern->add_option("--delta", cfg.delta, "mass parameter of the two-band model");
    c_chern->add_option("--d", cfg.d, "internal dimension (2)");
    c_chern->add_option("--kgrid", cfg.kgrid, "Brillouin-zone grid size");

    auto* c_band = app.add_subcommand("band", "band energies over the Brillouin-zone grid (CSV)");
    c_band->add_option("--delta", cfg.delta, "mass parameter");
    c_band->add_option("--d", cfg.d, "internal dimension (2)");
    c_band->add_option("--kgrid", cfg.kgrid, "grid size");
    c_band->add_option("--out", cfg.out, "output directory");
    c_band->add_option("--stem", cfg.stem, "output file stem");

    auto* c_gap = app.add_subcommand("gap", "clean spectral gap around an energy");
    c_gap->add_option("--delta", cfg.delta, "mass parameter");
    c_gap->add_option("--d", cfg.d, "internal dimension (2)");
    c_gap->add_option("--kgrid", cfg.kgrid, "initial scan grid");
    c_gap->add_option("--lambda", cfg.lambda, "energy the gap is measured around");

    auto* c_edge = app.add_subcommand("edge-index", "edge index of one finite sample (JSON report)");
    auto* c_marker = app.add_subcommand("marker", "Chern marker and refined index of one sample");
    for (CLI::App* sub : {c_edge, c_marker}) {
        sub->add_option("--delta", cfg.delta, "mass parameter");
        sub->add_option("--d", cfg.d, "internal dimension (2)");
        sub->add_option("--L", cfg.L, "box half-width; sites span [-L, L]^2");
        sub->add_option("--bc", cfg.bc, "boundary conditions (simple)");
        sub->add_option("--t", cfg.t, "deformation parameter in [0, 1]");
        sub->add_option("--eta", cfg.eta, "disorder tail exponent");
        add_seed(sub);
        sub->add_option("--a", cfg.a, "lower switch endpoint");
        sub->add_option("--b", cfg.b, "upper switch endpoint");
        sub->add_option("--w", cfg.w, "boundary strip width for mode classification");
        sub->add_option("--theta", cfg.theta, "edge-mode boundary-weight threshold");
        sub->add_option("--out", cfg.out, "output directory");
        sub->add_option("--stem", cfg.stem, "output file stem");
    }
    c_marker->add_option("--f", cfg.f, "central window fraction");
    c_marker->add_option("--kgrid", cfg.kgrid, "grid for the momentum-space cross-check");

    auto* c_ens = app.add_subcommand("ensemble", "disorder ensemble of index reports (JSON + CSV)");
    auto* c_sweep = app.add_subcommand("sweep-t", "ensembles along a deformation grid in t");
    for (CLI::App* sub : {c_ens, c_sweep}) {
        sub->add_option("--delta", cfg.delta, "mass parameter");
        sub->add_option("--d", cfg.d, "internal dimension (2)");
        sub->add_option("--L", cfg.L, "box half-width");
        sub->add_option("--bc", cfg.bc, "boundary conditions (simple)");
        sub->add_option("--eta", cfg.eta, "disorder tail exponent");
        sub->add_option("--N", cfg.N, "number of realizations");
        add_seed(sub);
        sub->add_option("--a", cfg.a, "lower switch endpoint");
        sub->add_option("--b", cfg.b, "upper switch endpoint");
        sub->add_option("--f", cfg.f, "central window fraction");
        sub->add_option("--w", cfg.w, "boundary strip width");
        sub->add_option("--theta", cfg.theta, "edge-mode threshold");
        sub->add_option("--kgrid", cfg.kgrid, "momentum cross-check grid");
        sub->add_option("--workers", cfg.workers, "parallel workers");
        sub->add_option("--out", cfg.out, "output directory");
        sub->add_option("--stem", cfg.stem, "output file stem");
    }
    c_ens->add_option("--t", cfg.t, "deformation parameter");
    c_sweep->add_option("--tgrid", cfg.tgrid, "comma-separated t values");
    c_sweep->add_flag("--independent-omega", cfg.independent_omega,
                      "fresh disorder per t instead of a common field");

    auto* c_green = app.add_subcommand("green", "fractional-moment decay of the Green function");
    c_green->add_option("--delta", cfg.delta, "mass parameter");
    c_green->add_option("--d", cfg.d, "internal dimension (2)");
    c_green->add_option("--L", cfg.L, "box half-width");
    c_green->add_option("--t", cfg.t, "deformation parameter");
    c_green->add_option("--eta", cfg.eta, "disorder tail exponent");
    c_green->add_option("--N", cfg.N, "number of realizations");
    add_seed(c_green);
    c_green->add_option("--lambda", cfg.lambda, "probe energy");
    c_green->add_option("--epsilon", cfg.epsilon, "imaginary regularization");
    c_green->add_option("--s", cfg.s, "fractional power in (0, 1)");
    c_green->add_option("--out", cfg.out, "output directory");
    c_green->add_option("--stem", cfg.stem, "output file stem");

    auto* c_lif = app.add_subcommand("lifshitz", "shrinking-window hitting probability vs box size");
    c_lif->add_option("--delta", cfg.delta, "mass parameter");
    c_lif->add_option("--d", cfg.d, "internal dimension (2)");
    c_lif->add_option("--Llist", cfg.Llist, "comma-separated box sizes");
    c_lif->add_option("--beta", cfg.beta, "window shrink exponent");
    c_lif->add_option("--eta", cfg.eta, "disorder tail exponent");
    c_lif->add_option("--N", cfg.N, "realizations per size");
    add_seed(c_lif);
    c_lif->add_option("--out", cfg.out, "output directory");
    c_lif->add_option("--stem", cfg.stem, "output file stem");

    auto* c_dec = app.add_subcommand("decouple-check", "resolvent geometric-decoupling residual");
    c_dec->add_option("--delta", cfg.delta, "mass parameter");
    c_dec->add_option("--d", cfg.d, "internal dimension (2)");
    c_dec->add_option("--M", cfg.M, "ambient box half-width");
    c_dec->add_option("--L", cfg.L, "inner box half-width");
    c_dec->add_option("--zim", cfg.zim, "imaginary part of the resolvent energy");
    c_dec->add_option("--eta", cfg.eta, "disorder tail exponent");
    add_seed(c_dec);

    auto* c_hs = app.add_subcommand("hs-check", "contour-integral functional calculus cross-check");
    c_hs->add_option("--dim", cfg.dim, "test matrix dimension (<= 64)");
    c_hs->add_option("--a", cfg.a, "lower switch endpoint");
    c_hs->add_option("--b", cfg.b, "upper switch endpoint");
    c_hs->add_option("--order", cfg.order, "almost-analytic extension order");
    c_hs->add_option("--step", cfg.step, "quadrature grid step");
    add_seed(c_hs);

    for (CLI::App* sub : app.get_subcommands([](const CLI::App*) { return true; }))
        sub->add_option("--config", config_dummy, "INI config file (key = value); flags override it")
            ->expected(1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cout << "{\"error\": {\"type\": \"usage\", \"message\": \"" << json_escape(e.what())
                  << "\"}}\n";
        return 2;
    }

    if (!seed_text.empty()) {
        std::uint64_t seed = 0;
        if (!cfgdetail::parse_uint64(seed_text, seed))
            return fail_config({"invalid value for \"master_seed\": \"" + seed_text + "\""});
        cfg.master_seed = seed;
    }

    CLI::App* sub = app.get_subcommands().at(0);
    const std::string name = sub->get_name();

    static const std::map<std::string, std::vector<std::string>> key_table = {
        {"chern", {"config", "delta", "d", "kgrid"}},
        {"band", {"config", "delta", "d", "kgrid", "out", "stem"}},
        {"gap", {"config", "delta", "d", "kgrid", "lambda"}},
        {"edge-index",
         {"config", "delta", "d", "L", "bc", "t", "eta", "master_seed", "a", "b", "w", "theta", "out",
          "stem"}},
        {"marker",
         {"config", "delta", "d", "L", "bc", "t", "eta", "master_seed", "a", "b", "f", "w", "theta",
          "kgrid", "out", "stem"}},
        {"ensemble",
         {"config", "delta", "d", "L", "bc", "t", "eta", "N", "master_seed", "a", "b", "f", "w",
          "theta", "kgrid", "workers", "out", "stem"}},
        {"sweep-t",
         {"config", "delta", "d", "L", "bc", "tgrid", "independent_omega", "eta", "N", "master_seed",
          "a", "b", "f", "w", "theta", "kgrid", "workers", "out", "stem"}},
        {"green",
         {"config", "delta", "d", "L", "t", "eta", "N", "master_seed", "lambda", "epsilon", "s",
          "out", "stem"}},
        {"lifshitz",
         {"config", "delta", "d", "Llist", "beta", "eta", "N", "master_seed", "out", "stem"}},
        {"decouple-check", {"config", "delta", "d", "M", "L", "zim", "eta", "master_seed"}},
        {"hs-check", {"config", "dim", "a", "b", "order", "step", "master_seed"}},
    };
    const std::vector<std::string>& keys = key_table.at(name);

    std::vector<std::string> bad = validate_config(cfg, keys);
    const bool uses_bc =
        name == "edge-index" || name == "marker" || name == "ensemble" || name == "sweep-t";
    if (uses_bc && cfg.bc == "periodic")
        bad.push_back("bc: index subcommands need [H_L, x] = [H, x] on the box; use simple");
    bool needs_seed = name == "lifshitz" || name == "decouple-check" || name == "hs-check";
    if ((name == "edge-index" || name == "marker" || name == "ensemble" || name == "green") &&
        cfg.t > 0.0)
        needs_seed = true;
    if (name == "sweep-t") {
        std::vector<std::string> list_errors;
        for (double t : parse_double_list("tgrid", cfg.tgrid, list_errors))
            if (t > 0.0) needs_seed = true;
        bad.insert(bad.end(), list_errors.begin(), list_errors.end());
    }
    if (name == "lifshitz") {
        std::vector<std::string> list_errors;
        for (int L : parse_int_list("Llist", cfg.Llist, list_errors))
            if (L < 2) bad.push_back("Llist: every box size must be >= 2");
        bad.insert(bad.end(), list_errors.begin(), list_errors.end());
    }
    if (needs_seed && !cfg.master_seed)
        bad.push_back("master_seed: required for stochastic runs (pass --seed)");
    if (!bad.empty()) return fail_config(bad);

    try {
        if (name == "chern") return run_chern(cfg, keys);
        if (name == "band") return run_band(cfg, keys);
        if (name == "gap") return run_gap(cfg, keys);
        if (name == "edge-index") return run_edge_index(cfg, keys, false);
        if (name == "marker") return run_edge_index(cfg, keys, true);
        if (name == "ensemble") return run_ensemble_cmd(cfg, keys);
        if (name == "sweep-t") return run_sweep(cfg, keys);
        if (name == "green") return run_green(cfg, keys);
        if (name == "lifshitz") return run_lifshitz(cfg, keys);
        if (name == "decouple-check") return run_decouple(cfg, keys);
        if (name == "hs-check") return run_hs_check(cfg, keys);
    } catch (const std::exception& e) {
        return fail_runtime(e.what());
    }
    return fail_runtime("unknown subcommand " + name);
}
