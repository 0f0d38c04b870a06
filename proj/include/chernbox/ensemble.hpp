#pragma once

#include "chernbox/bloch.hpp"
#include "chernbox/format.hpp"
#include "chernbox/indices.hpp"
#include "chernbox/lattice.hpp"
#include "chernbox/rng.hpp"
#include "chernbox/spectral.hpp"
#include "chernbox/stats.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace chernbox {

struct EnsembleSpec {
    double delta = 1.0;  // QWZ mass parameter used by the convenience overloads
    int L = 12;
    double eta = 6.0;
    double t = 0.0;
    double a = -0.4;
    double b = 0.4;
    double window_fraction = 0.5;
    int boundary_width = 2;
    double edge_threshold = 0.5;
    int realizations = 8;
    std::uint64_t master_seed = 1;
    bool compute_marker = true;
    bool compute_momentum_chern = true;
    int momentum_grid = 24;
    int workers = 1;
};

inline void validate_spec(const EnsembleSpec& spec) {
    std::vector<std::string> bad;
    if (spec.L < 2) bad.push_back("L >= 2");
    if (!(spec.eta > 0.0)) bad.push_back("eta > 0");
    if (!(spec.t >= 0.0 && spec.t <= 1.0)) bad.push_back("t in [0, 1]");
    if (!(spec.a < spec.b)) bad.push_back("a < b");
    if (!(spec.window_fraction > 0.0 && spec.window_fraction <= 1.0))
        bad.push_back("window_fraction in (0, 1]");
    if (spec.boundary_width < 1) bad.push_back("boundary_width >= 1");
    if (!(spec.edge_threshold > 0.0 && spec.edge_threshold < 1.0))
        bad.push_back("edge_threshold in (0, 1)");
    if (spec.realizations < 1) bad.push_back("realizations >= 1");
    if (spec.momentum_grid < 4) bad.push_back("momentum_grid >= 4");
    if (spec.workers < 1) bad.push_back("workers >= 1");
    if (!bad.empty()) {
        std::string msg = "ensemble spec invalid:";
        for (const std::string& b : bad) msg += " [" + b + "]";
        throw std::invalid_argument(msg);
    }
}

struct EnsembleAggregates {
    MeanStderr edge;
    MeanStderr marker;
    MeanStderr refined;
};

// Aggregates over non-failed rows in realization order; pairwise summation in
// that fixed order makes the result bit-reproducible from the stored rows.
inline EnsembleAggregates aggregate_reports(const std::vector<IndexReport>& reports) {
    std::vector<double> e, m, r;
    for (const IndexReport& rep : reports) {
        if (rep.failed) continue;
        e.push_back(rep.edge_index);
        if (rep.chern_marker) m.push_back(*rep.chern_marker);
        if (rep.refined_bulk_index) r.push_back(*rep.refined_bulk_index);
    }
    return {mean_stderr(e), mean_stderr(m), mean_stderr(r)};
}

struct EnsembleResult {
    EnsembleSpec spec;
    std::vector<IndexReport> reports;
    int failures = 0;
    EnsembleAggregates aggregates;
    double wall_seconds = 0.0;
};

namespace detail {

// LAPACK drivers share one global lock; everything else (assembly, Eigen
// products, classification) runs concurrently across realizations.
inline std::mutex& lapack_mutex() {
    static std::mutex m;
    return m;
}

inline IndexReport compute_report(const HoppingKernel& kernel, const EnsembleSpec& spec, int i) {
    IndexReport rep;
    rep.L = spec.L;
    rep.t = spec.t;
    rep.eta = spec.eta;
    rep.master_seed = spec.master_seed;
    rep.realization_index = static_cast<std::uint64_t>(i);
    rep.seed = derive_seed(spec.master_seed, static_cast<std::uint64_t>(i));
    try {
        const DisorderField field = sample_disorder(spec.L, kernel.d, spec.eta, spec.t,
                                                    spec.master_seed, rep.realization_index);
        const BoxHamiltonian h =
            assemble_hamiltonian(kernel, &field, BoundaryCondition::simple(), spec.L);
        const SwitchFunction rho(spec.a, spec.b);
        SpectralSlice slice;
        {
            std::lock_guard<std::mutex> guard(lapack_mutex());
            const double lo = spec.compute_marker ? spectrum_floor(h.matrix) - 1.0 : spec.a;
            slice = eig_slice(h.matrix, lo, spec.b);
        }
        const EdgeIndexValue ev = edge_index(h, slice, rho);
        rep.edge_index = ev.value;
        rep.edge_index_imag_residual = ev.imag_residual;
        rep.ingap_modes = ingap_mode_records(h, slice.eigenvalues, slice.eigenvectors, spec.a,
                                             spec.b, spec.boundary_width, spec.edge_threshold);
        if (spec.compute_marker) {
            const double fermi = 0.5 * (spec.a + spec.b);
            const int occ = occupied_count(slice.eigenvalues, fermi);
            rep.chern_marker = chern_marker_occupied(slice.eigenvectors.leftCols(occ), h.geom,
                                                     spec.window_fraction);
            rep.refined_correction = refined_correction(h, slice.eigenvectors, rho,
                                                        rep.ingap_modes, spec.window_fraction);
            rep.refined_bulk_index = *rep.chern_marker + *rep.refined_correction;
        }
    } catch (const std::exception& e) {
        rep.failed = true;
        rep.error = e.what();
    }
    return rep;
}

} // namespace detail

inline EnsembleResult run_ensemble(const HoppingKernel& kernel, const EnsembleSpec& spec) {
    validate_spec(spec);
    const auto t0 = std::chrono::steady_clock::now();
    EnsembleResult out;
    out.spec = spec;
    const int n = spec.realizations;
    out.reports.resize(n);
    if (spec.t == 0.0) {
        // Disorder enters scaled by t, so every realization shares one
        // Hamiltonian; compute once, replicate the physics, keep per-row seeds.
        out.reports[0] = detail::compute_report(kernel, spec, 0);
        for (int i = 1; i < n; ++i) {
            out.reports[i] = out.reports[0];
            out.reports[i].realization_index = static_cast<std::uint64_t>(i);
            out.reports[i].seed = derive_seed(spec.master_seed, static_cast<std::uint64_t>(i));
        }
    } else if (spec.workers == 1 || n == 1) {
        for (int i = 0; i < n; ++i) out.reports[i] = detail::compute_report(kernel, spec, i);
    } else {
        std::atomic<int> next{0};
        auto work = [&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1))
                out.reports[i] = detail::compute_report(kernel, spec, i);
        };
        std::vector<std::thread> pool;
        const int count = std::min(spec.workers, n);
        pool.reserve(count);
        for (int w = 0; w < count; ++w) pool.emplace_back(work);
        for (std::thread& th : pool) th.join();
    }
    if (spec.compute_momentum_chern) {
        const int chern = chern_number_fhs(kernel, 0.5 * (spec.a + spec.b), spec.momentum_grid).chern;
        for (IndexReport& rep : out.reports)
            if (!rep.failed) rep.momentum_chern = chern;
    }
    for (const IndexReport& rep : out.reports) out.failures += rep.failed ? 1 : 0;
    if (20 * out.failures > n) {
        std::string first;
        for (const IndexReport& rep : out.reports)
            if (rep.failed) { first = rep.error; break; }
        throw std::runtime_error("run_ensemble: " + std::to_string(out.failures) + "/" +
                                 std::to_string(n) + " realizations failed (budget 5%): " + first);
    }
    out.aggregates = aggregate_reports(out.reports);
    out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

inline EnsembleResult run_ensemble(const EnsembleSpec& spec) {
    return run_ensemble(build_qwz_kernel(spec.delta), spec);
}

struct SweepResult {
    std::vector<double> t_values;
    std::vector<EnsembleResult> results;
};

// Sweep over the deformation parameter with the disorder field held fixed
// across t (omega depends only on the master seed and realization index, so
// reusing the master seed realizes the common-coupling path). Independent
// omega per t is available behind the flag; its per-t master seeds derive
// from stream indices at an offset of 2^32 so they never collide with
// realization substreams.
inline SweepResult deformation_sweep(const HoppingKernel& kernel, EnsembleSpec spec,
                                     const std::vector<double>& t_grid,
                                     bool independent_omega = false) {
    if (t_grid.empty()) throw std::invalid_argument("deformation_sweep: empty t grid");
    for (double t : t_grid)
        if (!(t >= 0.0 && t <= 1.0))
            throw std::invalid_argument("deformation_sweep: t grid must lie in [0, 1]");
    bool has_zero = false;
    for (double t : t_grid) has_zero = has_zero || t == 0.0;
    if (has_zero) {
        const double mid = 0.5 * (spec.a + spec.b);
        const GapResult gap = verify_gap(kernel, mid, 16);
        if (!gap.gapped || gap.width <= std::max(spec.b - mid, mid - spec.a))
            throw std::invalid_argument(
                "deformation_sweep: (a, b) must lie strictly inside the verified clean gap");
    }
    const std::uint64_t master0 = spec.master_seed;
    SweepResult out;
    for (std::size_t j = 0; j < t_grid.size(); ++j) {
        spec.t = t_grid[j];
        spec.master_seed =
            independent_omega ? derive_seed(master0, (std::uint64_t{1} << 32) + j) : master0;
        out.t_values.push_back(t_grid[j]);
        out.results.push_back(run_ensemble(kernel, spec));
    }
    return out;
}

inline SweepResult deformation_sweep(const EnsembleSpec& spec, const std::vector<double>& t_grid,
                                     bool independent_omega = false) {
    return deformation_sweep(build_qwz_kernel(spec.delta), spec, t_grid, independent_omega);
}

// ---- serialization ----------------------------------------------------------

namespace detail {

using fmtutil::csv_double;
using fmtutil::json_double;
using fmtutil::json_escape;

inline std::string json_mean(const MeanStderr& m) {
    std::string s = "{\"mean\": ";
    s += m.n == 0 ? "null" : json_double(m.mean);
    s += ", \"stderr\": ";
    s += m.n == 0 ? "null" : json_double(m.stderr_);
    s += ", \"n\": " + std::to_string(m.n) + "}";
    return s;
}

inline std::string json_spec(const EnsembleSpec& spec) {
    std::ostringstream s;
    s << "{\"delta\": " << json_double(spec.delta) << ", \"L\": " << spec.L
      << ", \"eta\": " << json_double(spec.eta) << ", \"t\": " << json_double(spec.t)
      << ", \"a\": " << json_double(spec.a) << ", \"b\": " << json_double(spec.b)
      << ", \"window_fraction\": " << json_double(spec.window_fraction)
      << ", \"boundary_width\": " << spec.boundary_width
      << ", \"edge_threshold\": " << json_double(spec.edge_threshold)
      << ", \"realizations\": " << spec.realizations << ", \"master_seed\": \""
      << spec.master_seed << "\", \"compute_marker\": "
      << (spec.compute_marker ? "true" : "false") << ", \"compute_momentum_chern\": "
      << (spec.compute_momentum_chern ? "true" : "false")
      << ", \"momentum_grid\": " << spec.momentum_grid << ", \"workers\": " << spec.workers
      << "}";
    return s.str();
}

inline std::string json_report(const IndexReport& rep) {
    std::ostringstream s;
    s << "{\"realization_index\": " << rep.realization_index << ", \"seed\": \"" << rep.seed
      << "\", \"edge\": " << json_double(rep.edge_index)
      << ", \"edge_imag\": " << json_double(rep.edge_index_imag_residual) << ", \"marker\": "
      << (rep.chern_marker ? json_double(*rep.chern_marker) : "null") << ", \"correction\": "
      << (rep.refined_correction ? json_double(*rep.refined_correction) : "null")
      << ", \"refined\": "
      << (rep.refined_bulk_index ? json_double(*rep.refined_bulk_index) : "null")
      << ", \"momentum_chern\": "
      << (rep.momentum_chern ? std::to_string(*rep.momentum_chern) : "null")
      << ", \"failed\": " << (rep.failed ? "true" : "false") << ", \"error\": \""
      << json_escape(rep.error) << "\", \"modes\": [";
    for (std::size_t k = 0; k < rep.ingap_modes.size(); ++k) {
        const ModeRecord& m = rep.ingap_modes[k];
        if (k > 0) s << ", ";
        s << "{\"index\": " << m.index << ", \"lambda\": " << json_double(m.lambda)
          << ", \"angular_momentum\": " << json_double(m.angular_momentum)
          << ", \"angular_residual\": " << json_double(m.angular_residual)
          << ", \"boundary_weight\": " << json_double(m.boundary_weight)
          << ", \"edge\": " << (m.edge ? "true" : "false") << "}";
    }
    s << "]}";
    return s.str();
}

inline std::string csv_report(const IndexReport& rep) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::ostringstream s;
    s << rep.realization_index << "," << rep.seed << ","
      << csv_double(rep.failed ? nan : rep.edge_index) << ","
      << csv_double(rep.failed ? nan : rep.edge_index_imag_residual) << ","
      << csv_double(rep.chern_marker ? *rep.chern_marker : nan) << ","
      << csv_double(rep.refined_correction ? *rep.refined_correction : nan) << ","
      << csv_double(rep.refined_bulk_index ? *rep.refined_bulk_index : nan) << ","
      << rep.ingap_modes.size() << "," << rep.edge_mode_count() << "," << rep.bulk_mode_count();
    return s.str();
}

inline constexpr const char* kCsvHeader =
    "realization_index,seed,edge,edge_imag,marker,correction,refined,n_ingap,n_edge_modes,"
    "n_bulk_modes";

inline void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f << text;
    if (!f) throw std::runtime_error("write failed: " + path);
}

} // namespace detail

inline constexpr const char* kFormatVersion = "1";

// Writes <stem>.json (full, authoritative) and <stem>.csv (per-realization
// table with the documented schema).
inline void persist(const EnsembleResult& result, const std::string& stem) {
    std::ostringstream j;
    j << "{\n  \"format_version\": \"" << kFormatVersion << "\",\n  \"kind\": \"ensemble\",\n";
    j << "  \"spec\": " << detail::json_spec(result.spec) << ",\n";
    j << "  \"failures\": " << result.failures << ",\n";
    j << "  \"wall_seconds\": " << detail::json_double(result.wall_seconds) << ",\n";
    j << "  \"aggregates\": {\"edge\": " << detail::json_mean(result.aggregates.edge)
      << ", \"marker\": " << detail::json_mean(result.aggregates.marker)
      << ", \"refined\": " << detail::json_mean(result.aggregates.refined) << "},\n";
    j << "  \"reports\": [\n";
    for (std::size_t i = 0; i < result.reports.size(); ++i)
        j << "    " << detail::json_report(result.reports[i])
          << (i + 1 < result.reports.size() ? ",\n" : "\n");
    j << "  ]\n}\n";
    detail::write_file(stem + ".json", j.str());

    std::ostringstream c;
    c << detail::kCsvHeader << "\n";
    for (const IndexReport& rep : result.reports) c << detail::csv_report(rep) << "\n";
    detail::write_file(stem + ".csv", c.str());
}

namespace detail {

inline double load_double(const nlohmann::json& v) {
    return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
}

inline MeanStderr load_mean(const nlohmann::json& v) {
    MeanStderr m;
    m.n = v.at("n").get<std::size_t>();
    if (m.n > 0) {
        m.mean = v.at("mean").get<double>();
        m.stderr_ = v.at("stderr").get<double>();
    }
    return m;
}

} // namespace detail

inline EnsembleResult load(const std::string& stem) {
    std::ifstream f(stem + ".json", std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + stem + ".json");
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(f);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error("corrupt result file " + stem + ".json: " + e.what());
    }
    const std::string version = root.at("format_version").get<std::string>();
    if (version != kFormatVersion)
        throw std::runtime_error("unsupported format_version \"" + version + "\" (expected \"" +
                                 std::string(kFormatVersion) + "\")");
    EnsembleResult out;
    const nlohmann::json& s = root.at("spec");
    out.spec.delta = s.at("delta").get<double>();
    out.spec.L = s.at("L").get<int>();
    out.spec.eta = s.at("eta").get<double>();
    out.spec.t = s.at("t").get<double>();
    out.spec.a = s.at("a").get<double>();
    out.spec.b = s.at("b").get<double>();
    out.spec.window_fraction = s.at("window_fraction").get<double>();
    out.spec.boundary_width = s.at("boundary_width").get<int>();
    out.spec.edge_threshold = s.at("edge_threshold").get<double>();
    out.spec.realizations = s.at("realizations").get<int>();
    out.spec.master_seed = std::stoull(s.at("master_seed").get<std::string>());
    out.spec.compute_marker = s.at("compute_marker").get<bool>();
    out.spec.compute_momentum_chern = s.at("compute_momentum_chern").get<bool>();
    out.spec.momentum_grid = s.at("momentum_grid").get<int>();
    out.spec.workers = s.at("workers").get<int>();
    out.failures = root.at("failures").get<int>();
    out.wall_seconds = root.at("wall_seconds").get<double>();
    out.aggregates.edge = detail::load_mean(root.at("aggregates").at("edge"));
    out.aggregates.marker = detail::load_mean(root.at("aggregates").at("marker"));
    out.aggregates.refined = detail::load_mean(root.at("aggregates").at("refined"));
    for (const nlohmann::json& r : root.at("reports")) {
        IndexReport rep;
        rep.L = out.spec.L;
        rep.t = out.spec.t;
        rep.eta = out.spec.eta;
        rep.master_seed = out.spec.master_seed;
        rep.realization_index = r.at("realization_index").get<std::uint64_t>();
        rep.seed = std::stoull(r.at("seed").get<std::string>());
        rep.failed = r.at("failed").get<bool>();
        rep.error = r.at("error").get<std::string>();
        rep.edge_index = detail::load_double(r.at("edge"));
        rep.edge_index_imag_residual = detail::load_double(r.at("edge_imag"));
        if (!r.at("marker").is_null()) rep.chern_marker = r.at("marker").get<double>();
        if (!r.at("correction").is_null())
            rep.refined_correction = r.at("correction").get<double>();
        if (!r.at("refined").is_null()) rep.refined_bulk_index = r.at("refined").get<double>();
        if (!r.at("momentum_chern").is_null())
            rep.momentum_chern = r.at("momentum_chern").get<int>();
        for (const nlohmann::json& mv : r.at("modes")) {
            ModeRecord m;
            m.index = mv.at("index").get<int>();
            m.lambda = mv.at("lambda").get<double>();
            m.angular_momentum = mv.at("angular_momentum").get<double>();
            m.angular_residual = mv.at("angular_residual").get<double>();
            m.boundary_weight = mv.at("boundary_weight").get<double>();
            m.edge = mv.at("edge").get<bool>();
            rep.ingap_modes.push_back(m);
        }
        out.reports.push_back(rep);
    }
    return out;
}

} // namespace chernbox
