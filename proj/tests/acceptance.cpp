#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "chernbox/bloch.hpp"
#include "chernbox/ensemble.hpp"
#include "chernbox/localization.hpp"

using namespace chernbox;

namespace {

// Tolerances and runtime budgets, one pinned constant per checked quantity.
constexpr int kMomentumGrid = 24;
constexpr double kRawIntegerTol = 1e-6;        // raw plaquette sum vs integer
constexpr double kGapRelTol = 0.01;            // relative error of the clean gap width
constexpr double kEdgeLimitTol = 0.1;          // |edge(L=24) - 1| in the clean limit
constexpr double kMeanGapSlack = 0.1;          // additive slack between ensemble means
constexpr double kMarkerTol = 0.1;             // |marker - 1| at L = 24
constexpr double kMarkerLevelTol = 1e-6;       // marker drift across in-gap levels
constexpr double kMomentFitR2 = 0.9;           // exponential-decay fit quality
constexpr double kSlopeBound = -0.5;           // hitting-probability log-log slope
constexpr double kDecouplingTol = 1e-8;        // resolvent-identity residual
constexpr double kHsDeviationTol = 1e-2;       // resolvent-integral vs eigensum switch
constexpr double kIdempotenceTol = 1e-10;      // ||P^2 - P||_max
constexpr double kRealityTol = 1e-10;          // angular-momentum imaginary residual
constexpr double kTranslationTol = 1e-9;       // eigenvalue drift under torus shifts
constexpr double kCyclicityBound = 2.0;        // windowed-trace growth exponent
constexpr double kSweepMeanTol = 0.15;         // |mean edge - 1| along the deformation

constexpr double kCapChern = 1.0;
constexpr double kCapGap = 1.0;
constexpr double kCapCleanEdgeOnFourCores = 600.0;
constexpr double kCapEnsembleParallel = 1200.0;
constexpr double kCapMoments = 600.0;
constexpr double kCapLifshitz = 900.0;
constexpr double kCapDecoupling = 30.0;
constexpr double kCapHs = 60.0;

constexpr uint64_t kMasterSeed = 20250818;

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

int worker_count() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Budgets quoted for a four-core machine stretch proportionally on smaller ones.
double core_scale() {
    return std::max(1.0, 4.0 / static_cast<double>(worker_count()));
}

bool emit(int n, bool pass, const std::string& detail, double wall) {
    std::printf("[%s] criterion %d: %s wall=%.1fs\n", pass ? "PASS" : "FAIL", n, detail.c_str(),
                wall);
    std::fflush(stdout);
    return pass;
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

double fit_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double n = static_cast<double>(xs.size());
    for (size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
        sxx += xs[i] * xs[i];
        sxy += xs[i] * ys[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

bool criterion_momentum_anchors() {
    const auto t0 = std::chrono::steady_clock::now();
    const ChernResult plus = chern_number_fhs(build_qwz_kernel(1.0), 0.0, kMomentumGrid);
    const ChernResult minus = chern_number_fhs(build_qwz_kernel(-1.0), 0.0, kMomentumGrid);
    const double wall = seconds_since(t0);
    const double raw_err =
        std::max(std::abs(plus.raw_sum - 1.0), std::abs(minus.raw_sum + 1.0));
    const bool pass = plus.chern == 1 && minus.chern == -1 && raw_err <= kRawIntegerTol &&
                      wall < kCapChern;
    return emit(1, pass,
                fmt("momentum invariants %+d/%+d (want +1/-1), raw integer error %.2e (tol %.0e),"
                    " cap %.0fs;",
                    plus.chern, minus.chern, raw_err, kRawIntegerTol, kCapChern),
                wall);
}

bool criterion_gap_widths() {
    const auto t0 = std::chrono::steady_clock::now();
    const GapResult closed = verify_gap(build_qwz_kernel(0.0), 0.0, 16);
    const GapResult open = verify_gap(build_qwz_kernel(1.0), 0.0, 16);
    const double wall = seconds_since(t0);
    const double rel = std::abs(open.width - 1.0);
    const bool pass = !closed.gapped && open.gapped && rel <= kGapRelTol && wall < kCapGap;
    return emit(2, pass,
                fmt("massless sample gapped=%d (want 0), unit-mass width %.6f (want 1 within %g),"
                    " cap %.0fs;",
                    closed.gapped ? 1 : 0, open.width, kGapRelTol, kCapGap),
                wall);
}

bool criterion_clean_edge_convergence() {
    const auto t0 = std::chrono::steady_clock::now();
    const HoppingKernel kernel = build_qwz_kernel(1.0);
    const SwitchFunction rho(-0.4, 0.4);
    const std::vector<int> sizes{8, 12, 16, 20, 24};
    std::vector<double> errs;
    std::string trail;
    for (int L : sizes) {
        const BoxHamiltonian h =
            assemble_hamiltonian(kernel, nullptr, BoundaryCondition::simple(), L);
        const SpectralSlice slice = eig_slice(h.matrix, rho.a(), rho.b());
        const double e = edge_index(h, slice, rho).value;
        errs.push_back(std::abs(e - 1.0));
        trail += fmt(" %d:%.4f", L, e);
    }
    const double wall = seconds_since(t0);
    bool monotone = true;
    for (size_t i = 2; i < errs.size(); ++i) monotone = monotone && errs[i] <= errs[i - 1];
    const double cap = kCapCleanEdgeOnFourCores * core_scale();
    const bool pass = monotone && errs.back() <= kEdgeLimitTol && wall <= cap;
    return emit(3, pass,
                fmt("clean edge index by L:%s; |err| non-increasing past L=12: %s,"
                    " final err %.4f (tol %g), cap %.0fs;",
                    trail.c_str(), monotone ? "yes" : "no", errs.back(), kEdgeLimitTol, cap),
                wall);
}

bool criterion_disordered_correspondence() {
    const auto t0 = std::chrono::steady_clock::now();
    EnsembleSpec spec;
    spec.delta = 1.0;
    spec.L = 20;
    spec.t = 0.3;
    spec.eta = 6.0;
    spec.realizations = 50;
    spec.master_seed = kMasterSeed;
    spec.compute_marker = true;
    spec.compute_momentum_chern = false;
    spec.workers = worker_count();
    const EnsembleResult result = run_ensemble(spec);
    const double wall = seconds_since(t0);
    const double gap = std::abs(result.aggregates.edge.mean - result.aggregates.refined.mean);
    const double combined = std::hypot(result.aggregates.edge.stderr_,
                                       result.aggregates.refined.stderr_);
    const double limit = 3.0 * combined + kMeanGapSlack;
    const double cap = kCapEnsembleParallel * core_scale();
    const bool pass = gap <= limit && result.failures == 0 && wall <= cap;
    return emit(4, pass,
                fmt("edge mean %.4f+-%.4f vs refined mean %.4f+-%.4f, |gap| %.4f <= %.4f,"
                    " failures %d, cap %.0fs;",
                    result.aggregates.edge.mean, result.aggregates.edge.stderr_,
                    result.aggregates.refined.mean, result.aggregates.refined.stderr_, gap, limit,
                    result.failures, cap),
                wall);
}

bool criterion_marker_consistency() {
    const auto t0 = std::chrono::steady_clock::now();
    const HoppingKernel kernel = build_qwz_kernel(1.0);
    const BoxHamiltonian h =
        assemble_hamiltonian(kernel, nullptr, BoundaryCondition::simple(), 24);
    const EigenSystem es = eig(h);
    double base = 0.0, drift = 0.0;
    for (double lam : {0.0, -0.3, 0.3}) {
        const int occ = occupied_count(es.eigenvalues, lam);
        const double m = chern_marker_occupied(es.eigenvectors.leftCols(occ), h.geom, 0.5);
        if (lam == 0.0)
            base = m;
        else
            drift = std::max(drift, std::abs(m - base));
    }
    const double wall = seconds_since(t0);
    const bool pass = std::abs(base - 1.0) <= kMarkerTol && drift <= kMarkerLevelTol;
    return emit(5, pass,
                fmt("marker %.6f (want 1 within %g), drift across levels %.2e (tol %.0e);", base,
                    kMarkerTol, drift, kMarkerLevelTol),
                wall);
}

bool criterion_moment_decay() {
    const auto t0 = std::chrono::steady_clock::now();
    const GreenSampleSet scan = fractional_moment_scan(build_qwz_kernel(1.0), 16, 0.3, 6.0, 0.0,
                                                       1e-3, 0.5, 200, kMasterSeed);
    const double wall = seconds_since(t0);
    const bool pass = scan.alpha_fit > 0.0 && scan.r2_fit >= kMomentFitR2 &&
                      scan.failures == 0 && wall <= kCapMoments;
    return emit(6, pass,
                fmt("decay rate %.4f (want > 0), fit r2 %.4f (want >= %g), %d/200 failures,"
                    " cap %.0fs;",
                    scan.alpha_fit, scan.r2_fit, kMomentFitR2, scan.failures, kCapMoments),
                wall);
}

bool criterion_rare_region_scaling() {
    const auto t0 = std::chrono::steady_clock::now();
    // The mass 0.32 puts the crossover of the shrinking window L^-1/2 against
    // the disordered spectral floor between L = 6 and L = 14: smaller boxes hit
    // the window on every draw, larger ones essentially never, so p(L) falls
    // steeply across the probed sizes.
    const HoppingKernel kernel = build_qwz_kernel(0.32);
    const LifshitzEstimate est = lifshitz_probe(kernel, {6, 10, 14}, 0.5, 6.0, 500, 42);
    const double wall = seconds_since(t0);
    const bool decreasing = est.p[0] > est.p[1] && est.p[1] > est.p[2];
    const bool pass = decreasing && est.slope <= kSlopeBound && est.slope_max <= kSlopeBound &&
                      wall <= kCapLifshitz;
    return emit(7, pass,
                fmt("p(L) = %.3f/%.3f/%.3f strictly decreasing: %s, slope %.2f"
                    " (band [%.2f, %.2f], want <= %g), cap %.0fs;",
                    est.p[0], est.p[1], est.p[2], decreasing ? "yes" : "no", est.slope,
                    est.slope_min, est.slope_max, kSlopeBound, kCapLifshitz),
                wall);
}

bool criterion_decoupling_identity() {
    const auto t0 = std::chrono::steady_clock::now();
    const double residual =
        decoupling_residual(build_qwz_kernel(1.0), 12, 5, cplx(0.0, 0.5), 6.0, kMasterSeed);
    const double wall = seconds_since(t0);
    const bool pass = residual <= kDecouplingTol && wall < kCapDecoupling;
    return emit(8, pass,
                fmt("resolvent-identity residual %.2e (tol %.0e), cap %.0fs;", residual,
                    kDecouplingTol, kCapDecoupling),
                wall);
}

bool criterion_resolvent_integral_switch() {
    const auto t0 = std::chrono::steady_clock::now();
    SplitMix64 rng(kMasterSeed);
    const int n = 40;
    Matrix m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            m(i, j) = cplx(2.0 * rng.next_double() - 1.0, 2.0 * rng.next_double() - 1.0);
    Matrix h = 0.5 * (m + Matrix(m.adjoint()));
    const double radius = hermitian_eigenvalues(h).cwiseAbs().maxCoeff();
    h *= 3.0 / radius;
    const SwitchFunction rho(-0.4, 0.4);
    const double deviation = hs_validate(h, rho, 3, 0.01);
    const double wall = seconds_since(t0);
    const bool pass = deviation <= kHsDeviationTol && wall < kCapHs;
    return emit(9, pass,
                fmt("switch deviation %.2e between integral and eigensum routes (tol %.0e),"
                    " cap %.0fs;",
                    deviation, kHsDeviationTol, kCapHs),
                wall);
}

bool criterion_invariants() {
    const auto t0 = std::chrono::steady_clock::now();
    const HoppingKernel kernel = build_qwz_kernel(1.0);

    double herm = 0.0;
    {
        const DisorderField field = sample_disorder(6, 2, 6.0, 0.4, kMasterSeed, 0);
        for (const BoundaryCondition& bc :
             {BoundaryCondition::simple(), BoundaryCondition::periodic()}) {
            const BoxHamiltonian h = assemble_hamiltonian(kernel, &field, bc, 6);
            herm = std::max(herm, (h.matrix - h.matrix.adjoint()).cwiseAbs().maxCoeff());
        }
    }

    double idem = 0.0, reality = 0.0;
    {
        const DisorderField field = sample_disorder(10, 2, 6.0, 0.3, kMasterSeed, 1);
        const BoxHamiltonian h =
            assemble_hamiltonian(kernel, &field, BoundaryCondition::simple(), 10);
        const EigenSystem es = eig(h);
        const Matrix p = spectral_projector(es, 0.0);
        idem = (p * p - p).cwiseAbs().maxCoeff();
        for (const ModeRecord& rec :
             ingap_mode_records(h, es.eigenvalues, es.eigenvectors, -0.4, 0.4, 2, 0.5))
            reality = std::max(reality, rec.angular_residual);
    }

    bool gauge_ok = true;
    {
        const ChernResult plain = chern_number_fhs(kernel, 0.0, kMomentumGrid, 0);
        for (uint64_t seed : {7u, 99u}) {
            const ChernResult twirled = chern_number_fhs(kernel, 0.0, kMomentumGrid, seed);
            gauge_ok = gauge_ok && twirled.chern == plain.chern &&
                       std::abs(twirled.raw_sum - plain.raw_sum) < 1e-9;
        }
    }

    double translation = 0.0;
    {
        const int L = 4;
        const BoxGeometry g{L, 2};
        const DisorderField field = sample_disorder(L, 2, 6.0, 0.8, kMasterSeed, 2);
        DisorderField rolled = field;
        const int side = g.side();
        for (int n1 = -L; n1 <= L; ++n1)
            for (int n2 = -L; n2 <= L; ++n2) {
                const int src = (n1 - 1 + L + side) % side - L;
                for (int c = 0; c < 2; ++c)
                    rolled.omega[static_cast<size_t>(g.dof(n1, n2, c))] =
                        field.omega[static_cast<size_t>(g.dof(src, n2, c))];
            }
        const BoxHamiltonian a =
            assemble_hamiltonian(kernel, &field, BoundaryCondition::periodic(), L);
        const BoxHamiltonian b =
            assemble_hamiltonian(kernel, &rolled, BoundaryCondition::periodic(), L);
        translation =
            (hermitian_eigenvalues(a.matrix) - hermitian_eigenvalues(b.matrix))
                .cwiseAbs()
                .maxCoeff();
    }

    bool workers_identical = true;
    {
        EnsembleSpec spec;
        spec.L = 4;
        spec.t = 0.3;
        spec.realizations = 6;
        spec.master_seed = kMasterSeed;
        spec.momentum_grid = 12;
        const auto dir = std::filesystem::temp_directory_path() / "chernbox_acceptance";
        std::filesystem::create_directories(dir);
        std::string reference;
        for (int workers : {1, 4, 8}) {
            spec.workers = workers;
            const EnsembleResult r = run_ensemble(spec);
            const std::string stem = (dir / ("workers_" + std::to_string(workers))).string();
            persist(r, stem);
            const std::string csv = read_file(stem + ".csv");
            if (workers == 1)
                reference = csv;
            else
                workers_identical = workers_identical && csv == reference;
        }
    }

    double exponent = 0.0;
    {
        const DisorderField field = sample_disorder(16, 2, 6.0, 0.3, kMasterSeed, 3);
        const BoxHamiltonian h =
            assemble_hamiltonian(kernel, &field, BoundaryCondition::simple(), 16);
        const EigenSystem es = eig(h);
        const Matrix p = spectral_projector(es, 0.0);
        const Matrix x1 = position_diagonal(h.geom, 1).cast<cplx>().asDiagonal();
        const Matrix b = p * x1 - x1 * p;
        const Matrix defect = p * b - b * p;
        std::vector<double> xs, ys;
        for (int ell : {4, 6, 8, 10}) {
            cplx acc(0.0, 0.0);
            for (int s = 0; s < h.geom.sites(); ++s) {
                const Disp site = h.geom.coords(s);
                if (std::max(std::abs(site[0]), std::abs(site[1])) > ell) continue;
                for (int c = 0; c < 2; ++c) acc += defect(s * 2 + c, s * 2 + c);
            }
            xs.push_back(std::log(static_cast<double>(ell)));
            ys.push_back(std::log(std::abs(acc)));
        }
        exponent = fit_slope(xs, ys);
    }

    const double wall = seconds_since(t0);
    const bool pass = herm == 0.0 && idem <= kIdempotenceTol && reality <= kRealityTol &&
                      gauge_ok && translation <= kTranslationTol && workers_identical &&
                      exponent < kCyclicityBound;
    return emit(10, pass,
                fmt("hermiticity defect %.1e (want 0), idempotence %.1e (tol %.0e), angular"
                    " residual %.1e (tol %.0e), gauge invariant: %s, translation drift %.1e"
                    " (tol %.0e), worker-count determinism: %s, cyclicity exponent %.2f"
                    " (want < %g);",
                    herm, idem, kIdempotenceTol, reality, kRealityTol, gauge_ok ? "yes" : "no",
                    translation, kTranslationTol, workers_identical ? "yes" : "no", exponent,
                    kCyclicityBound),
                wall);
}

bool criterion_deformation_invariance() {
    const auto t0 = std::chrono::steady_clock::now();
    EnsembleSpec spec;
    spec.delta = 1.0;
    spec.L = 24;
    spec.realizations = 20;
    spec.master_seed = kMasterSeed;
    spec.compute_marker = false;
    spec.compute_momentum_chern = false;
    spec.workers = worker_count();
    const std::vector<double> grid{0.0, 0.15, 0.3};
    const SweepResult sweep = deformation_sweep(spec, grid);
    const double wall = seconds_since(t0);
    bool pass = true;
    std::string trail;
    for (size_t j = 0; j < sweep.results.size(); ++j) {
        const double mean = sweep.results[j].aggregates.edge.mean;
        pass = pass && std::abs(mean - 1.0) <= kSweepMeanTol;
        trail += fmt(" t=%.2f:%.4f", sweep.t_values[j], mean);
    }
    return emit(11, pass,
                fmt("mean edge index along the deformation:%s (want 1 within %g at every t);",
                    trail.c_str(), kSweepMeanTol),
                wall);
}

}  // namespace

int main(int argc, char** argv) {
    std::set<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
    const auto selected = [&](int n) { return wanted.empty() || wanted.count(n) > 0; };

    int failures = 0;
    const auto run = [&](int n, bool (*fn)()) {
        if (selected(n) && !fn()) ++failures;
    };
    run(1, criterion_momentum_anchors);
    run(2, criterion_gap_widths);
    run(3, criterion_clean_edge_convergence);
    run(4, criterion_disordered_correspondence);
    run(5, criterion_marker_consistency);
    run(6, criterion_moment_decay);
    run(7, criterion_rare_region_scaling);
    run(8, criterion_decoupling_identity);
    run(9, criterion_resolvent_integral_switch);
    run(10, criterion_invariants);
    run(11, criterion_deformation_invariance);
    return failures == 0 ? 0 : 1;
}
