#pragma once

#include "chernbox/lattice.hpp"
#include "chernbox/linalg.hpp"
#include "chernbox/stats.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace chernbox {

// Green function G = (H - z)^{-1} behind one LU factorization; row and
// column blocks come from forward and adjoint solves on the same factor.
class GreenSolver {
public:
    GreenSolver(const BoxHamiltonian& h, cplx z) : geom_(h.geom), lu_(shifted(h.matrix, z)) {}

    // G(:, m) as a dim x d slab.
    Matrix column_block(const Disp& m) const {
        Matrix e = unit_columns(m);
        lu_.solve_in_place(e);
        return e;
    }

    // G(n, :) as a d x dim slab, via the adjoint solve (H - z)^H X = E_n.
    Matrix row_block(const Disp& n) const {
        Matrix e = unit_columns(n);
        lu_.solve_in_place(e, 'C');
        return e.adjoint();
    }

    Matrix block(const Disp& n, const Disp& m) const {
        const Matrix col = column_block(m);
        Matrix out(geom_.d, geom_.d);
        for (int c = 0; c < geom_.d; ++c) out.row(c) = col.row(geom_.dof(n[0], n[1], c));
        return out;
    }

    // X G for a row slab X, through the transpose solve on the same factor.
    Matrix apply_right(const Matrix& x) const {
        Matrix xt = x.transpose();
        lu_.solve_in_place(xt, 'T');
        return xt.transpose();
    }

    const BoxGeometry& geom() const { return geom_; }

private:
    static Matrix shifted(const Matrix& h, cplx z) {
        Matrix a = h;
        a.diagonal().array() -= z;
        return a;
    }
    Matrix unit_columns(const Disp& n) const {
        if (!geom_.contains(n[0], n[1]))
            throw std::invalid_argument("green: site outside the box");
        Matrix e = Matrix::Zero(geom_.dim(), geom_.d);
        for (int c = 0; c < geom_.d; ++c) e(geom_.dof(n[0], n[1], c), c) = 1.0;
        return e;
    }

    BoxGeometry geom_;
    LuSolver lu_;
};

inline Matrix green_block(const BoxHamiltonian& h, cplx z, const Disp& n, const Disp& m) {
    return GreenSolver(h, z).block(n, m);
}

struct GreenSampleSet {
    cplx z;
    double s = 0.5;
    Disp anchor{0, 0};
    std::vector<int> distances;                // r = 1 .. L-2 along e1
    std::vector<std::vector<double>> values;   // [realization][distance index]
    int realizations = 0;                      // successful realizations
    int failures = 0;
    std::vector<double> means;                 // per-distance Monte Carlo means
    double c_fit = 0.0;
    double alpha_fit = 0.0;
    double r2_fit = 0.0;
};

// Monte-Carlo fractional moments E ||G(0, r e1; lambda + i eps)||_F^s with an
// exponential fit of the log-means over the window r in [2, L-2] (contact and
// boundary distances are excluded from the fit).
inline GreenSampleSet fractional_moment_scan(const HoppingKernel& kernel, int L, double t,
                                             double eta, double lambda, double epsilon, double s,
                                             int N, std::uint64_t master_seed) {
    if (!(s > 0.0 && s < 1.0))
        throw std::invalid_argument("fractional_moment_scan: s must lie in (0, 1)");
    if (N < 1) throw std::invalid_argument("fractional_moment_scan: N >= 1 required");
    if (L < 4) throw std::invalid_argument("fractional_moment_scan: L >= 4 required");
    GreenSampleSet set;
    set.z = cplx(lambda, epsilon);
    set.s = s;
    for (int r = 1; r <= L - 2; ++r) set.distances.push_back(r);
    std::string first_error;
    for (int i = 0; i < N; ++i) {
        try {
            const DisorderField field =
                sample_disorder(L, kernel.d, eta, t, master_seed, static_cast<std::uint64_t>(i));
            const BoxHamiltonian h =
                assemble_hamiltonian(kernel, &field, BoundaryCondition::simple(), L);
            const GreenSolver g(h, set.z);
            const Matrix row = g.row_block({0, 0});
            std::vector<double> row_values;
            row_values.reserve(set.distances.size());
            for (int r : set.distances) {
                double f2 = 0.0;
                for (int c = 0; c < kernel.d; ++c)
                    f2 += row.col(h.geom.dof(r, 0, c)).squaredNorm();
                row_values.push_back(std::pow(std::sqrt(f2), s));
            }
            set.values.push_back(std::move(row_values));
            ++set.realizations;
        } catch (const std::exception& e) {
            ++set.failures;
            if (first_error.empty()) first_error = e.what();
        }
    }
    if (set.realizations == 0)
        throw std::runtime_error("fractional_moment_scan: every realization failed: " + first_error);
    set.means.assign(set.distances.size(), 0.0);
    for (std::size_t j = 0; j < set.distances.size(); ++j) {
        std::vector<double> column(set.values.size());
        for (std::size_t i = 0; i < set.values.size(); ++i) column[i] = set.values[i][j];
        set.means[j] = mean_stderr(column).mean;
    }
    std::vector<double> xs, ys;
    for (std::size_t j = 0; j < set.distances.size(); ++j) {
        const int r = set.distances[j];
        if (r < 2 || r > L - 2) continue;
        if (set.means[j] < 1e-300) continue;
        xs.push_back(r);
        ys.push_back(std::log(set.means[j]));
    }
    if (xs.size() >= 2) {
        const LineFit fit = least_squares(xs, ys);
        set.c_fit = std::exp(fit.intercept);
        set.alpha_fit = -fit.slope;
        set.r2_fit = fit.r2;
    }
    return set;
}

struct CombesThomasRow {
    double lambda = 0.0;
    double dist = 0.0;    // distance from lambda to the numerical spectrum
    double rate = 0.0;    // fitted decay rate of log ||G(n0, m)|| in |n0 - m|_1
    double r2 = 0.0;
    bool saturated = false;  // off-diagonal kernel identically zero
};

// Deterministic Combes-Thomas probe: for each lambda strictly outside the
// spectrum, fit the decay of per-distance means of ||G(n0, m; lambda)||_F.
inline std::vector<CombesThomasRow> combes_thomas_probe(const BoxHamiltonian& h,
                                                        const std::vector<double>& lambdas,
                                                        const Disp& n0) {
    const RealVector evals = hermitian_eigenvalues(h.matrix);
    const int L = h.geom.L;
    std::vector<CombesThomasRow> out;
    for (double lambda : lambdas) {
        CombesThomasRow row;
        row.lambda = lambda;
        row.dist = std::numeric_limits<double>::infinity();
        for (Eigen::Index k = 0; k < evals.size(); ++k)
            row.dist = std::min(row.dist, std::abs(lambda - evals[k]));
        if (row.dist < 1e-9)
            throw std::invalid_argument("combes_thomas_probe: lambda inside the spectrum");
        const GreenSolver g(h, cplx(lambda, 0.0));
        const Matrix slab = g.row_block(n0);
        // per-distance means over all sites at l1 distance r from n0
        std::vector<double> sums(static_cast<std::size_t>(4 * L) + 1, 0.0);
        std::vector<int> counts(sums.size(), 0);
        for (int site = 0; site < h.geom.sites(); ++site) {
            const Disp m = h.geom.coords(site);
            const int r = std::abs(m[0] - n0[0]) + std::abs(m[1] - n0[1]);
            if (r == 0) continue;
            double f2 = 0.0;
            for (int c = 0; c < h.geom.d; ++c) f2 += slab.col(site * h.geom.d + c).squaredNorm();
            sums[r] += std::sqrt(f2);
            ++counts[r];
        }
        std::vector<double> xs, ys;
        for (int r = 2; r <= L - 2; ++r) {
            if (counts[r] == 0) continue;
            const double mean = sums[r] / counts[r];
            if (mean < 1e-300) continue;
            xs.push_back(r);
            ys.push_back(std::log(mean));
        }
        if (xs.size() < 2) {
            row.saturated = true;
            row.rate = std::numeric_limits<double>::infinity();
        } else {
            const LineFit fit = least_squares(xs, ys);
            row.rate = -fit.slope;
            row.r2 = fit.r2;
        }
        out.push_back(row);
    }
    return out;
}

struct LifshitzEstimate {
    std::vector<int> L_list;
    double beta = 0.5;
    double eta = 6.0;
    int N = 0;
    double lambda0 = 0.0;
    std::vector<int> hits;
    std::vector<double> p;
    std::vector<WilsonInterval> ci;
    double slope = 0.0;      // least-squares slope of log p vs log L
    double slope_min = 0.0;  // extremes of the same functional over CI corners
    double slope_max = 0.0;
    double r2 = 0.0;
};

// Hitting probability of the shrinking window (lambda0 - L^-beta, lambda0 + L^-beta)
// for periodic boxes at t = 1, via Sylvester inertia counts (no eigenvectors).
inline LifshitzEstimate lifshitz_probe(const HoppingKernel& kernel, std::vector<int> L_list,
                                       double beta, double eta, int N, std::uint64_t master_seed) {
    if (!(beta > 0.0 && beta < 1.0))
        throw std::invalid_argument("lifshitz_probe: beta must lie in (0, 1)");
    if (N < 1) throw std::invalid_argument("lifshitz_probe: N >= 1 required");
    LifshitzEstimate est;
    est.L_list = std::move(L_list);
    est.beta = beta;
    est.eta = eta;
    est.N = N;
    est.lambda0 = kernel.fermi_level;
    for (std::size_t li = 0; li < est.L_list.size(); ++li) {
        const int L = est.L_list[li];
        const double radius = std::pow(static_cast<double>(L), -beta);
        int hits = 0;
        for (int i = 0; i < N; ++i) {
            const std::uint64_t realization = static_cast<std::uint64_t>(li) * N + i;
            const DisorderField field = sample_disorder(L, kernel.d, eta, 1.0, master_seed, realization);
            const BoxHamiltonian h =
                assemble_hamiltonian(kernel, &field, BoundaryCondition::periodic(), L);
            const int below_hi = eigenvalue_count_below(h.matrix, est.lambda0 + radius);
            const int below_lo = eigenvalue_count_below(h.matrix, est.lambda0 - radius);
            if (below_hi - below_lo > 0) ++hits;
        }
        est.hits.push_back(hits);
        est.p.push_back(static_cast<double>(hits) / N);
        est.ci.push_back(wilson_interval(hits, N));
    }
    // Log-log slope with an interval band: the least-squares slope is a fixed
    // linear functional of the y values, so its extremes over the Wilson boxes
    // are attained at per-point interval corners. Probabilities are clamped at
    // 1/(20N) before logs so empty counts stay finite.
    const double clamp = 1.0 / (20.0 * N);
    std::vector<double> xs, ylo, yhat, yhi;
    for (std::size_t j = 0; j < est.L_list.size(); ++j) {
        xs.push_back(std::log(static_cast<double>(est.L_list[j])));
        yhat.push_back(std::log(std::max(est.p[j], clamp)));
        ylo.push_back(std::log(std::max(est.ci[j].lo, clamp)));
        yhi.push_back(std::log(std::max(est.ci[j].hi, clamp)));
    }
    if (xs.size() >= 2) {
        const LineFit fit = least_squares(xs, yhat);
        est.slope = fit.slope;
        est.r2 = fit.r2;
        double xbar = 0.0;
        for (double x : xs) xbar += x;
        xbar /= xs.size();
        double sxx = 0.0;
        for (double x : xs) sxx += (x - xbar) * (x - xbar);
        double lo = 0.0, hi = 0.0;
        for (std::size_t j = 0; j < xs.size(); ++j) {
            const double a = (xs[j] - xbar) / sxx;
            lo += a * (a > 0.0 ? ylo[j] : yhi[j]);
            hi += a * (a > 0.0 ? yhi[j] : ylo[j]);
        }
        est.slope_min = lo;
        est.slope_max = hi;
    }
    return est;
}

struct BoundaryMomentEstimate {
    int L = 0;
    double lambda = 0.0;  // grid point realizing the reported (max) mean
    double mean = 0.0;
    double stderr_ = 0.0;
    int realizations = 0;
};

// Initial-length style probe: mean of ||G(0, n; lambda + i eps)||^s over the
// interior boundary of the simple-bc box, maximized over a three-point lambda
// grid spanning [lambda0 - L^-beta / 2, lambda0 + L^-beta / 2].
inline BoundaryMomentEstimate boundary_moment_probe(const HoppingKernel& kernel, int L, double beta,
                                                    double eta, int N, double s,
                                                    std::uint64_t master_seed,
                                                    double epsilon = 1e-3) {
    if (!(s > 0.0 && s < 1.0))
        throw std::invalid_argument("boundary_moment_probe: s must lie in (0, 1)");
    if (N < 1) throw std::invalid_argument("boundary_moment_probe: N >= 1 required");
    const double half = 0.5 * std::pow(static_cast<double>(L), -beta);
    const std::vector<double> grid = {kernel.fermi_level - half, kernel.fermi_level,
                                      kernel.fermi_level + half};
    const std::vector<Disp> ring = boundary_sets(L).first;
    std::vector<std::vector<double>> per_lambda(grid.size());
    for (int i = 0; i < N; ++i) {
        const DisorderField field =
            sample_disorder(L, kernel.d, eta, 1.0, master_seed, static_cast<std::uint64_t>(i));
        const BoxHamiltonian h = assemble_hamiltonian(kernel, &field, BoundaryCondition::simple(), L);
        for (std::size_t j = 0; j < grid.size(); ++j) {
            const GreenSolver g(h, cplx(grid[j], epsilon));
            const Matrix slab = g.row_block({0, 0});
            double acc = 0.0;
            for (const Disp& n : ring) {
                double f2 = 0.0;
                for (int c = 0; c < kernel.d; ++c)
                    f2 += slab.col(h.geom.dof(n[0], n[1], c)).squaredNorm();
                acc += std::pow(std::sqrt(f2), s);
            }
            per_lambda[j].push_back(acc / static_cast<double>(ring.size()));
        }
    }
    BoundaryMomentEstimate best;
    best.L = L;
    best.mean = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const MeanStderr m = mean_stderr(per_lambda[j]);
        if (m.mean > best.mean) {
            best.lambda = grid[j];
            best.mean = m.mean;
            best.stderr_ = m.stderr_;
            best.realizations = static_cast<int>(per_lambda[j].size());
        }
    }
    return best;
}

// Exact finite-scale check of the geometric-decoupling resolvent chain
//   G(0,m) = sum G_L(0,u) F_L(u,u') G(u',v) F_{L+1}(v,v') G_{L+1}(v',m)
// for every m with max-norm > L+1, where F_L = H - H^(L) collects the hops
// across the Lambda_L boundary. Returns the max entrywise residual.
inline double decoupling_residual(const HoppingKernel& kernel, int M, int L, cplx z, double eta,
                                  std::uint64_t master_seed) {
    if (z.imag() == 0.0)
        throw std::invalid_argument("decoupling_residual: Im z must be nonzero");
    if (!(L >= 1 && L + 1 < M))
        throw std::invalid_argument("decoupling_residual: need 1 <= L and L + 1 < M");
    const DisorderField field = sample_disorder(M, kernel.d, eta, 1.0, master_seed, 0);
    const BoxHamiltonian ambient =
        assemble_hamiltonian(kernel, &field, BoundaryCondition::simple(), M);
    const BoxHamiltonian inner =
        assemble_hamiltonian(kernel, &field, BoundaryCondition::decoupled(L), M);
    const BoxHamiltonian outer =
        assemble_hamiltonian(kernel, &field, BoundaryCondition::decoupled(L + 1), M);
    const Matrix f_inner = ambient.matrix - inner.matrix;
    const Matrix f_outer = ambient.matrix - outer.matrix;

    const GreenSolver g_ambient(ambient, z);
    const GreenSolver g_inner(inner, z);
    const GreenSolver g_outer(outer, z);

    const Matrix lhs = g_ambient.row_block({0, 0});
    Matrix chain = g_inner.row_block({0, 0});
    chain = Matrix(chain * f_inner);
    chain = g_ambient.apply_right(chain);
    chain = Matrix(chain * f_outer);
    chain = g_outer.apply_right(chain);

    double residual = 0.0;
    const BoxGeometry& geom = ambient.geom;
    for (int site = 0; site < geom.sites(); ++site) {
        const Disp m = geom.coords(site);
        if (std::max(std::abs(m[0]), std::abs(m[1])) <= L + 1) continue;
        for (int c = 0; c < geom.d; ++c) {
            const int j = site * geom.d + c;
            residual = std::max(residual, (chain.col(j) - lhs.col(j)).cwiseAbs().maxCoeff());
        }
    }
    return residual;
}

} // namespace chernbox
