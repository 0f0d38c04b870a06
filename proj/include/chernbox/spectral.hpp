#pragma once

#include "chernbox/lattice.hpp"
#include "chernbox/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace chernbox {

struct EigenSystem {
    RealVector eigenvalues;
    Matrix eigenvectors;
    int source_dim = 0;
    // Max of ||H v_k - lambda_k v_k||_2 over a sample of columns; the full
    // per-column bound is asserted in tests, not recomputed on every call.
    double residual_bound = 0.0;
};

inline EigenSystem eig_dense(const Matrix& h) {
    detail::check_square(h, "eig_dense");
    EigenSystem es;
    es.source_dim = static_cast<int>(h.rows());
    es.eigenvectors = h;
    hermitian_eig_inplace(es.eigenvectors, es.eigenvalues);
    const int n = es.source_dim;
    const int samples = std::min(n, 16);
    for (int s = 0; s < samples; ++s) {
        const int k = samples == 1 ? 0 : s * (n - 1) / (samples - 1);
        const double r = (h * es.eigenvectors.col(k)
                          - es.eigenvalues[k] * es.eigenvectors.col(k)).norm();
        es.residual_bound = std::max(es.residual_bound, r);
    }
    return es;
}

inline EigenSystem eig(const BoxHamiltonian& h) { return eig_dense(h.matrix); }

// Eigenpairs with eigenvalue in the half-open window (lo, hi].
struct SpectralSlice {
    RealVector eigenvalues;
    Matrix eigenvectors;
    int source_dim = 0;
};

inline SpectralSlice eig_slice(const Matrix& h, double lo, double hi) {
    detail::check_square(h, "eig_slice");
    SpectralSlice s;
    s.source_dim = static_cast<int>(h.rows());
    hermitian_eig_range(h, lo, hi, s.eigenvalues, s.eigenvectors);
    return s;
}

// Number of eigenvalues strictly below lambda, rejecting lambda within the
// tie guard of any eigenvalue: fermi levels that graze the spectrum make the
// projector ill-defined, and the caller is expected to move lambda instead.
inline int occupied_count(const RealVector& eigenvalues, double lambda) {
    constexpr double kTieGuard = 1e-12;
    const double* begin = eigenvalues.data();
    const double* end = begin + eigenvalues.size();
    const double* it = std::lower_bound(begin, end, lambda);
    for (const double* c : {it > begin ? it - 1 : nullptr, it < end ? it : nullptr}) {
        if (c != nullptr && std::abs(*c - lambda) < kTieGuard)
            throw std::runtime_error("spectral_projector: lambda collides with eigenvalue "
                                     + std::to_string(*c));
    }
    return static_cast<int>(it - begin);
}

inline int occupied_count(const EigenSystem& es, double lambda) {
    return occupied_count(es.eigenvalues, lambda);
}

inline Matrix spectral_projector(const EigenSystem& es, double lambda) {
    const int m = occupied_count(es, lambda);
    const auto v = es.eigenvectors.leftCols(m);
    return v * v.adjoint();
}

template <typename F>
inline Matrix apply_function(const EigenSystem& es, F&& f) {
    Matrix scaled = es.eigenvectors;
    for (Eigen::Index k = 0; k < scaled.cols(); ++k)
        scaled.col(k) *= f(es.eigenvalues[k]);
    return scaled * es.eigenvectors.adjoint();
}

// Smooth switch: rho(lambda) = f(b-lambda) / (f(b-lambda) + f(lambda-a)) with
// f(s) = exp(-1/s) for s > 0 else 0, so rho = 1 below a and 0 above b.
// Derivatives are exact: f^(j)(s) = f(s) q_j(1/s) with q_0 = 1 and
// q_{j+1}(x) = x^2 (q_j(x) - q_j'(x)), then Leibniz on rho * (u + v) = u.
class SwitchFunction {
public:
    static constexpr int kMaxDerivative = 20;

    SwitchFunction(double a, double b) : a_(a), b_(b) {
        if (!(a < b)) throw std::invalid_argument("switch_function: a < b required");
        q_.reserve(kMaxDerivative + 1);
        q_.push_back({1.0});
        for (int j = 0; j < kMaxDerivative; ++j) {
            const std::vector<double>& q = q_.back();
            std::vector<double> next(q.size() + 2, 0.0);
            for (std::size_t i = 0; i < q.size(); ++i) {
                next[i + 2] += q[i];
                if (i >= 1) next[i + 1] -= static_cast<double>(i) * q[i];
            }
            q_.push_back(std::move(next));
        }
    }

    double a() const { return a_; }
    double b() const { return b_; }

    double value(double lambda) const {
        const double u = mollifier_derivative(0, b_ - lambda);
        const double v = mollifier_derivative(0, lambda - a_);
        if (u + v == 0.0) return lambda <= 0.5 * (a_ + b_) ? 1.0 : 0.0;
        return u / (u + v);
    }

    double derivative(double lambda) const { return derivatives(1, lambda)[1]; }

    double derivative(int n, double lambda) const { return derivatives(n, lambda)[n]; }

    // rho and its derivatives at lambda, orders 0..n.
    std::vector<double> derivatives(int n, double lambda) const {
        if (n < 0 || n > kMaxDerivative)
            throw std::invalid_argument("switch_function: derivative order out of range");
        std::vector<double> u(n + 1), w(n + 1), out(n + 1, 0.0);
        for (int j = 0; j <= n; ++j) {
            u[j] = (j % 2 ? -1.0 : 1.0) * mollifier_derivative(j, b_ - lambda);
            w[j] = u[j] + mollifier_derivative(j, lambda - a_);
        }
        if (w[0] == 0.0) {
            out[0] = lambda <= 0.5 * (a_ + b_) ? 1.0 : 0.0;
            return out;
        }
        out[0] = u[0] / w[0];
        std::vector<double> binom{1.0};
        for (int m = 1; m <= n; ++m) {
            binom.push_back(1.0);
            for (int i = m - 1; i >= 1; --i) binom[i] += binom[i - 1];
            double acc = u[m];
            for (int i = 0; i < m; ++i) acc -= binom[i] * out[i] * w[m - i];
            out[m] = acc / w[0];
        }
        return out;
    }

    // f^(j)(s); returns exact 0 once 1/s exceeds the exp underflow range.
    double mollifier_derivative(int j, double s) const {
        if (s <= 0.0) return 0.0;
        const double x = 1.0 / s;
        if (x > 700.0) return 0.0;
        const std::vector<double>& c = q_[j];
        double p = 0.0;
        for (auto it = c.rbegin(); it != c.rend(); ++it) p = p * x + *it;
        return std::exp(-x) * p;
    }

private:
    double a_;
    double b_;
    std::vector<std::vector<double>> q_;
};

// Rigorous lower bound on the spectrum from matrix entries alone (the
// resolvent-integral paths must not consult an eigendecomposition).
inline double spectrum_floor(const Matrix& h) {
    detail::check_square(h, "spectrum_floor");
    if (h.rows() == 0) return 0.0;
    double gershgorin = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < h.rows(); ++i) {
        double radius = 0.0;
        for (Eigen::Index j = 0; j < h.cols(); ++j)
            if (j != i) radius += std::abs(h(i, j));
        gershgorin = std::min(gershgorin, h(i, i).real() - radius);
    }
    return std::max(gershgorin, -h.norm());
}

// Almost-analytic extension of g = rho * (rising ramp below the spectrum):
// g~(x+iy) = sum_{j<=K} g^(j)(x) (iy)^j / j! * tau(y) with tau a smooth even
// cutoff equal to 1 for |y| <= 0.5 and 0 for |y| >= 1. dbar returns
// (d/dx + i d/dy)/2 of g~, which telescopes to
//   tau(y) g^(K+1)(x) (iy)^K / K! / 2 + i tau'(y)/2 * sum_{j<=K} g^(j)(x)(iy)^j/j!.
class HsExtension {
public:
    HsExtension(SwitchFunction rho, double ramp_lo, double ramp_hi, int order)
        : rho_(std::move(rho)), ramp_(ramp_lo, ramp_hi), cut_(0.5, 1.0), order_(order) {
        if (!(ramp_hi <= rho_.a()))
            throw std::invalid_argument("hs_extension: ramp must sit below the switch interval");
        if (order < 1 || order + 2 > SwitchFunction::kMaxDerivative)
            throw std::invalid_argument("hs_extension: order out of range");
    }

    int order() const { return order_; }
    double support_lo() const { return ramp_.a(); }
    double support_hi() const { return rho_.b(); }
    double cutoff_hi() const { return cut_.b(); }

    // g = rho * rising ramp and its derivatives, orders 0..n.
    std::vector<double> profile(int n, double x) const {
        const std::vector<double> rho_d = rho_.derivatives(n, x);
        std::vector<double> ramp_d = ramp_.derivatives(n, x);
        ramp_d[0] = 1.0 - ramp_d[0];
        for (int j = 1; j <= n; ++j) ramp_d[j] = -ramp_d[j];
        std::vector<double> g(n + 1, 0.0), binom{1.0};
        g[0] = rho_d[0] * ramp_d[0];
        for (int m = 1; m <= n; ++m) {
            binom.push_back(1.0);
            for (int i = m - 1; i >= 1; --i) binom[i] += binom[i - 1];
            double acc = 0.0;
            for (int i = 0; i <= m; ++i) acc += binom[i] * rho_d[i] * ramp_d[m - i];
            g[m] = acc;
        }
        return g;
    }

    cplx dbar(const std::vector<double>& g, double y) const {
        const double tau = cut_.value(y);
        const double dtau = cut_.derivative(y);
        cplx out(0.0, 0.0);
        if (tau != 0.0 && g[static_cast<std::size_t>(order_) + 1] != 0.0) {
            cplx p(1.0, 0.0);
            double fact = 1.0;
            for (int j = 1; j <= order_; ++j) {
                p *= cplx(0.0, y);
                fact *= j;
            }
            out += 0.5 * tau * g[static_cast<std::size_t>(order_) + 1] * p / fact;
        }
        if (dtau != 0.0) {
            cplx sum(0.0, 0.0), p(1.0, 0.0);
            double fact = 1.0;
            for (int j = 0; j <= order_; ++j) {
                if (j > 0) {
                    p *= cplx(0.0, y);
                    fact *= j;
                }
                sum += g[j] * p / fact;
            }
            out += cplx(0.0, 0.5) * dtau * sum;
        }
        return out;
    }

    cplx dbar(double x, double y) const { return dbar(profile(order_ + 1, x), y); }

private:
    SwitchFunction rho_;
    SwitchFunction ramp_;
    SwitchFunction cut_;
    int order_;
};

// g(H) = (1/pi) integral of dbar(g~)(z) (H - z)^{-1} over the plane, by the
// midpoint rule on the upper half plus its Hermitian mirror. Resolvents come
// from LU solves only.
inline Matrix hs_function(const Matrix& h, const HsExtension& ext, double step) {
    detail::check_square(h, "hs_function");
    if (!(step > 0.0)) throw std::invalid_argument("hs_function: step must be positive");
    const Eigen::Index n = h.rows();
    const double xlo = ext.support_lo() - step;
    const double xhi = ext.support_hi() + step;
    const int nx = std::max(1, static_cast<int>(std::ceil((xhi - xlo) / step)));
    const double hx = (xhi - xlo) / nx;
    const int ny = std::max(1, static_cast<int>(std::ceil(ext.cutoff_hi() / step)));
    const double hy = ext.cutoff_hi() / ny;
    const Matrix id = Matrix::Identity(n, n);
    Matrix acc = Matrix::Zero(n, n);
    for (int ix = 0; ix < nx; ++ix) {
        const double x = xlo + (ix + 0.5) * hx;
        const std::vector<double> g = ext.profile(ext.order() + 1, x);
        if (std::all_of(g.begin(), g.end(), [](double v) { return v == 0.0; })) continue;
        for (int iy = 0; iy < ny; ++iy) {
            const double y = (iy + 0.5) * hy;
            const cplx w = ext.dbar(g, y);
            if (w == cplx(0.0, 0.0)) continue;
            Matrix shifted = h;
            shifted.diagonal().array() -= cplx(x, y);
            acc += (w * hx * hy) * LuSolver(std::move(shifted)).solve(id);
        }
    }
    acc /= std::numbers::pi;
    return acc + Matrix(acc.adjoint());
}

// Operator-norm deviation between rho(H) computed through the resolvent
// integral and through the eigendecomposition.
inline double hs_validate(const Matrix& h, const SwitchFunction& rho, int order, double step) {
    detail::check_square(h, "hs_validate");
    if (h.rows() > 64)
        throw std::invalid_argument("hs_validate: dimension capped at 64");
    const double lo = std::min(spectrum_floor(h), rho.a());
    const HsExtension ext(rho, lo - 1.5, lo - 0.5, order);
    const Matrix via_integral = hs_function(h, ext, step);
    const EigenSystem es = eig_dense(h);
    const Matrix via_eig = apply_function(es, [&](double lam) { return rho.value(lam); });
    return spectral_norm(via_integral - via_eig);
}

} // namespace chernbox
