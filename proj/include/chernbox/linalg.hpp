#pragma once

#include <Eigen/Dense>
#include <lapacke.h>

#include <complex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace chernbox {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

namespace detail {

inline lapack_complex_double* lap(cplx* p) {
    return reinterpret_cast<lapack_complex_double*>(p);
}

inline void check_square(const Matrix& a, const char* who) {
    if (a.rows() != a.cols())
        throw std::invalid_argument(std::string(who) + ": square matrix required");
}

[[noreturn]] inline void lapack_fail(const char* routine, lapack_int info) {
    throw std::runtime_error(std::string(routine) + " failed, info = " + std::to_string(info));
}

} // namespace detail

// Full Hermitian eigendecomposition (zheevd). a is overwritten with the
// eigenvectors, column k belonging to w[k]; w comes back ascending.
inline void hermitian_eig_inplace(Matrix& a, RealVector& w) {
    detail::check_square(a, "hermitian_eig_inplace");
    const lapack_int n = static_cast<lapack_int>(a.rows());
    w.resize(n);
    if (n == 0) return;
    lapack_int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'L', n,
                                     detail::lap(a.data()), n, w.data());
    if (info != 0) detail::lapack_fail("zheevd", info);
}

// Ascending eigenvalues only.
inline RealVector hermitian_eigenvalues(Matrix a) {
    detail::check_square(a, "hermitian_eigenvalues");
    const lapack_int n = static_cast<lapack_int>(a.rows());
    RealVector w(n);
    if (n == 0) return w;
    lapack_int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'N', 'L', n,
                                     detail::lap(a.data()), n, w.data());
    if (info != 0) detail::lapack_fail("zheevd", info);
    return w;
}

// Eigenpairs with eigenvalue in the half-open interval (vl, vu] (zheevr range
// query). Returns the count m; w holds the m ascending eigenvalues and z the
// m matching columns.
inline int hermitian_eig_range(Matrix a, double vl, double vu, RealVector& w, Matrix& z) {
    detail::check_square(a, "hermitian_eig_range");
    const lapack_int n = static_cast<lapack_int>(a.rows());
    RealVector wfull(n);
    Matrix zfull(n, n > 0 ? n : 0);
    std::vector<lapack_int> isuppz(2 * std::max<lapack_int>(n, 1));
    lapack_int m = 0;
    if (n > 0) {
        lapack_int info = LAPACKE_zheevr(LAPACK_COL_MAJOR, 'V', 'V', 'L', n,
                                         detail::lap(a.data()), n, vl, vu, 0, 0,
                                         0.0, &m, wfull.data(),
                                         detail::lap(zfull.data()), n, isuppz.data());
        if (info != 0) detail::lapack_fail("zheevr", info);
    }
    w = wfull.head(m);
    z = zfull.leftCols(m);
    return static_cast<int>(m);
}

// LU factorization of a general complex matrix, reusable across right-hand
// sides. trans 'N' solves A X = B, trans 'C' solves A^H X = B.
class LuSolver {
  public:
    explicit LuSolver(Matrix a) : lu_(std::move(a)), ipiv_(lu_.rows()) {
        detail::check_square(lu_, "LuSolver");
        const lapack_int n = static_cast<lapack_int>(lu_.rows());
        if (n == 0) return;
        lapack_int info = LAPACKE_zgetrf(LAPACK_COL_MAJOR, n, n,
                                         detail::lap(lu_.data()), n, ipiv_.data());
        if (info != 0) detail::lapack_fail("zgetrf", info);
    }

    void solve_in_place(Matrix& b, char trans = 'N') const {
        const lapack_int n = static_cast<lapack_int>(lu_.rows());
        if (b.rows() != n)
            throw std::invalid_argument("LuSolver::solve_in_place: dimension mismatch");
        if (n == 0 || b.cols() == 0) return;
        lapack_int info = LAPACKE_zgetrs(LAPACK_COL_MAJOR, trans, n,
                                         static_cast<lapack_int>(b.cols()),
                                         detail::lap(const_cast<cplx*>(lu_.data())), n,
                                         ipiv_.data(), detail::lap(b.data()), n);
        if (info != 0) detail::lapack_fail("zgetrs", info);
    }

    Matrix solve(Matrix b, char trans = 'N') const {
        solve_in_place(b, trans);
        return b;
    }

    Eigen::Index dim() const { return lu_.rows(); }

  private:
    Matrix lu_;
    std::vector<lapack_int> ipiv_;
};

// Number of eigenvalues strictly below zero, by Sylvester inertia of the
// Bunch-Kaufman LDL^H factorization (zhetrf). A 2x2 pivot block is counted by
// its own two eigenvalues; a singular 1x1 pivot (eigenvalue exactly at the
// shift) is not counted as negative.
inline int negative_inertia(Matrix a) {
    detail::check_square(a, "negative_inertia");
    const lapack_int n = static_cast<lapack_int>(a.rows());
    if (n == 0) return 0;
    std::vector<lapack_int> ipiv(n);
    lapack_int info = LAPACKE_zhetrf(LAPACK_COL_MAJOR, 'L', n,
                                     detail::lap(a.data()), n, ipiv.data());
    if (info < 0) detail::lapack_fail("zhetrf", info);
    int neg = 0;
    for (lapack_int k = 0; k < n;) {
        if (ipiv[k] > 0) {
            if (std::real(a(k, k)) < 0.0) ++neg;
            ++k;
        } else {
            const double p = std::real(a(k, k));
            const double q = std::real(a(k + 1, k + 1));
            const double off = std::abs(a(k + 1, k));
            const double mid = 0.5 * (p + q);
            const double disc = std::hypot(0.5 * (p - q), off);
            if (mid - disc < 0.0) ++neg;
            if (mid + disc < 0.0) ++neg;
            k += 2;
        }
    }
    return neg;
}

// Number of eigenvalues of a Hermitian matrix strictly below x.
inline int eigenvalue_count_below(const Matrix& a, double x) {
    Matrix shifted = a;
    shifted.diagonal().array() -= x;
    return negative_inertia(std::move(shifted));
}

// Largest singular value (zgesdd, singular values only).
inline double spectral_norm(Matrix a) {
    const lapack_int m = static_cast<lapack_int>(a.rows());
    const lapack_int n = static_cast<lapack_int>(a.cols());
    if (m == 0 || n == 0) return 0.0;
    std::vector<double> s(std::min(m, n));
    lapack_int info = LAPACKE_zgesdd(LAPACK_COL_MAJOR, 'N', m, n,
                                     detail::lap(a.data()), m, s.data(),
                                     nullptr, 1, nullptr, 1);
    if (info != 0) detail::lapack_fail("zgesdd", info);
    return s[0];
}

} // namespace chernbox
