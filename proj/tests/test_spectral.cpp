#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <complex>
#include <vector>

#include "chernbox/rng.hpp"
#include "chernbox/spectral.hpp"

using namespace chernbox;

namespace {

BoxHamiltonian disordered_sample(int L, double t, uint64_t master, int index) {
    const HoppingKernel kernel = build_qwz_kernel(1.0);
    const DisorderField field = sample_disorder(L, 2, 6.0, t, master, index);
    return assemble_hamiltonian(kernel, &field, BoundaryCondition::simple(), L);
}

double windowed_trace_abs(const Matrix& m, const BoxGeometry& g, int ell) {
    cplx acc(0.0, 0.0);
    for (int s = 0; s < g.sites(); ++s) {
        const Disp n = g.coords(s);
        if (std::max(std::abs(n[0]), std::abs(n[1])) > ell) continue;
        for (int c = 0; c < g.d; ++c) acc += m(s * g.d + c, s * g.d + c);
    }
    return std::abs(acc);
}

}  // namespace

TEST_CASE("switch function boundary values are exact", "[spectral]") {
    const SwitchFunction rho(-0.4, 0.4);
    REQUIRE(rho.a() == -0.4);
    REQUIRE(rho.b() == 0.4);
    REQUIRE(rho.value(-0.4) == 1.0);
    REQUIRE(rho.value(0.4) == 0.0);
    REQUIRE(rho.value(-2.0) == 1.0);
    REQUIRE(rho.value(2.0) == 0.0);
    REQUIRE(rho.value(0.0) == 0.5);
    REQUIRE(rho.derivative(0.0) < 0.0);
    REQUIRE(rho.derivative(-0.4) == 0.0);
    REQUIRE(rho.derivative(0.4) == 0.0);
    REQUIRE(rho.derivative(5, -0.41) == 0.0);
    for (double x : {0.05, 0.13, 0.31}) {
        REQUIRE(std::abs(rho.value(x) + rho.value(-x) - 1.0) < 1e-14);
        REQUIRE(rho.value(x) > 0.0);
        REQUIRE(rho.value(x) < 1.0);
    }
}

TEST_CASE("switch derivative integrates to minus one", "[spectral]") {
    const SwitchFunction rho(-0.7, 0.2);
    const int n = 4000;
    const double h = (rho.b() - rho.a()) / n;
    double acc = rho.derivative(rho.a()) + rho.derivative(rho.b());
    for (int i = 1; i < n; ++i)
        acc += (i % 2 ? 4.0 : 2.0) * rho.derivative(rho.a() + i * h);
    acc *= h / 3.0;
    REQUIRE(std::abs(acc + 1.0) < 1e-8);
}

TEST_CASE("switch derivatives agree with finite differences", "[spectral]") {
    const SwitchFunction rho(-0.4, 0.4);
    const double h = 1e-6;
    for (double x : {-0.3, -0.1, 0.0, 0.17, 0.35}) {
        const double fd1 = (rho.value(x + h) - rho.value(x - h)) / (2.0 * h);
        REQUIRE(std::abs(fd1 - rho.derivative(x)) < 1e-5);
        const double fd2 = (rho.derivative(x + h) - rho.derivative(x - h)) / (2.0 * h);
        REQUIRE(std::abs(fd2 - rho.derivative(2, x)) < 1e-4 * std::max(1.0, std::abs(fd2)));
    }
    const auto all = rho.derivatives(6, 0.12);
    for (int k = 0; k <= 6; ++k) REQUIRE(all[static_cast<size_t>(k)] == rho.derivative(k, 0.12));
    REQUIRE(rho.derivatives(0, 0.12)[0] == rho.value(0.12));
    REQUIRE_THROWS_AS(rho.derivatives(SwitchFunction::kMaxDerivative + 1, 0.0),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(SwitchFunction(0.4, -0.4), std::invalid_argument);
}

TEST_CASE("dense eigensystem reconstructs the operator", "[spectral]") {
    BoxHamiltonian h = disordered_sample(4, 0.3, 314, 0);
    const EigenSystem es = eig(h);
    REQUIRE(es.eigenvalues.size() == h.geom.dim());
    const Matrix rebuilt =
        es.eigenvectors * es.eigenvalues.cast<cplx>().asDiagonal() * es.eigenvectors.adjoint();
    REQUIRE((rebuilt - h.matrix).cwiseAbs().maxCoeff() < 1e-12);
    const Matrix gram = es.eigenvectors.adjoint() * es.eigenvectors;
    REQUIRE((gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() < 1e-12);
    for (Eigen::Index k = 1; k < es.eigenvalues.size(); ++k)
        REQUIRE(es.eigenvalues[k - 1] <= es.eigenvalues[k]);
}

TEST_CASE("spectral slice matches the filtered dense solve", "[spectral]") {
    BoxHamiltonian h = disordered_sample(5, 0.3, 314, 1);
    const EigenSystem es = eig(h);
    const SpectralSlice slice = eig_slice(h.matrix, -0.4, 0.4);

    std::vector<double> inside;
    for (Eigen::Index k = 0; k < es.eigenvalues.size(); ++k)
        if (es.eigenvalues[k] > -0.4 && es.eigenvalues[k] < 0.4)
            inside.push_back(es.eigenvalues[k]);

    REQUIRE(static_cast<Eigen::Index>(inside.size()) == slice.eigenvalues.size());
    for (Eigen::Index k = 0; k < slice.eigenvalues.size(); ++k) {
        REQUIRE(std::abs(slice.eigenvalues[k] - inside[static_cast<size_t>(k)]) < 1e-10);
        const Vector res = h.matrix * slice.eigenvectors.col(k) -
                           slice.eigenvalues[k] * slice.eigenvectors.col(k);
        REQUIRE(res.norm() < 1e-10);
    }
    const Matrix gram = slice.eigenvectors.adjoint() * slice.eigenvectors;
    REQUIRE((gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("occupied count splits the spectrum at the level", "[spectral]") {
    RealVector ev(5);
    ev << -2.0, -0.5, 0.1, 0.1, 3.0;
    REQUIRE(occupied_count(ev, 0.0) == 2);
    REQUIRE(occupied_count(ev, -3.0) == 0);
    REQUIRE(occupied_count(ev, 4.0) == 5);
}

TEST_CASE("spectral projector is an orthogonal projector", "[spectral]") {
    BoxHamiltonian h = disordered_sample(4, 0.3, 99, 0);
    const EigenSystem es = eig(h);
    const Matrix p = spectral_projector(es, 0.0);
    REQUIRE((p - p.adjoint()).cwiseAbs().maxCoeff() < 1e-14);
    REQUIRE((p * p - p).cwiseAbs().maxCoeff() < 1e-10);
    const double tr = p.trace().real();
    REQUIRE(std::abs(tr - occupied_count(es, 0.0)) < 1e-10);
    REQUIRE_THROWS_AS(spectral_projector(es, es.eigenvalues[0]), std::runtime_error);
}

TEST_CASE("matrix functions follow the eigenvalue morphism", "[spectral]") {
    BoxHamiltonian h = disordered_sample(3, 0.3, 7, 0);
    const EigenSystem es = eig(h);
    const Matrix ident = apply_function(es, [](double) { return 1.0; });
    REQUIRE((ident - Matrix::Identity(ident.rows(), ident.cols())).cwiseAbs().maxCoeff() < 1e-12);
    const Matrix same = apply_function(es, [](double x) { return x; });
    REQUIRE((same - h.matrix).cwiseAbs().maxCoeff() < 1e-12);
    const Matrix cubed = apply_function(es, [](double x) { return x * x * x - 2.0 * x; });
    const Matrix direct = h.matrix * h.matrix * h.matrix - 2.0 * h.matrix;
    REQUIRE((cubed - direct).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("switch of a gapped operator is the Fermi projector", "[spectral]") {
    const HoppingKernel kernel = build_qwz_kernel(1.0);
    BoxHamiltonian h = assemble_hamiltonian(kernel, nullptr, BoundaryCondition::periodic(), 4);
    const EigenSystem es = eig(h);
    const SwitchFunction rho(-0.4, 0.4);
    for (Eigen::Index k = 0; k < es.eigenvalues.size(); ++k)
        REQUIRE(rho.derivative(es.eigenvalues[k]) == 0.0);
    const Matrix smooth = apply_function(es, [&](double x) { return rho.value(x); });
    const Matrix p = spectral_projector(es, 0.0);
    REQUIRE((smooth - p).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("Gershgorin floor bounds the spectrum from below", "[spectral]") {
    BoxHamiltonian h = disordered_sample(3, 0.5, 21, 0);
    const EigenSystem es = eig(h);
    REQUIRE(spectrum_floor(h.matrix) <= es.eigenvalues[0] + 1e-12);
}

TEST_CASE("resolvent integral reproduces the switch of small operators", "[spectral]") {
    SplitMix64 rng(2718);
    const int n = 24;
    Matrix m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            m(i, j) = cplx(2.0 * rng.next_double() - 1.0, 2.0 * rng.next_double() - 1.0);
    Matrix h = 0.5 * (m + Matrix(m.adjoint()));
    const double radius = hermitian_eigenvalues(h).cwiseAbs().maxCoeff();
    h *= 3.0 / radius;

    const SwitchFunction rho(-0.4, 0.4);
    REQUIRE(hs_validate(h, rho, 3, 0.01) <= 1e-2);

    Matrix big = Matrix::Zero(65, 65);
    REQUIRE_THROWS_AS(hs_validate(big, rho, 3, 0.01), std::invalid_argument);
    REQUIRE_THROWS_AS(HsExtension(rho, -1.0, 0.0, 3), std::invalid_argument);
}

TEST_CASE("windowed traces of the commutator defect grow subquadratically", "[spectral]") {
    BoxHamiltonian h = disordered_sample(16, 0.3, 20250818, 0);
    const EigenSystem es = eig(h);
    const Matrix p = spectral_projector(es, 0.0);
    const Matrix x1 = position_diagonal(h.geom, 1).cast<cplx>().asDiagonal();
    const Matrix b = p * x1 - x1 * p;
    const Matrix defect = p * b - b * p;

    std::vector<double> ls, ts;
    for (int ell : {4, 6, 8, 10}) {
        const double t = windowed_trace_abs(defect, h.geom, ell);
        REQUIRE(t > 0.0);
        ls.push_back(std::log(static_cast<double>(ell)));
        ts.push_back(std::log(t));
    }
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double n = static_cast<double>(ls.size());
    for (size_t i = 0; i < ls.size(); ++i) {
        sx += ls[i];
        sy += ts[i];
        sxx += ls[i] * ls[i];
        sxy += ls[i] * ts[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    REQUIRE(slope < 2.0);
}
