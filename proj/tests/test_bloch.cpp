#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "chernbox/bloch.hpp"
#include "chernbox/spectral.hpp"

using namespace chernbox;

namespace {

using Unit = std::array<double, 3>;

Unit pauli_direction(const HoppingKernel& kernel, double k1, double k2) {
    const Matrix h = bloch_matrix(kernel, {k1, k2}).h;
    const double dx = h(0, 1).real();
    const double dy = -h(0, 1).imag();
    const double dz = h(0, 0).real();
    const double n = std::sqrt(dx * dx + dy * dy + dz * dz);
    return {dx / n, dy / n, dz / n};
}

double triple(const Unit& a, const Unit& b, const Unit& c) {
    return a[0] * (b[1] * c[2] - b[2] * c[1]) + a[1] * (b[2] * c[0] - b[0] * c[2]) +
           a[2] * (b[0] * c[1] - b[1] * c[0]);
}

double dot(const Unit& a, const Unit& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

// Signed solid angle of the spherical triangle (a, b, c).
double solid_angle(const Unit& a, const Unit& b, const Unit& c) {
    return 2.0 * std::atan2(triple(a, b, c), 1.0 + dot(a, b) + dot(b, c) + dot(c, a));
}

// Degree of the unit Pauli vector as a map from the Brillouin torus to the
// sphere, accumulated from spherical triangle areas. Exact integer once the
// grid resolves the map, so it is an oracle independent of the plaquette
// field-strength route.
int pauli_winding(const HoppingKernel& kernel, int n) {
    std::vector<Unit> field(static_cast<size_t>(n) * n);
    const double step = 2.0 * M_PI / n;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            field[static_cast<size_t>(i) * n + j] = pauli_direction(kernel, i * step, j * step);
    const auto at = [&](int i, int j) -> const Unit& {
        return field[static_cast<size_t>((i % n + n) % n) * n + (j % n + n) % n];
    };
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const Unit& a = at(i, j);
            const Unit& b = at(i + 1, j);
            const Unit& c = at(i + 1, j + 1);
            const Unit& d = at(i, j + 1);
            total += solid_angle(a, b, c) + solid_angle(a, c, d);
        }
    }
    const double deg = total / (4.0 * M_PI);
    REQUIRE(std::abs(deg - std::round(deg)) < 1e-9);
    return static_cast<int>(std::round(deg));
}

}  // namespace

TEST_CASE("Bloch symbol is pinned at the zone center", "[bloch]") {
    const double delta = 0.7;
    const HoppingKernel kernel = build_qwz_kernel(delta);
    const Matrix h0 = bloch_matrix(kernel, {0.0, 0.0}).h;
    REQUIRE(std::abs(h0(0, 0) - cplx(delta + 2.0, 0.0)) < 1e-15);
    REQUIRE(std::abs(h0(1, 1) - cplx(-delta - 2.0, 0.0)) < 1e-15);
    REQUIRE(std::abs(h0(0, 1)) < 1e-15);
    REQUIRE(std::abs(h0(1, 0)) < 1e-15);

    const Matrix hpi = bloch_matrix(kernel, {M_PI, M_PI}).h;
    REQUIRE(std::abs(hpi(0, 0) - cplx(delta - 2.0, 0.0)) < 1e-12);
    REQUIRE(std::abs(hpi(0, 1)) < 1e-12);
}

TEST_CASE("Bloch symbol is Hermitian on a k grid", "[bloch]") {
    const HoppingKernel kernel = build_qwz_kernel(0.3);
    for (int i = 0; i < 7; ++i) {
        for (int j = 0; j < 7; ++j) {
            const Matrix h = bloch_matrix(kernel, {2.0 * M_PI * i / 7.0, 2.0 * M_PI * j / 7.0}).h;
            REQUIRE((h - h.adjoint()).cwiseAbs().maxCoeff() < 1e-15);
        }
    }
}

TEST_CASE("periodic box spectrum equals the Bloch multiset", "[bloch]") {
    const int L = 3;
    const int side = 2 * L + 1;
    const HoppingKernel kernel = build_qwz_kernel(1.0);

    BoxHamiltonian box = assemble_hamiltonian(kernel, nullptr, BoundaryCondition::periodic(), L);
    EigenSystem es = eig(box);

    std::vector<double> bloch_levels;
    for (int i = 0; i < side; ++i) {
        for (int j = 0; j < side; ++j) {
            const Matrix h =
                bloch_matrix(kernel, {2.0 * M_PI * i / side, 2.0 * M_PI * j / side}).h;
            const RealVector ev = hermitian_eigenvalues(h);
            for (Eigen::Index b = 0; b < ev.size(); ++b) bloch_levels.push_back(ev[b]);
        }
    }
    std::sort(bloch_levels.begin(), bloch_levels.end());

    REQUIRE(static_cast<Eigen::Index>(bloch_levels.size()) == es.eigenvalues.size());
    for (Eigen::Index k = 0; k < es.eigenvalues.size(); ++k)
        REQUIRE(std::abs(es.eigenvalues[k] - bloch_levels[static_cast<size_t>(k)]) < 1e-9);
}

TEST_CASE("plaquette invariant matches the winding oracle", "[bloch]") {
    struct Row {
        double delta;
        int expected;
    };
    const Row table[] = {{1.0, 1}, {-1.0, -1}, {0.5, 1}, {3.0, 0}, {-3.0, 0}, {-2.5, 0}};
    for (const Row& row : table) {
        const HoppingKernel kernel = build_qwz_kernel(row.delta);
        const ChernResult res = chern_number_fhs(kernel, 0.0, 24);
        REQUIRE(res.chern == row.expected);
        REQUIRE(std::abs(res.raw_sum - res.chern) < 1e-6);
        // Fermi projection Chern number is minus the degree of the Pauli map.
        REQUIRE(pauli_winding(kernel, 48) == -row.expected);
    }
}

TEST_CASE("plaquette invariant is gauge invariant", "[bloch]") {
    const HoppingKernel kernel = build_qwz_kernel(1.0);
    const ChernResult plain = chern_number_fhs(kernel, 0.0, 24, 0);
    for (uint64_t seed : {7u, 99u}) {
        const ChernResult twirled = chern_number_fhs(kernel, 0.0, 24, seed);
        REQUIRE(twirled.chern == plain.chern);
        REQUIRE(std::abs(twirled.raw_sum - plain.raw_sum) < 1e-9);
    }
}

TEST_CASE("gap verification matches closed forms", "[bloch]") {
    const GapResult g1 = verify_gap(build_qwz_kernel(1.0), 0.0, 16);
    REQUIRE(g1.gapped);
    REQUIRE(std::abs(g1.width - 1.0) < 1e-6);

    const GapResult g0 = verify_gap(build_qwz_kernel(0.0), 0.0, 16);
    REQUIRE_FALSE(g0.gapped);

    const GapResult g3 = verify_gap(build_qwz_kernel(3.0), 0.0, 16);
    REQUIRE(g3.gapped);
    REQUIRE(std::abs(g3.width - 1.0) < 1e-6);

    const GapResult gh = verify_gap(build_qwz_kernel(-0.5), 0.0, 16);
    REQUIRE(gh.gapped);
    REQUIRE(std::abs(gh.width - 0.5) < 1e-6);
}

TEST_CASE("a Fermi level inside a band is rejected", "[bloch]") {
    const HoppingKernel kernel = build_qwz_kernel(1.0);
    REQUIRE_THROWS_AS(chern_number_fhs(kernel, 1.5, 24), std::runtime_error);
    REQUIRE_THROWS_AS(chern_number_fhs(kernel, 0.0, 3), std::invalid_argument);
    REQUIRE_THROWS_AS(verify_gap(kernel, 0.0, 4), std::invalid_argument);
}
