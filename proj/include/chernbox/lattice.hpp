#pragma once

#include "chernbox/linalg.hpp"
#include "chernbox/rng.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

namespace chernbox {

using Disp = std::array<int, 2>;

// Sites of the centered box Lambda_L are integer pairs n = (n1, n2) with
// |n1|, |n2| <= L. Enumeration is row-major in (n1, n2) with the d internal
// channels contiguous per site:
//   dof(n, c) = ((n1 + L) * (2L + 1) + (n2 + L)) * d + c.
struct BoxGeometry {
    int L = 0;
    int d = 1;

    int side() const { return 2 * L + 1; }
    int sites() const { return side() * side(); }
    int dim() const { return sites() * d; }
    int site_index(int n1, int n2) const { return (n1 + L) * side() + (n2 + L); }
    int dof(int n1, int n2, int c) const { return site_index(n1, n2) * d + c; }
    Disp coords(int site) const { return {site / side() - L, site % side() - L}; }
    bool contains(int n1, int n2) const { return std::abs(n1) <= L && std::abs(n2) <= L; }
};

// Coordinate of each dof along one axis (1 or 2), i.e. the diagonal of the
// position operator x_axis in the box enumeration.
inline RealVector position_diagonal(const BoxGeometry& g, int axis) {
    if (axis != 1 && axis != 2)
        throw std::invalid_argument("position_diagonal: axis must be 1 or 2");
    RealVector x(g.dim());
    for (int s = 0; s < g.sites(); ++s) {
        const Disp n = g.coords(s);
        const double v = (axis == 1) ? n[0] : n[1];
        for (int c = 0; c < g.d; ++c) x[s * g.d + c] = v;
    }
    return x;
}

// Periodic short-range Hamiltonian: d x d hopping blocks T(v) for |v|_1 <= 1
// plus the real on-site diagonal V (the gap-opening potential). Storing a hop
// always stores its adjoint at -v, so Hermiticity closure holds by
// construction. fermi_level records the energy the topological indices refer
// to (0 for the two-band model below).
struct HoppingKernel {
    int d = 0;
    double fermi_level = 0.0;
    std::map<Disp, Matrix> blocks;
    RealVector onsite;

    void set_hop(const Disp& v, const Matrix& block) {
        if (block.rows() != d || block.cols() != d)
            throw std::invalid_argument("HoppingKernel::set_hop: block must be d x d");
        const int norm1 = std::abs(v[0]) + std::abs(v[1]);
        if (norm1 > 1)
            throw std::invalid_argument("HoppingKernel::set_hop: |v|_1 <= 1 required");
        if (norm1 == 0) {
            if ((block - Matrix(block.adjoint())).cwiseAbs().maxCoeff() != 0.0)
                throw std::invalid_argument("HoppingKernel::set_hop: T(0) must be Hermitian");
            blocks[v] = block;
            return;
        }
        blocks[v] = block;
        blocks[{-v[0], -v[1]}] = block.adjoint();
    }

    const Matrix* block(const Disp& v) const {
        auto it = blocks.find(v);
        return it == blocks.end() ? nullptr : &it->second;
    }

    bool hermitian_closed() const {
        for (const auto& [v, b] : blocks) {
            const Matrix* rev = block({-v[0], -v[1]});
            if (rev == nullptr) return false;
            if ((*rev - Matrix(b.adjoint())).cwiseAbs().maxCoeff() != 0.0) return false;
        }
        return true;
    }
};

// Two-band square-lattice model with Pauli-structured nearest-neighbor hops
//   T(e1) = (sigma_z - i sigma_x)/2,  T(e2) = (sigma_z - i sigma_y)/2,
// and mass term delta * sigma_z on site.
inline HoppingKernel build_qwz_kernel(double delta) {
    if (!std::isfinite(delta))
        throw std::invalid_argument("build_qwz_kernel: delta must be finite");
    HoppingKernel k;
    k.d = 2;
    const cplx i(0.0, 1.0);
    Matrix t1(2, 2), t2(2, 2);
    t1 << 0.5, -0.5 * i,
          -0.5 * i, -0.5;
    t2 << 0.5, -0.5,
          0.5, -0.5;
    k.set_hop({1, 0}, t1);
    k.set_hop({0, 1}, t2);
    k.onsite = RealVector(2);
    k.onsite << delta, -delta;
    return k;
}

// Per-site, per-channel random couplings omega in [0, 1], drawn i.i.d. from
// the density eta * x^(eta-1) by inverse-CDF sampling u^(1/eta). Layout
// matches BoxGeometry: site-major, channels contiguous. t is the deformation
// strength used at assembly time (t = 0 clean, t = 1 fully random).
struct DisorderField {
    int L = 0;
    int d = 1;
    double eta = 6.0;
    double t = 1.0;
    std::uint64_t master_seed = 0;
    std::uint64_t realization_index = 0;
    std::vector<double> omega;
};

inline DisorderField sample_disorder(int L, int d, double eta, double t,
                                     std::uint64_t master_seed,
                                     std::uint64_t realization_index) {
    if (eta <= 0.0) throw std::invalid_argument("sample_disorder: eta must be positive");
    if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("sample_disorder: t must lie in [0, 1]");
    if (L < 1) throw std::invalid_argument("sample_disorder: L >= 1 required");
    if (d < 1) throw std::invalid_argument("sample_disorder: d >= 1 required");
    DisorderField f;
    f.L = L;
    f.d = d;
    f.eta = eta;
    f.t = t;
    f.master_seed = master_seed;
    f.realization_index = realization_index;
    const BoxGeometry g{L, d};
    f.omega.resize(static_cast<std::size_t>(g.dim()));
    SplitMix64 rng(derive_seed(master_seed, realization_index));
    const double inv_eta = 1.0 / eta;
    for (double& w : f.omega) w = std::pow(rng.next_double(), inv_eta);
    return f;
}

struct BoundaryCondition {
    enum class Kind { simple, periodic, decoupled } kind = Kind::simple;
    int inner_radius = 0;

    static BoundaryCondition simple() { return {}; }
    static BoundaryCondition periodic() { return {Kind::periodic, 0}; }
    static BoundaryCondition decoupled(int ell) { return {Kind::decoupled, ell}; }
};

struct BoxHamiltonian {
    BoxGeometry geom;
    BoundaryCondition bc;
    Matrix matrix;
};

// One boundary hop of the gluing operator F_L: the d x d block coupling site
// n to its wrap-around partner m on the opposite face.
struct GluingEntry {
    Disp n;
    Disp m;
    Matrix block;
};

// F_L(n, n -+ 2L e_i) = T(+-e_i) on the faces n_i = +-L. Hermitian as a set:
// every entry appears together with its adjoint partner.
inline std::vector<GluingEntry> gluing_operator(const HoppingKernel& kernel, int L) {
    if (L < 1) throw std::invalid_argument("gluing_operator: L >= 1 required");
    std::vector<GluingEntry> out;
    const std::array<Disp, 2> axes = {Disp{1, 0}, Disp{0, 1}};
    for (int axis = 0; axis < 2; ++axis) {
        const Disp e = axes[axis];
        for (int sign : {+1, -1}) {
            const Disp step{sign * e[0], sign * e[1]};
            const Matrix* hop = kernel.block(step);
            if (hop == nullptr) continue;
            for (int other = -L; other <= L; ++other) {
                Disp n, m;
                if (axis == 0) {
                    n = {sign * L, other};
                    m = {-sign * L, other};
                } else {
                    n = {other, sign * L};
                    m = {other, -sign * L};
                }
                out.push_back({n, m, *hop});
            }
        }
    }
    return out;
}

// Interior boundary of Lambda_L (sites with |n1| = L or |n2| = L) and the
// exterior boundary (the first ring outside, max-norm L + 1).
inline std::pair<std::vector<Disp>, std::vector<Disp>> boundary_sets(int L) {
    if (L < 1) throw std::invalid_argument("boundary_sets: L >= 1 required");
    std::vector<Disp> interior, exterior;
    for (int n1 = -L; n1 <= L; ++n1)
        for (int n2 = -L; n2 <= L; ++n2)
            if (std::max(std::abs(n1), std::abs(n2)) == L) interior.push_back({n1, n2});
    for (int n1 = -(L + 1); n1 <= L + 1; ++n1)
        for (int n2 = -(L + 1); n2 <= L + 1; ++n2)
            if (std::max(std::abs(n1), std::abs(n2)) == L + 1) exterior.push_back({n1, n2});
    return {interior, exterior};
}

// Dense Hermitian matrix of H_{omega,t} on Lambda_L. The on-site block at n
// is diag((1 - t(1 - omega_n^k)) V_k); hopping blocks come straight from the
// kernel, so the matrix is Hermitian bit-exactly by construction. Simple bc
// drops all cross-boundary hops, periodic bc adds the gluing operator, and
// decoupled(ell) zeroes every hop between Lambda_ell and its complement.
inline BoxHamiltonian assemble_hamiltonian(const HoppingKernel& kernel,
                                           const DisorderField* disorder,
                                           BoundaryCondition bc, int L) {
    if (kernel.d < 1) throw std::invalid_argument("assemble_hamiltonian: kernel.d >= 1 required");
    if (L < 1) throw std::invalid_argument("assemble_hamiltonian: L >= 1 required");
    if (kernel.onsite.size() != kernel.d)
        throw std::invalid_argument("assemble_hamiltonian: onsite potential must have d entries");
    if (disorder != nullptr && (disorder->L != L || disorder->d != kernel.d))
        throw std::invalid_argument("assemble_hamiltonian: disorder dimensions mismatch");
    const BoxGeometry g{L, kernel.d};
    BoxHamiltonian h{g, bc, Matrix::Zero(g.dim(), g.dim())};

    const auto in_core = [&](const Disp& n) {
        return std::max(std::abs(n[0]), std::abs(n[1])) <= bc.inner_radius;
    };

    for (int s = 0; s < g.sites(); ++s) {
        const Disp n = g.coords(s);
        for (const auto& [v, block] : kernel.blocks) {
            if (v[0] == 0 && v[1] == 0) continue;
            const Disp m{n[0] + v[0], n[1] + v[1]};
            if (!g.contains(m[0], m[1])) continue;
            if (bc.kind == BoundaryCondition::Kind::decoupled && in_core(n) != in_core(m))
                continue;
            h.matrix.block(g.dof(n[0], n[1], 0), g.dof(m[0], m[1], 0), g.d, g.d) = block;
        }
    }

    const Matrix* t0 = kernel.block({0, 0});
    for (int s = 0; s < g.sites(); ++s) {
        const int base = s * g.d;
        if (t0 != nullptr)
            h.matrix.block(base, base, g.d, g.d) += *t0;
        for (int c = 0; c < g.d; ++c) {
            double factor = 1.0;
            if (disorder != nullptr)
                factor = 1.0 - disorder->t * (1.0 - disorder->omega[static_cast<std::size_t>(base + c)]);
            h.matrix(base + c, base + c) += factor * kernel.onsite[c];
        }
    }

    if (bc.kind == BoundaryCondition::Kind::periodic) {
        for (const GluingEntry& e : gluing_operator(kernel, L)) {
            h.matrix.block(g.dof(e.n[0], e.n[1], 0), g.dof(e.m[0], e.m[1], 0), g.d, g.d)
                += e.block;
        }
    }
    return h;
}

// [H, x_axis](i, j) = (x_axis(j) - x_axis(i)) H(i, j); anti-Hermitian since
// both H and the position operator are Hermitian.
inline Matrix commutator_with_position(const BoxHamiltonian& h, int axis) {
    const RealVector x = position_diagonal(h.geom, axis);
    const Eigen::Index n = h.matrix.rows();
    Matrix c(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i)
            c(i, j) = (x[j] - x[i]) * h.matrix(i, j);
    return c;
}

} // namespace chernbox
