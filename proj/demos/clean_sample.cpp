#include "chernbox/bloch.hpp"
#include "chernbox/indices.hpp"

#include <cstdio>

// Clean two-band sample at delta = 1: momentum-space invariant, spectral gap,
// and the finite-box edge index converging toward the Chern number.
int main() {
    using namespace chernbox;
    const double delta = 1.0;
    const auto kernel = build_qwz_kernel(delta);

    const ChernResult chern = chern_number_fhs(kernel, 0.0, 24);
    const GapResult gap = verify_gap(kernel, 0.0, 24);
    std::printf("delta = %.2f: chern = %d (raw %.12f), gap width = %.6f\n", delta, chern.chern,
                chern.raw_sum, gap.width);

    const SwitchFunction rho(-0.4, 0.4);
    std::printf("%4s %10s %12s %12s\n", "L", "sites", "edge index", "|edge - C|");
    for (int L : {4, 6, 8, 10}) {
        const auto h = assemble_hamiltonian(kernel, nullptr, BoundaryCondition::simple(), L);
        const auto slice = eig_slice(h.matrix, rho.a(), rho.b());
        const EdgeIndexValue e = edge_index(h, slice, rho);
        std::printf("%4d %10d %12.6f %12.6f\n", L, h.geom.sites(), e.value,
                    std::abs(e.value - chern.chern));
    }

    const auto h = assemble_hamiltonian(kernel, nullptr, BoundaryCondition::simple(), 8);
    const EigenSystem es = eig(h);
    const int occ = occupied_count(es, 0.0);
    const double marker = chern_marker_occupied(es.eigenvectors.leftCols(occ), h.geom, 0.5);
    std::printf("L = 8 central-window Chern marker = %.6f\n", marker);
    return 0;
}
