#include "chernbox/ensemble.hpp"

#include <cstdio>

// Small disordered ensemble: edge index, Chern marker, and the refined bulk
// index averaged over disorder realizations, persisted as JSON + CSV.
int main() {
    using namespace chernbox;
    EnsembleSpec spec;
    spec.delta = 1.0;
    spec.L = 8;
    spec.t = 0.3;
    spec.eta = 6.0;
    spec.a = -0.4;
    spec.b = 0.4;
    spec.realizations = 8;
    spec.master_seed = 2024;
    spec.workers = 1;

    const EnsembleResult res = run_ensemble(spec);
    std::printf("L = %d, t = %.2f, N = %d (failures %d)\n", spec.L, spec.t, spec.realizations,
                res.failures);
    std::printf("edge    = %.6f +/- %.6f\n", res.aggregates.edge.mean, res.aggregates.edge.stderr_);
    std::printf("marker  = %.6f +/- %.6f\n", res.aggregates.marker.mean,
                res.aggregates.marker.stderr_);
    std::printf("refined = %.6f +/- %.6f\n", res.aggregates.refined.mean,
                res.aggregates.refined.stderr_);

    int edge_modes = 0, bulk_modes = 0;
    for (const IndexReport& rep : res.reports)
        for (const ModeRecord& mode : rep.ingap_modes) (mode.edge ? edge_modes : bulk_modes) += 1;
    std::printf("in-gap modes: %d edge, %d bulk-localized\n", edge_modes, bulk_modes);

    persist(res, "disordered_ensemble");
    std::printf("wrote disordered_ensemble.json and disordered_ensemble.csv\n");
    return 0;
}
