#pragma once

#include <string>
#include <vector>

#include "abf/config.hpp"
#include "abf/diagnostics.hpp"
#include "abf/field.hpp"
#include "abf/fokker_planck.hpp"

namespace abf {

/** Initial density used by time-dependent runs. */
DensityField initial_density(const TorusGrid& grid, InitialKind kind, double amplitude);

/** Named observable evaluated on the grid ("cos_x", "sin_x", "cos_2x", "cos_y", "sin_y"). */
ScalarField observable_field(const TorusGrid& grid, const std::string& name);

/** One output row of a density-evolution run. */
struct TrajectoryRow {
    double t;
    double mass_drift;
    double marginal_entropy; // H(pi_xi | uniform)
    double marginal_sup;     // sup |pi_xi - 1|
    double bias_error;       // || B_t - B_ref ||_2
    double E;                // H(pi | pi_ref)
    double E_M;
    double E_m;
    double I_M;
    double tv;
};

struct PdeRunResult {
    std::vector<TrajectoryRow> rows;
    PdeState final_state;
    DensityField pi_ref;
    VectorField b_ref; // on the xi grid
    double dt;
};

/** In-memory density-evolution run (the CSV engine is a thin wrapper). */
PdeRunResult run_pde(const ExperimentConfig& cfg);

/** Exit status plus the artifact paths a run produced. */
struct RunOutcome {
    int exit_code = 0; // 0 ok, 2 config, 3 solver, 4 non-convergence, 5 io
    std::string message;
    std::vector<std::string> artifacts;
};

/**
 * Validate, dispatch on cfg.engine, write CSV/binary artifacts and a manifest
 * into out_dir. Exceptions are mapped to the documented exit codes; nothing
 * is written when validation fails.
 */
RunOutcome run_experiment(const ExperimentConfig& cfg, const std::string& out_dir);

} // namespace abf
