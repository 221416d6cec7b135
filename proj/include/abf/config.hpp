#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "abf/fokker_planck.hpp"
#include "abf/forces.hpp"

namespace abf {

/** Which computational engine a run drives. */
enum class Engine { Pde, Particles, Stationary, Sweep, Diagnose };

Engine engine_from_name(const std::string& name);
std::string engine_name(Engine e);

/** Initial density for time-dependent runs. */
enum class InitialKind { Uniform, SkewedX, SkewedXY };

InitialKind initial_kind_from_name(const std::string& name);
std::string initial_kind_name(InitialKind k);

/** Reference state used for trajectory error columns. */
enum class ReferenceKind { Conservative, FixedPoint, Uniform };

ReferenceKind reference_kind_from_name(const std::string& name);
std::string reference_kind_name(ReferenceKind k);

/**
 * Fully resolved experiment description. Defaults here are the documented
 * defaults of the config format; parse fills only the keys present, so a
 * rendered config echoes every effective value.
 */
struct ExperimentConfig {
    // [experiment]
    Engine engine = Engine::Pde;
    BiasMethod method = BiasMethod::Abf;
    std::uint64_t seed = 42;
    int threads = 1;
    std::string label = "run";

    // [force]
    PotentialKind potential = PotentialKind::CosineSeparable;
    PerturbationKind perturbation = PerturbationKind::None;
    double epsilon = 0.0;
    double beta = 1.0;
    int dimension = 2;

    // [grid]
    std::vector<int> resolution = {64, 64};
    int m = 1;

    // [run]
    double dt = 0.0; // 0 selects the stability-based automatic step
    double t_end = 1.0;
    int output_stride = 10;
    int bias_stride = 1;
    InitialKind initial = InitialKind::Uniform;
    double init_amplitude = 0.5;
    std::uint64_t n_particles = 100000;
    std::vector<int> bins = {32};
    std::vector<double> schedule; // particle snapshot times; empty means t_end only

    // [stationary]
    StationaryMethod solver = StationaryMethod::Krylov;
    double tol = 1e-10;
    int max_iters = 2000;
    double fp_tol = 1e-9;
    int fp_max_iters = 100;

    // [sweep]
    std::vector<double> epsilons = {0.01, 0.02, 0.04};
    double norm_p = 2.0;

    // [diagnostics]
    ReferenceKind reference = ReferenceKind::Conservative;
    double fit_start = 0.0;
    double fit_end = 0.0; // 0 means t_end
    std::vector<std::string> observables = {"cos_x"};
    int inequality_trials = 200;
    int audit_pairs = 100;
    int bootstrap_replicates = 200;
};

/**
 * Parse the key-value config format: [section] headers, key = value lines,
 * # comments, quoted strings, and [a, b, c] arrays. Unknown keys are errors;
 * a [provenance] section is ignored so emitted manifests parse back.
 */
ExperimentConfig parse_config_string(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

/** Apply one "section.key" = value override (CLI/API surface). */
void apply_override(ExperimentConfig& cfg, const std::string& dotted_key, const std::string& value);

/**
 * Full validation before any compute: dimension consistency, stability of an
 * explicit dt, sweep amplitude within the perturbation-size contract.
 */
void validate_config(const ExperimentConfig& cfg);

/** Canonical echo of every effective key, parseable by parse_config_string. */
std::string render_config(const ExperimentConfig& cfg);

} // namespace abf
