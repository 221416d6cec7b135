#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "abf/config.hpp"
#include "abf/diagnostics.hpp"
#include "abf/errors.hpp"
#include "abf/experiment.hpp"
#include "abf/forces.hpp"

using namespace abf;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::string fresh_dir() {
    static int counter = 0;
    const auto base = std::filesystem::temp_directory_path() / "abf_experiment_tests";
    return (base / ("case_" + std::to_string(counter++))).string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

bool has_artifact(const RunOutcome& out, const std::string& suffix) {
    return std::any_of(out.artifacts.begin(), out.artifacts.end(), [&](const std::string& a) {
        return a.size() >= suffix.size() && a.compare(a.size() - suffix.size(), suffix.size(), suffix) == 0;
    });
}

ExperimentConfig small_pde_config() {
    ExperimentConfig cfg;
    cfg.resolution = {32, 32};
    cfg.t_end = 0.02;
    cfg.output_stride = 5;
    cfg.initial = InitialKind::SkewedX;
    cfg.init_amplitude = 0.2;
    return cfg;
}

} // namespace

TEST_CASE("initial densities have exact shapes and unit mass") {
    TorusGrid grid({16, 16}, 1);
    const DensityField uni = initial_density(grid, InitialKind::Uniform, 0.5);
    for (std::size_t i = 0; i < uni.size(); ++i) CHECK(uni[i] == 1.0);

    const double a = 0.3;
    const DensityField sx = initial_density(grid, InitialKind::SkewedX, a);
    const DensityField sxy = initial_density(grid, InitialKind::SkewedXY, a);
    for (int i = 0; i < 16; ++i)
        for (int j = 0; j < 16; ++j) {
            const std::size_t k = static_cast<std::size_t>(i) * 16 + j;
            const double x = i / 16.0, y = j / 16.0;
            CHECK(sx[k] == doctest::Approx(1.0 + a * std::cos(kTwoPi * x)).epsilon(1e-12));
            CHECK(sxy[k] == doctest::Approx((1.0 + a * std::cos(kTwoPi * x)) *
                                            (1.0 + 0.4 * std::cos(kTwoPi * y)))
                                .epsilon(1e-12));
        }
    CHECK(sx.field().mean() == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("observable fields sample the named coordinates") {
    TorusGrid grid({8, 8}, 1);
    const ScalarField cx = observable_field(grid, "cos_x");
    const ScalarField sy = observable_field(grid, "sin_y");
    const ScalarField c2x = observable_field(grid, "cos_2x");
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) {
            const std::size_t k = static_cast<std::size_t>(i) * 8 + j;
            CHECK(cx[k] == doctest::Approx(std::cos(kTwoPi * i / 8.0)).epsilon(1e-14));
            CHECK(sy[k] == doctest::Approx(std::sin(kTwoPi * j / 8.0)).epsilon(1e-14));
            CHECK(c2x[k] == doctest::Approx(std::cos(2.0 * kTwoPi * i / 8.0)).epsilon(1e-14));
        }
    CHECK_THROWS_AS(observable_field(grid, "momentum"), ConfigError);
}

TEST_CASE("pde run rows start from the verified initial entropies and decay") {
    const ExperimentConfig cfg = small_pde_config();
    const PdeRunResult run = run_pde(cfg);
    REQUIRE(run.rows.size() >= 3);
    CHECK(run.dt > 0.0);

    // Row zero is the initial state scored against the conservative reference.
    TorusGrid grid({32, 32}, 1);
    const ForceField force = ForceField::library(cfg.potential, cfg.perturbation, cfg.epsilon,
                                                 cfg.beta, cfg.dimension, cfg.seed);
    const ReferenceEquilibrium ref = free_energy(force, grid);
    const DensityField pi0 = initial_density(grid, cfg.initial, cfg.init_amplitude);
    CHECK(run.rows[0].t == 0.0);
    CHECK(run.rows[0].E ==
          doctest::Approx(relative_entropy(pi0, ref.muA)).epsilon(1e-10));
    CHECK(run.rows[0].marginal_entropy ==
          doctest::Approx(relative_entropy_uniform(pi0.marginal_xi())).epsilon(1e-10));
    CHECK(run.rows[0].tv == doctest::Approx(total_variation(pi0, ref.muA)).epsilon(1e-10));

    for (std::size_t i = 1; i < run.rows.size(); ++i) CHECK(run.rows[i].t > run.rows[i - 1].t);
    CHECK(run.rows.back().t == doctest::Approx(run.final_state.t));
    CHECK(run.rows.back().E < run.rows[0].E);
    CHECK(std::fabs(run.rows.back().mass_drift) <= 1e-10);

    // Emission pattern: every output_stride-th step plus the final step.
    const long total = static_cast<long>(std::ceil(cfg.t_end / run.dt - 1e-9));
    std::size_t expect = 1 + static_cast<std::size_t>(total / cfg.output_stride);
    if (total % cfg.output_stride != 0) ++expect;
    CHECK(run.rows.size() == expect);
}

TEST_CASE("experiment runner writes trajectory artifacts and a manifest") {
    const ExperimentConfig cfg = small_pde_config();
    const std::string dir = fresh_dir();
    const RunOutcome out = run_experiment(cfg, dir);
    CHECK(out.exit_code == 0);
    CHECK(out.message == "ok");
    CHECK(has_artifact(out, "trajectory.csv"));
    CHECK(has_artifact(out, "final_density.abft"));
    CHECK(has_artifact(out, "final_bias.abft"));
    CHECK(has_artifact(out, "manifest.toml"));
    for (const std::string& a : out.artifacts) CHECK(std::filesystem::exists(a));

    const std::string traj = slurp(dir + "/trajectory.csv");
    CHECK(traj.rfind("t,mass_drift,marginal_entropy,marginal_sup_error,bias_error_l2", 0) == 0);

    // The manifest echoes the effective config and parses back.
    const std::string manifest = slurp(dir + "/manifest.toml");
    CHECK(manifest.find("[provenance]") != std::string::npos);
    const ExperimentConfig echoed = parse_config_string(manifest);
    CHECK(echoed.t_end == cfg.t_end);
    CHECK(echoed.resolution == cfg.resolution);
    CHECK(echoed.initial == cfg.initial);

    // Byte-identical rerun.
    const std::string dir2 = fresh_dir();
    const RunOutcome again = run_experiment(cfg, dir2);
    CHECK(again.exit_code == 0);
    CHECK(slurp(dir2 + "/trajectory.csv") == traj);
}

TEST_CASE("experiment runner writes particle artifacts") {
    ExperimentConfig cfg;
    cfg.engine = Engine::Particles;
    cfg.n_particles = 2000;
    cfg.dt = 1e-3;
    cfg.t_end = 0.01;
    cfg.bins = {8};
    const std::string dir = fresh_dir();
    const RunOutcome out = run_experiment(cfg, dir);
    CHECK(out.exit_code == 0);
    CHECK(has_artifact(out, "particles.csv"));
    CHECK(has_artifact(out, "particles_bias.abft"));
    // The file opens with one or more '#' metadata comment lines; the column
    // header is the first uncommented line.
    std::istringstream body(slurp(dir + "/particles.csv"));
    std::string line;
    while (std::getline(body, line) && !line.empty() && line.front() == '#') {}
    CHECK(line.rfind("t,bin,center_0,occupancy,g_hat_0,b_hat_0,h_hat", 0) == 0);
}

TEST_CASE("experiment runner writes stationary artifacts") {
    ExperimentConfig cfg;
    cfg.engine = Engine::Stationary;
    cfg.resolution = {32, 32};
    cfg.method = BiasMethod::Pabf;
    const std::string dir = fresh_dir();
    const RunOutcome out = run_experiment(cfg, dir);
    CHECK(out.exit_code == 0);
    CHECK(has_artifact(out, "residual_history.csv"));
    CHECK(has_artifact(out, "stationary_summary.csv"));
    CHECK(has_artifact(out, "pi_inf.abft"));
    CHECK(has_artifact(out, "bias_b.abft"));
    CHECK(has_artifact(out, "bias_g.abft"));
    CHECK(has_artifact(out, "bias_h.abft"));
}

TEST_CASE("validation failures exit 2 and write nothing") {
    ExperimentConfig cfg = small_pde_config();
    cfg.dt = 1.0;
    const std::string dir = fresh_dir();
    const RunOutcome out = run_experiment(cfg, dir);
    CHECK(out.exit_code == 2);
    CHECK(out.message.find("stability") != std::string::npos);
    CHECK(out.artifacts.empty());
    CHECK_FALSE(std::filesystem::exists(dir));
}

TEST_CASE("solver failure in the inner stationary solve exits 3") {
    ExperimentConfig cfg;
    cfg.engine = Engine::Stationary;
    cfg.resolution = {32, 32};
    cfg.potential = PotentialKind::CosineCoupled;
    cfg.tol = 1e-30; // below the attainable Krylov floor
    const std::string dir = fresh_dir();
    const RunOutcome out = run_experiment(cfg, dir);
    CHECK(out.exit_code == 3);
    CHECK_FALSE(out.message.empty());
}

TEST_CASE("fixed point non-convergence exits 4 and leaves the residual history") {
    ExperimentConfig cfg;
    cfg.engine = Engine::Stationary;
    cfg.resolution = {32, 32};
    cfg.potential = PotentialKind::CosineCoupled;
    cfg.fp_tol = 1e-15;
    cfg.fp_max_iters = 1;
    const std::string dir = fresh_dir();
    const RunOutcome out = run_experiment(cfg, dir);
    CHECK(out.exit_code == 4);
    CHECK_FALSE(out.message.empty());
    CHECK(has_artifact(out, "residual_history.csv"));
    const std::string hist = slurp(dir + "/residual_history.csv");
    CHECK(hist.rfind("iteration,residual", 0) == 0);
}

TEST_CASE("sweep engine writes per-epsilon rows and a summary") {
    ExperimentConfig cfg;
    cfg.engine = Engine::Sweep;
    cfg.resolution = {32, 32};
    cfg.perturbation = PerturbationKind::Rotational;
    cfg.epsilons = {0.02, 0.04};
    cfg.observables = {"cos_x"};
    const std::string dir = fresh_dir();
    const RunOutcome out = run_experiment(cfg, dir);
    CHECK(out.exit_code == 0);
    CHECK(has_artifact(out, "sweep.csv"));
    CHECK(has_artifact(out, "sweep_summary.csv"));
    const std::string rows = slurp(dir + "/sweep.csv");
    CHECK(rows.rfind("epsilon,converged,grad_error", 0) == 0);
    CHECK(rows.find("bias_cos_x") != std::string::npos);
    // Header plus one line per epsilon.
    CHECK(std::count(rows.begin(), rows.end(), '\n') == 3);
}
