#include "abf/experiment.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>

#include "abf/errors.hpp"
#include "abf/io.hpp"
#include "abf/particles.hpp"

namespace abf {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::string fd(double x) { return io::format_double(x); }

} // namespace

DensityField initial_density(const TorusGrid& grid, InitialKind kind, double amplitude) {
    if (kind == InitialKind::Uniform) return DensityField::uniform(grid);
    ScalarField f(grid);
    std::span<double> v = f.values();
    const int n = grid.n();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const std::vector<double> p = grid.point(i);
        double val = 1.0 + amplitude * std::cos(kTwoPi * p[0]);
        if (kind == InitialKind::SkewedXY && n > 1)
            val *= 1.0 + 0.4 * std::cos(kTwoPi * p[static_cast<std::size_t>(n) - 1]);
        v[i] = val;
    }
    return DensityField::normalized(std::move(f));
}

ScalarField observable_field(const TorusGrid& grid, const std::string& name) {
    ScalarField f(grid);
    std::span<double> v = f.values();
    const std::size_t last = static_cast<std::size_t>(grid.n()) - 1;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const std::vector<double> p = grid.point(i);
        if (name == "cos_x") v[i] = std::cos(kTwoPi * p[0]);
        else if (name == "sin_x") v[i] = std::sin(kTwoPi * p[0]);
        else if (name == "cos_2x") v[i] = std::cos(2.0 * kTwoPi * p[0]);
        else if (name == "cos_y") v[i] = std::cos(kTwoPi * p[last]);
        else if (name == "sin_y") v[i] = std::sin(kTwoPi * p[last]);
        else throw ConfigError("unknown observable: " + name);
    }
    return f;
}

PdeRunResult run_pde(const ExperimentConfig& cfg) {
    const TorusGrid grid(cfg.resolution, cfg.m);
    const ForceField force = ForceField::library(cfg.potential, cfg.perturbation, cfg.epsilon,
                                                 cfg.beta, cfg.dimension, cfg.seed);
    const double dt = cfg.dt > 0.0 ? cfg.dt : PdeSolver::auto_dt(force, grid);
    PdeSolver solver(force, grid, cfg.method, dt, cfg.bias_stride);
    solver.init(initial_density(grid, cfg.initial, cfg.init_amplitude));

    DensityField pi_ref = DensityField::uniform(grid);
    VectorField b_ref(grid.xi_grid(), grid.m());
    switch (cfg.reference) {
        case ReferenceKind::Conservative: {
            ReferenceEquilibrium ref = free_energy(force, grid);
            pi_ref = std::move(ref.muA);
            b_ref = std::move(ref.gradA);
            break;
        }
        case ReferenceKind::FixedPoint: {
            StationaryState st = fixed_point_iterate(
                force, grid, cfg.method,
                FixedPointOptions{cfg.fp_tol, cfg.fp_max_iters, cfg.tol});
            pi_ref = std::move(st.pi_inf);
            b_ref = std::move(st.bias.B);
            break;
        }
        case ReferenceKind::Uniform:
            break;
    }

    std::vector<TrajectoryRow> rows;
    auto emit = [&]() {
        const PdeState& s = solver.state();
        const EntropyReport rep = entropy_split(s.pi, pi_ref);
        VectorField diff = s.bias.B;
        diff -= b_ref;
        rows.push_back(TrajectoryRow{
            s.t, s.mass_drift, relative_entropy_uniform(s.pi.marginal_xi()), rep.linf_marginal,
            diff.norm_l2(), rep.E, rep.E_M, rep.E_m, rep.I_M, rep.tv});
    };

    const long total = static_cast<long>(std::ceil(cfg.t_end / dt - 1e-9));
    emit();
    for (long k = 1; k <= total; ++k) {
        solver.advance();
        if (k % cfg.output_stride == 0 || k == total) emit();
    }
    return PdeRunResult{std::move(rows), solver.state(), std::move(pi_ref), std::move(b_ref), dt};
}

namespace {

std::string join_path(const std::string& dir, const std::string& name) {
    if (dir.empty()) return name;
    return dir.back() == '/' ? dir + name : dir + "/" + name;
}

void engine_pde(const ExperimentConfig& cfg, const std::string& out_dir,
                std::vector<std::string>& artifacts) {
    const PdeRunResult run = run_pde(cfg);
    const std::string traj = join_path(out_dir, "trajectory.csv");
    io::CsvWriter csv(traj);
    csv.row({"t", "mass_drift", "marginal_entropy", "marginal_sup_error", "bias_error_l2",
             "entropy_total", "entropy_macro", "entropy_micro", "fisher_macro", "tv_total"});
    for (const TrajectoryRow& r : run.rows)
        csv.row({fd(r.t), fd(r.mass_drift), fd(r.marginal_entropy), fd(r.marginal_sup),
                 fd(r.bias_error), fd(r.E), fd(r.E_M), fd(r.E_m), fd(r.I_M), fd(r.tv)});
    csv.close();
    artifacts.push_back(traj);

    const std::string dens = join_path(out_dir, "final_density.abft");
    io::write_field_binary(dens, run.final_state.pi.field());
    artifacts.push_back(dens);
    const std::string bias = join_path(out_dir, "final_bias.abft");
    io::write_field_binary(bias, run.final_state.bias.B);
    artifacts.push_back(bias);
}

void engine_particles(const ExperimentConfig& cfg, const std::string& out_dir,
                      std::vector<std::string>& artifacts) {
    const ForceField force = ForceField::library(cfg.potential, cfg.perturbation, cfg.epsilon,
                                                 cfg.beta, cfg.dimension, cfg.seed);
    std::vector<double> schedule = cfg.schedule;
    if (schedule.empty()) schedule.push_back(cfg.t_end);
    const ParticleRunResult run =
        run_particles(force, cfg.method, cfg.n_particles, cfg.dt, cfg.t_end, schedule, cfg.bins,
                      cfg.seed, cfg.threads);

    const std::string path = join_path(out_dir, "particles.csv");
    io::CsvWriter csv(path);
    std::ostringstream meta;
    meta << "# seed=" << cfg.seed << " n_particles=" << cfg.n_particles << " dt=" << fd(cfg.dt);
    csv.raw_line(meta.str());
    const int m = static_cast<int>(cfg.bins.size());
    std::vector<std::string> header = {"t", "bin"};
    for (int a = 0; a < m; ++a) header.push_back("center_" + std::to_string(a));
    header.push_back("occupancy");
    for (int a = 0; a < m; ++a) header.push_back("g_hat_" + std::to_string(a));
    for (int a = 0; a < m; ++a) header.push_back("b_hat_" + std::to_string(a));
    header.push_back("h_hat");
    csv.row(header);
    for (const ParticleSnapshot& snap : run.snapshots) {
        const TorusGrid& bg = snap.bias.bin_grid();
        for (std::size_t b = 0; b < bg.size(); ++b) {
            std::vector<std::string> cells = {fd(snap.t), std::to_string(b)};
            const std::vector<int> idx = bg.unflatten(b);
            for (int a = 0; a < m; ++a)
                cells.push_back(fd((idx[static_cast<std::size_t>(a)] + 0.5) / bg.resolution()[a]));
            cells.push_back(fd(snap.histogram[b]));
            for (int a = 0; a < m; ++a) cells.push_back(fd(snap.bias.g_hat().value(a, b)));
            for (int a = 0; a < m; ++a) cells.push_back(fd(snap.bias.b_hat().value(a, b)));
            cells.push_back(fd(snap.bias.h_hat()[b]));
            csv.row(cells);
        }
    }
    csv.close();
    artifacts.push_back(path);

    const std::string bias = join_path(out_dir, "particles_bias.abft");
    io::write_field_binary(bias, run.bias.b_hat());
    artifacts.push_back(bias);
}

void write_residual_history(const std::string& out_dir, std::span<const double> history,
                            std::vector<std::string>& artifacts) {
    const std::string path = join_path(out_dir, "residual_history.csv");
    io::CsvWriter csv(path);
    csv.row({"iteration", "residual"});
    for (std::size_t i = 0; i < history.size(); ++i)
        csv.row({std::to_string(i), fd(history[i])});
    csv.close();
    artifacts.push_back(path);
}

void engine_stationary(const ExperimentConfig& cfg, const std::string& out_dir,
                       std::vector<std::string>& artifacts) {
    const TorusGrid grid(cfg.resolution, cfg.m);
    const ForceField force = ForceField::library(cfg.potential, cfg.perturbation, cfg.epsilon,
                                                 cfg.beta, cfg.dimension, cfg.seed);
    std::optional<StationaryState> fp;
    try {
        fp = fixed_point_iterate(force, grid, cfg.method,
                                 FixedPointOptions{cfg.fp_tol, cfg.fp_max_iters, cfg.tol});
    } catch (const NonConvergence& e) {
        write_residual_history(out_dir, e.residual_history, artifacts);
        throw;
    }
    const StationaryState& st = *fp;
    write_residual_history(out_dir, st.residual_history, artifacts);

    const std::string summary = join_path(out_dir, "stationary_summary.csv");
    io::CsvWriter csv(summary);
    csv.row({"fp_residual", "pde_residual", "iterations"});
    csv.row({fd(st.fp_residual), fd(st.pde_residual), std::to_string(st.residual_history.size())});
    csv.close();
    artifacts.push_back(summary);

    const std::string dens = join_path(out_dir, "pi_inf.abft");
    io::write_field_binary(dens, st.pi_inf.field());
    artifacts.push_back(dens);
    const std::string bias = join_path(out_dir, "bias_b.abft");
    io::write_field_binary(bias, st.bias.B);
    artifacts.push_back(bias);
    const std::string mean_force = join_path(out_dir, "bias_g.abft");
    io::write_field_binary(mean_force, st.bias.G);
    artifacts.push_back(mean_force);
    const std::string pot = join_path(out_dir, "bias_h.abft");
    io::write_field_binary(pot, st.bias.H);
    artifacts.push_back(pot);
}

void engine_sweep(const ExperimentConfig& cfg, const std::string& out_dir,
                  std::vector<std::string>& artifacts) {
    const TorusGrid grid(cfg.resolution, cfg.m);
    std::vector<ScalarField> psis;
    psis.reserve(cfg.observables.size());
    for (const std::string& name : cfg.observables) psis.push_back(observable_field(grid, name));
    const SweepResult res = perturbation_sweep(cfg.potential, cfg.perturbation, cfg.beta, grid,
                                               cfg.epsilons, cfg.norm_p, psis, cfg.seed);

    const std::string rows = join_path(out_dir, "sweep.csv");
    io::CsvWriter csv(rows);
    std::vector<std::string> header = {"epsilon", "converged", "grad_error",
                                       "h_d12",   "h_d13",     "h_d23"};
    for (const std::string& name : cfg.observables) header.push_back("bias_" + name);
    csv.row(header);
    for (const SweepRow& r : res.rows) {
        std::vector<std::string> cells = {fd(r.epsilon), r.converged ? "1" : "0",
                                          fd(r.grad_error), fd(r.h_d12), fd(r.h_d13),
                                          fd(r.h_d23)};
        for (std::size_t k = 0; k < cfg.observables.size(); ++k)
            cells.push_back(k < r.observable_bias.size() ? fd(r.observable_bias[k]) : "nan");
        csv.row(cells);
    }
    csv.close();
    artifacts.push_back(rows);

    const std::string summary = join_path(out_dir, "sweep_summary.csv");
    io::CsvWriter sum(summary);
    std::vector<std::string> h2 = {"grad_slope", "grad_r2"};
    for (const std::string& name : cfg.observables) {
        h2.push_back("slope_" + name);
        h2.push_back("r2_" + name);
    }
    sum.row(h2);
    std::vector<std::string> vals = {fd(res.grad_slope), fd(res.grad_r2)};
    for (std::size_t i = 0; i < res.obs_slopes.size(); ++i) {
        vals.push_back(fd(res.obs_slopes[i]));
        vals.push_back(fd(res.obs_r2[i]));
    }
    sum.row(vals);
    sum.close();
    artifacts.push_back(summary);
}

void engine_diagnose(const ExperimentConfig& cfg, const std::string& out_dir,
                     std::vector<std::string>& artifacts) {
    const TorusGrid grid(cfg.resolution, cfg.m);
    const ForceField force = ForceField::library(cfg.potential, cfg.perturbation, cfg.epsilon,
                                                 cfg.beta, cfg.dimension, cfg.seed);
    DensityField pi_ref = DensityField::uniform(grid);
    if (cfg.reference == ReferenceKind::Conservative) {
        pi_ref = free_energy(force, grid).muA;
    } else if (cfg.reference == ReferenceKind::FixedPoint) {
        pi_ref = fixed_point_iterate(force, grid, cfg.method,
                                     FixedPointOptions{cfg.fp_tol, cfg.fp_max_iters, cfg.tol})
                     .pi_inf;
    }
    const LsiEstimates lsi = lsi_bounds(pi_ref, force);
    const int trials = cfg.inequality_trials;

    const std::string path = join_path(out_dir, "diagnostics.csv");
    io::CsvWriter csv(path);
    csv.row({"name", "value"});
    auto put = [&](const std::string& name, double value) { csv.row({name, fd(value)}); };
    put("R_lower", lsi.R_lower);
    put("rho_lower", lsi.rho_lower);
    put("lipschitz_fiber", lsi.M);
    put("lambda_pred_abf", lsi.lambda_pred_abf);
    put("lambda_pred_pabf", lsi.lambda_pred_pabf);
    put("lambda_pred_noncons", lsi.lambda_pred_noncons);
    put("noncons_defined", lsi.noncons_defined ? 1.0 : 0.0);
    put("nash_worst_slack_t1", nash_check(trials, 1, cfg.seed));
    put("nash_worst_slack_t2", nash_check(trials, 2, cfg.seed + 1));
    put("poincare_worst_slack", poincare_check(trials, 2, cfg.seed + 2));
    put("lsi_direction_worst_slack", lsi_direction_check(trials, 2, cfg.seed + 3));
    put("csiszar_kullback_worst_slack", csiszar_kullback_check(trials, 2, cfg.seed + 4));
    const DriftAudit audit = drift_lipschitz_check(grid, cfg.audit_pairs, cfg.beta,
                                                   std::max(lsi.M, 1.0), 2.0, cfg.seed + 5);
    put("audit_max_ratio", audit.max_ratio);
    put("audit_mean_ratio", audit.mean_ratio);
    put("audit_max_harnack", audit.max_harnack);
    csv.close();
    artifacts.push_back(path);
}

} // namespace

RunOutcome run_experiment(const ExperimentConfig& cfg, const std::string& out_dir) {
    RunOutcome outcome;
    const auto started = std::chrono::steady_clock::now();
    try {
        validate_config(cfg);
        io::ensure_directory(out_dir);
        switch (cfg.engine) {
            case Engine::Pde: engine_pde(cfg, out_dir, outcome.artifacts); break;
            case Engine::Particles: engine_particles(cfg, out_dir, outcome.artifacts); break;
            case Engine::Stationary: engine_stationary(cfg, out_dir, outcome.artifacts); break;
            case Engine::Sweep: engine_sweep(cfg, out_dir, outcome.artifacts); break;
            case Engine::Diagnose: engine_diagnose(cfg, out_dir, outcome.artifacts); break;
        }
    } catch (const ConfigError& e) {
        outcome.exit_code = 2;
        outcome.message = e.what();
        return outcome;
    } catch (const DegenerateConditional& e) {
        outcome.exit_code = 3;
        outcome.message = e.what();
        return outcome;
    } catch (const ContractViolation& e) {
        outcome.exit_code = 2;
        outcome.message = e.what();
        return outcome;
    } catch (const NonConvergence& e) {
        outcome.exit_code = 4;
        outcome.message = e.what();
        return outcome;
    } catch (const SolverFailure& e) {
        outcome.exit_code = 3;
        outcome.message = e.what();
        return outcome;
    } catch (const IoError& e) {
        outcome.exit_code = 5;
        outcome.message = e.what();
        return outcome;
    }

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    const std::string manifest = join_path(out_dir, "manifest.toml");
    std::ostringstream text;
    text << render_config(cfg);
    text << "\n[provenance]\n";
    text << "version = \"abflab 1.0.0\"\n";
    text << "wall_seconds = " << fd(wall) << "\n";
    text << "artifact_count = " << outcome.artifacts.size() << "\n";
    std::ofstream out(manifest, std::ios::binary);
    if (!out) {
        outcome.exit_code = 5;
        outcome.message = "cannot write manifest: " + manifest;
        return outcome;
    }
    out << text.str();
    out.close();
    outcome.artifacts.push_back(manifest);
    outcome.message = "ok";
    return outcome;
}

} // namespace abf
