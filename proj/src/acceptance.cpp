#include "abf/acceptance.hpp"

#include <chrono>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <span>
#include <sstream>

#include "abf/config.hpp"
#include "abf/diagnostics.hpp"
#include "abf/errors.hpp"
#include "abf/experiment.hpp"
#include "abf/fokker_planck.hpp"
#include "abf/forces.hpp"
#include "abf/io.hpp"
#include "abf/particles.hpp"

namespace abf {

Suite suite_from_name(const std::string& name) {
    if (name == "fast") return Suite::Fast;
    if (name == "full") return Suite::Full;
    throw ConfigError("unknown suite: " + name);
}

std::string suite_name(Suite s) { return s == Suite::Fast ? "fast" : "full"; }

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kFourPiSq = 4.0 * kPi * kPi;
constexpr double kEightPiSq = 8.0 * kPi * kPi;

std::string fd(double x) { return io::format_double(x); }

/** Criterion bodies append key=value pairs here and decide pass/fail. */
struct Detail {
    std::ostringstream out;
    bool first = true;
    void put(const std::string& key, double value) {
        if (!first) out << " ";
        first = false;
        out << key << "=" << fd(value);
    }
    void put(const std::string& key, const std::string& value) {
        if (!first) out << " ";
        first = false;
        out << key << "=" << value;
    }
    std::string str() const { return out.str(); }
};

ExperimentConfig base_pde(std::uint64_t seed) {
    ExperimentConfig cfg;
    cfg.engine = Engine::Pde;
    cfg.method = BiasMethod::Abf;
    cfg.seed = seed;
    cfg.potential = PotentialKind::CosineSeparable;
    cfg.perturbation = PerturbationKind::None;
    cfg.epsilon = 0.0;
    cfg.beta = 1.0;
    cfg.dimension = 2;
    cfg.resolution = {64, 64};
    cfg.m = 1;
    cfg.initial = InitialKind::SkewedXY;
    cfg.init_amplitude = 0.5;
    cfg.reference = ReferenceKind::Conservative;
    cfg.output_stride = 2;
    return cfg;
}

std::vector<double> column(const std::vector<TrajectoryRow>& rows,
                           double TrajectoryRow::* member) {
    std::vector<double> v;
    v.reserve(rows.size());
    for (const TrajectoryRow& r : rows) v.push_back(r.*member);
    return v;
}

double tamper_for(const AcceptanceOptions& opts, int id) {
    return opts.tamper_criterion == id ? opts.tamper_factor : 1.0;
}

/**
 * Fit the exponentially decaying segment of a positive trace. The splitting
 * integrator stalls at a scheme-accuracy offset from the reference state, so
 * the tail of the trace is a flat numerical plateau; flooring at a multiple
 * of the terminal value keeps the fit on the genuine decay. A short initial
 * layer is skipped so the fit starts after the first bias updates.
 */
RateFit fit_decay(const std::vector<double>& t, const std::vector<double>& v) {
    if (t.empty() || v.empty()) throw ContractViolation("decay fit: empty trace");
    const double floor = std::max(1e-13, 30.0 * v.back());
    return fit_rate(t, v, 0.02, t.back(), floor);
}

/**
 * Criterion 1: with the separable cosine potential the reaction-coordinate
 * marginal obeys the heat equation, so its entropy to uniform must decay at
 * rate 8 pi^2 / beta, per time step and in the fitted rate, for ABF and PABF.
 */
CriterionResult check_flat_histogram(const AcceptanceOptions& opts) {
    CriterionResult res{1, "flat-histogram-rate", false, 0.0, ""};
    const double f = tamper_for(opts, 1);
    const double threshold = 0.98 * kEightPiSq * f;
    Detail d;
    bool ok = true;
    for (BiasMethod method : {BiasMethod::Abf, BiasMethod::Pabf}) {
        ExperimentConfig cfg = base_pde(opts.seed);
        cfg.method = method;
        cfg.t_end = 0.15;
        const PdeRunResult run = run_pde(cfg);
        const std::vector<double> t = column(run.rows, &TrajectoryRow::t);
        const std::vector<double> h = column(run.rows, &TrajectoryRow::marginal_entropy);
        const RateFit fit = fit_rate(t, h, 0.02, 0.15, 1e-14);
        const double h0 = h.front();
        double max_violation = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i)
            max_violation = std::max(max_violation, h[i] - h0 * std::exp(-kEightPiSq * t[i]));
        const std::string tag = bias_method_name(method);
        d.put(tag + "_rate", fit.rate);
        d.put(tag + "_r2", fit.r_squared);
        d.put(tag + "_max_violation", max_violation);
        ok = ok && fit.rate >= threshold && max_violation <= 1e-8;
    }
    d.put("rate_threshold", threshold);
    d.put("violation_tolerance", 1e-8);
    res.detail = d.str();
    res.passed = ok;
    return res;
}

/**
 * Criterion 2: sup |pi_xi - 1| decays at 4 pi^2. The signal reaches rounding
 * noise (~1e-13) near t = 0.75, so the gating fit runs on the resolvable
 * window; the literal late-window fit is reported alongside.
 */
CriterionResult check_linf_rate(const AcceptanceOptions& opts) {
    CriterionResult res{2, "marginal-sup-rate", false, 0.0, ""};
    const double f = tamper_for(opts, 2);
    const double threshold = 0.98 * kFourPiSq * f;
    Detail d;
    bool ok = true;
    for (BiasMethod method : {BiasMethod::Abf, BiasMethod::Pabf}) {
        ExperimentConfig cfg = base_pde(opts.seed);
        cfg.method = method;
        cfg.t_end = 1.5;
        cfg.output_stride = 4;
        const PdeRunResult run = run_pde(cfg);
        const std::vector<double> t = column(run.rows, &TrajectoryRow::t);
        const std::vector<double> sup = column(run.rows, &TrajectoryRow::marginal_sup);
        const RateFit fit = fit_rate(t, sup, 0.15, 1.5, 1e-13);
        const std::string tag = bias_method_name(method);
        d.put(tag + "_rate", fit.rate);
        d.put(tag + "_r2", fit.r_squared);
        d.put(tag + "_window_end", fit.t_end);
        double late = std::numeric_limits<double>::quiet_NaN();
        try {
            late = fit_rate(t, sup, 1.0, 1.5, 1e-300).rate;
        } catch (const Error&) {
        }
        d.put(tag + "_late_rate_unresolved", late);
        ok = ok && fit.rate >= threshold;
    }
    d.put("rate_threshold", threshold);
    res.detail = d.str();
    res.passed = ok;
    return res;
}

/**
 * Criterion 3: conservative fixed point equals the analytically biased
 * equilibrium (mu_A, gradA) for both methods.
 */
CriterionResult check_conservative_fixed_point(const AcceptanceOptions& opts) {
    CriterionResult res{3, "conservative-fixed-point", false, 0.0, ""};
    const double f = tamper_for(opts, 3);
    const double residual_tol = 1e-8 / f;
    const double state_tol = 1e-5 / f;
    Detail d;
    const TorusGrid grid({64, 64}, 1);
    const ForceField force = ForceField::library(PotentialKind::CosineSeparable,
                                                 PerturbationKind::None, 0.0, 1.0, 2, opts.seed);
    const ReferenceEquilibrium ref = free_energy(force, grid);
    bool ok = true;
    for (BiasMethod method : {BiasMethod::Abf, BiasMethod::Pabf}) {
        const StationaryState st = fixed_point_iterate(force, grid, method);
        double sup_pi = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i)
            sup_pi = std::max(sup_pi, std::fabs(st.pi_inf[i] - ref.muA[i]));
        VectorField diff = st.bias.B;
        diff -= ref.gradA;
        const double b_err = diff.norm_l2();
        const std::string tag = bias_method_name(method);
        d.put(tag + "_fp_residual", st.fp_residual);
        d.put(tag + "_density_sup_error", sup_pi);
        d.put(tag + "_bias_l2_error", b_err);
        ok = ok && st.fp_residual <= residual_tol && sup_pi <= state_tol && b_err <= state_tol;
    }
    d.put("residual_tolerance", residual_tol);
    d.put("state_tolerance", state_tol);
    res.detail = d.str();
    res.passed = ok;
    return res;
}

/**
 * Criterion 4: conservative entropy convergence at least as fast as the
 * certified bound min(8 pi^2, 2 rho_lower) per method, with rho_lower equal
 * to the closed form 4 pi^2 e^{-2} of the separable cosine potential.
 */
CriterionResult check_conservative_entropy(const AcceptanceOptions& opts) {
    CriterionResult res{4, "conservative-entropy-rate", false, 0.0, ""};
    const double f = tamper_for(opts, 4);
    Detail d;
    const TorusGrid grid({64, 64}, 1);
    const ForceField force = ForceField::library(PotentialKind::CosineSeparable,
                                                 PerturbationKind::None, 0.0, 1.0, 2, opts.seed);
    const LsiEstimates lsi = lsi_bounds(free_energy(force, grid).muA, force);
    const double rho_expected = kFourPiSq * std::exp(-2.0);
    d.put("rho_lower", lsi.rho_lower);
    d.put("rho_closed_form", rho_expected);
    bool ok = std::fabs(lsi.rho_lower - rho_expected) <= 1e-6;
    for (BiasMethod method : {BiasMethod::Abf, BiasMethod::Pabf}) {
        ExperimentConfig cfg = base_pde(opts.seed);
        cfg.method = method;
        cfg.t_end = 1.0;
        const PdeRunResult run = run_pde(cfg);
        const std::vector<double> t = column(run.rows, &TrajectoryRow::t);
        const std::vector<double> e = column(run.rows, &TrajectoryRow::E);
        const RateFit fit = fit_decay(t, e);
        const double macro = method == BiasMethod::Abf ? kEightPiSq : kFourPiSq;
        const double threshold = 0.95 * std::min(macro, 2.0 * lsi.rho_lower) * f;
        const std::string tag = bias_method_name(method);
        d.put(tag + "_rate", fit.rate);
        d.put(tag + "_r2", fit.r_squared);
        d.put(tag + "_threshold", threshold);
        ok = ok && fit.rate >= threshold && fit.r_squared >= 0.95;
    }
    res.detail = d.str();
    res.passed = ok;
    return res;
}

/**
 * Criterion 5: the squared bias error converges at least at the certified
 * entropy rate. Under the separable potential the bias is exact at every
 * time (the local mean force is independent of the fiber), so that run must
 * sit at rounding level throughout; the coupled-cosine potential provides
 * the nontrivial decay check, where entropy and squared bias error must each
 * beat the certified bound min(8 pi^2, 2 rho_lower) for that potential. The
 * two empirical transients are not compared to each other: the bias error
 * weighs fibers by the mean-force kernel and can relax through slower fiber
 * modes than the entropy does, while the theory bounds both by the same
 * certified constant.
 */
CriterionResult check_bias_convergence(const AcceptanceOptions& opts) {
    CriterionResult res{5, "bias-convergence-rate", false, 0.0, ""};
    const double f = tamper_for(opts, 5);
    Detail d;

    ExperimentConfig cfg = base_pde(opts.seed);
    cfg.t_end = 1.0;
    const PdeRunResult sep = run_pde(cfg);
    double max_b2 = 0.0;
    for (const TrajectoryRow& r : sep.rows)
        max_b2 = std::max(max_b2, r.bias_error * r.bias_error);
    const double trivial_cut = 1e-20 / (f * f);
    d.put("separable_max_bias_sq", max_b2);
    d.put("trivial_cutoff", trivial_cut);
    bool ok = max_b2 < trivial_cut;

    ExperimentConfig coupled = base_pde(opts.seed);
    coupled.potential = PotentialKind::CosineCoupled;
    coupled.t_end = 1.0;
    const ForceField cforce = ForceField::library(PotentialKind::CosineCoupled,
                                                  PerturbationKind::None, 0.0, 1.0, 2, opts.seed);
    const TorusGrid grid(coupled.resolution, coupled.m);
    const LsiEstimates lsi = lsi_bounds(free_energy(cforce, grid).muA, cforce);
    const double certified = std::min(kEightPiSq, 2.0 * lsi.rho_lower);
    const PdeRunResult run = run_pde(coupled);
    const std::vector<double> t = column(run.rows, &TrajectoryRow::t);
    const std::vector<double> e = column(run.rows, &TrajectoryRow::E);
    std::vector<double> b2;
    b2.reserve(run.rows.size());
    for (const TrajectoryRow& r : run.rows) b2.push_back(r.bias_error * r.bias_error);
    const RateFit efit = fit_decay(t, e);
    const RateFit bfit = fit_decay(t, b2);
    const double threshold = 0.95 * certified * f;
    d.put("coupled_certified_rate", certified);
    d.put("coupled_entropy_rate", efit.rate);
    d.put("coupled_bias_sq_rate", bfit.rate);
    d.put("coupled_threshold", threshold);
    d.put("coupled_bias_r2", bfit.r_squared);
    ok = ok && efit.rate >= threshold && bfit.rate >= threshold;
    res.detail = d.str();
    res.passed = ok;
    return res;
}

/**
 * Criterion 6: rotational perturbation of the separable potential. The
 * smallness condition M beta < 2 rho_lower must hold, the fixed point must
 * converge, and the entropy to the nonconservative stationary state must
 * decay at the predicted rate 2 R (1 - M beta / (2 rho)) / beta.
 */
CriterionResult check_nonconservative(const AcceptanceOptions& opts) {
    CriterionResult res{6, "nonconservative-stationary", false, 0.0, ""};
    const double f = tamper_for(opts, 6);
    Detail d;
    const TorusGrid grid({64, 64}, 1);
    const ForceField force = ForceField::library(
        PotentialKind::CosineSeparable, PerturbationKind::Rotational, 0.05, 1.0, 2, opts.seed);
    const StationaryState st = fixed_point_iterate(force, grid, BiasMethod::Abf);
    d.put("fp_residual", st.fp_residual);
    const LsiEstimates lsi = lsi_bounds(st.pi_inf, force);
    d.put("lipschitz_fiber", lsi.M);
    d.put("two_rho_lower", 2.0 * lsi.rho_lower);
    d.put("smallness_holds", lsi.noncons_defined ? 1.0 : 0.0);
    bool ok = lsi.noncons_defined && st.fp_residual <= 1e-8;

    ExperimentConfig cfg = base_pde(opts.seed);
    cfg.perturbation = PerturbationKind::Rotational;
    cfg.epsilon = 0.05;
    cfg.reference = ReferenceKind::FixedPoint;
    cfg.t_end = 1.0;
    const PdeRunResult run = run_pde(cfg);
    const std::vector<double> t = column(run.rows, &TrajectoryRow::t);
    const std::vector<double> e = column(run.rows, &TrajectoryRow::E);
    const RateFit fit = fit_decay(t, e);
    const double threshold = 0.9 * lsi.lambda_pred_noncons * f;
    d.put("entropy_rate", fit.rate);
    d.put("entropy_r2", fit.r_squared);
    d.put("lambda_pred", lsi.lambda_pred_noncons);
    d.put("rate_threshold", threshold);
    ok = ok && fit.rate >= threshold && fit.r_squared >= 0.95;
    res.detail = d.str();
    res.passed = ok;
    return res;
}

/**
 * Criterion 7: first-order response. Gradient error of the projected bias
 * and reweighted-observable bias both scale linearly in epsilon.
 */
CriterionResult check_perturbation_linearity(const AcceptanceOptions& opts) {
    CriterionResult res{7, "perturbation-linearity", false, 0.0, ""};
    const double f = tamper_for(opts, 7);
    Detail d;
    const TorusGrid grid({64, 64}, 1);
    const std::vector<double> eps = {0.01, 0.02, 0.04};
    const std::vector<ScalarField> psis = {observable_field(grid, "cos_x")};
    const SweepResult sweep = perturbation_sweep(PotentialKind::CosineSeparable,
                                                 PerturbationKind::Rotational, 1.0, grid, eps, 2.0,
                                                 psis, opts.seed);
    bool converged = true;
    for (const SweepRow& r : sweep.rows) converged = converged && r.converged;
    const double lo = 0.9 * f;
    const double hi = 1.1;
    d.put("all_converged", converged ? 1.0 : 0.0);
    d.put("grad_slope", sweep.grad_slope);
    d.put("grad_r2", sweep.grad_r2);
    d.put("observable_slope", sweep.obs_slopes.empty() ? 0.0 : sweep.obs_slopes[0]);
    d.put("slope_lo", lo);
    d.put("slope_hi", hi);
    const bool ok = converged && sweep.grad_slope >= lo && sweep.grad_slope <= hi &&
                    !sweep.obs_slopes.empty() && sweep.obs_slopes[0] >= lo &&
                    sweep.obs_slopes[0] <= hi;
    res.detail = d.str();
    res.passed = ok;
    return res;
}

/**
 * Criterion 8: stability of the drift -> stationary-density map. Ratio and
 * Harnack statistics over the first half of the pair budget must not grow by
 * more than 20% when the budget doubles, and every ratio must be finite.
 */
CriterionResult check_drift_audit(const AcceptanceOptions& opts) {
    CriterionResult res{8, "drift-lipschitz-audit", false, 0.0, ""};
    const double f = tamper_for(opts, 8);
    Detail d;
    const TorusGrid grid({64, 64}, 1);
    const int pairs = opts.suite == Suite::Full ? 1000 : 100;
    const DriftAudit audit = drift_lipschitz_check(grid, pairs, 1.0, 3.0, 2.0, opts.seed);

    const std::size_t half = audit.pairs.size() / 2;
    double maxr_h = 0.0, maxr_f = 0.0, sum_h = 0.0, sum_f = 0.0, harn_h = 0.0, harn_f = 0.0;
    bool finite = true;
    for (std::size_t i = 0; i < audit.pairs.size(); ++i) {
        const DriftAuditPair& p = audit.pairs[i];
        finite = finite && std::isfinite(p.ratio) && std::isfinite(p.harnack);
        if (i < half) {
            maxr_h = std::max(maxr_h, p.ratio);
            harn_h = std::max(harn_h, p.harnack);
            sum_h += p.ratio;
        }
        maxr_f = std::max(maxr_f, p.ratio);
        harn_f = std::max(harn_f, p.harnack);
        sum_f += p.ratio;
    }
    const double mean_h = sum_h / static_cast<double>(half);
    const double mean_f = sum_f / static_cast<double>(audit.pairs.size());
    const double limit = 1.2 / f;
    d.put("pairs", static_cast<double>(audit.pairs.size()));
    d.put("max_ratio_half", maxr_h);
    d.put("max_ratio_full", maxr_f);
    d.put("mean_ratio_half", mean_h);
    d.put("mean_ratio_full", mean_f);
    d.put("harnack_half", harn_h);
    d.put("harnack_full", harn_f);
    d.put("growth_limit", limit);
    const bool ok = finite && maxr_f <= limit * maxr_h && harn_f <= limit * harn_h &&
                    mean_f <= limit * mean_h && mean_h <= 1.2 * mean_f;
    res.detail = d.str();
    res.passed = ok;
    return res;
}

/**
 * Criterion 9: functional-inequality verifiers. Worst slack over random
 * fields must be nonnegative up to 1e-9 for Nash (T^1 and T^2),
 * Poincare-Wirtinger, the LSI direction of the uniform measure, and
 * Csiszar-Kullback on density pairs.
 */
CriterionResult check_inequalities(const AcceptanceOptions& opts) {
    CriterionResult res{9, "inequality-verifiers", false, 0.0, ""};
    const double f = tamper_for(opts, 9);
    const double threshold = opts.tamper_criterion == 9 ? f : -1e-9;
    Detail d;
    const double nash1 = nash_check(1000, 1, opts.seed);
    const double nash2 = nash_check(1000, 2, opts.seed + 1);
    const double pw = poincare_check(200, 2, opts.seed + 2);
    const double lsi_dir = lsi_direction_check(200, 2, opts.seed + 3);
    const double ck = csiszar_kullback_check(200, 2, opts.seed + 4);
    d.put("nash_t1_worst", nash1);
    d.put("nash_t2_worst", nash2);
    d.put("poincare_worst", pw);
    d.put("lsi_direction_worst", lsi_dir);
    d.put("csiszar_kullback_worst", ck);
    d.put("slack_threshold", threshold);
    res.detail = d.str();
    res.passed = nash1 >= threshold && nash2 >= threshold && pw >= threshold &&
                 lsi_dir >= threshold && ck >= threshold;
    return res;
}

/** Trigonometric interpolation of xi-grid samples at shifted points. */
std::vector<double> trig_interp_centers(std::span<const double> values) {
    const int n = static_cast<int>(values.size());
    std::vector<std::complex<double>> coeff(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        std::complex<double> acc = 0.0;
        for (int i = 0; i < n; ++i)
            acc += values[static_cast<std::size_t>(i)] *
                   std::exp(std::complex<double>(0.0, -2.0 * kPi * k * i / n));
        coeff[static_cast<std::size_t>(k)] = acc / static_cast<double>(n);
    }
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        const double x = (j + 0.5) / n;
        std::complex<double> acc = 0.0;
        for (int k = 0; k < n; ++k) {
            int mode = k <= n / 2 ? k : k - n;
            if (2 * k == n) {
                // Nyquist mode contributes its cosine part only.
                acc += coeff[static_cast<std::size_t>(k)] * std::cos(2.0 * kPi * (n / 2) * x);
            } else {
                acc += coeff[static_cast<std::size_t>(k)] *
                       std::exp(std::complex<double>(0.0, 2.0 * kPi * mode * x));
            }
        }
        out[static_cast<std::size_t>(j)] = acc.real();
    }
    return out;
}

/**
 * Criterion 10: the particle estimator agrees with the grid solver within
 * bootstrap error, the xi histogram is flat within sampling + step bias, and
 * a rerun from the emitted manifest is byte-identical.
 */
CriterionResult check_particles(const AcceptanceOptions& opts) {
    CriterionResult res{10, "particle-pde-agreement", false, 0.0, ""};
    const double f = tamper_for(opts, 10);
    Detail d;
    const std::size_t n_particles = 100000;
    const double dt = 0.002;
    const double t_end = 2.0;
    const int nb = 64;
    const ForceField force = ForceField::library(PotentialKind::CosineSeparable,
                                                 PerturbationKind::None, 0.0, 1.0, 2, opts.seed);
    const std::vector<double> schedule = {t_end};
    const ParticleRunResult run = run_particles(force, BiasMethod::Abf, n_particles, dt, t_end,
                                                schedule, {nb}, opts.seed, opts.threads);
    const BootstrapReport boot =
        bootstrap_bias_se(run.ensemble, force, BiasMethod::Abf, run.bias, 200, opts.seed);

    ExperimentConfig pde_cfg = base_pde(opts.seed);
    pde_cfg.t_end = 0.2;
    pde_cfg.output_stride = 1 << 20;
    const PdeRunResult pde = run_pde(pde_cfg);
    const std::span<const double> b_pde = pde.final_state.bias.B.component(0);
    const std::vector<double> b_centers =
        trig_interp_centers(std::span<const double>(b_pde.data(), b_pde.size()));

    double err2 = 0.0;
    for (int j = 0; j < nb; ++j) {
        const double diff =
            run.bias.b_hat().value(0, static_cast<std::size_t>(j)) - b_centers[static_cast<std::size_t>(j)];
        err2 += diff * diff;
    }
    const double bias_err = std::sqrt(err2 / nb);
    const double bias_tol = 3.0 * boot.se_l2 / f;

    double tv = 0.0;
    for (long c : run.bias.counts())
        tv += std::fabs(static_cast<double>(c) / static_cast<double>(n_particles) - 1.0 / nb);
    tv *= 0.5;
    const double tv_tol = 3.0 * (std::sqrt(static_cast<double>(nb) / n_particles) + dt) / f;

    ExperimentConfig pcfg;
    pcfg.engine = Engine::Particles;
    pcfg.method = BiasMethod::Abf;
    pcfg.seed = opts.seed;
    pcfg.threads = opts.threads;
    pcfg.potential = PotentialKind::CosineSeparable;
    pcfg.perturbation = PerturbationKind::None;
    pcfg.epsilon = 0.0;
    pcfg.beta = 1.0;
    pcfg.dimension = 2;
    pcfg.resolution = {64, 64};
    pcfg.m = 1;
    pcfg.dt = dt;
    pcfg.t_end = t_end;
    pcfg.n_particles = n_particles;
    pcfg.bins = {nb};
    pcfg.schedule = {t_end};
    const std::string dir_a = opts.scratch_dir + "/particles_a";
    const std::string dir_b = opts.scratch_dir + "/particles_b";
    const RunOutcome out_a = run_experiment(pcfg, dir_a);
    bool identical = false;
    double rerun_exit = -1.0;
    if (out_a.exit_code == 0) {
        const ExperimentConfig echoed = parse_config_file(dir_a + "/manifest.toml");
        const RunOutcome out_b = run_experiment(echoed, dir_b);
        rerun_exit = out_b.exit_code;
        if (out_b.exit_code == 0)
            identical = io::read_file(dir_a + "/particles.csv") ==
                        io::read_file(dir_b + "/particles.csv");
    }

    d.put("bias_l2_error", bias_err);
    d.put("bias_tolerance", bias_tol);
    d.put("bootstrap_se", boot.se_l2);
    d.put("histogram_tv", tv);
    d.put("tv_tolerance", tv_tol);
    d.put("first_run_exit", static_cast<double>(out_a.exit_code));
    d.put("rerun_exit", rerun_exit);
    d.put("rerun_identical", identical ? 1.0 : 0.0);
    res.detail = d.str();
    res.passed = bias_err <= bias_tol && tv <= tv_tol && identical;
    return res;
}

using Check = CriterionResult (*)(const AcceptanceOptions&);

constexpr Check kChecks[] = {
    check_flat_histogram, check_linf_rate,       check_conservative_fixed_point,
    check_conservative_entropy, check_bias_convergence, check_nonconservative,
    check_perturbation_linearity, check_drift_audit, check_inequalities,
    check_particles,
};

constexpr const char* kNames[] = {
    "flat-histogram-rate",   "marginal-sup-rate",     "conservative-fixed-point",
    "conservative-entropy-rate", "bias-convergence-rate", "nonconservative-stationary",
    "perturbation-linearity", "drift-lipschitz-audit", "inequality-verifiers",
    "particle-pde-agreement",
};

} // namespace

AcceptanceReport run_acceptance(const AcceptanceOptions& opts) {
    AcceptanceReport report;
    report.suite = opts.suite;
    report.all_passed = true;
    const auto t0 = std::chrono::steady_clock::now();
    for (int id = 1; id <= 10; ++id) {
        if (opts.only_criterion != 0 && opts.only_criterion != id) continue;
        const auto c0 = std::chrono::steady_clock::now();
        CriterionResult result{id, kNames[id - 1], false, 0.0, ""};
        try {
            result = kChecks[id - 1](opts);
        } catch (const std::exception& e) {
            result.id = id;
            result.name = kNames[id - 1];
            result.passed = false;
            result.detail = std::string("exception=\"") + e.what() + "\"";
        }
        result.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - c0).count();
        report.all_passed = report.all_passed && result.passed;
        report.results.push_back(std::move(result));
    }
    report.total_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

std::string format_report(const AcceptanceReport& report) {
    std::ostringstream out;
    int passed = 0;
    for (const CriterionResult& r : report.results) {
        out << "criterion=" << r.id << " status=" << (r.passed ? "PASS" : "FAIL")
            << " name=" << r.name << " seconds=" << fd(r.seconds) << " " << r.detail << "\n";
        if (r.passed) ++passed;
    }
    out << "suite=" << suite_name(report.suite) << " passed=" << passed
        << " failed=" << (static_cast<int>(report.results.size()) - passed)
        << " total_seconds=" << fd(report.total_seconds) << "\n";
    return out.str();
}

} // namespace abf
