#include "abf/fokker_planck.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

#include "abf/errors.hpp"
#include "abf/helmholtz.hpp"
#include "abf/rng.hpp"
#include "abf/spectral.hpp"

namespace abf {

BiasMethod bias_method_from_name(const std::string& name) {
    if (name == "none" || name == "unbiased") return BiasMethod::None;
    if (name == "abf") return BiasMethod::Abf;
    if (name == "pabf") return BiasMethod::Pabf;
    throw ConfigError("unknown bias method: " + name);
}

std::string bias_method_name(BiasMethod m) {
    switch (m) {
        case BiasMethod::None: return "none";
        case BiasMethod::Abf: return "abf";
        case BiasMethod::Pabf: return "pabf";
    }
    return "?";
}

StationaryMethod stationary_method_from_name(const std::string& name) {
    if (name == "krylov") return StationaryMethod::Krylov;
    if (name == "time_march") return StationaryMethod::TimeMarch;
    if (name == "direct_fd") return StationaryMethod::DirectFd;
    throw ConfigError("unknown stationary method: " + name);
}

std::string stationary_method_name(StationaryMethod m) {
    switch (m) {
        case StationaryMethod::Krylov: return "krylov";
        case StationaryMethod::TimeMarch: return "time_march";
        case StationaryMethod::DirectFd: return "direct_fd";
    }
    return "?";
}

namespace {

std::string fmt_sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

/** Bias from raw density values (no DensityField validation; stages may carry
 *  tiny negatives pointwise, but block masses must stay positive). */
BiasProfile bias_from_values(const VectorField& f_grid, const std::vector<double>& pi_vals,
                             BiasMethod method) {
    const TorusGrid& g = f_grid.grid();
    VectorField G = local_mean_force_cached(f_grid, pi_vals, g.m());
    switch (method) {
        case BiasMethod::None: {
            VectorField B(g.xi_grid(), g.m());
            return BiasProfile{std::move(G), std::move(B), ScalarField(g.xi_grid())};
        }
        case BiasMethod::Abf: {
            VectorField B = G;
            return BiasProfile{std::move(G), std::move(B), ScalarField(g.xi_grid())};
        }
        case BiasMethod::Pabf: {
            HelmholtzResult h = project_lebesgue(G);
            return BiasProfile{std::move(G), std::move(h.projected), std::move(h.potential)};
        }
    }
    throw ContractViolation("bias: unknown method");
}

/** -div((F + lift B) pi) with the xi-grid bias broadcast over fibers. */
ScalarField advection_rhs(const VectorField& f_grid, const VectorField& bias_b,
                          const std::vector<double>& pi_vals) {
    const TorusGrid& g = f_grid.grid();
    const std::size_t nf = g.fiber_size();
    const int m = g.m();
    VectorField flux(g, g.n());
    for (int a = 0; a < g.n(); ++a) {
        const double* fa = f_grid.component(a).data();
        double* out = flux.component(a).data();
        if (a < m) {
            const double* ba = bias_b.component(a).data();
            for (std::size_t i = 0; i < g.size(); ++i)
                out[i] = (fa[i] + ba[i / nf]) * pi_vals[i];
        } else {
            for (std::size_t i = 0; i < g.size(); ++i) out[i] = fa[i] * pi_vals[i];
        }
    }
    ScalarField rhs = spectral::divergence(flux);
    rhs *= -1.0;
    return rhs;
}

struct StepOutcome {
    std::vector<double> values;
    double mass_drift;
};

/** Strang step on raw values; returns the renormalized density values. */
StepOutcome step_values(const TorusGrid& grid, const VectorField& f_grid, double beta,
                        BiasMethod method, const BiasProfile& bias, std::vector<double> pi_vals,
                        double dt) {
    ScalarField work(grid, std::move(pi_vals));
    spectral::heat_inplace(work, 0.5 * dt / beta);

    ScalarField k1 = advection_rhs(f_grid, bias.B, work.values());
    std::vector<double> mid(work.values());
    for (std::size_t i = 0; i < mid.size(); ++i) mid[i] += 0.5 * dt * k1[i];
    BiasProfile stage_bias = bias_from_values(f_grid, mid, method);
    ScalarField k2 = advection_rhs(f_grid, stage_bias.B, mid);
    for (std::size_t i = 0; i < work.size(); ++i) work[i] += dt * k2[i];

    spectral::heat_inplace(work, 0.5 * dt / beta);

    double mass = work.integral();
    if (!(mass > 0.0) || !std::isfinite(mass))
        throw SolverFailure("pde step: mass became non-positive; reduce dt");
    double drift = std::fabs(mass - 1.0);
    work *= 1.0 / mass;
    if (!(work.min() > 0.0))
        throw SolverFailure("pde step: positivity lost (min " + std::to_string(work.min()) +
                            "); reduce dt");
    return StepOutcome{std::move(work.values()), drift};
}

void check_stability(double dt, const VectorField& f_grid, const BiasProfile& bias) {
    double bound = stability_dt(f_grid, bias);
    if (!(dt > 0.0)) throw ContractViolation("pde step: need dt > 0");
    if (dt > bound)
        throw ContractViolation("pde step: dt " + std::to_string(dt) +
                                " violates stability bound " + std::to_string(bound));
}

} // namespace

double stability_dt(const VectorField& f_grid, const BiasProfile& bias) {
    double speed = f_grid.norm_linf() + bias.B.norm_linf();
    return 0.5 * f_grid.grid().min_spacing() / std::max(speed, 1.0);
}

BiasProfile compute_bias(const ForceField& f, const DensityField& pi, BiasMethod method) {
    VectorField f_grid = f.force_field(pi.grid());
    return bias_from_values(f_grid, pi.values(), method);
}

void step(PdeState& state, const ForceField& f, const StepOptions& opts) {
    VectorField f_grid = f.force_field(state.pi.grid());
    check_stability(opts.dt, f_grid, state.bias);
    StepOutcome out = step_values(state.pi.grid(), f_grid, f.beta(), opts.method, state.bias,
                                  state.pi.values(), opts.dt);
    state.pi = DensityField(ScalarField(state.pi.grid(), std::move(out.values)));
    state.t += opts.dt;
    state.mass_drift += out.mass_drift;
    state.bias = bias_from_values(f_grid, state.pi.values(), opts.method);
}

PdeSolver::PdeSolver(const ForceField& f, const TorusGrid& grid, BiasMethod method, double dt,
                     int bias_stride)
    : force_(f),
      grid_(grid),
      method_(method),
      dt_(dt),
      bias_stride_(bias_stride),
      f_grid_(f.force_field(grid)),
      sup_f_(f_grid_.norm_linf()),
      state_{DensityField::uniform(grid), 0.0,
             BiasProfile{VectorField(grid.xi_grid(), grid.m()), VectorField(grid.xi_grid(), grid.m()),
                         ScalarField(grid.xi_grid())},
             0.0} {
    if (grid.n() != f.dimension()) throw ContractViolation("pde: grid dimension mismatch");
    if (!(dt > 0.0)) throw ContractViolation("pde: need dt > 0");
    if (bias_stride < 1) throw ContractViolation("pde: need bias_stride >= 1");
}

double PdeSolver::auto_dt(const ForceField& f, const TorusGrid& grid, double safety) {
    VectorField f_grid = f.force_field(grid);
    double sup = f_grid.norm_linf();
    // Bias magnitude is bounded by the conditional mean of |F1|, itself <= sup|F|.
    return safety * 0.5 * grid.min_spacing() / std::max(2.0 * sup, 1.0);
}

void PdeSolver::init(DensityField pi0) {
    if (!(pi0.grid() == grid_)) throw ContractViolation("pde: initial density grid mismatch");
    state_.pi = std::move(pi0);
    state_.t = 0.0;
    state_.mass_drift = 0.0;
    state_.bias = bias_from_values(f_grid_, state_.pi.values(), method_);
    steps_ = 0;
    initialized_ = true;
}

void PdeSolver::advance() {
    if (!initialized_) throw ContractViolation("pde: init() before advance()");
    check_stability(dt_, f_grid_, state_.bias);
    StepOutcome out =
        step_values(grid_, f_grid_, force_.beta(), method_, state_.bias, state_.pi.values(), dt_);
    state_.pi = DensityField(ScalarField(grid_, std::move(out.values)));
    state_.mass_drift += out.mass_drift;
    ++steps_;
    state_.t = static_cast<double>(steps_) * dt_;
    if (steps_ % bias_stride_ == 0)
        state_.bias = bias_from_values(f_grid_, state_.pi.values(), method_);
}

double marginal_equation_residual(const PdeState& prev, const PdeState& mid, const PdeState& next,
                                  double beta) {
    double dt1 = mid.t - prev.t;
    double dt2 = next.t - mid.t;
    if (!(dt1 > 0.0) || !(dt2 > 0.0) || std::fabs(dt1 - dt2) > 1e-9 * std::max(dt1, dt2))
        throw ContractViolation("marginal residual: states must be equally spaced in time");
    DensityField marg_prev = prev.pi.marginal_xi();
    DensityField marg_mid = mid.pi.marginal_xi();
    DensityField marg_next = next.pi.marginal_xi();
    const TorusGrid& gx = marg_mid.grid();

    ScalarField lhs(gx);
    for (std::size_t i = 0; i < gx.size(); ++i)
        lhs[i] = (marg_next[i] - marg_prev[i]) / (dt1 + dt2);

    ScalarField lap = spectral::laplacian(marg_mid.field());
    VectorField flux(gx, gx.n());
    for (int a = 0; a < gx.n(); ++a) {
        auto out = flux.component(a);
        auto bb = mid.bias.B.component(a);
        auto gg = mid.bias.G.component(a);
        for (std::size_t i = 0; i < gx.size(); ++i) out[i] = (bb[i] - gg[i]) * marg_mid[i];
    }
    ScalarField div_term = spectral::divergence(flux);

    ScalarField res(gx);
    for (std::size_t i = 0; i < gx.size(); ++i)
        res[i] = lhs[i] - (lap[i] / beta - div_term[i]);
    return res.norm_l2();
}

namespace {

/** L w = (1/beta) Lap w - div(a w), the linearized stationary operator. */
ScalarField stationary_op(const VectorField& a, double beta, const ScalarField& w) {
    ScalarField lap = spectral::laplacian(w);
    VectorField flux(a.grid(), a.dim());
    for (int c = 0; c < a.dim(); ++c) {
        auto fc = flux.component(c);
        auto ac = a.component(c);
        for (std::size_t i = 0; i < fc.size(); ++i) fc[i] = ac[i] * w[i];
    }
    ScalarField div = spectral::divergence(flux);
    ScalarField out(w.grid());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = lap[i] / beta - div[i];
    return out;
}

StationarySolution stationary_krylov(const VectorField& a, double beta, double tol,
                                     long max_iters) {
    const TorusGrid& grid = a.grid();
    ScalarField b = spectral::divergence(a); // rhs: div(a * 1)
    tol *= std::max(1.0, b.norm_l2());       // stop on the residual relative to the data
    auto precond = [beta](const ScalarField& v) {
        ScalarField z = spectral::inverse_laplacian(v);
        z *= beta;
        return z;
    };
    auto dot = [](const ScalarField& u, const ScalarField& v) {
        double s = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
        return s;
    };

    ScalarField x(grid, 0.0);
    ScalarField r = b;
    long iters = 0;
    for (int attempt = 0; attempt < 2; ++attempt) {
        ScalarField rhat = r;
        if (attempt == 1) {
            // Breakdown restart: re-randomize the shadow residual.
            rhat = spectral::random_trig_poly(grid, 3, 0xB1C6u, 7);
            rhat += -rhat.mean();
        }
        double rho = 1.0, alpha = 1.0, omega = 1.0;
        ScalarField v(grid, 0.0), p(grid, 0.0);
        bool breakdown = false;
        while (iters < max_iters) {
            double rho1 = dot(rhat, r);
            if (std::fabs(rho1) < 1e-300) { breakdown = true; break; }
            double bet = (rho1 / rho) * (alpha / omega);
            for (std::size_t i = 0; i < p.size(); ++i) p[i] = r[i] + bet * (p[i] - omega * v[i]);
            ScalarField phat = precond(p);
            v = stationary_op(a, beta, phat);
            double rv = dot(rhat, v);
            if (std::fabs(rv) < 1e-300) { breakdown = true; break; }
            alpha = rho1 / rv;
            ScalarField s = r;
            for (std::size_t i = 0; i < s.size(); ++i) s[i] -= alpha * v[i];
            if (s.norm_l2() <= tol) {
                for (std::size_t i = 0; i < x.size(); ++i) x[i] += alpha * phat[i];
                r = s;
                ++iters;
                break;
            }
            ScalarField shat = precond(s);
            ScalarField t = stationary_op(a, beta, shat);
            double tt = dot(t, t);
            if (!(tt > 0.0)) { breakdown = true; break; }
            omega = dot(t, s) / tt;
            for (std::size_t i = 0; i < x.size(); ++i)
                x[i] += alpha * phat[i] + omega * shat[i];
            for (std::size_t i = 0; i < r.size(); ++i) r[i] = s[i] - omega * t[i];
            rho = rho1;
            ++iters;
            if (r.norm_l2() <= tol) break;
        }
        // True residual guard (BiCGStab's recurrence can drift).
        ScalarField true_r = stationary_op(a, beta, x);
        true_r -= b;
        true_r *= -1.0;
        r = true_r;
        if (r.norm_l2() <= tol) break;
        if (!breakdown && iters >= max_iters) break;
    }
    double final_res = r.norm_l2();
    if (final_res > tol || !std::isfinite(final_res))
        throw SolverFailure("stationary_linear: BiCGStab residual " + fmt_sci(final_res) +
                            " above tolerance " + fmt_sci(tol));

    ScalarField nu(grid);
    for (std::size_t i = 0; i < nu.size(); ++i) nu[i] = 1.0 + x[i];
    if (!(nu.min() > 0.0))
        throw SolverFailure("stationary_linear: solution lost positivity (min " +
                            std::to_string(nu.min()) + ")");
    DensityField out = DensityField::normalized(std::move(nu));
    return StationarySolution{std::move(out), final_res, iters};
}

StationarySolution stationary_march(const VectorField& a, double beta, double tol,
                                    long max_iters) {
    const TorusGrid& grid = a.grid();
    double dt = 0.4 * grid.min_spacing() / std::max(a.norm_linf(), 1.0);
    BiasProfile no_bias{VectorField(grid.xi_grid(), grid.m()), VectorField(grid.xi_grid(), grid.m()),
                        ScalarField(grid.xi_grid())};
    std::vector<double> vals(grid.size(), 1.0);
    double residual = std::numeric_limits<double>::infinity();
    long steps = 0;
    while (steps < max_iters) {
        StepOutcome out = step_values(grid, a, beta, BiasMethod::None, no_bias, vals, dt);
        double diff2 = 0.0;
        for (std::size_t i = 0; i < vals.size(); ++i) {
            double d = out.values[i] - vals[i];
            diff2 += d * d;
        }
        residual = std::sqrt(diff2 * grid.cell_volume()) / dt;
        vals = std::move(out.values);
        ++steps;
        if (residual <= tol) break;
    }
    if (residual > tol) {
        throw SolverFailure("stationary_linear: time-march residual " + fmt_sci(residual) +
                            " above tolerance after " + std::to_string(steps) + " steps");
    }
    DensityField nu = DensityField::normalized(ScalarField(grid, std::move(vals)));
    return StationarySolution{std::move(nu), residual, steps};
}

StationarySolution stationary_direct_fd(const VectorField& a, double beta) {
    const TorusGrid& grid = a.grid();
    const std::size_t n_pts = grid.size();
    if (n_pts > 16384)
        throw ContractViolation("stationary_linear: direct solve limited to 16384 points");
    const int d = grid.n();
    const std::vector<int>& res = grid.resolution();
    std::vector<std::size_t> stride(d, 1);
    for (int ax = d - 2; ax >= 0; --ax)
        stride[ax] = stride[ax + 1] * static_cast<std::size_t>(res[ax + 1]);

    using Trip = Eigen::Triplet<double>;
    std::vector<Trip> trips;
    trips.reserve(n_pts * (2 * d + 1));
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<long>(n_pts));
    const double cv = grid.cell_volume();
    for (std::size_t i = 0; i < n_pts; ++i) {
        if (i == 0) {
            // Mass constraint replaces one redundant row.
            for (std::size_t j = 0; j < n_pts; ++j)
                trips.emplace_back(0, static_cast<int>(j), cv);
            rhs[0] = 1.0;
            continue;
        }
        for (int ax = 0; ax < d; ++ax) {
            const double h = 1.0 / res[ax];
            const std::size_t s = stride[ax];
            const int r = res[ax];
            const int idx_ax = static_cast<int>((i / s) % static_cast<std::size_t>(r));
            const std::size_t up = i + (static_cast<std::size_t>((idx_ax + 1) % r) - idx_ax) * s;
            const std::size_t dn = i + (static_cast<std::size_t>((idx_ax - 1 + r) % r) - idx_ax) * s;
            const double inv_h2 = 1.0 / (h * h);
            trips.emplace_back(static_cast<int>(i), static_cast<int>(up), inv_h2 / beta);
            trips.emplace_back(static_cast<int>(i), static_cast<int>(dn), inv_h2 / beta);
            trips.emplace_back(static_cast<int>(i), static_cast<int>(i), -2.0 * inv_h2 / beta);
            const double au = a.value(ax, up);
            const double ad = a.value(ax, dn);
            trips.emplace_back(static_cast<int>(i), static_cast<int>(up), -au / (2.0 * h));
            trips.emplace_back(static_cast<int>(i), static_cast<int>(dn), ad / (2.0 * h));
        }
    }
    Eigen::SparseMatrix<double> mat(static_cast<long>(n_pts), static_cast<long>(n_pts));
    mat.setFromTriplets(trips.begin(), trips.end());
    mat.makeCompressed();
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.analyzePattern(mat);
    lu.factorize(mat);
    if (lu.info() != Eigen::Success)
        throw SolverFailure("stationary_linear: sparse LU factorization failed");
    Eigen::VectorXd x = lu.solve(rhs);
    if (lu.info() != Eigen::Success)
        throw SolverFailure("stationary_linear: sparse LU solve failed");
    Eigen::VectorXd fd_res = mat * x - rhs;
    double residual = 0.0;
    for (long i = 1; i < fd_res.size(); ++i) residual = std::max(residual, std::fabs(fd_res[i]));
    ScalarField nu(grid);
    for (std::size_t i = 0; i < n_pts; ++i) nu[i] = x[static_cast<long>(i)];
    if (!(nu.min() > 0.0))
        throw SolverFailure("stationary_linear: direct solution lost positivity");
    DensityField out = DensityField::normalized(std::move(nu));
    return StationarySolution{std::move(out), residual, 1};
}

} // namespace

StationarySolution stationary_linear(const VectorField& drift, double beta,
                                     const StationaryOptions& opts) {
    if (drift.dim() != drift.grid().n())
        throw ContractViolation("stationary_linear: drift components must match grid dimension");
    if (!(beta > 0.0)) throw ContractViolation("stationary_linear: need beta > 0");
    switch (opts.method) {
        case StationaryMethod::Krylov:
            return stationary_krylov(drift, beta, opts.tol > 0 ? opts.tol : 1e-10,
                                     opts.max_iters > 0 ? opts.max_iters : 2000);
        case StationaryMethod::TimeMarch:
            return stationary_march(drift, beta, opts.tol > 0 ? opts.tol : 1e-9,
                                    opts.max_iters > 0 ? opts.max_iters : 500000);
        case StationaryMethod::DirectFd:
            return stationary_direct_fd(drift, beta);
    }
    throw ContractViolation("stationary_linear: unknown method");
}

double stationary_residual(const ForceField& f, const DensityField& pi, const VectorField& bias) {
    const TorusGrid& grid = pi.grid();
    VectorField f_grid = f.force_field(grid);
    const std::size_t nf = grid.fiber_size();
    for (int a = 0; a < grid.m(); ++a) {
        auto fa = f_grid.component(a);
        auto ba = bias.component(a);
        for (std::size_t i = 0; i < fa.size(); ++i) fa[i] += ba[i / nf];
    }
    ScalarField r = stationary_op(f_grid, f.beta(), pi.field());
    return r.norm_l2();
}

StationaryState fixed_point_iterate(const ForceField& f, const TorusGrid& grid, BiasMethod method,
                                    const FixedPointOptions& opts) {
    if (grid.n() != f.dimension()) throw ContractViolation("fixed point: grid dimension mismatch");
    VectorField f_grid = f.force_field(grid);
    const std::size_t nf = grid.fiber_size();
    const int m = grid.m();
    VectorField B(grid.xi_grid(), m);
    std::vector<double> history;
    double theta = 1.0;
    double prev_res = std::numeric_limits<double>::infinity();

    DensityField nu = DensityField::uniform(grid);
    VectorField G(grid.xi_grid(), m);
    ScalarField H(grid.xi_grid());
    double last_stationary_res = 0.0;
    bool converged = false;

    for (int k = 0; k < opts.max_iters; ++k) {
        VectorField drift = f_grid;
        for (int a = 0; a < m; ++a) {
            auto da = drift.component(a);
            auto ba = B.component(a);
            for (std::size_t i = 0; i < da.size(); ++i) da[i] += ba[i / nf];
        }
        StationaryOptions sopts;
        sopts.method = StationaryMethod::Krylov;
        sopts.tol = opts.stationary_tol;
        StationarySolution sol = stationary_linear(drift, f.beta(), sopts);
        last_stationary_res = sol.residual;
        G = local_mean_force_cached(f_grid, sol.nu.values(), m);
        VectorField b_new = G;
        ScalarField h_new(grid.xi_grid());
        if (method == BiasMethod::Pabf) {
            HelmholtzResult hr = project_lebesgue(G);
            b_new = std::move(hr.projected);
            h_new = std::move(hr.potential);
        } else if (method == BiasMethod::None) {
            b_new = VectorField(grid.xi_grid(), m);
        }
        VectorField diff = b_new;
        diff -= B;
        double res = diff.norm_l2();
        history.push_back(res);
        nu = std::move(sol.nu);
        if (res <= opts.tol) {
            B = std::move(b_new);
            H = std::move(h_new);
            converged = true;
            break;
        }
        if (res > prev_res * (1.0 + 1e-9)) theta = 0.5; // oscillation: damp remaining updates
        for (std::size_t i = 0; i < B.components().size(); ++i)
            B.components()[i] += theta * diff.components()[i];
        H = std::move(h_new);
        prev_res = res;
    }
    if (!converged)
        throw NonConvergence("fixed point: residual " +
                                 fmt_sci(history.empty() ? -1.0 : history.back()) +
                                 " above tolerance after " + std::to_string(opts.max_iters) +
                                 " iterations",
                             history);
    double pde_res = stationary_residual(f, nu, B);
    (void)last_stationary_res;
    return StationaryState{std::move(nu), BiasProfile{std::move(G), std::move(B), std::move(H)},
                           history.back(), pde_res, std::move(history)};
}

DriftAudit drift_lipschitz_check(const TorusGrid& grid, int pairs, double beta, double m_cap,
                                 double p, std::uint64_t seed) {
    if (pairs < 1) throw ContractViolation("drift audit: need pairs >= 1");
    if (!(m_cap > 0.0)) throw ContractViolation("drift audit: need m_cap > 0");
    CounterRng rng(seed, CounterRng::kSampling);
    DriftAudit audit;
    audit.min_sup = std::numeric_limits<double>::infinity();
    double ratio_sum = 0.0;
    for (int j = 0; j < pairs; ++j) {
        const std::uint64_t sj = static_cast<std::uint64_t>(j);
        VectorField a = spectral::random_trig_vector(grid, 3, seed, 4 * sj);
        double ua = rng.uniforms(sj, 0, 0)[0];
        double na = a.norm_lp(p);
        if (na < 1e-14) continue;
        a *= m_cap * (0.25 + 0.75 * ua) / na;

        VectorField b(grid, grid.n());
        if (j % 2 == 0) {
            b = spectral::random_trig_vector(grid, 3, seed, 4 * sj + 1);
            double ub = rng.uniforms(sj, 0, 1)[0];
            double nb = b.norm_lp(p);
            if (nb < 1e-14) continue;
            b *= m_cap * (0.25 + 0.75 * ub) / nb;
        } else {
            // Nearby pair: probes the local Lipschitz modulus.
            VectorField delta = spectral::random_trig_vector(grid, 3, seed, 4 * sj + 2);
            double nd = delta.norm_l2();
            if (nd < 1e-14) continue;
            delta *= 0.05 * m_cap / nd;
            b = a;
            b += delta;
            double nb = b.norm_lp(p);
            if (nb > m_cap) b *= m_cap / nb;
        }

        StationarySolution nu_a = stationary_linear(a, beta);
        StationarySolution nu_b = stationary_linear(b, beta);
        VectorField drift_diff = a;
        drift_diff -= b;
        double dd = drift_diff.norm_l2();
        if (dd < 1e-14) continue;
        ScalarField dens_diff = nu_a.nu.field();
        dens_diff -= nu_b.nu.field();
        double nd2 = dens_diff.norm_l2();
        double harnack = std::max(nu_a.nu.field().max() / nu_a.nu.field().min(),
                                  nu_b.nu.field().max() / nu_b.nu.field().min());
        double ratio = nd2 / dd;
        audit.pairs.push_back(DriftAuditPair{dd, nd2, ratio, harnack});
        audit.max_ratio = std::max(audit.max_ratio, ratio);
        audit.max_harnack = std::max(audit.max_harnack, harnack);
        audit.min_sup = std::min(audit.min_sup,
                                 std::min(nu_a.nu.field().max(), nu_b.nu.field().max()));
        ratio_sum += ratio;
    }
    if (audit.pairs.empty()) throw SolverFailure("drift audit: no valid pairs");
    audit.mean_ratio = ratio_sum / static_cast<double>(audit.pairs.size());
    return audit;
}

} // namespace abf
