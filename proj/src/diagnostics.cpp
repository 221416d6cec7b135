#include "abf/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "abf/errors.hpp"
#include "abf/helmholtz.hpp"
#include "abf/rng.hpp"
#include "abf/spectral.hpp"

namespace abf {

namespace {

constexpr double kFourPiSq = 4.0 * std::numbers::pi * std::numbers::pi;

/** nu * (r ln r - r + 1) with r = mu/nu, stable for r near 1 and r near 0. */
double entropy_term(double mu, double nu) {
    if (nu < DensityField::positivity_floor)
        return mu > DensityField::positivity_floor ? std::numeric_limits<double>::infinity() : 0.0;
    double d = mu - nu;
    double e = d / nu;
    if (std::fabs(e) < 0.5) return nu * ((1.0 + e) * std::log1p(e) - e);
    return mu * std::log(mu / nu) - d;
}

void require_same_grid(const TorusGrid& a, const TorusGrid& b, const char* what) {
    if (!(a == b)) throw ContractViolation(std::string(what) + ": grid mismatch");
}

struct LinFit {
    double slope;
    double intercept;
    double r2;
};

LinFit least_squares(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double dx = x[i] - mx;
        double dy = y[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    // Rounding in the mean leaves a residual spread of order eps^2 * mx^2 even
    // when every timestamp is identical, so the degeneracy test must be
    // relative to the magnitude of the timestamps themselves.
    const double sxx_floor =
        static_cast<double>(n) * 1e-20 * (1.0 + mx * mx);
    if (!(sxx > sxx_floor)) throw ContractViolation("rate fit: degenerate time window");
    double slope = sxy / sxx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double r = y[i] - (my + slope * (x[i] - mx));
        ss_res += r * r;
    }
    double r2 = syy > 1e-30 ? 1.0 - ss_res / syy : 1.0;
    return LinFit{slope, my - slope * mx, r2};
}

TorusGrid check_grid(int n) {
    if (n == 1) return TorusGrid({256}, 1);
    if (n == 2) return TorusGrid({64, 64}, 1);
    if (n == 3) return TorusGrid({32, 32, 32}, 1);
    throw ContractViolation("inequality check: dimension must be 1, 2 or 3");
}

DensityField random_density(const TorusGrid& grid, std::uint64_t seed, std::uint64_t stream) {
    ScalarField u = spectral::random_trig_poly(grid, 3, seed, stream);
    double sup = u.norm_linf();
    ScalarField v(grid, 1.0);
    if (sup > 1e-14) {
        u *= 0.9 / sup;
        v += u;
    }
    return DensityField::normalized(std::move(v));
}

} // namespace

double relative_entropy(const DensityField& mu, const DensityField& nu) {
    require_same_grid(mu.grid(), nu.grid(), "relative entropy");
    double sum = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        double term = entropy_term(mu[i], nu[i]);
        if (std::isinf(term)) return term;
        sum += term;
    }
    return sum * mu.grid().cell_volume();
}

double relative_entropy_uniform(const DensityField& mu) {
    double sum = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) sum += entropy_term(mu[i], 1.0);
    return sum * mu.grid().cell_volume();
}

double fisher_information(const DensityField& mu, const DensityField& nu) {
    require_same_grid(mu.grid(), nu.grid(), "fisher information");
    ScalarField g(mu.grid());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = std::log(mu[i]) - std::log(nu[i]);
    VectorField grad = spectral::gradient(g);
    double sum = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        double m2 = 0.0;
        for (int a = 0; a < grad.dim(); ++a) {
            double c = grad.value(a, i);
            m2 += c * c;
        }
        sum += mu[i] * m2;
    }
    return sum * mu.grid().cell_volume();
}

double fisher_information_uniform(const DensityField& mu) {
    return fisher_information(mu, DensityField::uniform(mu.grid()));
}

double total_variation(const DensityField& mu, const DensityField& nu) {
    require_same_grid(mu.grid(), nu.grid(), "total variation");
    double sum = 0.0;
    for (std::size_t i = 0; i < mu.size(); ++i) sum += std::fabs(mu[i] - nu[i]);
    return 0.5 * sum * mu.grid().cell_volume();
}

ScalarField microscopic_entropy_profile(const DensityField& pi, const DensityField& pi_inf) {
    require_same_grid(pi.grid(), pi_inf.grid(), "microscopic entropy");
    const TorusGrid& grid = pi.grid();
    const std::size_t nx = grid.xi_size();
    const std::size_t nf = grid.fiber_size();
    ScalarField profile(grid.xi_grid());
    for (std::size_t x = 0; x < nx; ++x) {
        const std::size_t base = x * nf;
        double mp = 0.0, mi = 0.0;
        for (std::size_t y = 0; y < nf; ++y) {
            mp += pi[base + y];
            mi += pi_inf[base + y];
        }
        mp /= static_cast<double>(nf);
        mi /= static_cast<double>(nf);
        double sum = 0.0;
        for (std::size_t y = 0; y < nf; ++y)
            sum += entropy_term(pi[base + y] / mp, pi_inf[base + y] / mi);
        profile[x] = sum / static_cast<double>(nf);
    }
    return profile;
}

EntropyReport entropy_split(const DensityField& pi, const DensityField& pi_inf) {
    require_same_grid(pi.grid(), pi_inf.grid(), "entropy split");
    const TorusGrid& grid = pi.grid();
    EntropyReport rep{};
    rep.E = relative_entropy(pi, pi_inf);
    DensityField mp = pi.marginal_xi();
    DensityField mi = pi_inf.marginal_xi();
    rep.E_M = relative_entropy(mp, mi);
    rep.I_M = fisher_information(mp, mi);

    ScalarField profile = microscopic_entropy_profile(pi, pi_inf);
    double em = 0.0;
    for (std::size_t x = 0; x < profile.size(); ++x) em += mp[x] * profile[x];
    rep.E_m = em * mp.grid().cell_volume();

    ScalarField g(grid);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = std::log(pi[i]) - std::log(pi_inf[i]);
    VectorField grad = spectral::gradient(g);
    double mf = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        double m2 = 0.0;
        for (int a = grid.m(); a < grid.n(); ++a) {
            double c = grad.value(a, i);
            m2 += c * c;
        }
        mf += pi[i] * m2;
    }
    rep.micro_fisher = mf * grid.cell_volume();

    rep.tv = total_variation(pi, pi_inf);
    double li = 0.0;
    for (std::size_t x = 0; x < mp.size(); ++x) li = std::max(li, std::fabs(mp[x] - 1.0));
    rep.linf_marginal = li;
    return rep;
}

RateFit fit_rate(std::span<const double> t, std::span<const double> v, double window_start,
                 double window_end, double floor) {
    if (t.size() != v.size()) throw ContractViolation("rate fit: length mismatch");
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < window_start || t[i] > window_end) continue;
        if (floor > 0.0) {
            if (v[i] < floor) continue;
        } else if (!(v[i] > 0.0)) {
            throw ContractViolation("rate fit: nonpositive value inside window");
        }
        xs.push_back(t[i]);
        ys.push_back(std::log(v[i]));
    }
    if (xs.size() < 5) throw ContractViolation("rate fit: need at least five usable points");
    LinFit lf = least_squares(xs, ys);
    RateFit out;
    out.rate = -lf.slope;
    out.prefactor = std::exp(lf.intercept);
    out.r_squared = lf.r2;
    out.t_start = *std::min_element(xs.begin(), xs.end());
    out.t_end = *std::max_element(xs.begin(), xs.end());
    out.points = static_cast<int>(xs.size());
    return out;
}

LsiEstimates lsi_bounds(const DensityField& pi_inf, const ForceField& force) {
    const TorusGrid& grid = pi_inf.grid();
    if (grid.n() != force.dimension()) throw ContractViolation("lsi bounds: dimension mismatch");
    const double beta = force.beta();

    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    std::vector<double> logs(pi_inf.size());
    for (std::size_t i = 0; i < pi_inf.size(); ++i) {
        logs[i] = std::log(pi_inf[i]);
        lo = std::min(lo, logs[i]);
        hi = std::max(hi, logs[i]);
    }
    const double osc_full = hi - lo;

    const std::size_t nx = grid.xi_size();
    const std::size_t nf = grid.fiber_size();
    double osc_fiber = 0.0;
    for (std::size_t x = 0; x < nx; ++x) {
        double flo = std::numeric_limits<double>::infinity();
        double fhi = -std::numeric_limits<double>::infinity();
        for (std::size_t y = 0; y < nf; ++y) {
            double l = logs[x * nf + y];
            flo = std::min(flo, l);
            fhi = std::max(fhi, l);
        }
        osc_fiber = std::max(osc_fiber, fhi - flo);
    }

    LsiEstimates out{};
    out.R_lower = kFourPiSq * std::exp(-osc_full);
    out.rho_lower = kFourPiSq * std::exp(-osc_fiber);
    out.M = lipschitz_fiber(force, grid.m());
    out.lambda_pred_abf = std::min(2.0 * kFourPiSq, 2.0 * out.rho_lower) / beta;
    out.lambda_pred_pabf = std::min(kFourPiSq, 2.0 * out.rho_lower) / beta;
    out.noncons_defined = out.M * beta < 2.0 * out.rho_lower;
    out.lambda_pred_noncons =
        out.noncons_defined
            ? 2.0 * out.R_lower * (1.0 - out.M * beta / (2.0 * out.rho_lower)) / beta
            : std::numeric_limits<double>::quiet_NaN();
    return out;
}

double nash_slack(const ScalarField& u) {
    const int n = u.grid().n();
    const double a = 2.0 * std::pow(3.0, 2.0 * n / (n + 2.0));
    const double l2sq = u.norm_l2() * u.norm_l2();
    const double l1 = u.norm_l1();
    const double g2 = spectral::gradient(u).norm_l2();
    const double rhs = 2.0 * l1 * l1 +
                       a * std::pow(g2, 2.0 * n / (n + 2.0)) * std::pow(l1, 4.0 / (n + 2.0));
    return rhs - l2sq;
}

double nash_check(int trials, int n, std::uint64_t seed) {
    if (trials < 1) throw ContractViolation("nash check: need trials >= 1");
    TorusGrid grid = check_grid(n);
    CounterRng rng(seed, CounterRng::kInit);
    double worst = std::numeric_limits<double>::infinity();
    for (int j = 0; j < trials; ++j) {
        ScalarField u = spectral::random_trig_poly(grid, 3, seed, static_cast<std::uint64_t>(j));
        if (j % 2 == 1) u += 2.0 * rng.uniforms(static_cast<std::uint64_t>(j), 0, 0)[0] - 1.0;
        worst = std::min(worst, nash_slack(u));
    }
    return worst;
}

double poincare_slack(const ScalarField& u) {
    ScalarField c = u;
    c += -u.mean();
    const double lhs = c.norm_l2() * c.norm_l2();
    const double g2 = spectral::gradient(u).norm_l2();
    return g2 * g2 / kFourPiSq - lhs;
}

double poincare_check(int trials, int n, std::uint64_t seed) {
    if (trials < 1) throw ContractViolation("poincare check: need trials >= 1");
    TorusGrid grid = check_grid(n);
    double worst = std::numeric_limits<double>::infinity();
    for (int j = 0; j < trials; ++j) {
        ScalarField u = spectral::random_trig_poly(grid, 3, seed, static_cast<std::uint64_t>(j));
        worst = std::min(worst, poincare_slack(u));
    }
    return worst;
}

double lsi_direction_check(int trials, int n, std::uint64_t seed) {
    if (trials < 1) throw ContractViolation("lsi check: need trials >= 1");
    TorusGrid grid = check_grid(n);
    double worst = std::numeric_limits<double>::infinity();
    for (int j = 0; j < trials; ++j) {
        DensityField mu = random_density(grid, seed, static_cast<std::uint64_t>(j));
        double h = relative_entropy_uniform(mu);
        double info = fisher_information_uniform(mu);
        worst = std::min(worst, info / (2.0 * kFourPiSq) - h);
    }
    return worst;
}

double csiszar_kullback_check(int pairs, int n, std::uint64_t seed) {
    if (pairs < 1) throw ContractViolation("csiszar-kullback check: need pairs >= 1");
    TorusGrid grid = check_grid(n);
    double worst = std::numeric_limits<double>::infinity();
    for (int j = 0; j < pairs; ++j) {
        DensityField mu = random_density(grid, seed, 2 * static_cast<std::uint64_t>(j));
        DensityField nu = random_density(grid, seed, 2 * static_cast<std::uint64_t>(j) + 1);
        double h = relative_entropy(mu, nu);
        worst = std::min(worst, std::sqrt(2.0 * h) - total_variation(mu, nu));
    }
    return worst;
}

BiasBoundReport bias_bound_check(const DensityField& pi, const DensityField& pi_inf,
                                 const ForceField& force, const LsiEstimates& lsi) {
    require_same_grid(pi.grid(), pi_inf.grid(), "bias bound");
    VectorField g_t = local_mean_force(force, pi);
    VectorField g_inf = local_mean_force(force, pi_inf);
    ScalarField profile = microscopic_entropy_profile(pi, pi_inf);
    BiasBoundReport rep{-std::numeric_limits<double>::infinity(), 0.0, 0.0};
    for (std::size_t x = 0; x < profile.size(); ++x) {
        double diff2 = 0.0;
        for (int a = 0; a < g_t.dim(); ++a) {
            double d = g_t.value(a, x) - g_inf.value(a, x);
            diff2 += d * d;
        }
        double lhs = std::sqrt(diff2);
        double rhs = lsi.M * std::sqrt(std::max(2.0 * profile[x] / lsi.rho_lower, 0.0));
        rep.max_violation = std::max(rep.max_violation, lhs - rhs);
        rep.max_lhs = std::max(rep.max_lhs, lhs);
        rep.max_rhs = std::max(rep.max_rhs, rhs);
    }
    return rep;
}

double observable_estimate(const ScalarField& psi, const DensityField& pi_inf,
                           const ScalarField& h_inf, double beta) {
    require_same_grid(psi.grid(), pi_inf.grid(), "observable estimate");
    require_same_grid(h_inf.grid(), pi_inf.grid().xi_grid(), "observable estimate (xi)");
    if (!(beta > 0.0)) throw ContractViolation("observable estimate: need beta > 0");
    const std::size_t nf = pi_inf.grid().fiber_size();
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < pi_inf.size(); ++i) {
        double w = std::exp(-beta * h_inf[i / nf]) * pi_inf[i];
        num += psi[i] * w;
        den += w;
    }
    return num / den;
}

EntropyDissipation entropy_dissipation_check(const PdeState& prev, const PdeState& mid,
                                             const PdeState& next, const DensityField& pi_inf,
                                             const VectorField& b_inf, double beta) {
    double dt1 = mid.t - prev.t;
    double dt2 = next.t - mid.t;
    if (!(dt1 > 0.0) || !(dt2 > 0.0) || std::fabs(dt1 - dt2) > 1e-9 * std::max(dt1, dt2))
        throw ContractViolation("entropy dissipation: states must be equally spaced in time");
    require_same_grid(mid.pi.grid(), pi_inf.grid(), "entropy dissipation");

    double e_prev = relative_entropy(prev.pi, pi_inf);
    double e_next = relative_entropy(next.pi, pi_inf);
    EntropyDissipation out{};
    out.dE_dt = (e_next - e_prev) / (dt1 + dt2);

    const TorusGrid& grid = mid.pi.grid();
    ScalarField g(grid);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = std::log(mid.pi[i]) - std::log(pi_inf[i]);
    VectorField grad = spectral::gradient(g);
    const std::size_t nf = grid.fiber_size();
    double info = 0.0, cross = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        double m2 = 0.0;
        for (int a = 0; a < grid.n(); ++a) {
            double c = grad.value(a, i);
            m2 += c * c;
        }
        info += mid.pi[i] * m2;
        double cx = 0.0;
        for (int a = 0; a < grid.m(); ++a)
            cx += (mid.bias.B.value(a, i / nf) - b_inf.value(a, i / nf)) * grad.value(a, i);
        cross += mid.pi[i] * cx;
    }
    const double cv = grid.cell_volume();
    out.dissipation = -info * cv / beta + cross * cv;
    out.mismatch = std::fabs(out.dE_dt - out.dissipation);
    return out;
}

namespace {

struct UnbiasedVariants {
    ScalarField h1;
    ScalarField h2;
};

UnbiasedVariants unbiased_variants(const ForceField& f, const TorusGrid& grid,
                                   const VectorField& f_grid) {
    StationarySolution unb = stationary_linear(f_grid, f.beta());
    DensityField marg = unb.nu.marginal_xi();
    ScalarField h1(grid.xi_grid());
    for (std::size_t i = 0; i < h1.size(); ++i) h1[i] = -std::log(marg[i]) / f.beta();
    h1 += -h1.mean();
    VectorField g = local_mean_force_cached(f_grid, unb.nu.values(), grid.m());
    ScalarField h2 = project_lebesgue(g).potential;
    return UnbiasedVariants{std::move(h1), std::move(h2)};
}

double l2_distance(const ScalarField& a, const ScalarField& b) {
    ScalarField d = a;
    d -= b;
    return d.norm_l2();
}

} // namespace

FreeEnergyVariants free_energy_variants(const ForceField& f, const TorusGrid& grid,
                                        BiasMethod method) {
    VectorField f_grid = f.force_field(grid);
    UnbiasedVariants uv = unbiased_variants(f, grid, f_grid);
    StationaryState fp = fixed_point_iterate(f, grid, method);
    ScalarField h3 =
        method == BiasMethod::Pabf ? fp.bias.H : project_lebesgue(fp.bias.G).potential;
    FreeEnergyVariants out{std::move(uv.h1), std::move(uv.h2), std::move(h3), 0.0, 0.0, 0.0};
    out.d12 = l2_distance(out.h1, out.h2);
    out.d13 = l2_distance(out.h1, out.h3);
    out.d23 = l2_distance(out.h2, out.h3);
    return out;
}

SweepResult perturbation_sweep(PotentialKind pot, PerturbationKind pert, double beta,
                               const TorusGrid& grid, std::span<const double> epsilons, double p,
                               std::span<const ScalarField> psis, std::uint64_t seed) {
    if (epsilons.empty()) throw ContractViolation("sweep: need at least one epsilon");
    for (std::size_t i = 0; i + 1 < epsilons.size(); ++i)
        if (!(epsilons[i] <= epsilons[i + 1]))
            throw ContractViolation("sweep: epsilons must be ascending");
    if (!(p >= 1.0)) throw ContractViolation("sweep: need p >= 1");

    ForceField f0 = ForceField::library(pot, PerturbationKind::None, 0.0, beta, grid.n(), seed);
    ReferenceEquilibrium ref = free_energy(f0, grid);

    std::vector<double> mu_psi;
    for (const ScalarField& psi : psis) {
        require_same_grid(psi.grid(), grid, "sweep psi");
        double s = 0.0;
        for (std::size_t i = 0; i < psi.size(); ++i) s += psi[i] * ref.mu[i];
        mu_psi.push_back(s * grid.cell_volume());
    }

    if (pert != PerturbationKind::None && !epsilons.empty()) {
        ForceField probe = ForceField::library(pot, pert, 1.0, beta, grid.n(), seed);
        double sup = probe.perturbation_field(grid).norm_linf();
        for (double eps : epsilons) {
            if (!(eps >= 0.0)) throw ContractViolation("sweep: epsilons must be nonnegative");
            if (eps * sup > 1.0 + 1e-12)
                throw ContractViolation("sweep: epsilon * sup|Delta| exceeds 1");
        }
    }

    SweepResult result;
    for (double eps : epsilons) {
        ForceField f_eps = ForceField::library(pot, pert, eps, beta, grid.n(), seed);
        VectorField f_grid = f_eps.force_field(grid);
        SweepRow row{eps, false, 0.0, {}, 0.0, 0.0, 0.0};
        try {
            StationaryState fp = fixed_point_iterate(f_eps, grid, BiasMethod::Pabf);
            row.converged = true;
            VectorField diff = fp.bias.B;
            diff -= ref.gradA;
            row.grad_error = diff.norm_lp(p);
            for (std::size_t k = 0; k < psis.size(); ++k) {
                double est = observable_estimate(psis[k], fp.pi_inf, fp.bias.H, beta);
                row.observable_bias.push_back(std::fabs(mu_psi[k] - est));
            }
            UnbiasedVariants uv = unbiased_variants(f_eps, grid, f_grid);
            row.h_d12 = l2_distance(uv.h1, uv.h2);
            row.h_d13 = l2_distance(uv.h1, fp.bias.H);
            row.h_d23 = l2_distance(uv.h2, fp.bias.H);
        } catch (const NonConvergence&) {
            row.converged = false;
        }
        result.rows.push_back(std::move(row));
    }

    auto loglog = [](std::span<const double> xs, std::span<const double> ys, double& slope,
                     double& r2) {
        std::vector<double> lx, ly;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (xs[i] > 0.0 && ys[i] > 1e-300) {
                lx.push_back(std::log(xs[i]));
                ly.push_back(std::log(ys[i]));
            }
        }
        if (lx.size() < 2) {
            slope = std::numeric_limits<double>::quiet_NaN();
            r2 = std::numeric_limits<double>::quiet_NaN();
            return;
        }
        LinFit lf = least_squares(lx, ly);
        slope = lf.slope;
        r2 = lf.r2;
    };

    std::vector<double> eps_ok, err_ok;
    for (const SweepRow& row : result.rows) {
        if (!row.converged) continue;
        eps_ok.push_back(row.epsilon);
        err_ok.push_back(row.grad_error);
    }
    loglog(eps_ok, err_ok, result.grad_slope, result.grad_r2);

    for (std::size_t k = 0; k < psis.size(); ++k) {
        std::vector<double> ob;
        std::vector<double> ep;
        for (const SweepRow& row : result.rows) {
            if (!row.converged) continue;
            ep.push_back(row.epsilon);
            ob.push_back(row.observable_bias[k]);
        }
        double s, r;
        loglog(ep, ob, s, r);
        result.obs_slopes.push_back(s);
        result.obs_r2.push_back(r);
    }
    return result;
}

} // namespace abf
