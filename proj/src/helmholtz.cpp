#include "abf/helmholtz.hpp"

#include <cmath>
#include <string>

#include "abf/errors.hpp"
#include "abf/spectral.hpp"

namespace abf {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

/** A(h) = -div(nu grad h), the SPD weighted-projection operator. */
ScalarField weighted_op(const ScalarField& h, const DensityField& nu) {
    VectorField g = spectral::gradient(h);
    for (int a = 0; a < g.dim(); ++a) {
        auto comp = g.component(a);
        for (std::size_t i = 0; i < comp.size(); ++i) comp[i] *= nu[i];
    }
    ScalarField out = spectral::divergence(g);
    out *= -1.0;
    return out;
}

HelmholtzResult finish(const VectorField& g, ScalarField h) {
    h += -h.mean();
    VectorField projected = spectral::gradient(h);
    VectorField residual = g;
    residual -= projected;
    return HelmholtzResult{std::move(h), std::move(projected), std::move(residual)};
}

} // namespace

HelmholtzResult project_lebesgue(const VectorField& g) {
    if (g.dim() != g.grid().n())
        throw ContractViolation("project: component count must match grid dimension");
    // inverse_laplacian(divergence(G)) realizes H_k = (k.G_k)/(2 pi i |k|^2).
    ScalarField h = spectral::inverse_laplacian(spectral::divergence(g));
    return finish(g, std::move(h));
}

HelmholtzResult project_weighted(const VectorField& g, const DensityField& nu,
                                 const WeightedOptions& opts) {
    if (g.dim() != g.grid().n())
        throw ContractViolation("project: component count must match grid dimension");
    if (!(g.grid() == nu.grid())) throw ContractViolation("project: weight grid mismatch");

    if (g.grid().n() == 1 && !opts.force_iterative) {
        // Constant-flux closed form: nu (H' - G) = -c, zero circulation fixes c.
        double mean_g = 0.0, mean_inv_nu = 0.0;
        const auto gc = g.component(0);
        for (std::size_t i = 0; i < g.size(); ++i) {
            mean_g += gc[i];
            mean_inv_nu += 1.0 / nu[i];
        }
        const double c = mean_g / mean_inv_nu;
        VectorField hprime(g.grid(), 1);
        auto hc = hprime.component(0);
        for (std::size_t i = 0; i < g.size(); ++i) hc[i] = gc[i] - c / nu[i];
        ScalarField h = spectral::inverse_laplacian(spectral::divergence(hprime));
        return finish(g, std::move(h));
    }

    // PCG on -div(nu grad H) = -div(nu G) with inverse-Laplacian preconditioner.
    const TorusGrid& grid = g.grid();
    VectorField nug = g;
    for (int a = 0; a < nug.dim(); ++a) {
        auto comp = nug.component(a);
        for (std::size_t i = 0; i < comp.size(); ++i) comp[i] *= nu[i];
    }
    ScalarField b = spectral::divergence(nug);
    b *= -1.0;

    ScalarField x(grid, 0.0);
    ScalarField r = b;
    auto precond = [](const ScalarField& v) {
        ScalarField z = spectral::inverse_laplacian(v);
        z *= -1.0;
        return z;
    };
    ScalarField z = precond(r);
    ScalarField p = z;
    double rz = dot(r.values(), z.values());
    const long max_iters =
        static_cast<long>(opts.max_iter_per_point) * static_cast<long>(grid.size());
    double res_norm = r.norm_l2();
    for (long it = 0; it < max_iters && res_norm > opts.tol; ++it) {
        ScalarField ap = weighted_op(p, nu);
        double p_ap = dot(p.values(), ap.values());
        if (!(std::fabs(p_ap) > 0.0))
            throw SolverFailure("project_weighted: conjugate-gradient breakdown");
        double alpha = rz / p_ap;
        for (std::size_t i = 0; i < x.size(); ++i) x[i] += alpha * p[i];
        for (std::size_t i = 0; i < r.size(); ++i) r[i] -= alpha * ap[i];
        res_norm = r.norm_l2();
        if (res_norm <= opts.tol) break;
        z = precond(r);
        double rz_new = dot(r.values(), z.values());
        double beta = rz_new / rz;
        rz = rz_new;
        for (std::size_t i = 0; i < p.size(); ++i) p[i] = z[i] + beta * p[i];
    }
    if (res_norm > opts.tol)
        throw NonConvergence("project_weighted: residual " + std::to_string(res_norm) +
                                 " above tolerance after iteration cap",
                             {res_norm});
    return finish(g, std::move(x));
}

double projection_norm_ratio(const TorusGrid& grid, double p, int trials, std::uint64_t seed) {
    if (trials < 1) throw ContractViolation("projection_norm_ratio: need trials >= 1");
    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
        VectorField g = spectral::random_trig_vector(grid, 5, seed, static_cast<std::uint64_t>(t));
        double denom = g.norm_lp(p);
        if (denom < 1e-14) continue;
        HelmholtzResult r = project_lebesgue(g);
        worst = std::max(worst, r.projected.norm_lp(p) / denom);
    }
    return worst;
}

} // namespace abf
