#include "abf/forces.hpp"

#include <algorithm>
#include <cmath>

#include "abf/errors.hpp"
#include "abf/rng.hpp"
#include "abf/spectral.hpp"

namespace abf {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;

void check_dim(const ForceField& f, int needed, const char* what) {
    if (f.dimension() != needed)
        throw ContractViolation(std::string(what) + ": defined for dimension " +
                                std::to_string(needed) + " only");
}

} // namespace

PotentialKind potential_kind_from_name(const std::string& name) {
    if (name == "zero") return PotentialKind::Zero;
    if (name == "cosine_separable") return PotentialKind::CosineSeparable;
    if (name == "cosine_coupled") return PotentialKind::CosineCoupled;
    if (name == "double_well_x") return PotentialKind::DoubleWellX;
    throw ConfigError("unknown potential: " + name);
}

PerturbationKind perturbation_kind_from_name(const std::string& name) {
    if (name == "none") return PerturbationKind::None;
    if (name == "rotational") return PerturbationKind::Rotational;
    if (name == "random_bandlimited") return PerturbationKind::RandomBandlimited;
    throw ConfigError("unknown perturbation: " + name);
}

std::string potential_kind_name(PotentialKind k) {
    switch (k) {
        case PotentialKind::Zero: return "zero";
        case PotentialKind::CosineSeparable: return "cosine_separable";
        case PotentialKind::CosineCoupled: return "cosine_coupled";
        case PotentialKind::DoubleWellX: return "double_well_x";
    }
    return "?";
}

std::string perturbation_kind_name(PerturbationKind k) {
    switch (k) {
        case PerturbationKind::None: return "none";
        case PerturbationKind::Rotational: return "rotational";
        case PerturbationKind::RandomBandlimited: return "random_bandlimited";
    }
    return "?";
}

ForceField ForceField::library(PotentialKind pot, PerturbationKind pert, double epsilon,
                               double beta, int dimension, std::uint64_t seed) {
    if (dimension < 1 || dimension > 16)
        throw ContractViolation("force: need 1 <= dimension <= 16");
    if (!(beta > 0.0)) throw ContractViolation("force: need beta > 0");
    ForceField f;
    f.pot_ = pot;
    f.pert_ = pert;
    f.eps_ = epsilon;
    f.beta_ = beta;
    f.n_ = dimension;
    f.seed_ = seed;
    if (pot == PotentialKind::CosineCoupled || pot == PotentialKind::DoubleWellX)
        check_dim(f, 2, "potential");
    if (pert == PerturbationKind::Rotational) check_dim(f, 2, "rotational perturbation");
    if (pert == PerturbationKind::RandomBandlimited) {
        // Synthesize per-component modes once; normalize the sup magnitude to 1
        // on a probe grid so epsilon alone sets the perturbation strength.
        CounterRng rng(seed, CounterRng::kFieldSynthesis);
        const int max_mode = 3;
        f.pert_modes_.resize(dimension);
        std::uint64_t mode_id = 0;
        for (int a = 0; a < dimension; ++a) {
            std::vector<int> k(dimension, -max_mode);
            while (true) {
                bool canonical = false;
                for (int ka : k) {
                    if (ka > 0) { canonical = true; break; }
                    if (ka < 0) break;
                }
                if (canonical) {
                    auto gg = rng.gaussians(1, mode_id, 0);
                    auto uu = rng.uniforms(1, mode_id, 1);
                    f.pert_modes_[a].push_back(TrigMode{k, gg[0], kTwoPi * uu[0]});
                    ++mode_id;
                }
                int ax = dimension - 1;
                while (ax >= 0 && ++k[ax] > max_mode) k[ax--] = -max_mode;
                if (ax < 0) break;
            }
        }
        const int probe = 64;
        TorusGrid probe_grid(std::vector<int>(dimension, probe), 1);
        double sup = 0.0;
        std::vector<double> z(dimension), d(dimension);
        for (std::size_t i = 0; i < probe_grid.size(); ++i) {
            std::vector<int> idx = probe_grid.unflatten(i);
            for (int a = 0; a < dimension; ++a) z[a] = probe_grid.coordinate(a, idx[a]);
            f.perturbation_at(z, d);
            double mag = 0.0;
            for (double x : d) mag += x * x;
            sup = std::max(sup, std::sqrt(mag));
        }
        if (!(sup > 0.0)) throw SolverFailure("force: degenerate random perturbation");
        for (auto& comp : f.pert_modes_)
            for (auto& mode : comp) mode.amp /= sup;
    }
    return f;
}

bool ForceField::conservative() const {
    return eps_ == 0.0 || pert_ == PerturbationKind::None;
}

double ForceField::potential_at(std::span<const double> z) const {
    switch (pot_) {
        case PotentialKind::Zero:
            return 0.0;
        case PotentialKind::CosineSeparable: {
            double v = 0.0;
            for (double za : z) v += std::cos(kTwoPi * za);
            return v;
        }
        case PotentialKind::CosineCoupled:
            return std::cos(kTwoPi * z[0]) * std::cos(kTwoPi * z[1]) + 0.5 * std::cos(kTwoPi * z[1]);
        case PotentialKind::DoubleWellX:
            return std::cos(2.0 * kTwoPi * z[0]) + 0.3 * std::cos(kTwoPi * (z[0] - z[1]));
    }
    return 0.0;
}

void ForceField::grad_potential_at(std::span<const double> z, std::span<double> out) const {
    switch (pot_) {
        case PotentialKind::Zero:
            std::fill(out.begin(), out.end(), 0.0);
            return;
        case PotentialKind::CosineSeparable:
            for (std::size_t a = 0; a < z.size(); ++a) out[a] = -kTwoPi * std::sin(kTwoPi * z[a]);
            return;
        case PotentialKind::CosineCoupled:
            out[0] = -kTwoPi * std::sin(kTwoPi * z[0]) * std::cos(kTwoPi * z[1]);
            out[1] = -kTwoPi * std::cos(kTwoPi * z[0]) * std::sin(kTwoPi * z[1]) -
                     0.5 * kTwoPi * std::sin(kTwoPi * z[1]);
            return;
        case PotentialKind::DoubleWellX:
            out[0] = -2.0 * kTwoPi * std::sin(2.0 * kTwoPi * z[0]) -
                     0.3 * kTwoPi * std::sin(kTwoPi * (z[0] - z[1]));
            out[1] = 0.3 * kTwoPi * std::sin(kTwoPi * (z[0] - z[1]));
            return;
    }
}

void ForceField::perturbation_at(std::span<const double> z, std::span<double> out) const {
    switch (pert_) {
        case PerturbationKind::None:
            std::fill(out.begin(), out.end(), 0.0);
            return;
        case PerturbationKind::Rotational: {
            // Modulated swirl (-sin(2 pi y), sin(2 pi x)) * g. The modulation
            // breaks the point-reflection antisymmetry of the bare swirl;
            // without it the stationary response is even in epsilon and the
            // first-order term of the epsilon sweep vanishes identically.
            // The cosine phase makes the first-order bias-potential response
            // even in x, so reaction-coordinate observables see it too.
            const double g = 1.0 + 0.5 * std::cos(kTwoPi * (z[0] + z[1]));
            out[0] = -std::sin(kTwoPi * z[1]) * g;
            out[1] = std::sin(kTwoPi * z[0]) * g;
            return;
        }
        case PerturbationKind::RandomBandlimited:
            for (int a = 0; a < n_; ++a) {
                double s = 0.0;
                for (const TrigMode& mode : pert_modes_[a]) {
                    double arg = mode.phase;
                    for (int b = 0; b < n_; ++b) arg += kTwoPi * mode.k[b] * z[b];
                    s += mode.amp * std::cos(arg);
                }
                out[a] = s;
            }
            return;
    }
}

void ForceField::force_at(std::span<const double> z, std::span<double> out) const {
    grad_potential_at(z, out);
    for (double& x : out) x = -x;
    if (eps_ != 0.0 && pert_ != PerturbationKind::None) {
        double d[16];
        perturbation_at(z, std::span<double>(d, static_cast<std::size_t>(n_)));
        for (int a = 0; a < n_; ++a) out[a] += eps_ * d[a];
    }
}

namespace {

template <typename Fn>
void for_each_point(const TorusGrid& g, Fn&& fn) {
    const std::vector<int>& res = g.resolution();
    const int d = g.n();
    std::vector<int> idx(d, 0);
    std::vector<double> z(d, 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
        for (int a = 0; a < d; ++a) z[a] = static_cast<double>(idx[a]) / res[a];
        fn(i, z);
        for (int a = d - 1; a >= 0; --a) {
            if (++idx[a] < res[a]) break;
            idx[a] = 0;
        }
    }
}

} // namespace

ScalarField ForceField::potential_field(const TorusGrid& grid) const {
    if (grid.n() != n_) throw ContractViolation("force: grid dimension mismatch");
    ScalarField out(grid);
    for_each_point(grid, [&](std::size_t i, const std::vector<double>& z) {
        out[i] = potential_at(z);
    });
    return out;
}

VectorField ForceField::perturbation_field(const TorusGrid& grid) const {
    if (grid.n() != n_) throw ContractViolation("force: grid dimension mismatch");
    VectorField out(grid, n_);
    std::vector<double> d(n_);
    for_each_point(grid, [&](std::size_t i, const std::vector<double>& z) {
        perturbation_at(z, d);
        for (int a = 0; a < n_; ++a) out.value(a, i) = d[a];
    });
    return out;
}

VectorField ForceField::force_field(const TorusGrid& grid) const {
    if (grid.n() != n_) throw ContractViolation("force: grid dimension mismatch");
    VectorField out(grid, n_);
    std::vector<double> d(n_);
    for_each_point(grid, [&](std::size_t i, const std::vector<double>& z) {
        force_at(z, d);
        for (int a = 0; a < n_; ++a) out.value(a, i) = d[a];
    });
    return out;
}

ReferenceEquilibrium free_energy(const ForceField& f, const TorusGrid& grid) {
    if (grid.n() != f.dimension()) throw ContractViolation("free_energy: grid dimension mismatch");
    const double beta = f.beta();
    ScalarField v = f.potential_field(grid);
    const std::size_t nx = grid.xi_size();
    const std::size_t nf = grid.fiber_size();

    ScalarField a_field(grid.xi_grid());
    for (std::size_t ix = 0; ix < nx; ++ix) {
        const double* block = v.values().data() + ix * nf;
        double mx = -beta * block[0];
        for (std::size_t iy = 1; iy < nf; ++iy) mx = std::max(mx, -beta * block[iy]);
        double s = 0.0;
        for (std::size_t iy = 0; iy < nf; ++iy) s += std::exp(-beta * block[iy] - mx);
        // A(x) = -(1/beta) log mean_y exp(-beta V)
        a_field[ix] = -(mx + std::log(s / static_cast<double>(nf))) / beta;
    }
    a_field += -a_field.mean();

    VectorField grad_a = spectral::gradient(a_field);

    ScalarField mu_raw(grid);
    double vmin = v.min();
    for (std::size_t i = 0; i < grid.size(); ++i) mu_raw[i] = std::exp(-beta * (v[i] - vmin));
    DensityField mu = DensityField::normalized(std::move(mu_raw));

    ScalarField mua_raw(grid);
    double wmin = 0.0;
    bool first = true;
    for (std::size_t ix = 0; ix < nx; ++ix)
        for (std::size_t iy = 0; iy < nf; ++iy) {
            double w = v[ix * nf + iy] - a_field[ix];
            if (first || w < wmin) { wmin = w; first = false; }
        }
    for (std::size_t ix = 0; ix < nx; ++ix)
        for (std::size_t iy = 0; iy < nf; ++iy)
            mua_raw[ix * nf + iy] = std::exp(-beta * (v[ix * nf + iy] - a_field[ix] - wmin));
    DensityField mua = DensityField::normalized(std::move(mua_raw));

    return ReferenceEquilibrium{std::move(a_field), std::move(grad_a), std::move(mu),
                                std::move(mua)};
}

namespace {

/** Shared sampler: max quotient |F1(p) - F1(q)| / d(p, q) over pairs varying
 *  the chosen block (xi when vary_xi, fiber otherwise), inflated by 5%. */
double lipschitz_sampled(const ForceField& f, int m, int samples, std::uint64_t seed,
                         bool vary_xi) {
    const int n = f.dimension();
    if (m < 1 || m > n) throw ContractViolation("lipschitz: need 1 <= m <= n");
    if (!vary_xi && m == n) return 0.0;
    if (samples < 2) throw ContractViolation("lipschitz: need samples >= 2");
    CounterRng rng(seed, CounterRng::kSampling);
    const int lo = vary_xi ? 0 : m;
    const int hi = vary_xi ? m : n;
    std::vector<double> z(n), zp(n), f1(n), f1p(n);
    double best = 0.0;
    for (int s = 0; s < samples; ++s) {
        std::uint32_t draw = 0;
        for (int a = 0; a < n; ++a)
            z[a] = rng.uniforms(static_cast<std::uint64_t>(s), 0, draw++)[0];
        zp = z;
        if (s % 2 == 0) {
            // Global pair: independent resample of the varied block.
            for (int a = lo; a < hi; ++a)
                zp[a] = rng.uniforms(static_cast<std::uint64_t>(s), 1, draw++)[0];
        } else {
            // Local pair: small offset probing the derivative sup.
            const double delta = 1e-4;
            for (int a = lo; a < hi; ++a) {
                double u = rng.uniforms(static_cast<std::uint64_t>(s), 1, draw++)[0];
                zp[a] = z[a] + delta * (2.0 * u - 1.0);
                zp[a] -= std::floor(zp[a]);
            }
        }
        double dist = periodic_distance(std::span<const double>(z).subspan(lo, hi - lo),
                                        std::span<const double>(zp).subspan(lo, hi - lo));
        if (dist < 1e-12) continue;
        f.force_at(z, f1);
        f.force_at(zp, f1p);
        double diff = 0.0;
        for (int a = 0; a < m; ++a) diff += (f1[a] - f1p[a]) * (f1[a] - f1p[a]);
        best = std::max(best, std::sqrt(diff) / dist);
    }
    return best * 1.05;
}

} // namespace

double lipschitz_estimate(const ForceField& f, int m, int samples, std::uint64_t seed) {
    return lipschitz_sampled(f, m, samples, seed, true);
}

double lipschitz_fiber(const ForceField& f, int m, int samples, std::uint64_t seed) {
    const int n = f.dimension();
    if (m < 1 || m > n) throw ContractViolation("lipschitz: need 1 <= m <= n");
    if (m == n) return 0.0;
    // Closed-form fiber modulus of the xi block where the library admits one:
    // triangle bounds on sup |d F1 / d y|, valid Lipschitz constants.
    double pot_part = -1.0;
    switch (f.potential_kind()) {
        case PotentialKind::Zero:
        case PotentialKind::CosineSeparable:
            pot_part = 0.0;
            break;
        case PotentialKind::CosineCoupled:
            pot_part = 4.0 * M_PI * M_PI; // F1 = 2 pi sin(2 pi x) cos(2 pi y)
            break;
        case PotentialKind::DoubleWellX:
            pot_part = 1.2 * M_PI * M_PI; // F1 fiber part 0.6 pi sin(2 pi (x - y))
            break;
    }
    double pert_part = -1.0;
    switch (f.perturbation_kind()) {
        case PerturbationKind::None:
            pert_part = 0.0;
            break;
        case PerturbationKind::Rotational:
            // Delta1 = -sin(2 pi y)(1 + 0.5 cos(2 pi (x+y))); with the x-phase
            // free, sup_y |d Delta1/dy| = 2 pi (|cos(2 pi y)| + 0.5) = 3 pi.
            pert_part = 3.0 * M_PI;
            break;
        case PerturbationKind::RandomBandlimited:
            pert_part = -1.0;
            break;
    }
    if (pot_part >= 0.0 && pert_part >= 0.0)
        return pot_part + std::fabs(f.epsilon()) * pert_part;
    return lipschitz_sampled(f, m, samples, seed, false);
}

VectorField local_mean_force(const ForceField& f, const DensityField& pi) {
    VectorField f_grid = f.force_field(pi.grid());
    return local_mean_force_cached(f_grid, pi.values(), pi.grid().m());
}

VectorField local_mean_force_cached(const VectorField& f_grid, std::span<const double> pi_values,
                                    int m) {
    const TorusGrid& g = f_grid.grid();
    if (pi_values.size() != g.size()) throw ContractViolation("local_mean_force: size mismatch");
    const std::size_t nx = g.xi_size();
    const std::size_t nf = g.fiber_size();
    VectorField out(g.xi_grid(), m);
    for (std::size_t ix = 0; ix < nx; ++ix) {
        const double* block = pi_values.data() + ix * nf;
        double mass = 0.0;
        for (std::size_t iy = 0; iy < nf; ++iy) mass += block[iy];
        if (!(mass > DensityField::positivity_floor * static_cast<double>(nf)))
            throw DegenerateConditional("local_mean_force: marginal below floor");
        for (int a = 0; a < m; ++a) {
            const double* fa = f_grid.component(a).data() + ix * nf;
            double s = 0.0;
            for (std::size_t iy = 0; iy < nf; ++iy) s += fa[iy] * block[iy];
            out.value(a, ix) = -s / mass;
        }
    }
    return out;
}

} // namespace abf
