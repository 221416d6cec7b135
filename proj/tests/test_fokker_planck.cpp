#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include "abf/diagnostics.hpp"
#include "abf/errors.hpp"
#include "abf/field.hpp"
#include "abf/fokker_planck.hpp"
#include "abf/forces.hpp"
#include "abf/spectral.hpp"

using namespace abf;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kFourPiSq = 4.0 * std::numbers::pi * std::numbers::pi;

DensityField cosine_density(const TorusGrid& grid, double amp) {
    ScalarField f(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const std::vector<double> p = grid.point(i);
        f[i] = 1.0 + amp * std::cos(kTwoPi * p[0]);
    }
    return DensityField::normalized(std::move(f));
}

double sup_diff(const DensityField& a, const DensityField& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::fabs(a[i] - b[i]));
    return m;
}

} // namespace

TEST_CASE("unbiased zero-force flow is the heat semigroup on the x mode") {
    TorusGrid grid({32, 32}, 1);
    const ForceField f =
        ForceField::library(PotentialKind::Zero, PerturbationKind::None, 0.0, 1.0, 2);
    PdeSolver solver(f, grid, BiasMethod::None, 1e-3);
    solver.init(cosine_density(grid, 0.5));
    const int steps = 200;
    for (int k = 0; k < steps; ++k) solver.advance();
    const double t = solver.state().t;
    CHECK(t == doctest::Approx(steps * 1e-3).epsilon(1e-12));
    const double expect_amp = 0.5 * std::exp(-kFourPiSq * t);
    double max_err = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const std::vector<double> p = grid.point(i);
        const double expect = 1.0 + expect_amp * std::cos(kTwoPi * p[0]);
        max_err = std::max(max_err, std::fabs(solver.state().pi[i] - expect));
    }
    CHECK(max_err <= 1e-6);
}

TEST_CASE("tilted equilibrium is stationary under ABF up to splitting error") {
    // The tilted equilibrium is a fixed point of the continuous biased flow,
    // so a single operator-split step moves it only by its local truncation
    // error: third order in dt, vanishing under refinement.
    TorusGrid grid({64, 64}, 1);
    const ForceField f =
        ForceField::library(PotentialKind::CosineSeparable, PerturbationKind::None, 0.0, 1.0, 2);
    const ReferenceEquilibrium ref = free_energy(f, grid);
    auto one_step_drift = [&](double dt) {
        PdeSolver solver(f, grid, BiasMethod::Abf, dt);
        solver.init(ref.muA);
        DensityField before = solver.state().pi;
        solver.advance();
        return sup_diff(solver.state().pi, before);
    };
    const double coarse = one_step_drift(2e-4);
    const double fine = one_step_drift(1e-4);
    CHECK(coarse / 2e-4 <= 5e-2);
    CHECK(coarse / fine >= 6.0);
    CHECK(coarse / fine <= 10.0);
}

TEST_CASE("uniform density with zero force stays uniform with zero bias") {
    TorusGrid grid({16, 16}, 1);
    const ForceField f =
        ForceField::library(PotentialKind::Zero, PerturbationKind::None, 0.0, 1.0, 2);
    for (BiasMethod method : {BiasMethod::None, BiasMethod::Abf, BiasMethod::Pabf}) {
        PdeSolver solver(f, grid, method, 1e-3);
        solver.init(DensityField::uniform(grid));
        for (int k = 0; k < 10; ++k) solver.advance();
        double dev = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i)
            dev = std::max(dev, std::fabs(solver.state().pi[i] - 1.0));
        CHECK(dev <= 1e-12);
        CHECK(solver.state().bias.G.norm_linf() <= 1e-12);
        CHECK(solver.state().bias.B.norm_linf() <= 1e-12);
    }
}

TEST_CASE("mass is conserved to rounding each step") {
    TorusGrid grid({32, 32}, 1);
    const ForceField f = ForceField::library(PotentialKind::CosineCoupled,
                                             PerturbationKind::Rotational, 0.05, 1.0, 2);
    PdeSolver solver(f, grid, BiasMethod::Pabf, 2e-4);
    solver.init(cosine_density(grid, 0.3));
    for (int k = 0; k < 50; ++k) solver.advance();
    CHECK(solver.state().mass_drift <= 50 * 1e-12);
    double mass = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) mass += solver.state().pi[i];
    mass *= grid.cell_volume();
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("step rejects a dt above the stability bound") {
    TorusGrid grid({64, 64}, 1);
    const ForceField f =
        ForceField::library(PotentialKind::CosineSeparable, PerturbationKind::None, 0.0, 1.0, 2);
    PdeState state{DensityField::uniform(grid), 0.0,
                   compute_bias(f, DensityField::uniform(grid), BiasMethod::Abf), 0.0};
    StepOptions opts;
    opts.method = BiasMethod::Abf;
    opts.dt = 1.0; // far beyond 0.5 h / max(...)
    CHECK_THROWS_AS(step(state, f, opts), ContractViolation);
}

TEST_CASE("marginal equation residual shrinks at second order in dt") {
    TorusGrid grid({32, 32}, 1);
    const ForceField f =
        ForceField::library(PotentialKind::CosineSeparable, PerturbationKind::None, 0.0, 1.0, 2);
    auto residual_at = [&](double dt) {
        PdeSolver solver(f, grid, BiasMethod::Abf, dt);
        solver.init(cosine_density(grid, 0.5));
        std::vector<PdeState> states;
        states.push_back(solver.state());
        for (int k = 0; k < 2; ++k) {
            solver.advance();
            states.push_back(solver.state());
        }
        return marginal_equation_residual(states[0], states[1], states[2], f.beta());
    };
    const double coarse = residual_at(4e-4);
    const double fine = residual_at(2e-4);
    CHECK(coarse <= 1e-2);
    // Central differencing of the heat flow leaves an O(dt^2) defect.
    CHECK(coarse / fine >= 3.0);
    CHECK(coarse / fine <= 5.0);
}

TEST_CASE("stationary linear solve inverts conservative drifts exactly") {
    TorusGrid grid({48, 48}, 2);
    ScalarField w(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const std::vector<double> p = grid.point(i);
        w[i] = 0.4 * std::cos(kTwoPi * p[0]) + 0.25 * std::sin(kTwoPi * (p[0] + p[1]));
    }
    const double beta = 1.3;
    VectorField a = spectral::gradient(w);
    a *= -1.0;
    const StationarySolution sol = stationary_linear(a, beta);
    ScalarField gibbs(grid);
    for (std::size_t i = 0; i < grid.size(); ++i) gibbs[i] = std::exp(-beta * w[i]);
    const DensityField ref = DensityField::normalized(std::move(gibbs));
    double max_err = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i)
        max_err = std::max(max_err, std::fabs(sol.nu[i] - ref[i]));
    CHECK(max_err <= 1e-7);
}

TEST_CASE("stationary solve maps zero and constant drifts to uniform") {
    TorusGrid grid({16, 16}, 1);
    const StationarySolution zero = stationary_linear(VectorField(grid, 2), 1.0);
    CHECK(sup_diff(zero.nu, DensityField::uniform(grid)) <= 1e-12);

    VectorField constant(grid, 2);
    for (std::size_t i = 0; i < grid.size(); ++i) constant.component(0)[i] = 0.7;
    const StationarySolution c = stationary_linear(constant, 1.0);
    CHECK(sup_diff(c.nu, DensityField::uniform(grid)) <= 1e-9);
}

TEST_CASE("the three stationary backends agree up to their discretization bias") {
    // The Krylov backend solves the spectral operator to solver tolerance.
    // The time-march backend converges to the fixed point of its own split
    // step, biased by O(dt^2) at the internal stability-bound dt, and the
    // finite-difference backend is biased by O(h^2). Halving the mesh halves
    // the internal dt, so both gaps must shrink by about a factor of four.
    auto gaps_at = [](int res) {
        TorusGrid grid({res, res}, 1);
        const ForceField f = ForceField::library(PotentialKind::CosineSeparable,
                                                 PerturbationKind::Rotational, 0.1, 1.0, 2);
        const VectorField a = f.force_field(grid);
        StationaryOptions krylov;
        krylov.method = StationaryMethod::Krylov;
        StationaryOptions march;
        march.method = StationaryMethod::TimeMarch;
        march.tol = 1e-10;
        StationaryOptions direct;
        direct.method = StationaryMethod::DirectFd;
        const StationarySolution s1 = stationary_linear(a, 1.0, krylov);
        const StationarySolution s2 = stationary_linear(a, 1.0, march);
        const StationarySolution s3 = stationary_linear(a, 1.0, direct);
        for (const StationarySolution* s : {&s1, &s2, &s3}) {
            double mass = 0.0;
            double low = s->nu[0];
            for (std::size_t i = 0; i < s->nu.size(); ++i) {
                mass += s->nu[i];
                low = std::min(low, s->nu[i]);
            }
            CHECK(mass * grid.cell_volume() == doctest::Approx(1.0).epsilon(1e-10));
            CHECK(low > 0.0);
        }
        return std::pair<double, double>{sup_diff(s1.nu, s2.nu), sup_diff(s1.nu, s3.nu)};
    };
    const auto [march24, direct24] = gaps_at(24);
    const auto [march48, direct48] = gaps_at(48);
    CHECK(march48 <= 5e-3);
    CHECK(direct48 <= 2.5e-2);
    CHECK(march24 / march48 >= 3.0);
    CHECK(march24 / march48 <= 5.0);
    CHECK(direct24 / direct48 >= 3.0);
    CHECK(direct24 / direct48 <= 5.0);
}

TEST_CASE("fixed point of the conservative force is the tilted equilibrium") {
    TorusGrid grid({64, 64}, 1);
    const ForceField f =
        ForceField::library(PotentialKind::CosineSeparable, PerturbationKind::None, 0.0, 1.0, 2);
    const ReferenceEquilibrium ref = free_energy(f, grid);
    for (BiasMethod method : {BiasMethod::Abf, BiasMethod::Pabf}) {
        const StationaryState st = fixed_point_iterate(f, grid, method);
        CHECK(st.fp_residual <= 1e-9);
        CHECK(sup_diff(st.pi_inf, ref.muA) <= 1e-5);
        VectorField diff = st.bias.B;
        diff -= ref.gradA;
        CHECK(diff.norm_l2() <= 1e-5);
        const DensityField marg = st.pi_inf.marginal_xi();
        double dev = 0.0;
        for (std::size_t i = 0; i < marg.size(); ++i)
            dev = std::max(dev, std::fabs(marg[i] - 1.0));
        CHECK(dev <= 1e-6);
    }
}

TEST_CASE("fixed point with zero force is uniform with zero bias") {
    TorusGrid grid({16, 16}, 1);
    const ForceField f =
        ForceField::library(PotentialKind::Zero, PerturbationKind::None, 0.0, 1.0, 2);
    const StationaryState st = fixed_point_iterate(f, grid, BiasMethod::Abf);
    CHECK(sup_diff(st.pi_inf, DensityField::uniform(grid)) <= 1e-10);
    CHECK(st.bias.B.norm_linf() <= 1e-10);
}

TEST_CASE("fixed point surfaces the residual history on failure") {
    TorusGrid grid({32, 32}, 1);
    const ForceField f =
        ForceField::library(PotentialKind::CosineSeparable, PerturbationKind::None, 0.0, 1.0, 2);
    FixedPointOptions opts;
    opts.tol = 1e-15; // unreachable in one iteration
    opts.max_iters = 1;
    try {
        fixed_point_iterate(f, grid, BiasMethod::Abf, opts);
        CHECK(false);
    } catch (const NonConvergence& e) {
        CHECK(e.residual_history.size() == 1);
        CHECK(e.residual_history[0] > 0.0);
    }
}

TEST_CASE("pabf bias stays a gradient along the trajectory") {
    TorusGrid grid({32, 32}, 1);
    const ForceField f = ForceField::library(PotentialKind::CosineCoupled,
                                             PerturbationKind::None, 0.0, 1.0, 2);
    PdeSolver solver(f, grid, BiasMethod::Pabf, 2e-4);
    solver.init(cosine_density(grid, 0.4));
    for (int k = 0; k < 20; ++k) solver.advance();
    const BiasProfile& bias = solver.state().bias;
    const VectorField gh = spectral::gradient(bias.H);
    double max_err = 0.0;
    for (std::size_t i = 0; i < grid.xi_size(); ++i)
        max_err = std::max(max_err, std::fabs(gh.value(0, i) - bias.B.value(0, i)));
    CHECK(max_err <= 1e-10);
}

TEST_CASE("bias mean force magnitude never exceeds the force bound") {
    TorusGrid grid({32, 32}, 1);
    const ForceField f = ForceField::library(PotentialKind::CosineCoupled,
                                             PerturbationKind::Rotational, 0.1, 1.0, 2);
    const VectorField fg = f.force_field(grid);
    double sup_f1 = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i)
        sup_f1 = std::max(sup_f1, std::fabs(fg.value(0, i)));
    PdeSolver solver(f, grid, BiasMethod::Abf, 2e-4);
    solver.init(cosine_density(grid, 0.5));
    for (int k = 0; k < 25; ++k) {
        solver.advance();
        CHECK(solver.state().bias.G.norm_linf() <= sup_f1 * (1.0 + 1e-12));
    }
}

TEST_CASE("auto dt respects the stability contract") {
    TorusGrid grid({64, 64}, 1);
    const ForceField f =
        ForceField::library(PotentialKind::CosineSeparable, PerturbationKind::None, 0.0, 1.0, 2);
    const double dt = PdeSolver::auto_dt(f, grid);
    CHECK(dt > 0.0);
    PdeSolver solver(f, grid, BiasMethod::Abf, dt);
    solver.init(cosine_density(grid, 0.5));
    solver.advance(); // must not throw
    CHECK(solver.state().t == doctest::Approx(dt));
}
