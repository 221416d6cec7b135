#include "doctest.h"

#include <cmath>
#include <numbers>
#include <vector>

#include "abf/errors.hpp"
#include "abf/field.hpp"

using namespace abf;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

ScalarField cosine_x(const TorusGrid& grid, double amplitude) {
    ScalarField f(grid);
    auto& v = f.values();
    for (std::size_t i = 0; i < grid.size(); ++i)
        v[i] = 1.0 + amplitude * std::cos(kTwoPi * grid.point(i)[0]);
    return f;
}

} // namespace

TEST_CASE("scalar field quadrature against closed forms") {
    TorusGrid grid({64, 32}, 1);
    ScalarField f = cosine_x(grid, 0.5);
    // Integral of 1 + 0.5 cos(2 pi x) over the torus is 1; cosine sums to zero
    // exactly on an even grid.
    CHECK(f.integral() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(f.mean() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(f.max() == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(f.min() == doctest::Approx(0.5).epsilon(1e-14));
    // ||f||_2^2 = 1 + a^2/2 for f = 1 + a cos.
    const double l2 = f.norm_l2();
    CHECK(l2 * l2 == doctest::Approx(1.0 + 0.25 / 2).epsilon(1e-13));
    CHECK(f.norm_linf() == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(f.norm_l1() == doctest::Approx(1.0).epsilon(1e-14));
    // L^p norm interpolates: p=2 must match the dedicated accessor.
    CHECK(f.norm_lp(2.0) == doctest::Approx(l2).epsilon(1e-13));
}

TEST_CASE("scalar field arithmetic") {
    TorusGrid grid({16, 16}, 1);
    ScalarField f = cosine_x(grid, 0.5);
    ScalarField g = cosine_x(grid, 0.5);
    f -= g;
    CHECK(f.norm_linf() == doctest::Approx(0.0));
    f += g;
    f *= 2.0;
    CHECK(f.max() == doctest::Approx(3.0).epsilon(1e-14));
    f += 1.0;
    CHECK(f.max() == doctest::Approx(4.0).epsilon(1e-14));
    CHECK_THROWS_AS((void)(f += ScalarField(TorusGrid({8, 8}, 1))), ContractViolation);
}

TEST_CASE("vector field storage and norms") {
    TorusGrid grid({32, 32}, 1);
    VectorField v(grid, 2);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        v.value(0, i) = 3.0;
        v.value(1, i) = 4.0;
    }
    CHECK(v.norm_linf() == doctest::Approx(5.0).epsilon(1e-14)); // pointwise magnitude
    CHECK(v.norm_l2() == doctest::Approx(5.0).epsilon(1e-14));
    CHECK(v.magnitude(7) == doctest::Approx(5.0).epsilon(1e-14));
    VectorField w = v;
    w -= v;
    CHECK(w.norm_l2() == doctest::Approx(0.0));
}

TEST_CASE("density validates positivity and mass") {
    TorusGrid grid({32, 32}, 1);
    CHECK_NOTHROW(DensityField::uniform(grid));
    ScalarField f = cosine_x(grid, 0.5);
    const DensityField d = DensityField::normalized(std::move(f));
    CHECK_NOTHROW(d.validate());
    CHECK(d.field().integral() == doctest::Approx(1.0).epsilon(1e-12));

    ScalarField bad(grid);
    auto& v = bad.values();
    for (std::size_t i = 0; i < grid.size(); ++i) v[i] = 1.0;
    v[5] = -0.5;
    CHECK_THROWS_AS(DensityField(std::move(bad)), ContractViolation);

    ScalarField off(grid);
    auto& w = off.values();
    for (std::size_t i = 0; i < grid.size(); ++i) w[i] = 2.0; // mass 2
    CHECK_THROWS_AS(DensityField(std::move(off)), ContractViolation);
}

TEST_CASE("marginal of a product density factorizes") {
    TorusGrid grid({64, 32}, 1);
    ScalarField f(grid);
    auto& v = f.values();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const std::vector<double> p = grid.point(i);
        v[i] = (1.0 + 0.5 * std::cos(kTwoPi * p[0])) * (1.0 + 0.25 * std::sin(kTwoPi * p[1]));
    }
    const DensityField d = DensityField::normalized(std::move(f));
    const DensityField marg = d.marginal_xi();
    CHECK(marg.grid().n() == 1);
    CHECK(marg.grid().size() == 64);
    CHECK(marg.field().integral() == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t i = 0; i < marg.size(); ++i) {
        const double x = marg.grid().coordinate(0, static_cast<int>(i));
        CHECK(marg[i] == doctest::Approx(1.0 + 0.5 * std::cos(kTwoPi * x)).epsilon(1e-12));
    }
}

TEST_CASE("conditional of a product density is the fiber factor") {
    TorusGrid grid({16, 32}, 1);
    ScalarField f(grid);
    auto& v = f.values();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const std::vector<double> p = grid.point(i);
        v[i] = (1.0 + 0.5 * std::cos(kTwoPi * p[0])) * (1.0 + 0.25 * std::cos(kTwoPi * p[1]));
    }
    const DensityField d = DensityField::normalized(std::move(f));
    const DensityField cond = d.conditional(3);
    CHECK(cond.grid().size() == 32);
    for (std::size_t j = 0; j < cond.size(); ++j) {
        const double y = cond.grid().coordinate(0, static_cast<int>(j));
        CHECK(cond[j] == doctest::Approx(1.0 + 0.25 * std::cos(kTwoPi * y)).epsilon(1e-12));
    }
}

TEST_CASE("uniform density marginal stays uniform") {
    TorusGrid grid({8, 8, 8}, 2);
    const DensityField d = DensityField::uniform(grid);
    const DensityField marg = d.marginal_xi();
    for (std::size_t i = 0; i < marg.size(); ++i)
        CHECK(marg[i] == doctest::Approx(1.0).epsilon(1e-14));
}
