#pragma once

#include <span>
#include <vector>

#include "abf/grid.hpp"

namespace abf {

/** Real scalar field sampled on a TorusGrid, row-major values. */
class ScalarField {
public:
    explicit ScalarField(TorusGrid grid, double fill = 0.0);
    ScalarField(TorusGrid grid, std::vector<double> values);

    const TorusGrid& grid() const { return grid_; }
    std::size_t size() const { return v_.size(); }
    double operator[](std::size_t i) const { return v_[i]; }
    double& operator[](std::size_t i) { return v_[i]; }
    const std::vector<double>& values() const { return v_; }
    std::vector<double>& values() { return v_; }

    /** Quadrature integral over the torus: mean times unit volume. */
    double integral() const;
    double mean() const { return integral(); }
    double min() const;
    double max() const;

    /** Quadrature L^p norms with respect to Lebesgue measure. */
    double norm_l1() const;
    double norm_l2() const;
    double norm_linf() const;
    double norm_lp(double p) const;

    ScalarField& operator+=(const ScalarField& other);
    ScalarField& operator-=(const ScalarField& other);
    ScalarField& operator*=(double s);
    ScalarField& operator+=(double c);

private:
    TorusGrid grid_;
    std::vector<double> v_;
};

/** Vector field on a TorusGrid; component-major storage (dim blocks of grid.size()). */
class VectorField {
public:
    VectorField(TorusGrid grid, int dim);
    VectorField(TorusGrid grid, int dim, std::vector<double> components);

    const TorusGrid& grid() const { return grid_; }
    int dim() const { return dim_; }
    std::size_t size() const { return grid_.size(); }

    std::span<double> component(int a);
    std::span<const double> component(int a) const;
    double value(int a, std::size_t i) const { return c_[static_cast<std::size_t>(a) * grid_.size() + i]; }
    double& value(int a, std::size_t i) { return c_[static_cast<std::size_t>(a) * grid_.size() + i]; }
    const std::vector<double>& components() const { return c_; }
    std::vector<double>& components() { return c_; }

    /** Pointwise Euclidean magnitude at flat index i. */
    double magnitude(std::size_t i) const;

    /** Quadrature L^p norms of the pointwise Euclidean magnitude. */
    double norm_l2() const;
    double norm_linf() const;
    double norm_lp(double p) const;

    VectorField& operator+=(const VectorField& other);
    VectorField& operator-=(const VectorField& other);
    VectorField& operator*=(double s);

private:
    TorusGrid grid_;
    int dim_;
    std::vector<double> c_;
};

/**
 * Strictly positive scalar field with unit mass.
 *
 * Positivity is checked against the conditioning floor and mass against 1e-10
 * at construction; use `normalized` to build one from arbitrary positive data.
 */
class DensityField {
public:
    static constexpr double positivity_floor = 1e-300;
    static constexpr double mass_tolerance = 1e-10;

    explicit DensityField(ScalarField field);

    /** Scale a positive field to unit mass, then validate. */
    static DensityField normalized(ScalarField field);
    /** Uniform density on the grid. */
    static DensityField uniform(const TorusGrid& grid);

    const ScalarField& field() const { return f_; }
    ScalarField& field() { return f_; }
    const TorusGrid& grid() const { return f_.grid(); }
    std::size_t size() const { return f_.size(); }
    double operator[](std::size_t i) const { return f_[i]; }
    const std::vector<double>& values() const { return f_.values(); }

    /** Re-check positivity and unit mass; throws ContractViolation on failure. */
    void validate() const;

    /**
     * Marginal on the reaction-coordinate block: integrates the fiber axes.
     * Mass is preserved exactly up to rounding.
     */
    DensityField marginal_xi() const;

    /**
     * Conditional density on the fiber given the xi multi-index (flat index in
     * the xi grid). Throws DegenerateConditional when the marginal mass at
     * that index is below the positivity floor.
     */
    DensityField conditional(std::size_t xi_flat) const;

private:
    ScalarField f_;
};

} // namespace abf
