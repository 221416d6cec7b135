#include "abf/field.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "abf/errors.hpp"

namespace abf {

ScalarField::ScalarField(TorusGrid grid, double fill)
    : grid_(std::move(grid)), v_(grid_.size(), fill) {}

ScalarField::ScalarField(TorusGrid grid, std::vector<double> values)
    : grid_(std::move(grid)), v_(std::move(values)) {
    if (v_.size() != grid_.size()) throw ContractViolation("scalar field: value count mismatch");
}

double ScalarField::integral() const {
    double s = 0.0;
    for (double x : v_) s += x;
    return s * grid_.cell_volume();
}

double ScalarField::min() const { return *std::min_element(v_.begin(), v_.end()); }
double ScalarField::max() const { return *std::max_element(v_.begin(), v_.end()); }

double ScalarField::norm_l1() const {
    double s = 0.0;
    for (double x : v_) s += std::fabs(x);
    return s * grid_.cell_volume();
}

double ScalarField::norm_l2() const {
    double s = 0.0;
    for (double x : v_) s += x * x;
    return std::sqrt(s * grid_.cell_volume());
}

double ScalarField::norm_linf() const {
    double s = 0.0;
    for (double x : v_) s = std::max(s, std::fabs(x));
    return s;
}

double ScalarField::norm_lp(double p) const {
    if (p < 1.0) throw ContractViolation("norm_lp: need p >= 1");
    double s = 0.0;
    for (double x : v_) s += std::pow(std::fabs(x), p);
    return std::pow(s * grid_.cell_volume(), 1.0 / p);
}

ScalarField& ScalarField::operator+=(const ScalarField& other) {
    if (!(grid_ == other.grid_)) throw ContractViolation("scalar field: grid mismatch");
    for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += other.v_[i];
    return *this;
}

ScalarField& ScalarField::operator-=(const ScalarField& other) {
    if (!(grid_ == other.grid_)) throw ContractViolation("scalar field: grid mismatch");
    for (std::size_t i = 0; i < v_.size(); ++i) v_[i] -= other.v_[i];
    return *this;
}

ScalarField& ScalarField::operator*=(double s) {
    for (double& x : v_) x *= s;
    return *this;
}

ScalarField& ScalarField::operator+=(double c) {
    for (double& x : v_) x += c;
    return *this;
}

VectorField::VectorField(TorusGrid grid, int dim)
    : grid_(std::move(grid)), dim_(dim), c_(static_cast<std::size_t>(dim) * grid_.size(), 0.0) {
    if (dim_ < 1) throw ContractViolation("vector field: need dim >= 1");
}

VectorField::VectorField(TorusGrid grid, int dim, std::vector<double> components)
    : grid_(std::move(grid)), dim_(dim), c_(std::move(components)) {
    if (dim_ < 1) throw ContractViolation("vector field: need dim >= 1");
    if (c_.size() != static_cast<std::size_t>(dim_) * grid_.size())
        throw ContractViolation("vector field: component count mismatch");
}

std::span<double> VectorField::component(int a) {
    return {c_.data() + static_cast<std::size_t>(a) * grid_.size(), grid_.size()};
}

std::span<const double> VectorField::component(int a) const {
    return {c_.data() + static_cast<std::size_t>(a) * grid_.size(), grid_.size()};
}

double VectorField::magnitude(std::size_t i) const {
    double s = 0.0;
    for (int a = 0; a < dim_; ++a) {
        double x = value(a, i);
        s += x * x;
    }
    return std::sqrt(s);
}

double VectorField::norm_l2() const {
    double s = 0.0;
    for (double x : c_) s += x * x;
    return std::sqrt(s * grid_.cell_volume());
}

double VectorField::norm_linf() const {
    double s = 0.0;
    for (std::size_t i = 0; i < size(); ++i) s = std::max(s, magnitude(i));
    return s;
}

double VectorField::norm_lp(double p) const {
    if (p < 1.0) throw ContractViolation("norm_lp: need p >= 1");
    double s = 0.0;
    for (std::size_t i = 0; i < size(); ++i) s += std::pow(magnitude(i), p);
    return std::pow(s * grid_.cell_volume(), 1.0 / p);
}

VectorField& VectorField::operator+=(const VectorField& other) {
    if (!(grid_ == other.grid_) || dim_ != other.dim_)
        throw ContractViolation("vector field: shape mismatch");
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += other.c_[i];
    return *this;
}

VectorField& VectorField::operator-=(const VectorField& other) {
    if (!(grid_ == other.grid_) || dim_ != other.dim_)
        throw ContractViolation("vector field: shape mismatch");
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= other.c_[i];
    return *this;
}

VectorField& VectorField::operator*=(double s) {
    for (double& x : c_) x *= s;
    return *this;
}

DensityField::DensityField(ScalarField field) : f_(std::move(field)) { validate(); }

DensityField DensityField::normalized(ScalarField field) {
    double mass = field.integral();
    if (!(mass > 0.0) || !std::isfinite(mass))
        throw ContractViolation("density: cannot normalize non-positive mass");
    field *= 1.0 / mass;
    return DensityField(std::move(field));
}

DensityField DensityField::uniform(const TorusGrid& grid) {
    return DensityField(ScalarField(grid, 1.0));
}

void DensityField::validate() const {
    for (double x : f_.values())
        if (!(x > positivity_floor))
            throw ContractViolation("density: positivity floor violated (min value " +
                                    std::to_string(f_.min()) + ")");
    double mass = f_.integral();
    if (std::fabs(mass - 1.0) > mass_tolerance)
        throw ContractViolation("density: mass " + std::to_string(mass) + " not within 1e-10 of 1");
}

DensityField DensityField::marginal_xi() const {
    const TorusGrid& g = grid();
    const std::size_t nx = g.xi_size();
    const std::size_t nf = g.fiber_size();
    ScalarField marg(g.xi_grid());
    const double* v = f_.values().data();
    for (std::size_t ix = 0; ix < nx; ++ix) {
        double s = 0.0;
        const double* block = v + ix * nf;
        for (std::size_t iy = 0; iy < nf; ++iy) s += block[iy];
        marg[ix] = s / static_cast<double>(nf);
    }
    return DensityField(std::move(marg));
}

DensityField DensityField::conditional(std::size_t xi_flat) const {
    const TorusGrid& g = grid();
    if (g.m() == g.n()) throw ContractViolation("conditional: grid has no fiber axes");
    const std::size_t nf = g.fiber_size();
    if (xi_flat >= g.xi_size()) throw ContractViolation("conditional: xi index out of range");
    const double* block = f_.values().data() + xi_flat * nf;
    double s = 0.0;
    for (std::size_t iy = 0; iy < nf; ++iy) s += block[iy];
    double marg = s / static_cast<double>(nf);
    if (!(marg > positivity_floor))
        throw DegenerateConditional("conditional: marginal mass below floor at xi index " +
                                    std::to_string(xi_flat));
    ScalarField cond(g.fiber_grid());
    for (std::size_t iy = 0; iy < nf; ++iy) cond[iy] = block[iy] / marg;
    return DensityField(std::move(cond));
}

} // namespace abf
