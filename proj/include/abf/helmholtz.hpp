#pragma once

#include <cstdint>

#include "abf/field.hpp"

namespace abf {

/** Gradient-part decomposition G = grad(potential) + residual. */
struct HelmholtzResult {
    ScalarField potential;  // zero mean
    VectorField projected;  // grad(potential)
    VectorField residual;   // G - projected
};

/**
 * L2(Lebesgue) projection onto gradients, mode by mode in Fourier space:
 * H_k = (k . G_k) / (2 pi i |k|^2). The residual is divergence-free and
 * orthogonal to every gradient.
 */
HelmholtzResult project_lebesgue(const VectorField& g);

struct WeightedOptions {
    double tol = 1e-9;            // residual tolerance on div(nu (grad H - G))
    int max_iter_per_point = 10;  // iteration cap: this times grid size
    bool force_iterative = false; // skip the one-dimensional closed form
};

/**
 * L2(nu)-weighted projection: solves div(nu grad H) = div(nu G) for the
 * zero-mean H by preconditioned conjugate gradients (inverse-Laplacian
 * preconditioner). On one-dimensional grids the closed-form constant-flux
 * solution nu (grad H - G) = const is used instead unless forced iterative.
 */
HelmholtzResult project_weighted(const VectorField& g, const DensityField& nu,
                                 const WeightedOptions& opts = {});

/**
 * Empirical operator norm probe: max over random band-limited fields of
 * ||P(G)||_p / ||G||_p for the Lebesgue projection.
 */
double projection_norm_ratio(const TorusGrid& grid, double p, int trials, std::uint64_t seed);

} // namespace abf
