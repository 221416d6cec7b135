#pragma once

#include <cstdint>

#include "abf/field.hpp"
#include "abf/rng.hpp"

namespace abf::spectral {

/** Exact trigonometric-interpolant gradient; each component has zero mean. */
VectorField gradient(const ScalarField& f);

/** Spectral divergence of a grid-dimensional vector field (zero mean). */
ScalarField divergence(const VectorField& v);

/** Spectral Laplacian. */
ScalarField laplacian(const ScalarField& f);

/** In-place heat semigroup: multiplies mode k by exp(-4 pi^2 |k|^2 nu_tau). */
void heat_inplace(ScalarField& f, double nu_tau);

/** Solve Laplacian(u) = f for the zero-mean u; the mean of f is discarded. */
ScalarField inverse_laplacian(const ScalarField& f);

/** Forward then inverse transform; identity up to rounding (used as an invariant probe). */
ScalarField roundtrip(const ScalarField& f);

/**
 * Random real trigonometric polynomial with modes 0 < |k|_inf <= max_mode,
 * i.i.d. Gaussian amplitudes and uniform phases drawn from a counter stream.
 * `stream` separates independent fields under one seed.
 */
ScalarField random_trig_poly(const TorusGrid& grid, int max_mode, std::uint64_t seed,
                             std::uint64_t stream);

/** Component-wise random trigonometric polynomial vector field (dim = grid dimension). */
VectorField random_trig_vector(const TorusGrid& grid, int max_mode, std::uint64_t seed,
                               std::uint64_t stream);

} // namespace abf::spectral
