#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "abf/field.hpp"

namespace abf {

enum class PotentialKind { Zero, CosineSeparable, CosineCoupled, DoubleWellX };
enum class PerturbationKind { None, Rotational, RandomBandlimited };

PotentialKind potential_kind_from_name(const std::string& name);
PerturbationKind perturbation_kind_from_name(const std::string& name);
std::string potential_kind_name(PotentialKind k);
std::string perturbation_kind_name(PerturbationKind k);

/** One real trigonometric mode amp * cos(2 pi k.z + phase). */
struct TrigMode {
    std::vector<int> k;
    double amp;
    double phase;
};

/**
 * Force F = -grad V + epsilon * Delta on the torus, evaluable analytically at
 * arbitrary points. V and Delta come from a fixed library; the random
 * band-limited Delta is synthesized once from the seed (modes stored, sup
 * magnitude normalized to 1) so particle and grid evaluations agree exactly.
 */
class ForceField {
public:
    static ForceField library(PotentialKind pot, PerturbationKind pert, double epsilon,
                              double beta, int dimension, std::uint64_t seed = 0);

    int dimension() const { return n_; }
    double beta() const { return beta_; }
    double epsilon() const { return eps_; }
    PotentialKind potential_kind() const { return pot_; }
    PerturbationKind perturbation_kind() const { return pert_; }
    /** True when the non-gradient part is absent. */
    bool conservative() const;

    double potential_at(std::span<const double> z) const;
    void grad_potential_at(std::span<const double> z, std::span<double> out) const;
    void perturbation_at(std::span<const double> z, std::span<double> out) const;
    /** F(z) = -grad V(z) + epsilon * Delta(z). */
    void force_at(std::span<const double> z, std::span<double> out) const;

    ScalarField potential_field(const TorusGrid& grid) const;
    VectorField perturbation_field(const TorusGrid& grid) const;
    VectorField force_field(const TorusGrid& grid) const;

private:
    ForceField() = default;

    PotentialKind pot_ = PotentialKind::Zero;
    PerturbationKind pert_ = PerturbationKind::None;
    double eps_ = 0.0;
    double beta_ = 1.0;
    int n_ = 2;
    std::uint64_t seed_ = 0;
    std::vector<std::vector<TrigMode>> pert_modes_; // per component, RandomBandlimited only
};

/** Conservative reference: free energy on the xi grid and the tilted measures. */
struct ReferenceEquilibrium {
    ScalarField A;       // free energy, gauge: zero mean
    VectorField gradA;   // spectral gradient of A
    DensityField mu;     // exp(-beta V) normalized
    DensityField muA;    // exp(-beta (V - A(xi))) normalized
};

/**
 * Free energy of the conservative part via a stabilized log-sum-exp over the
 * fiber: A(x) = -(1/beta) log integral exp(-beta V(x, y)) dy, de-meaned.
 */
ReferenceEquilibrium free_energy(const ForceField& f, const TorusGrid& grid);

/**
 * Sampled Lipschitz constant of x -> F1(x, y) (the xi block of F with the
 * fiber variable held), max difference quotient over `samples` triples
 * inflated by 5%.
 */
double lipschitz_estimate(const ForceField& f, int m, int samples, std::uint64_t seed = 1234);

/**
 * Lipschitz constant of y -> F1(x, y): the modulus entering the bias-distance
 * bound and the non-conservative rate prediction. Closed form for library
 * force fields, sampled (5% inflated) for the random perturbation.
 */
double lipschitz_fiber(const ForceField& f, int m, int samples = 20000, std::uint64_t seed = 1234);

/** Conditional mean force G(x) = -E[F1 | xi = x] on the xi grid of pi's grid. */
VectorField local_mean_force(const ForceField& f, const DensityField& pi);

/** Same, with the grid force field precomputed (hot loop form). */
VectorField local_mean_force_cached(const VectorField& f_grid, std::span<const double> pi_values,
                                    int m);

} // namespace abf
