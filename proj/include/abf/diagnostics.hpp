#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "abf/field.hpp"
#include "abf/fokker_planck.hpp"
#include "abf/forces.hpp"

namespace abf {

/**
 * Relative entropy integral of mu ln(mu/nu), evaluated through the pointwise
 * nonnegative integrand nu (r ln r - r + 1), r = mu/nu, so tiny entropies keep
 * full relative accuracy. Returns +inf when nu vanishes where mu has mass.
 */
double relative_entropy(const DensityField& mu, const DensityField& nu);

/** H(mu | uniform). */
double relative_entropy_uniform(const DensityField& mu);

/** Fisher information integral of |grad ln(mu/nu)|^2 dmu (spectral gradient). */
double fisher_information(const DensityField& mu, const DensityField& nu);

/** I(mu | uniform). */
double fisher_information_uniform(const DensityField& mu);

/** Total variation distance: half the L1 distance. */
double total_variation(const DensityField& mu, const DensityField& nu);

/**
 * The entropy decomposition of a density against a stationary reference:
 * total E, macroscopic E_M (between xi-marginals), microscopic E_m
 * (xi-average of conditional entropies, computed on its own quadrature path
 * so E = E_m + E_M is a genuine cross-check), marginal Fisher information
 * I_M, and the fiber-gradient integral bounding E_m by micro_fisher/(2 rho).
 */
struct EntropyReport {
    double E;
    double E_M;
    double E_m;
    double I_M;
    double micro_fisher;
    double tv;            // total variation between pi and pi_inf
    double linf_marginal; // sup |pi_xi - 1|
};

EntropyReport entropy_split(const DensityField& pi, const DensityField& pi_inf);

/** Per-xi conditional relative entropy e_m(x) = H(pi(.|x) | pi_inf(.|x)). */
ScalarField microscopic_entropy_profile(const DensityField& pi, const DensityField& pi_inf);

/** Least-squares exponential fit v ~ prefactor * exp(-rate * t) on log values. */
struct RateFit {
    double rate = 0.0;
    double prefactor = 0.0;
    double r_squared = 0.0;
    double t_start = 0.0; // window actually used
    double t_end = 0.0;
    int points = 0;
};

/**
 * Fit over samples with t in [window_start, window_end]. With floor = 0 any
 * nonpositive value in the window is a contract violation; with floor > 0
 * values below the floor are excluded (resolvability cutoff for series that
 * decay into rounding noise). Requires at least five usable points.
 */
RateFit fit_rate(std::span<const double> t, std::span<const double> v, double window_start,
                 double window_end, double floor = 0.0);

/**
 * Certified lower bounds for the log-Sobolev constants via log-density
 * oscillation (Holley-Stroock around the uniform measure, whose constant is
 * 4 pi^2), plus the predicted entropy decay rates they imply.
 */
struct LsiEstimates {
    double R_lower;             // full measure: 4 pi^2 exp(-osc ln pi_inf)
    double rho_lower;           // conditionals: 4 pi^2 exp(-sup_x osc_y ln pi_inf(x,.))
    double M;                   // fiber Lipschitz modulus of F1
    double lambda_pred_abf;     // (8 pi^2 min 2 rho) / beta
    double lambda_pred_pabf;    // (4 pi^2 min 2 rho) / beta
    double lambda_pred_noncons; // 2 R (1 - M beta / (2 rho)) / beta, NaN when undefined
    bool noncons_defined;       // M beta < 2 rho
};

LsiEstimates lsi_bounds(const DensityField& pi_inf, const ForceField& force);

/** RHS - LHS of ||u||_2^2 <= 2||u||_1^2 + a ||grad u||_2^{2n/(n+2)} ||u||_1^{4/(n+2)}. */
double nash_slack(const ScalarField& u);

/** Worst Nash slack over random band-limited fields on T^n (n in 1..3). */
double nash_check(int trials, int n, std::uint64_t seed);

/** RHS - LHS of ||u - mean||_2^2 <= ||grad u||_2^2 / (4 pi^2). */
double poincare_slack(const ScalarField& u);

/** Worst Poincare-Wirtinger slack over random fields. */
double poincare_check(int trials, int n, std::uint64_t seed);

/** Worst slack of I(mu|1)/(8 pi^2) - H(mu|1) over random positive densities. */
double lsi_direction_check(int trials, int n, std::uint64_t seed);

/** Worst slack of sqrt(2 H(mu|nu)) - TV(mu,nu) over random density pairs. */
double csiszar_kullback_check(int pairs, int n, std::uint64_t seed);

/**
 * Pointwise audit of |G_pi(x) - G_pi_inf(x)| <= M sqrt(2 e_m(x) / rho_lower);
 * a lower rho only weakens the right side, so violations indicate a bug.
 */
struct BiasBoundReport {
    double max_violation; // max over x of lhs - rhs
    double max_lhs;
    double max_rhs;
};

BiasBoundReport bias_bound_check(const DensityField& pi, const DensityField& pi_inf,
                                 const ForceField& force, const LsiEstimates& lsi);

/**
 * Reweighted observable estimate
 * (integral of psi exp(-beta H(xi)) pi_inf) / (integral of exp(-beta H(xi)) pi_inf);
 * invariant under H -> H + c.
 */
double observable_estimate(const ScalarField& psi, const DensityField& pi_inf,
                           const ScalarField& h_inf, double beta);

/**
 * Centered-difference check of the total-entropy dissipation identity
 * dE/dt = -(1/beta) I(pi|pi_inf) + integral (B - B_inf).grad_x ln(pi/pi_inf) dpi.
 */
struct EntropyDissipation {
    double dE_dt;
    double dissipation;
    double mismatch;
};

EntropyDissipation entropy_dissipation_check(const PdeState& prev, const PdeState& mid,
                                             const PdeState& next, const DensityField& pi_inf,
                                             const VectorField& b_inf, double beta);

/**
 * Three generalizations of the free energy for non-gradient forces, all
 * zero-mean on the xi grid: h1 from the log xi-marginal of the unbiased
 * stationary density, h2 from projecting the mean force under that density,
 * h3 from the adaptive fixed point. They differ in general; pairwise L2
 * distances are tabulated, not asserted.
 */
struct FreeEnergyVariants {
    ScalarField h1;
    ScalarField h2;
    ScalarField h3;
    double d12;
    double d13;
    double d23;
};

FreeEnergyVariants free_energy_variants(const ForceField& f, const TorusGrid& grid,
                                        BiasMethod method);

/** One epsilon of the perturbation-robustness sweep. */
struct SweepRow {
    double epsilon;
    bool converged;
    double grad_error;                   // || gradA - B_inf ||_p
    std::vector<double> observable_bias; // per psi: | int psi dmu - reweighted estimate |
    double h_d12;
    double h_d13;
    double h_d23;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    double grad_slope; // log-log slope of grad_error vs epsilon
    double grad_r2;
    std::vector<double> obs_slopes;
    std::vector<double> obs_r2;
};

/**
 * For each epsilon: PABF fixed point under -grad V + epsilon Delta, distance
 * of the recovered mean-force gradient from gradA in L^p, reweighted
 * observable bias for each psi, and the three free-energy variants. Epsilons
 * must be ascending with ||epsilon Delta||_inf <= 1. Nonconvergent epsilons
 * are marked and excluded from the slope fits.
 */
SweepResult perturbation_sweep(PotentialKind pot, PerturbationKind pert, double beta,
                               const TorusGrid& grid, std::span<const double> epsilons, double p,
                               std::span<const ScalarField> psis, std::uint64_t seed);

} // namespace abf
