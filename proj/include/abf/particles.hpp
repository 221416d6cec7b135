#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "abf/field.hpp"
#include "abf/fokker_planck.hpp"
#include "abf/forces.hpp"

namespace abf {

/**
 * N overdamped walkers on T^n with addressed noise streams: the increment of
 * particle i at step k is read from counter (i, k), so trajectories are
 * bit-identical for a given seed under any thread layout.
 */
struct ParticleEnsemble {
    int dimension = 0;
    std::uint64_t seed = 0;
    double time = 0.0;
    std::uint64_t steps = 0;
    std::vector<double> positions; // particle-major, count * dimension

    std::size_t count() const {
        return dimension > 0 ? positions.size() / static_cast<std::size_t>(dimension) : 0;
    }
};

/** Particles drawn i.i.d. uniform on T^n from the seed's init stream. */
ParticleEnsemble init_ensemble(std::size_t n_particles, int dimension, std::uint64_t seed);

/**
 * Binned estimator of the conditional mean force on a regular xi partition:
 * per-bin mean of -F1 over the particles in the bin, with the applied bias
 * B_hat equal to G_hat (ABF) or to the gradient of the projected potential
 * evaluated at bin centers (PABF). Empty bins inherit the previous estimate
 * (zero before the first update).
 */
class BinnedBias {
public:
    explicit BinnedBias(std::vector<int> bins);

    const TorusGrid& bin_grid() const { return grid_; }
    int m() const { return grid_.n(); }
    std::size_t bin_count() const { return grid_.size(); }
    const std::vector<long>& counts() const { return counts_; }
    const VectorField& g_hat() const { return g_hat_; }
    const VectorField& b_hat() const { return b_hat_; }
    const ScalarField& h_hat() const { return h_hat_; }

    /** Flat bin index of a point (first m coordinates used). */
    std::size_t bin_of(std::span<const double> x) const;
    /** Periodic multilinear interpolation of B_hat between bin centers. */
    void bias_at(std::span<const double> x, std::span<double> out) const;

    /** Replace the estimate (counts, sums -> means, projection). */
    void assign(std::vector<long> counts, const std::vector<double>& sums, BiasMethod method,
                const BinnedBias* previous);

private:
    TorusGrid grid_; // bin-center grid on T^m
    std::vector<long> counts_;
    VectorField g_hat_;
    VectorField b_hat_;
    ScalarField h_hat_;
};

/**
 * One Euler-Maruyama step dZ = (F(Z) + lift B_hat(X)) dt + sqrt(2 dt / beta) xi;
 * positions wrapped to [0,1). Deterministic for any thread count.
 */
void particle_step(ParticleEnsemble& ens, const ForceField& force, const BinnedBias& bias,
                   double dt, int threads = 1);

/** Rebinned estimate from the current positions (previous supplies the empty-bin fallback). */
BinnedBias update_bias(const ParticleEnsemble& ens, const ForceField& force, BiasMethod method,
                       const BinnedBias& previous, int threads = 1);

struct ParticleSnapshot {
    double t;
    std::vector<double> histogram; // bin occupation / N, flattened bin grid
    BinnedBias bias;
};

struct ParticleRunResult {
    std::vector<ParticleSnapshot> snapshots;
    ParticleEnsemble ensemble; // terminal state
    BinnedBias bias;           // terminal estimate
};

/**
 * Alternates particle_step and update_bias from a uniform ensemble; snapshots
 * are emitted at the first step time reaching each schedule entry.
 */
ParticleRunResult run_particles(const ForceField& force, BiasMethod method,
                                std::size_t n_particles, double dt, double t_end,
                                std::span<const double> schedule, std::vector<int> bins,
                                std::uint64_t seed, int threads = 1);

struct BootstrapReport {
    double se_l2;    // RMS over replicates of ||B_hat* - B_hat||_2
    int replicates;
};

/** Resampling (with replacement) of the terminal ensemble's bias estimate. */
BootstrapReport bootstrap_bias_se(const ParticleEnsemble& ens, const ForceField& force,
                                  BiasMethod method, const BinnedBias& bias, int replicates,
                                  std::uint64_t seed);

/** Upper tail of the chi-squared distribution (regularized incomplete gamma). */
double chi_squared_pvalue(double statistic, int dof);

} // namespace abf
