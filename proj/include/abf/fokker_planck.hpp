#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "abf/field.hpp"
#include "abf/forces.hpp"

namespace abf {

enum class BiasMethod { None, Abf, Pabf };

BiasMethod bias_method_from_name(const std::string& name);
std::string bias_method_name(BiasMethod m);

/** Bias state on the xi grid: mean force G, applied bias B, PABF potential H. */
struct BiasProfile {
    VectorField G;
    VectorField B;
    ScalarField H; // zero unless PABF
};

/** Conditional mean force and the method's bias for the current density. */
BiasProfile compute_bias(const ForceField& f, const DensityField& pi, BiasMethod method);

struct PdeState {
    DensityField pi;
    double t = 0.0;
    BiasProfile bias;
    double mass_drift = 0.0; // cumulative |mass - 1| absorbed by renormalization
};

struct StepOptions {
    double dt = 0.0;
    BiasMethod method = BiasMethod::Abf;
};

/**
 * One Strang step of d pi/dt = (1/beta) Lap pi - div((F + lift B) pi):
 * exact spectral heat half-step, midpoint advection with the bias refreshed at
 * the half stage, heat half-step, renormalization (drift logged). Requires
 * dt <= 0.5 h / max(||F||_inf + ||B||_inf, 1).
 */
void step(PdeState& state, const ForceField& f, const StepOptions& opts);

/** Stability bound 0.5 h / max(||F||_inf + ||B||_inf, 1) for the current state. */
double stability_dt(const VectorField& f_grid, const BiasProfile& bias);

/** Caches the grid force so repeated stepping avoids re-evaluating F. */
class PdeSolver {
public:
    PdeSolver(const ForceField& f, const TorusGrid& grid, BiasMethod method, double dt,
              int bias_stride = 1);

    /** Largest stable dt for a bias bound guess (default: bias up to ||F||_inf). */
    static double auto_dt(const ForceField& f, const TorusGrid& grid, double safety = 0.8);

    void init(DensityField pi0);
    void advance();
    const PdeState& state() const { return state_; }
    const ForceField& force() const { return force_; }
    const VectorField& force_grid() const { return f_grid_; }
    double dt() const { return dt_; }
    long steps_taken() const { return steps_; }

private:
    ForceField force_;
    TorusGrid grid_;
    BiasMethod method_;
    double dt_;
    int bias_stride_;
    VectorField f_grid_;
    double sup_f_;
    PdeState state_;
    long steps_ = 0;
    bool initialized_ = false;
};

/**
 * Central-difference residual of the xi-marginal equation
 * d pi_xi/dt = (1/beta) Lap pi_xi - div((B - G) pi_xi)
 * over three consecutive equally spaced states; returns the L2 norm.
 */
double marginal_equation_residual(const PdeState& prev, const PdeState& mid, const PdeState& next,
                                  double beta);

enum class StationaryMethod { Krylov, TimeMarch, DirectFd };

StationaryMethod stationary_method_from_name(const std::string& name);
std::string stationary_method_name(StationaryMethod m);

struct StationaryOptions {
    StationaryMethod method = StationaryMethod::Krylov;
    double tol = 0.0;   // 0 -> per-method default (Krylov 1e-10, march 1e-9, direct n/a)
    long max_iters = 0; // 0 -> per-method default
};

struct StationarySolution {
    DensityField nu;
    double residual;
    long iterations;
};

/**
 * Stationary density of the linear equation (1/beta) Lap nu = div(a nu).
 * Default solver: matrix-free preconditioned BiCGStab on the spectral
 * operator. TimeMarch runs the splitting integrator to ||d nu/dt|| <= tol;
 * DirectFd assembles the second-order finite-difference weak form and solves
 * it with a sparse LU (cross-check path, grids up to 16384 points).
 */
StationarySolution stationary_linear(const VectorField& drift, double beta,
                                     const StationaryOptions& opts = {});

struct FixedPointOptions {
    double tol = 1e-9;
    int max_iters = 100;
    double stationary_tol = 1e-11;
};

struct StationaryState {
    DensityField pi_inf;
    BiasProfile bias;
    double fp_residual;
    double pde_residual;
    std::vector<double> residual_history;
};

/**
 * Self-consistent (pi_inf, B_inf): Picard iteration of B -> bias(stationary
 * density under F + lift B) from B = 0, damping 0.5 after an oscillation.
 * Throws NonConvergence (with history) when the budget is exhausted.
 */
StationaryState fixed_point_iterate(const ForceField& f, const TorusGrid& grid, BiasMethod method,
                                    const FixedPointOptions& opts = {});

/** Strong-form spectral residual ||(1/beta) Lap pi - div((F + lift B) pi)||_2. */
double stationary_residual(const ForceField& f, const DensityField& pi, const VectorField& bias);

struct DriftAuditPair {
    double drift_distance;
    double density_distance;
    double ratio;
    double harnack;
};

struct DriftAudit {
    std::vector<DriftAuditPair> pairs;
    double max_ratio = 0.0;
    double mean_ratio = 0.0;
    double max_harnack = 0.0;
    double min_sup = 0.0; // smallest sup nu over all solutions (>= 1 by unit mass)
};

/**
 * Stability audit of the drift -> stationary-density map: random band-limited
 * drift pairs with ||a||_p <= m_cap, ratios ||nu_a - nu_b||_2 / ||a - b||_2
 * and Harnack quotients sup nu / inf nu.
 */
DriftAudit drift_lipschitz_check(const TorusGrid& grid, int pairs, double beta, double m_cap,
                                 double p, std::uint64_t seed);

} // namespace abf
