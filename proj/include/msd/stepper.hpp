#pragma once

/// \file
/// One implicit-explicit step of the Maxwell-Stefan scheme and the time loop
/// around it. The diffusion tensor is frozen at the old state; the new
/// densities solve
///
///     (r - r_old) / dt + L_D (log r_i - log r_n) = 0,   i < n,
///
/// which is found by damped Newton iteration kept strictly inside the simplex.
/// The step is certified afterwards by the variational objective
/// J(r) = ||r - r_old||^2_{L_D^{-1}} / (2 dt) + F_h(r).

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "msd/entropy.hpp"
#include "msd/grid.hpp"
#include "msd/mixture.hpp"

namespace msd {

struct StepConfig {
    double dt = 1e-3;
    double newton_tol = 1e-10;      ///< sup-norm of the reduced residual
    int max_newton_iters = 50;
    double interior_margin = 0.99;  ///< fraction-to-boundary parameter theta
    double linear_tol = 1e-12;      ///< inner Jacobian / dual-norm solves

    /// Throws DomainError on dt <= 0 or theta outside (0, 1).
    void validate() const;
};

/// First n-1 species of a full density field.
CellField reduced(const CellField& rho);

/// R(r) = (r - r_old)/dt + L_D g(r), g = entropy_grad_reduced. `total` is
/// the pointwise total density used to recover the last species.
CellField scheme_residual(const CellField& rho_trial, const CellField& rho_prev, const EdgeDiffusionTensor& d_hat,
                          const GridSpec& grid, double dt, std::span<const double> total);

struct NewtonOutcome {
    CellField rho_reduced;
    int iterations = 0;
    double residual_norm = 0.0;
};

/// Damped Newton on scheme_residual, starting from the old state. Throws
/// SolverError when the iteration cap is hit or the line search collapses.
NewtonOutcome newton_solve(const CellField& rho_prev, const EdgeDiffusionTensor& d_hat, const GridSpec& grid,
                           const StepConfig& cfg, std::span<const double> total);
NewtonOutcome newton_solve(const CellField& rho_prev, const EdgeDiffusionTensor& d_hat, const GridSpec& grid,
                           const StepConfig& cfg);

/// Edge fluxes rho_hat_i v_i (old-state averages times new velocities).
EdgeField recover_fluxes(const CellField& rho_next, const EdgeDiffusionTensor& d_hat, const GridSpec& grid);

/// Velocities v_i on every edge, fluxes divided by the old averaged density.
EdgeField recover_velocities(const CellField& rho_next, const CellField& rho_prev, const EdgeDiffusionTensor& d_hat,
                             const GridSpec& grid);

/// J(r) for reduced trial densities r.
double step_objective(const CellField& rho_trial, const CellField& rho_prev, const EdgeDiffusionTensor& d_hat,
                      const GridSpec& grid, double dt, std::span<const double> total, double linear_tol = 1e-11);

struct StepResult {
    CellField rho_next;
    EdgeField velocities;
    int newton_iters = 0;
    double residual_norm = 0.0;
    double energy_next = 0.0;
    double dual_increment_sq = 0.0;
};

StepResult take_step(const CellField& rho_prev, const FrictionMatrix& b, const GridSpec& grid, const StepConfig& cfg,
                     std::span<const double> total);

struct StepRecord {
    int step = 0;
    double time = 0.0;
    double energy = 0.0;
    double min_density = 0.0;
    std::vector<double> species_sum;   ///< sum over cells, per species
    double mass_drift_pointwise = 0.0; ///< max_l |sum_i rho - sum_i rho^0|
    double mass_drift_species = 0.0;   ///< max_i |sum_l rho - sum_l rho^0|
    double dual_increment_sq = 0.0;
    int newton_iters = 0;
};

class SimulationState {
public:
    /// Validates rho0 > 0 and |sum_i rho0 - 1| <= 1e-8 pointwise, then
    /// renormalises by the pointwise sum. Records the step-0 diagnostics.
    static SimulationState initialize(const GridSpec& grid, const FrictionMatrix& mixture, CellField rho0);

    const GridSpec& grid() const { return grid_; }
    const FrictionMatrix& mixture() const { return mixture_; }
    const CellField& rho() const { return rho_; }
    double time() const { return time_; }
    int step_index() const { return step_index_; }
    const std::vector<StepRecord>& history() const { return history_; }
    const std::vector<double>& initial_total() const { return initial_total_; }

    /// Record for the current densities relative to the initial state.
    StepRecord measure(double dual_increment_sq, int newton_iters) const;

private:
    SimulationState(GridSpec grid, FrictionMatrix mixture, CellField rho);

    GridSpec grid_;
    FrictionMatrix mixture_;
    CellField rho_;
    double time_ = 0.0;
    int step_index_ = 0;
    std::vector<StepRecord> history_;
    std::vector<double> initial_total_;
    std::vector<double> initial_species_sum_;

    friend SimulationState advance(const SimulationState&, const StepConfig&, int,
                                   const std::function<void(const SimulationState&)>&);
};

/// Apply `steps` time steps. Fails atomically: on a solver error the input is
/// untouched and a SolverError naming the failing step is thrown. `observer`
/// is called after every completed step.
SimulationState advance(const SimulationState& state, const StepConfig& cfg, int steps,
                        const std::function<void(const SimulationState&)>& observer = {});

}  // namespace msd
