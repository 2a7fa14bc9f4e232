#include "msd/stepper.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

namespace msd {

void StepConfig::validate() const
{
    if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("time step must be positive");
    if (!(interior_margin > 0.0 && interior_margin < 1.0))
        throw DomainError("interior margin must lie in (0, 1)");
    if (!(newton_tol > 0.0)) throw DomainError("newton tolerance must be positive");
    if (max_newton_iters < 1) throw DomainError("newton iteration cap must be at least 1");
    if (!(linear_tol > 0.0)) throw DomainError("linear tolerance must be positive");
}

CellField reduced(const CellField& rho)
{
    if (rho.species() < 2) throw DimensionError("reduced: need at least two species");
    CellField out(rho.cells(), rho.species() - 1);
    std::copy_n(rho.raw().begin(), out.raw().size(), out.raw().begin());
    return out;
}

namespace {

double sup_norm(const CellField& f)
{
    double m = 0.0;
    for (double v : f.raw()) m = std::max(m, std::abs(v));
    return m;
}

using SparseMatrix = Eigen::SparseMatrix<double>;

/// SPD system H^{-1}/dt + L_D in the variable y = H delta, unknowns
/// interleaved as cell * m + species.
SparseMatrix assemble_newton_system(const CellField& full, const EdgeDiffusionTensor& d_hat, const GridSpec& grid,
                                    double dt)
{
    const int m = d_hat.reduced_species();
    const std::size_t cells = grid.cell_count();
    const double inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(cells * m * m * (1 + 4 * grid.dim()));

    std::vector<double> point(static_cast<std::size_t>(m + 1));
    for (std::size_t c = 0; c < cells; ++c) {
        for (int i = 0; i <= m; ++i) point[i] = full(i, c);
        const Eigen::MatrixXd h_inv = assemble_Qinv(point);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                triplets.emplace_back(static_cast<int>(c * m + i), static_cast<int>(c * m + j), h_inv(i, j) / dt);
    }
    for (int s = 0; s < grid.dim(); ++s)
        for (std::size_t c = 0; c < cells; ++c) {
            const std::size_t nb = grid.forward(c, s);
            const Eigen::MatrixXd& phi = d_hat.at(s, c);
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < m; ++j) {
                    const double w = phi(i, j) * inv_h2;
                    const int ci = static_cast<int>(c * m + i), cj = static_cast<int>(c * m + j);
                    const int ni = static_cast<int>(nb * m + i), nj = static_cast<int>(nb * m + j);
                    triplets.emplace_back(ci, cj, w);
                    triplets.emplace_back(ni, nj, w);
                    triplets.emplace_back(ci, nj, -w);
                    triplets.emplace_back(ni, cj, -w);
                }
        }
    const int size = static_cast<int>(cells * m);
    SparseMatrix a(size, size);
    a.setFromTriplets(triplets.begin(), triplets.end());
    return a;
}

Eigen::VectorXd solve_newton_system(const SparseMatrix& a, const Eigen::VectorXd& rhs, const GridSpec& grid,
                                    double linear_tol)
{
    if (grid.dim() == 1) {
        Eigen::SimplicialLDLT<SparseMatrix> ldlt(a);
        if (ldlt.info() != Eigen::Success) throw SolverError("newton: Jacobian factorization failed");
        Eigen::VectorXd y = ldlt.solve(rhs);
        if (ldlt.info() != Eigen::Success) throw SolverError("newton: Jacobian solve failed");
        return y;
    }
    Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper> cg;
    cg.setTolerance(linear_tol);
    cg.setMaxIterations(static_cast<Eigen::Index>(10 * a.rows()));
    cg.compute(a);
    Eigen::VectorXd y = cg.solve(rhs);
    if (cg.info() != Eigen::Success)
        throw SolverError("newton: conjugate gradients did not converge (error " + std::to_string(cg.error()) + ")");
    return y;
}

void require_reduced_shape(const CellField& rho_trial, const CellField& rho_prev, const EdgeDiffusionTensor& d_hat,
                           const GridSpec& grid, std::span<const double> total, const char* what)
{
    require_shape(rho_trial, grid, what);
    require_shape(rho_prev, grid, what);
    if (rho_prev.species() != rho_trial.species() + 1)
        throw DimensionError(std::string(what) + ": previous state must carry one more species than the trial");
    if (!d_hat.matches(grid) || d_hat.reduced_species() != rho_trial.species())
        throw DimensionError(std::string(what) + ": diffusion tensor shape mismatch");
    if (total.size() != grid.cell_count()) throw DimensionError(std::string(what) + ": total length mismatch");
}

}  // namespace

CellField scheme_residual(const CellField& rho_trial, const CellField& rho_prev, const EdgeDiffusionTensor& d_hat,
                          const GridSpec& grid, double dt, std::span<const double> total)
{
    require_reduced_shape(rho_trial, rho_prev, d_hat, grid, total, "scheme_residual");
    const CellField g = entropy_grad_reduced(rho_trial, total, grid);
    CellField r = apply_L_Phi(d_hat, g, grid);
    const int m = rho_trial.species();
    for (int i = 0; i < m; ++i)
        for (std::size_t c = 0; c < grid.cell_count(); ++c) r(i, c) += (rho_trial(i, c) - rho_prev(i, c)) / dt;
    return r;
}

NewtonOutcome newton_solve(const CellField& rho_prev, const EdgeDiffusionTensor& d_hat, const GridSpec& grid,
                           const StepConfig& cfg, std::span<const double> total)
{
    cfg.validate();
    CellField x = reduced(rho_prev);
    require_reduced_shape(x, rho_prev, d_hat, grid, total, "newton_solve");
    const int m = x.species();
    const std::size_t cells = grid.cell_count();

    CellField r = scheme_residual(x, rho_prev, d_hat, grid, cfg.dt, total);
    double r_norm = sup_norm(r);
    for (int it = 0;; ++it) {
        if (r_norm <= cfg.newton_tol) return {std::move(x), it, r_norm};
        if (it == cfg.max_newton_iters)
            throw SolverError("newton: no convergence after " + std::to_string(it) + " iterations (residual " +
                              std::to_string(r_norm) + ")");

        const CellField full = complete_densities(x, total);
        const SparseMatrix a = assemble_newton_system(full, d_hat, grid, cfg.dt);
        Eigen::VectorXd rhs(static_cast<Eigen::Index>(cells * m));
        for (std::size_t c = 0; c < cells; ++c)
            for (int i = 0; i < m; ++i) rhs[c * m + i] = -r(i, c);
        const Eigen::VectorXd y = solve_newton_system(a, rhs, grid, cfg.linear_tol);

        // delta = H^{-1} y per cell; the last species moves by -sum(delta).
        CellField delta(cells, m);
        std::vector<double> delta_last(cells, 0.0);
        std::vector<double> point(static_cast<std::size_t>(m + 1));
        for (std::size_t c = 0; c < cells; ++c) {
            for (int i = 0; i <= m; ++i) point[i] = full(i, c);
            const Eigen::MatrixXd h_inv = assemble_Qinv(point);
            const Eigen::VectorXd d = h_inv * y.segment(static_cast<Eigen::Index>(c * m), m);
            for (int i = 0; i < m; ++i) {
                delta(i, c) = d[i];
                delta_last[c] -= d[i];
            }
        }

        // Fraction-to-boundary: every density keeps at least (1 - theta) of its value.
        double alpha = 1.0;
        for (std::size_t c = 0; c < cells; ++c) {
            for (int i = 0; i <= m; ++i) {
                const double d = i < m ? delta(i, c) : delta_last[c];
                if (d < 0.0) alpha = std::min(alpha, cfg.interior_margin * full(i, c) / -d);
            }
        }

        for (;;) {
            if (alpha < 1e-14)
                throw SolverError("newton: line search collapsed (residual " + std::to_string(r_norm) + ")");
            CellField trial = x;
            for (std::size_t k = 0; k < trial.raw().size(); ++k) trial.raw()[k] += alpha * delta.raw()[k];
            CellField r_trial = scheme_residual(trial, rho_prev, d_hat, grid, cfg.dt, total);
            const double trial_norm = sup_norm(r_trial);
            if (trial_norm < r_norm) {
                x = std::move(trial);
                r = std::move(r_trial);
                r_norm = trial_norm;
                break;
            }
            alpha *= 0.5;
        }
    }
}

NewtonOutcome newton_solve(const CellField& rho_prev, const EdgeDiffusionTensor& d_hat, const GridSpec& grid,
                           const StepConfig& cfg)
{
    return newton_solve(rho_prev, d_hat, grid, cfg, pointwise_total(rho_prev));
}

EdgeField recover_fluxes(const CellField& rho_next, const EdgeDiffusionTensor& d_hat, const GridSpec& grid)
{
    require_shape(rho_next, grid, "recover_fluxes");
    const int n = rho_next.species();
    if (!d_hat.matches(grid) || d_hat.reduced_species() != n - 1)
        throw DimensionError("recover_fluxes: diffusion tensor shape mismatch");
    CellField potential(grid, n - 1);
    for (std::size_t c = 0; c < grid.cell_count(); ++c) {
        if (!(rho_next(n - 1, c) > 0.0)) throw DomainError("recover_fluxes: nonpositive density");
        const double log_last = std::log(rho_next(n - 1, c));
        for (int i = 0; i < n - 1; ++i) {
            if (!(rho_next(i, c) > 0.0)) throw DomainError("recover_fluxes: nonpositive density");
            potential(i, c) = std::log(rho_next(i, c)) - log_last;
        }
    }
    const EdgeField grad = gradient_to_edges(potential, grid);
    EdgeField flux(grid, n);
    Eigen::VectorXd local(n - 1);
    for (int s = 0; s < grid.dim(); ++s)
        for (std::size_t e = 0; e < grid.cell_count(); ++e) {
            for (int j = 0; j < n - 1; ++j) local[j] = grad(j, s, e);
            const Eigen::VectorXd f = -(d_hat.at(s, e) * local);
            double sum = 0.0;
            for (int i = 0; i < n - 1; ++i) {
                flux(i, s, e) = f[i];
                sum += f[i];
            }
            flux(n - 1, s, e) = -sum;
        }
    return flux;
}

EdgeField recover_velocities(const CellField& rho_next, const CellField& rho_prev, const EdgeDiffusionTensor& d_hat,
                             const GridSpec& grid)
{
    require_shape(rho_prev, grid, "recover_velocities");
    if (rho_prev.species() != rho_next.species()) throw DimensionError("recover_velocities: species mismatch");
    for (double v : rho_prev.raw())
        if (!(v > 0.0)) throw DomainError("recover_velocities: nonpositive density");
    EdgeField v = recover_fluxes(rho_next, d_hat, grid);
    const EdgeField avg = average_to_edges(rho_prev, grid);
    for (std::size_t k = 0; k < v.raw().size(); ++k) v.raw()[k] /= avg.raw()[k];
    return v;
}

double step_objective(const CellField& rho_trial, const CellField& rho_prev, const EdgeDiffusionTensor& d_hat,
                      const GridSpec& grid, double dt, std::span<const double> total, double linear_tol)
{
    require_reduced_shape(rho_trial, rho_prev, d_hat, grid, total, "step_objective");
    CellField increment = rho_trial;
    for (int i = 0; i < rho_trial.species(); ++i)
        for (std::size_t c = 0; c < grid.cell_count(); ++c) increment(i, c) -= rho_prev(i, c);
    return dual_norm_sq(d_hat, increment, grid, linear_tol) / (2.0 * dt) +
           entropy_reduced(rho_trial, total, grid);
}

StepResult take_step(const CellField& rho_prev, const FrictionMatrix& b, const GridSpec& grid, const StepConfig& cfg,
                     std::span<const double> total)
{
    const EdgeDiffusionTensor d_hat = assemble_D_hat(rho_prev, b, grid);
    NewtonOutcome newton = newton_solve(rho_prev, d_hat, grid, cfg, total);

    StepResult result;
    result.rho_next = complete_densities(newton.rho_reduced, total);
    result.velocities = recover_velocities(result.rho_next, rho_prev, d_hat, grid);
    result.newton_iters = newton.iterations;
    result.residual_norm = newton.residual_norm;
    result.energy_next = entropy_full(result.rho_next, grid);

    CellField increment = newton.rho_reduced;
    for (int i = 0; i < increment.species(); ++i)
        for (std::size_t c = 0; c < grid.cell_count(); ++c) increment(i, c) -= rho_prev(i, c);
    result.dual_increment_sq = dual_norm_sq(d_hat, increment, grid, std::max(cfg.linear_tol, 1e-11));
    return result;
}

SimulationState::SimulationState(GridSpec grid, FrictionMatrix mixture, CellField rho)
    : grid_(std::move(grid)), mixture_(std::move(mixture)), rho_(std::move(rho))
{
}

SimulationState SimulationState::initialize(const GridSpec& grid, const FrictionMatrix& mixture, CellField rho0)
{
    require_shape(rho0, grid, "initialize");
    if (rho0.species() != mixture.species())
        throw DimensionError("initial data has " + std::to_string(rho0.species()) + " species, mixture has " +
                             std::to_string(mixture.species()));
    for (double v : rho0.raw())
        if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("initial densities must be positive");
    const std::vector<double> sums = pointwise_total(rho0);
    for (std::size_t c = 0; c < grid.cell_count(); ++c) {
        if (std::abs(sums[c] - 1.0) > 1e-8)
            throw DomainError("initial densities sum to " + std::to_string(sums[c]) + " at cell " +
                              std::to_string(c) + "; expected 1");
        for (int i = 0; i < rho0.species(); ++i) rho0(i, c) /= sums[c];
    }

    SimulationState state(grid, mixture, std::move(rho0));
    state.initial_total_ = pointwise_total(state.rho_);
    state.initial_species_sum_ = species_sums(state.rho_);
    state.history_.push_back(state.measure(0.0, 0));
    return state;
}

StepRecord SimulationState::measure(double dual_increment_sq, int newton_iters) const
{
    StepRecord rec;
    rec.step = step_index_;
    rec.time = time_;
    rec.energy = entropy_full(rho_, grid_);
    rec.min_density = *std::min_element(rho_.raw().begin(), rho_.raw().end());
    rec.species_sum = species_sums(rho_);
    const std::vector<double> totals = pointwise_total(rho_);
    for (std::size_t c = 0; c < totals.size(); ++c)
        rec.mass_drift_pointwise = std::max(rec.mass_drift_pointwise, std::abs(totals[c] - initial_total_[c]));
    for (std::size_t i = 0; i < rec.species_sum.size(); ++i)
        rec.mass_drift_species =
            std::max(rec.mass_drift_species, std::abs(rec.species_sum[i] - initial_species_sum_[i]));
    rec.dual_increment_sq = dual_increment_sq;
    rec.newton_iters = newton_iters;
    return rec;
}

SimulationState advance(const SimulationState& state, const StepConfig& cfg, int steps,
                        const std::function<void(const SimulationState&)>& observer)
{
    cfg.validate();
    if (steps < 0) throw DomainError("step count must be nonnegative");
    SimulationState next = state;
    for (int k = 0; k < steps; ++k) {
        StepResult step;
        try {
            step = take_step(next.rho_, next.mixture_, next.grid_, cfg, next.initial_total_);
        } catch (const std::exception& e) {
            throw SolverError("step " + std::to_string(next.step_index_ + 1) + ": " + e.what());
        }
        next.rho_ = std::move(step.rho_next);
        next.step_index_ += 1;
        next.time_ = state.time_ + (k + 1) * cfg.dt;
        next.history_.push_back(next.measure(step.dual_increment_sq, step.newton_iters));
        if (observer) observer(next);
    }
    return next;
}

}  // namespace msd
