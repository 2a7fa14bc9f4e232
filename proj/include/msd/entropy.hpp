#pragma once

/// \file
/// Discrete entropy F_h, its reduced gradient, the weighted elliptic operator
/// L_Phi f = -d_h(Phi D_h f) acting across species, its inverse on the
/// per-species mean-zero subspace, and the induced dual norm.
///
/// Reduced densities hold the first n-1 species; the last one is recovered
/// pointwise as `total - sum`, where `total` defaults to one.

#include <span>

#include "msd/grid.hpp"
#include "msd/mixture.hpp"

namespace msd {

/// Entropy evaluation rejects any density at or below this value.
inline constexpr double kDensityFloor = 1e-300;

double entropy_full(const CellField& rho, const GridSpec& grid);

double entropy_reduced(const CellField& rho_t, const GridSpec& grid);
double entropy_reduced(const CellField& rho_t, std::span<const double> total, const GridSpec& grid);

/// log rho_i - log rho_n per cell, i < n.
CellField entropy_grad_reduced(const CellField& rho_t, const GridSpec& grid);
CellField entropy_grad_reduced(const CellField& rho_t, std::span<const double> total, const GridSpec& grid);

/// Append the eliminated species: rho_n = total - sum_{i<n} rho_i.
/// Throws DomainError when any resulting density is <= kDensityFloor.
CellField complete_densities(const CellField& rho_t, std::span<const double> total);

/// Pointwise sum over species.
std::vector<double> pointwise_total(const CellField& rho);

/// Per-species sum over cells, compensated.
std::vector<double> species_sums(const CellField& f);

/// Subtract the per-species mean in place.
void project_mean_zero(CellField& f);

CellField apply_L_Phi(const EdgeDiffusionTensor& phi, const CellField& f, const GridSpec& grid);

struct LinearSolveStats {
    int iterations = 0;
    double relative_residual = 0.0;
};

/// Mean-zero f with L_Phi f = g, by Jacobi-preconditioned conjugate gradients
/// restricted to the per-species mean-zero subspace. Stops once the residual
/// is at most `tol * ||g||`; throws SolverError after 10 N (n-1) iterations.
CellField solve_L_Phi(const EdgeDiffusionTensor& phi, const CellField& g, const GridSpec& grid,
                      double tol = 1e-11, LinearSolveStats* stats = nullptr);

/// ||g||^2 = [D_h f, Phi D_h f] with f = L_Phi^{-1} g.
double dual_norm_sq(const EdgeDiffusionTensor& phi, const CellField& g, const GridSpec& grid,
                    double tol = 1e-11);

struct DualNormRoutes {
    double flux_form = 0.0;   ///< [D_h f, Phi D_h f]
    double pairing_form = 0.0; ///< <f, g>
};

DualNormRoutes dual_norm_sq_routes(const EdgeDiffusionTensor& phi, const CellField& g,
                                   const GridSpec& grid, double tol = 1e-11);

}  // namespace msd
