#pragma once

/// \file
/// Built-in initial conditions and tabulated input. Profiles are sampled at
/// cell centres x_l = l h.

#include <functional>
#include <string>

#include "msd/grid.hpp"

namespace msd {

struct InitialProfile {
    std::string name;
    int species = 0;
    int dim = 1;
    /// Continuum density of species i at (x, y); y is ignored in 1D.
    std::function<double(int, double, double)> density;
};

/// Piecewise-linear three-species profile on the unit torus.
InitialProfile ternary_1d_profile();
/// Radial three-species profile on the unit square torus.
InitialProfile radial_2d_profile();
/// rho_1 = 1/2 + amplitude cos(2 pi x / L), rho_2 = 1 - rho_1.
InitialProfile two_species_cosine_profile(double amplitude = 0.1, double length = 1.0);

/// Look up a built-in by name ("paper-1d", "paper-2d", "two-species-cosine").
InitialProfile builtin_profile(const std::string& name);

CellField sample_profile(const InitialProfile& profile, const GridSpec& grid);

/// Per-species continuum average over [0, L] (1D profiles), by
/// Gauss-Kronrod quadrature on panels aligned with multiples of L/64.
std::vector<double> continuum_mean(const InitialProfile& profile, double length);

/// Analytic binary heat mode: 1/2 + amplitude exp(-4 pi^2 t / (b12 L^2)) cos(2 pi x / L).
double heat_mode_density(double x, double t, double b12, double amplitude = 0.1, double length = 1.0);

/// Read a CSV of cell values: optional header line, then one row per cell in
/// flat cell order with columns x[,y],rho_1,...,rho_n.
CellField read_tabulated(const std::string& path, const GridSpec& grid, int species);

}  // namespace msd
