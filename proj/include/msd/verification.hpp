#pragma once

/// \file
/// Property suite behind `msd verify`: discrete-calculus identities, matrix
/// identities, the brute-force friction oracle, dual-norm consistency, the
/// binary heat-equation oracle, minimizer sampling and the truncation probe.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "msd/mixture.hpp"

namespace msd {

struct PropertyCheck {
    std::string name;
    bool passed = false;
    double measured = 0.0;
    double threshold = 0.0;
    std::string detail;
};

/// Solve the full n-species friction balance at a single point by dense
/// least squares (n friction rows plus the zero-momentum row) and return the
/// fluxes rho_i v_i. `potential_gradient` holds D_h log rho_j for every j.
Eigen::VectorXd friction_fluxes_direct(std::span<const double> rho_hat, const FrictionMatrix& b,
                                       std::span<const double> potential_gradient);

/// Result of the binary heat-mode refinement study.
struct HeatOracleStudy {
    std::vector<double> h;
    std::vector<double> dt;
    std::vector<double> err_linf;
    double fitted_constant = 0.0;  ///< mean err/(dt + h^2) over the two coarsest levels
    std::vector<double> ratios;    ///< err/(dt + h^2) / fitted_constant per level
};

/// Joint refinement dt = h^2 with N = 10, 20, 40, 80 at t_final.
HeatOracleStudy heat_oracle_study(double b12 = 1.0, double t_final = 0.1);

std::vector<PropertyCheck> run_invariant_suite(std::uint64_t seed);

}  // namespace msd
