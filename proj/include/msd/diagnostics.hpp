#pragma once

/// \file
/// Verification harness: run audits, convergence-order studies against a
/// reference state, and the truncation-error probe on manufactured solutions.

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "msd/initial_data.hpp"
#include "msd/mixture.hpp"
#include "msd/stepper.hpp"

namespace msd {

// ---------------------------------------------------------------- audits

struct AuditSummary {
    int steps = 0;
    double max_pointwise_drift = 0.0;
    double max_species_drift = 0.0;
    double min_density = 0.0;
    /// F_k > F_{k-1} + slack.
    int energy_increase_count = 0;
    /// F_k + dual_k / (2 dt) > F_{k-1} + slack: the asserted certificate.
    int certificate_violations = 0;
    /// F_k + dual_k > F_{k-1} + slack: the factor-free form, reported only.
    int unscaled_violations = 0;
    double energy_slack = 1e-10;

    /// True when min density > 0, both energy counts are zero, drifts are
    /// within `drift_tol`, and (for dt <= 1/2) the unscaled form holds too.
    bool clean(double dt, double drift_tol = 1e-10) const;
};

AuditSummary audit_run(const std::vector<StepRecord>& history, double dt, double energy_slack = 1e-10);

// ---------------------------------------------------------------- convergence

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double std_error = 0.0;
    double ci_low = 0.0;   ///< 95% two-sided t interval; equals slope with < 3 points
    double ci_high = 0.0;
};

/// Ordinary least squares on (log x, log y). Throws DomainError when fewer
/// than two distinct x values are supplied or any value is nonpositive.
SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

struct ConvergenceReport {
    std::string parameter;  ///< "h" or "dt"
    std::vector<double> params;
    std::vector<double> err_linf;
    std::vector<double> err_l2;
    std::optional<SlopeFit> slope_linf;
    std::optional<SlopeFit> slope_l2;
    std::vector<std::string> notes;
};

/// A time-dependent problem with a known reference state at t_final.
struct StudyProblem {
    std::string name;
    InitialProfile profile;
    FrictionMatrix friction;
    double length = 1.0;
    double t_final = 0.5;
    /// Reference density of species i at (x, y) and time t.
    std::function<double(int, double, double, double)> reference;
    std::vector<std::string> notes;
};

/// A mixture relaxing to its spatial average; the reference is the continuum
/// mean of the initial data.
StudyProblem equilibrium_problem(const InitialProfile& profile, const FrictionMatrix& friction, double length,
                                 double t_final);
/// Ternary 1D data; the mean is cross-checked against (0.7, 1e-4, 0.2999).
StudyProblem ternary_equilibrium_problem(double t_final = 0.5);

/// Binary heat mode with its analytic solution.
StudyProblem binary_heat_problem(double b12, double t_final, double amplitude = 0.1);

struct RunErrors {
    double linf = 0.0;
    double l2 = 0.0;
};

/// Run `problem` on an N = L/h grid with `steps` steps of size t_final/steps
/// and measure the error (max over species) at t_final.
RunErrors run_and_measure(const StudyProblem& problem, int cells, int steps, const StepConfig& base);

/// Sweep over spatial step sizes at fixed dt. Each h must divide L.
ConvergenceReport spatial_convergence(const StudyProblem& problem, const std::vector<double>& h_values, double dt,
                                      const StepConfig& base = {});

/// Sweep over time steps at fixed h. Each dt must divide t_final.
ConvergenceReport temporal_convergence(const StudyProblem& problem, const std::vector<double>& dt_values, double h,
                                       const StepConfig& base = {});

/// `count` values log-spaced in [lo, hi], each snapped so that `span / value`
/// is an integer, returned in decreasing order without duplicates.
std::vector<double> snapped_log_sweep(double lo, double hi, int count, double span);

/// `count` spacings L/N with N odd (N >= 5), N log-spaced between L/h_hi and
/// L/h_lo, decreasing, without duplicates. Odd N keeps the cell-centre
/// sampling error of piecewise-linear data a smooth multiple of h^2.
std::vector<double> odd_cell_log_sweep(double h_lo, double h_hi, int count, double length);

// ---------------------------------------------------------------- truncation

struct ManufacturedSolution {
    std::string name;
    FrictionMatrix friction;
    double length = 1.0;
    int species = 2;
    std::function<double(int, double, double)> density;   ///< P_i(x, t)
    std::function<double(int, double, double)> velocity;  ///< V_i(x, t)
};

/// "heat-mode": binary heat mode with b12 = 1; "uniform": constant state.
ManufacturedSolution manufactured_solution(const std::string& id);

struct TruncationEntry {
    double h = 0.0;
    double dt = 0.0;
    double tau1 = 0.0;
    double tau2 = 0.0;
    double tau3 = 0.0;
};

struct TruncationReport {
    std::string solution;
    std::vector<TruncationEntry> entries;
    /// Least-squares C in max(tau) ~ C (dt + h^2).
    double fitted_constant = 0.0;
};

/// Evaluate the three discrete residuals of (P, V) sampled on the grid, at
/// time level t0 -> t0 + dt, for every (h, dt) pair of the two lists.
TruncationReport truncation_probe(const ManufacturedSolution& solution, const std::vector<double>& h_values,
                                  const std::vector<double>& dt_values, double t0 = 0.0);

// ---------------------------------------------------------------- CSV

void write_history_csv(std::ostream& out, const std::vector<StepRecord>& history);
void write_convergence_csv(std::ostream& out, const ConvergenceReport& report);
void write_truncation_csv(std::ostream& out, const TruncationReport& report);
/// Snapshot rows: step,time,x[,y],rho_1..rho_n.
void write_field_rows(std::ostream& out, const CellField& rho, const GridSpec& grid, int step, double time,
                      bool header);

/// Integer N with N * h = L, or DomainError.
int cells_for_spacing(double length, double h);

}  // namespace msd
