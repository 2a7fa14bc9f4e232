#pragma once

/// \file
/// Run configuration: a sectioned key = value text format.
///
///     [grid]      dim, N, L
///     [mixture]   n, b.i.j (1-based, "a/b" accepted), initial, initial_file
///     [solver]    dt, steps, newton_tol, max_newton_iters, interior_margin, linear_tol
///     [output]    dir, emit_fields_every
///     [study]     t_final, space_h_min, space_h_max, space_count, space_dt,
///                 time_dt_min, time_dt_max, time_count, time_h
///     [truncation] solution, h_values, dt_values (comma separated)
///     [verify]    seed
///
/// Missing keys keep their defaults, which reproduce the 1D three-species run.

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "msd/mixture.hpp"
#include "msd/stepper.hpp"

namespace msd {

class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& source, int line, const std::string& key, const std::string& message);

    int line() const { return line_; }
    const std::string& key() const { return key_; }

private:
    int line_;
    std::string key_;
};

struct RunConfig {
    int dim = 1;
    int cells = 100;
    double length = 1.0;

    int species = 3;
    Eigen::MatrixXd friction;  ///< filled by parse / defaults(); zero diagonal
    std::string initial = "paper-1d";
    std::string initial_file;  ///< takes precedence over `initial` when set

    StepConfig solver;
    int steps = 500;

    std::string output_dir = "out";
    int emit_fields_every = 100;  ///< 0: initial and final snapshot only

    double t_final = 0.5;
    double space_h_min = 0.01;
    double space_h_max = 0.2;
    int space_count = 8;
    double space_dt = 0.01;
    double time_dt_min = 0.001;
    double time_dt_max = 0.1;
    int time_count = 8;
    double time_h = 0.01;

    std::string truncation_solution = "heat-mode";
    std::vector<double> truncation_h = {0.1, 0.05, 0.025, 0.0125};
    std::vector<double> truncation_dt = {1e-3, 5e-4, 2.5e-4};

    std::uint64_t seed = 20240601;

    static RunConfig defaults();

    FrictionMatrix mixture() const { return FrictionMatrix(friction); }
    GridSpec grid() const { return GridSpec(dim, cells, length); }

    /// Throws ConfigError (line 0) on any violated precondition.
    void validate() const;
};

RunConfig parse_config(std::istream& in, const std::string& source = "<config>");
RunConfig load_config(const std::string& path);

/// Effective configuration in the same format, numbers at 17 significant digits.
void write_config(std::ostream& out, const RunConfig& cfg);

/// "1.5", "1/0.833", "-2e-3": a number or a quotient of two numbers.
double parse_number(const std::string& text);

}  // namespace msd
