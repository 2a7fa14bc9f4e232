#include "msd/verification.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "msd/diagnostics.hpp"
#include "msd/entropy.hpp"
#include "msd/initial_data.hpp"
#include "msd/stepper.hpp"

namespace msd {

Eigen::VectorXd friction_fluxes_direct(std::span<const double> rho_hat, const FrictionMatrix& b,
                                       std::span<const double> potential_gradient)
{
    const int n = b.species();
    if (static_cast<int>(rho_hat.size()) != n || static_cast<int>(potential_gradient.size()) != n)
        throw DimensionError("friction_fluxes_direct: size mismatch");
    double total = 0.0, weighted = 0.0;
    for (int j = 0; j < n; ++j) {
        total += rho_hat[j];
        weighted += rho_hat[j] * potential_gradient[j];
    }
    // rows 0..n-1: -sum_j b_ij r_j (v_i - v_j) = G_i - weighted/total; row n: sum r_j v_j = 0
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n + 1, n);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            a(i, i) -= b(i, j) * rho_hat[j];
            a(i, j) += b(i, j) * rho_hat[j];
        }
        rhs(i) = potential_gradient[i] - weighted / total;
        a(n, i) = rho_hat[i];
    }
    const Eigen::VectorXd v = a.colPivHouseholderQr().solve(rhs);
    Eigen::VectorXd flux(n);
    for (int i = 0; i < n; ++i) flux(i) = rho_hat[i] * v(i);
    return flux;
}

HeatOracleStudy heat_oracle_study(double b12, double t_final)
{
    const StudyProblem problem = binary_heat_problem(b12, t_final);
    HeatOracleStudy study;
    const StepConfig base;
    for (int cells : {10, 20, 40, 80}) {
        const double h = problem.length / cells;
        const double dt = h * h;
        const int steps = static_cast<int>(std::lround(t_final / dt));
        const RunErrors err = run_and_measure(problem, cells, steps, base);
        study.h.push_back(h);
        study.dt.push_back(t_final / steps);
        study.err_linf.push_back(err.linf);
    }
    const double c0 = study.err_linf[0] / (study.dt[0] + study.h[0] * study.h[0]);
    const double c1 = study.err_linf[1] / (study.dt[1] + study.h[1] * study.h[1]);
    study.fitted_constant = 0.5 * (c0 + c1);
    for (std::size_t k = 0; k < study.h.size(); ++k)
        study.ratios.push_back(study.err_linf[k] / (study.dt[k] + study.h[k] * study.h[k]) / study.fitted_constant);
    return study;
}

namespace {

using Rng = std::mt19937_64;

double uniform(Rng& rng, double lo, double hi)
{
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Positive point on the simplex; components log-uniform in [1e-3, 1] before normalising.
std::vector<double> random_simplex_point(Rng& rng, int n)
{
    std::vector<double> r(static_cast<std::size_t>(n));
    double s = 0.0;
    for (double& v : r) {
        v = std::pow(10.0, uniform(rng, -3.0, 0.0));
        s += v;
    }
    for (double& v : r) v /= s;
    return r;
}

FrictionMatrix random_friction(Rng& rng, int n)
{
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) b(i, j) = b(j, i) = uniform(rng, 0.2, 8.0);
    return FrictionMatrix(b);
}

CellField random_cells(Rng& rng, const GridSpec& grid, int species)
{
    CellField f(grid, species);
    for (double& v : f.raw()) v = uniform(rng, -1.0, 1.0);
    return f;
}

EdgeField random_edges(Rng& rng, const GridSpec& grid, int species)
{
    EdgeField f(grid, species);
    for (double& v : f.raw()) v = uniform(rng, -1.0, 1.0);
    return f;
}

CellField random_state(Rng& rng, const GridSpec& grid, int n)
{
    CellField rho(grid, n);
    for (std::size_t c = 0; c < grid.cell_count(); ++c) {
        const std::vector<double> p = random_simplex_point(rng, n);
        for (int i = 0; i < n; ++i) rho(i, c) = p[i];
    }
    return rho;
}

std::string fmt(double v)
{
    std::ostringstream os;
    os.precision(3);
    os << v;
    return os.str();
}

PropertyCheck at_most(std::string name, double measured, double threshold, std::string detail = {})
{
    return {std::move(name), measured <= threshold, measured, threshold, std::move(detail)};
}

PropertyCheck check_sbp(Rng& rng, int dim, int trials)
{
    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
        const GridSpec grid(dim, dim == 1 ? 32 : 12, 1.0);
        const CellField f = random_cells(rng, grid, 2);
        const EdgeField phi = random_edges(rng, grid, 2);
        const double lhs = inner_cells(f, divergence_to_cells(phi, grid), grid);
        const double rhs = inner_edges(gradient_to_edges(f, grid), phi, grid);
        const double scale = std::sqrt(inner_cells(f, f, grid) * inner_edges(phi, phi, grid));
        worst = std::max(worst, std::abs(lhs + rhs) / scale);
    }
    return at_most("summation_by_parts_" + std::to_string(dim) + "d", worst, 1e-13,
                   std::to_string(trials) + " random pairs");
}

PropertyCheck check_q_inverse(Rng& rng)
{
    double worst = 0.0;
    for (int t = 0; t < 300; ++t) {
        const int n = 2 + t % 3;
        const std::vector<double> r = random_simplex_point(rng, n);
        const Eigen::MatrixXd prod = assemble_Q(r) * assemble_Qinv(r);
        worst = std::max(worst, (prod - Eigen::MatrixXd::Identity(n - 1, n - 1)).cwiseAbs().maxCoeff());
    }
    return at_most("q_times_qinv_identity", worst, 1e-12, "n in {2,3,4}");
}

PropertyCheck check_spd(Rng& rng)
{
    double worst_asym = 0.0;
    double min_eig = std::numeric_limits<double>::infinity();
    for (int t = 0; t < 300; ++t) {
        const int n = 2 + t % 3;
        const FrictionMatrix b = random_friction(rng, n);
        const Eigen::MatrixXd d = diffusion_matrix(random_simplex_point(rng, n), b);
        worst_asym = std::max(worst_asym, (d - d.transpose()).cwiseAbs().maxCoeff() / d.cwiseAbs().maxCoeff());
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(d);
        min_eig = std::min(min_eig, eig.eigenvalues().minCoeff() / eig.eigenvalues().maxCoeff());
    }
    PropertyCheck c = at_most("diffusion_matrix_spd", worst_asym, 1e-14, "min eigenvalue ratio " + fmt(min_eig));
    c.passed = c.passed && min_eig > 0.0;
    return c;
}

PropertyCheck check_friction_oracle(Rng& rng)
{
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
        const int n = 2 + t % 3;
        const FrictionMatrix b = random_friction(rng, n);
        const std::vector<double> r = random_simplex_point(rng, n);
        std::vector<double> grad(static_cast<std::size_t>(n));
        for (double& g : grad) g = uniform(rng, -5.0, 5.0);

        const Eigen::VectorXd direct = friction_fluxes_direct(r, b, grad);
        const Eigen::MatrixXd d = diffusion_matrix(r, b);
        Eigen::VectorXd reduced_grad(n - 1);
        for (int i = 0; i < n - 1; ++i) reduced_grad(i) = grad[i] - grad[n - 1];
        Eigen::VectorXd flux(n);
        flux.head(n - 1) = -d * reduced_grad;
        flux(n - 1) = -flux.head(n - 1).sum();
        worst = std::max(worst, (flux - direct).cwiseAbs().maxCoeff() / direct.cwiseAbs().maxCoeff());
    }
    return at_most("diffusion_matrix_vs_friction_solve", worst, 1e-10, "1000 random states, n in {2,3,4}");
}

PropertyCheck check_binary_closed_form(Rng& rng)
{
    double worst = 0.0;
    for (int t = 0; t < 200; ++t) {
        const double b12 = uniform(rng, 0.1, 10.0);
        const std::vector<double> r = random_simplex_point(rng, 2);
        const double expect = r[0] * r[1] / b12;
        worst = std::max(worst, std::abs(diffusion_matrix(r, FrictionMatrix::binary(b12))(0, 0) - expect) / expect);
    }
    return at_most("binary_closed_form", worst, 1e-13);
}

PropertyCheck check_dual_norm(Rng& rng)
{
    double worst = 0.0;
    for (int dim = 1; dim <= 2; ++dim)
        for (int n = 2; n <= 4; ++n) {
            const GridSpec grid(dim, dim == 1 ? 24 : 8, 1.0);
            const FrictionMatrix b = random_friction(rng, n);
            const EdgeDiffusionTensor d = assemble_D_hat(random_state(rng, grid, n), b, grid);
            CellField g = random_cells(rng, grid, n - 1);
            project_mean_zero(g);
            const DualNormRoutes routes = dual_norm_sq_routes(d, g, grid, 1e-13);
            worst = std::max(worst, std::abs(routes.flux_form - routes.pairing_form) / std::abs(routes.pairing_form));
        }
    return at_most("dual_norm_two_routes", worst, 1e-10, "1D and 2D, n in {2,3,4}");
}

PropertyCheck check_self_adjoint(Rng& rng)
{
    double worst = 0.0;
    for (int dim = 1; dim <= 2; ++dim) {
        const GridSpec grid(dim, dim == 1 ? 24 : 8, 1.0);
        const FrictionMatrix b = random_friction(rng, 3);
        const EdgeDiffusionTensor d = assemble_D_hat(random_state(rng, grid, 3), b, grid);
        const CellField f = random_cells(rng, grid, 2);
        const CellField g = random_cells(rng, grid, 2);
        const double a = inner_cells(apply_L_Phi(d, f, grid), g, grid);
        const double c = inner_cells(f, apply_L_Phi(d, g, grid), grid);
        worst = std::max(worst, std::abs(a - c) / std::max(std::abs(a), std::abs(c)));
    }
    return at_most("operator_self_adjoint", worst, 1e-12);
}

PropertyCheck check_entropy_gradient(Rng& rng)
{
    const GridSpec grid(1, 16, 1.0);
    const CellField rho = random_state(rng, grid, 3);
    const std::vector<double> total = pointwise_total(rho);
    const CellField rt = reduced(rho);
    const CellField grad = entropy_grad_reduced(rt, total, grid);
    double worst = 0.0;
    for (int i = 0; i < rt.species(); ++i)
        for (std::size_t c = 0; c < grid.cell_count(); ++c) {
            const double eps = 1e-4 * std::min(rt(i, c), rho(rho.species() - 1, c));
            CellField up = rt, down = rt;
            up(i, c) += eps;
            down(i, c) -= eps;
            const double fd = (entropy_reduced(up, total, grid) - entropy_reduced(down, total, grid)) / (2.0 * eps);
            const double exact = grad(i, c) * grid.cell_volume();
            worst = std::max(worst, std::abs(fd - exact) / std::max(std::abs(exact), 1.0));
        }
    return at_most("entropy_gradient_finite_difference", worst, 1e-6);
}

PropertyCheck check_minimizer(Rng& rng)
{
    const GridSpec grid(1, 50, 1.0);
    const FrictionMatrix b = FrictionMatrix::ternary_reference();
    const CellField rho0 = sample_profile(ternary_1d_profile(), grid);
    const std::vector<double> total = pointwise_total(rho0);
    const StepConfig cfg;
    const EdgeDiffusionTensor d = assemble_D_hat(rho0, b, grid);
    const NewtonOutcome star = newton_solve(rho0, d, grid, cfg, total);
    const double j_star = step_objective(star.rho_reduced, rho0, d, grid, cfg.dt, total, 1e-13);

    double worst = std::numeric_limits<double>::infinity();
    for (int t = 0; t < 100; ++t) {
        const double scale = std::pow(10.0, -1.0 - t % 4);
        CellField delta = random_cells(rng, grid, star.rho_reduced.species());
        project_mean_zero(delta);
        // keep every density (including the recovered last one) positive
        double limit = 1.0;
        for (std::size_t c = 0; c < grid.cell_count(); ++c) {
            double sum_delta = 0.0, sum_rho = 0.0;
            for (int i = 0; i < delta.species(); ++i) {
                limit = std::min(limit, star.rho_reduced(i, c) / std::abs(delta(i, c)));
                sum_delta += delta(i, c);
                sum_rho += star.rho_reduced(i, c);
            }
            limit = std::min(limit, (total[c] - sum_rho) / std::abs(sum_delta));
        }
        CellField trial = star.rho_reduced;
        for (std::size_t k = 0; k < trial.raw().size(); ++k) trial.raw()[k] += 0.5 * scale * limit * delta.raw()[k];
        const double j = step_objective(trial, rho0, d, grid, cfg.dt, total, 1e-13);
        worst = std::min(worst, j - j_star);
    }
    return {"minimizer_sampling", worst >= -1e-9, worst, -1e-9, "min of J(perturbed) - J(step), 100 samples"};
}

PropertyCheck check_heat_oracle()
{
    const HeatOracleStudy s = heat_oracle_study();
    double worst_bound = 0.0;
    for (std::size_t k = 0; k < s.h.size(); ++k)
        worst_bound = std::max(worst_bound, s.err_linf[k] / (5.0 * (s.dt[k] + s.h[k] * s.h[k]) * s.fitted_constant));
    bool stable = true;
    for (std::size_t k = 2; k < s.ratios.size(); ++k) stable = stable && std::abs(s.ratios[k] - 1.0) <= 0.5;
    std::string detail = "C=" + fmt(s.fitted_constant) + " ratios";
    for (double r : s.ratios) detail += " " + fmt(r);
    PropertyCheck c = at_most("binary_heat_oracle", worst_bound, 1.0, detail);
    c.passed = c.passed && stable;
    return c;
}

std::vector<PropertyCheck> check_truncation()
{
    const ManufacturedSolution sol = manufactured_solution("heat-mode");
    const TruncationReport time_pair = truncation_probe(sol, {1e-3}, {1e-3, 5e-4});
    const TruncationReport space_pair = truncation_probe(sol, {0.1, 0.05}, {1e-9});
    const double r1 = time_pair.entries[0].tau1 / time_pair.entries[1].tau1;
    const double r2 = space_pair.entries[0].tau2 / space_pair.entries[1].tau2;
    const TruncationReport fixed = truncation_probe(manufactured_solution("uniform"), {0.1}, {0.01});
    const TruncationEntry& u = fixed.entries.front();
    return {
        {"truncation_tau1_dt_halving", r1 >= 1.7 && r1 <= 2.3, r1, 2.0, "accepted range [1.7, 2.3]"},
        {"truncation_tau2_h_halving", r2 >= 3.5 && r2 <= 4.5, r2, 4.0, "accepted range [3.5, 4.5]"},
        at_most("truncation_uniform_state", std::max({u.tau1, u.tau2, u.tau3}), 0.0),
    };
}

}  // namespace

std::vector<PropertyCheck> run_invariant_suite(std::uint64_t seed)
{
    Rng rng(seed);
    std::vector<PropertyCheck> out;
    out.push_back(check_sbp(rng, 1, 100));
    out.push_back(check_sbp(rng, 2, 100));
    out.push_back(check_q_inverse(rng));
    out.push_back(check_spd(rng));
    out.push_back(check_friction_oracle(rng));
    out.push_back(check_binary_closed_form(rng));
    out.push_back(check_dual_norm(rng));
    out.push_back(check_self_adjoint(rng));
    out.push_back(check_entropy_gradient(rng));
    out.push_back(check_minimizer(rng));
    out.push_back(check_heat_oracle());
    for (PropertyCheck& c : check_truncation()) out.push_back(std::move(c));
    return out;
}

}  // namespace msd
