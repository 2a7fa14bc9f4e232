// Acceptance checks 1-8. Prints one PASS/FAIL line each; exits nonzero when a
// check fails unless its number was passed via --allow-fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "msd/diagnostics.hpp"
#include "msd/entropy.hpp"
#include "msd/initial_data.hpp"
#include "msd/stepper.hpp"
#include "oracles.hpp"

using namespace msd;

namespace {

struct Outcome {
    bool pass = false;
    std::string summary;
};

std::string str(double v)
{
    std::ostringstream os;
    os.precision(4);
    os << v;
    return os.str();
}

// Equilibrium of the 1D ternary data: the cell means 0.7 and 1e-4 and their closure.
const double kEquilibrium[3] = {0.7, 1e-4, 1.0 - 0.7 - 1e-4};

SimulationState run(int dim, int cells, const InitialProfile& p, const FrictionMatrix& b, double dt, int steps)
{
    const GridSpec g(dim, cells, 1.0);
    StepConfig cfg;
    cfg.dt = dt;
    return advance(SimulationState::initialize(g, b, sample_profile(p, g)), cfg, steps);
}

struct RunChecks {
    int energy_increases = 0;
    double min_density = 1.0;
    double pointwise_drift = 0.0;
    double species_drift = 0.0;
    double energy_mismatch = 0.0;
};

RunChecks inspect(const SimulationState& s)
{
    RunChecks c;
    const auto& h = s.history();
    for (std::size_t k = 0; k < h.size(); ++k) {
        c.min_density = std::min(c.min_density, h[k].min_density);
        c.pointwise_drift = std::max(c.pointwise_drift, h[k].mass_drift_pointwise);
        c.species_drift = std::max(c.species_drift, h[k].mass_drift_species);
        if (k && h[k].energy > h[k - 1].energy + 1e-10) ++c.energy_increases;
    }
    // independent look at the final field
    const GridSpec& g = s.grid();
    std::vector<std::vector<double>> cols;
    for (int i = 0; i < s.rho().species(); ++i) {
        cols.emplace_back(s.rho().component(i).begin(), s.rho().component(i).end());
        double sum = 0.0;
        for (double v : cols.back()) {
            sum += v;
            c.min_density = std::min(c.min_density, v);
        }
        c.species_drift = std::max(c.species_drift, std::abs(sum - h.front().species_sum[i]));
    }
    for (std::size_t cell = 0; cell < g.cell_count(); ++cell) {
        double sum = 0.0;
        for (const auto& col : cols) sum += col[cell];
        c.pointwise_drift = std::max(c.pointwise_drift, std::abs(sum - s.initial_total()[cell]));
    }
    c.energy_mismatch = std::abs(oracle::entropy_loop(cols, g.cell_volume()) - h.back().energy);
    return c;
}

Outcome check_1d_run()
{
    const SimulationState s = run(1, 100, ternary_1d_profile(), FrictionMatrix::ternary_reference(), 1e-3, 500);
    const RunChecks c = inspect(s);
    const bool pass = s.step_index() == 500 && c.energy_increases == 0 && c.min_density > 0.0 &&
                      c.pointwise_drift <= 1e-10 && c.species_drift <= 1e-10 && c.energy_mismatch <= 1e-12;
    return {pass, "h=0.01 dt=0.001 500 steps: energy increases " + std::to_string(c.energy_increases) +
                      ", min rho " + str(c.min_density) + ", drift " + str(c.pointwise_drift) + " / " +
                      str(c.species_drift)};
}

double equilibrium_error(const SimulationState& s)
{
    double err = 0.0;
    for (int i = 0; i < 3; ++i)
        for (double v : s.rho().component(i)) err = std::max(err, std::abs(v - kEquilibrium[i]));
    return err;
}

Outcome check_space_order()
{
    const std::vector<double> hs = odd_cell_log_sweep(0.01, 0.2, 8, 1.0);
    std::vector<double> errs;
    for (double h : hs) {
        const int cells = static_cast<int>(std::lround(1.0 / h));
        errs.push_back(equilibrium_error(
            run(1, cells, ternary_1d_profile(), FrictionMatrix::ternary_reference(), 0.01, 50)));
    }
    const SlopeFit f = fit_loglog(hs, errs);
    return {hs.size() >= 4 && f.slope >= 1.7 && f.slope <= 2.3,
            std::to_string(hs.size()) + " odd-N spacings in [0.01, 0.2], dt=0.01, t=0.5: L-inf slope " + str(f.slope)};
}

Outcome check_time_order()
{
    const std::vector<double> dts = snapped_log_sweep(0.001, 0.1, 8, 0.5);
    std::vector<double> errs;
    for (double dt : dts) {
        const int steps = static_cast<int>(std::lround(0.5 / dt));
        errs.push_back(
            equilibrium_error(run(1, 100, ternary_1d_profile(), FrictionMatrix::ternary_reference(), dt, steps)));
    }
    const SlopeFit f = fit_loglog(dts, errs);
    return {f.slope >= 0.8 && f.slope <= 1.2,
            std::to_string(dts.size()) + " steps in [0.001, 0.1], h=0.01, t=0.5: L-inf slope " + str(f.slope) +
                " (errors " + str(errs.front()) + " .. " + str(errs.back()) + ")"};
}

Outcome check_2d_run()
{
    const SimulationState s = run(2, 20, radial_2d_profile(), FrictionMatrix::ternary_reference(), 1e-3, 500);
    const RunChecks c = inspect(s);
    const bool pass = s.step_index() == 500 && c.energy_increases == 0 && c.min_density > 0.0 &&
                      c.pointwise_drift <= 1e-10 && c.species_drift <= 1e-10;
    return {pass, "h=0.05 dt=0.001 500 steps: energy increases " + std::to_string(c.energy_increases) +
                      ", min rho " + str(c.min_density) + ", drift " + str(c.pointwise_drift) + " / " +
                      str(c.species_drift)};
}

Outcome check_heat_oracle()
{
    const double t = 0.1;
    std::vector<double> scale, err;
    for (int cells : {10, 20, 40, 80}) {
        const double h = 1.0 / cells;
        const int steps = static_cast<int>(std::lround(t / (h * h)));
        const double dt = t / steps;
        const SimulationState s = run(1, cells, two_species_cosine_profile(0.1, 1.0), FrictionMatrix::binary(1.0), dt,
                                      steps);
        double e = 0.0;
        for (std::size_t c = 0; c < s.grid().cell_count(); ++c) {
            const double ref = oracle::heat_mode(s.grid().cell_center(c, 0), t, 1.0);
            e = std::max({e, std::abs(s.rho()(0, c) - ref), std::abs(s.rho()(1, c) - (1.0 - ref))});
        }
        scale.push_back(dt + h * h);
        err.push_back(e);
    }
    const double C = 0.5 * (err[0] / scale[0] + err[1] / scale[1]);
    bool pass = true;
    std::string ratios;
    for (std::size_t k = 0; k < err.size(); ++k) {
        const double r = err[k] / (scale[k] * C);
        pass = pass && err[k] <= 5.0 * scale[k] * C;
        if (k >= 2) pass = pass && std::abs(r - 1.0) <= 0.5;
        ratios += " " + str(r);
    }
    return {pass, "N=10..80, dt=h^2, t=0.1: C=" + str(C) + ", err/(C(dt+h^2)):" + ratios};
}

Outcome check_friction_oracle()
{
    std::mt19937_64 rng(4242);
    std::uniform_real_distribution<double> logu(-3.0, 0.0), bu(0.2, 8.0), gu(-5.0, 5.0);
    double worst = 0.0;
    int states = 0;
    for (int n = 2; n <= 4; ++n) {
        const int cells = n == 2 ? 334 : 333;
        const GridSpec g(1, cells, 1.0);
        Eigen::MatrixXd bm = Eigen::MatrixXd::Zero(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) bm(i, j) = bm(j, i) = bu(rng);
        CellField rho(g, n);
        for (std::size_t c = 0; c < g.cell_count(); ++c) {
            double sum = 0.0;
            for (int i = 0; i < n; ++i) sum += (rho(i, c) = std::pow(10.0, logu(rng)));
            for (int i = 0; i < n; ++i) rho(i, c) /= sum;
        }
        const EdgeDiffusionTensor d = assemble_D_hat(rho, FrictionMatrix(bm), g);
        for (std::size_t e = 0; e < g.cell_count(); ++e, ++states) {
            const std::size_t next = (e + 1) % g.cell_count();
            std::vector<double> r(n), grad(n);
            for (int i = 0; i < n; ++i) {
                r[i] = 0.5 * (rho(i, e) + rho(i, next));
                grad[i] = gu(rng);
            }
            const Eigen::VectorXd ref = oracle::friction_fluxes(r, bm, grad);
            Eigen::VectorXd reduced_grad(n - 1);
            for (int i = 0; i < n - 1; ++i) reduced_grad(i) = grad[i] - grad[n - 1];
            Eigen::VectorXd flux(n);
            flux.head(n - 1) = -d.at(0, e) * reduced_grad;
            flux(n - 1) = -flux.head(n - 1).sum();
            worst = std::max(worst, (flux - ref).cwiseAbs().maxCoeff() / ref.cwiseAbs().maxCoeff());
        }
    }
    return {states == 1000 && worst <= 1e-10,
            std::to_string(states) + " edge states, n in {2,3,4}: max relative flux discrepancy " + str(worst)};
}

Outcome check_invariants()
{
    std::mt19937_64 rng(777);
    std::uniform_real_distribution<double> u(-1.0, 1.0), pos(0.05, 1.0);

    double sbp = 0.0;
    for (int dim = 1; dim <= 2; ++dim)
        for (int t = 0; t < 100; ++t) {
            const GridSpec g(dim, dim == 1 ? 40 : 10, 1.0);
            CellField f(g, 2);
            EdgeField phi(g, 2);
            for (double& v : f.raw()) v = u(rng);
            for (double& v : phi.raw()) v = u(rng);
            const double a = inner_cells(f, divergence_to_cells(phi, g), g);
            const double b = inner_edges(gradient_to_edges(f, g), phi, g);
            sbp = std::max(sbp, std::abs(a + b) / std::sqrt(inner_cells(f, f, g) * inner_edges(phi, phi, g)));
        }

    double qq = 0.0;
    for (int t = 0; t < 300; ++t) {
        const int n = 2 + t % 3;
        std::vector<double> r(n);
        double s = 0.0;
        for (double& v : r) s += (v = pos(rng));
        for (double& v : r) v /= s;
        qq = std::max(qq, (assemble_Q(r) * assemble_Qinv(r) - Eigen::MatrixXd::Identity(n - 1, n - 1))
                              .cwiseAbs()
                              .maxCoeff());
    }

    const FrictionMatrix b3 = FrictionMatrix::ternary_reference();
    double dual = 0.0;
    for (int dim = 1; dim <= 2; ++dim) {
        const GridSpec g(dim, dim == 1 ? 30 : 8, 1.0);
        CellField rho(g, 3);
        for (std::size_t c = 0; c < g.cell_count(); ++c) {
            double s = 0.0;
            for (int i = 0; i < 3; ++i) s += (rho(i, c) = pos(rng));
            for (int i = 0; i < 3; ++i) rho(i, c) /= s;
        }
        const EdgeDiffusionTensor d = assemble_D_hat(rho, b3, g);
        CellField rhs(g, 2);
        for (double& v : rhs.raw()) v = u(rng);
        project_mean_zero(rhs);
        const DualNormRoutes routes = dual_norm_sq_routes(d, rhs, g, 1e-13);
        dual = std::max(dual, std::abs(routes.flux_form - routes.pairing_form) / routes.pairing_form);
    }

    const GridSpec g(1, 50, 1.0);
    const CellField rho0 = sample_profile(ternary_1d_profile(), g);
    const std::vector<double> total = pointwise_total(rho0);
    const CellField rt0 = reduced(rho0);
    const CellField grad = entropy_grad_reduced(rt0, total, g);
    double fd = 0.0;
    for (int i = 0; i < 2; ++i)
        for (std::size_t c = 0; c < g.cell_count(); ++c) {
            const double eps = 1e-4 * std::min(rt0(i, c), total[c] - rt0(0, c) - rt0(1, c));
            CellField up = rt0, dn = rt0;
            up(i, c) += eps;
            dn(i, c) -= eps;
            const double num = (entropy_reduced(up, total, g) - entropy_reduced(dn, total, g)) / (2 * eps);
            const double exact = grad(i, c) * g.cell_volume();
            fd = std::max(fd, std::abs(num - exact) / std::max(1.0, std::abs(exact)));
        }

    const StepConfig cfg;
    const EdgeDiffusionTensor d = assemble_D_hat(rho0, b3, g);
    const NewtonOutcome star = newton_solve(rho0, d, g, cfg, total);
    const double j_star = step_objective(star.rho_reduced, rho0, d, g, cfg.dt, total, 1e-13);
    double worst_drop = 0.0;
    for (int t = 0; t < 100; ++t) {
        CellField delta(g, 2);
        for (double& v : delta.raw()) v = u(rng);
        project_mean_zero(delta);
        double limit = 1.0;
        for (std::size_t c = 0; c < g.cell_count(); ++c) {
            const double third = total[c] - star.rho_reduced(0, c) - star.rho_reduced(1, c);
            limit = std::min({limit, star.rho_reduced(0, c) / std::abs(delta(0, c)),
                              star.rho_reduced(1, c) / std::abs(delta(1, c)),
                              third / std::abs(delta(0, c) + delta(1, c))});
        }
        CellField trial = star.rho_reduced;
        const double amp = 0.5 * limit * std::pow(10.0, -(t % 5));
        for (std::size_t k = 0; k < trial.raw().size(); ++k) trial.raw()[k] += amp * delta.raw()[k];
        worst_drop = std::max(worst_drop, j_star - step_objective(trial, rho0, d, g, cfg.dt, total, 1e-13));
    }

    const bool pass = sbp <= 1e-13 && qq <= 1e-12 && dual <= 1e-10 && fd <= 1e-6 && worst_drop <= 1e-9;
    return {pass, "sbp " + str(sbp) + ", QQ^-1-I " + str(qq) + ", dual routes " + str(dual) + ", entropy fd " +
                      str(fd) + ", max J decrease " + str(worst_drop)};
}

Outcome check_truncation()
{
    const ManufacturedSolution sol = manufactured_solution("heat-mode");
    const TruncationReport tr = truncation_probe(sol, {1e-3}, {1e-3, 5e-4});
    const TruncationReport sr = truncation_probe(sol, {0.1, 0.05}, {1e-9});
    const double r1 = tr.entries[0].tau1 / tr.entries[1].tau1;
    const double r2 = sr.entries[0].tau2 / sr.entries[1].tau2;
    return {r1 >= 1.7 && r1 <= 2.3 && r2 >= 3.5 && r2 <= 4.5,
            "tau1 ratio (dt 1e-3 -> 5e-4, h=1e-3) " + str(r1) + ", tau2 ratio (h 0.1 -> 0.05, dt=1e-9) " + str(r2)};
}

}  // namespace

int main(int argc, char** argv)
{
    std::set<int> allowed;
    for (int k = 1; k < argc; ++k)
        if (std::strcmp(argv[k], "--allow-fail") == 0 && k + 1 < argc) allowed.insert(std::atoi(argv[++k]));

    const std::pair<const char*, std::function<Outcome()>> checks[] = {
        {"1D ternary run", check_1d_run},
        {"spatial order", check_space_order},
        {"temporal order", check_time_order},
        {"2D ternary run", check_2d_run},
        {"binary heat oracle", check_heat_oracle},
        {"friction oracle", check_friction_oracle},
        {"invariant suite", check_invariants},
        {"truncation ratios", check_truncation},
    };
    int unexpected = 0;
    for (int k = 0; k < 8; ++k) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = checks[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool tolerated = !o.pass && allowed.count(k + 1);
        std::printf("%s  %d  %-20s %s  [%.1fs]%s\n", o.pass ? "PASS" : "FAIL", k + 1, checks[k].first,
                    o.summary.c_str(), secs, tolerated ? "  (failure tolerated by --allow-fail)" : "");
        std::fflush(stdout);
        if (!o.pass && !tolerated) ++unexpected;
    }
    return unexpected == 0 ? 0 : 1;
}
