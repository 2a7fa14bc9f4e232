#include <doctest.h>

#include <sstream>

#include "msd/diagnostics.hpp"
#include "msd/initial_data.hpp"
#include "oracles.hpp"

using namespace msd;

namespace {

std::vector<StepRecord> toy_history()
{
    std::vector<StepRecord> h(3);
    h[0] = {0, 0.0, 1.0, 0.1, {}, 0.0, 0.0, 0.0, 0};
    h[1] = {1, 0.1, 0.9, 0.1, {}, 0.0, 0.0, 0.01, 2};
    h[2] = {2, 0.2, 0.85, 0.1, {}, 0.0, 0.0, 0.005, 2};
    return h;
}

}  // namespace

TEST_CASE("audit of a clean history")
{
    const AuditSummary a = audit_run(toy_history(), 0.1);
    CHECK(a.steps == 2);
    CHECK(a.energy_increase_count == 0);
    CHECK(a.certificate_violations == 0);
    CHECK(a.clean(0.1));
}

TEST_CASE("audit flags energy growth, certificate violations and negative densities")
{
    auto h = toy_history();
    h[2].energy = 0.95;
    h[1].min_density = -1e-3;
    h[1].dual_increment_sq = 0.5;
    const AuditSummary a = audit_run(h, 0.1);
    CHECK(a.energy_increase_count == 1);
    CHECK(a.certificate_violations == 2);
    CHECK(a.min_density < 0.0);
    CHECK_FALSE(a.clean(0.1));
}

TEST_CASE("zero-step audit")
{
    const GridSpec g(1, 10, 1.0);
    const SimulationState s =
        SimulationState::initialize(g, FrictionMatrix::ternary_reference(), sample_profile(ternary_1d_profile(), g));
    const AuditSummary a = audit_run(s.history(), 1e-3);
    CHECK(a.steps == 0);
    CHECK(a.max_pointwise_drift == 0.0);
    CHECK(a.max_species_drift == 0.0);
}

TEST_CASE("log-log fit")
{
    const std::vector<double> x{0.1, 0.05, 0.025, 0.0125};
    std::vector<double> y;
    for (double v : x) y.push_back(3.0 * v * v);
    const SlopeFit f = fit_loglog(x, y);
    CHECK(f.slope == doctest::Approx(2.0));
    CHECK(f.intercept == doctest::Approx(std::log(3.0)));
    CHECK(f.ci_low <= f.slope);
    CHECK(f.ci_high >= f.slope);
    CHECK_THROWS_AS(fit_loglog({0.1}, {0.2}), DomainError);
    CHECK_THROWS_AS(fit_loglog({0.1, 0.1}, {0.2, 0.3}), DomainError);
    CHECK_THROWS_AS(fit_loglog({0.1, 0.2}, {0.0, 0.3}), DomainError);
}

TEST_CASE("sweeps")
{
    const auto dts = snapped_log_sweep(0.001, 0.1, 5, 0.5);
    CHECK(dts.front() == doctest::Approx(0.1));
    CHECK(dts.back() == doctest::Approx(0.001));
    for (double v : dts) CHECK(std::abs(0.5 / v - std::round(0.5 / v)) < 1e-9);

    const auto hs = odd_cell_log_sweep(0.01, 0.2, 8, 1.0);
    CHECK(hs.size() == 8);
    for (std::size_t k = 0; k < hs.size(); ++k) {
        const int n = static_cast<int>(std::lround(1.0 / hs[k]));
        CHECK(n % 2 == 1);
        CHECK(hs[k] >= 0.01);
        CHECK(hs[k] <= 0.2);
        if (k) CHECK(hs[k] < hs[k - 1]);
    }
    CHECK(cells_for_spacing(1.0, 0.25) == 4);
    CHECK_THROWS_AS(cells_for_spacing(1.0, 0.3), DomainError);
}

TEST_CASE("reference state of the 1D mixture")
{
    const StudyProblem p = ternary_equilibrium_problem(0.5);
    CHECK(p.reference(0, 0.3, 0.0, 0.5) == doctest::Approx(0.7).epsilon(1e-13));
    CHECK(p.reference(1, 0.3, 0.0, 0.5) == doctest::Approx(1e-4).epsilon(1e-13));
    CHECK(p.reference(2, 0.3, 0.0, 0.5) == doctest::Approx(0.2999).epsilon(1e-13));
}

TEST_CASE("single-value and degenerate studies")
{
    const StudyProblem p = ternary_equilibrium_problem(0.05);
    const ConvergenceReport one = spatial_convergence(p, {0.1}, 0.01);
    CHECK(one.params.size() == 1);
    CHECK_FALSE(one.slope_linf.has_value());
    CHECK_THROWS_AS(temporal_convergence(p, {0.01, 0.01}, 0.1), DomainError);
}

TEST_CASE("spatial order on the binary heat mode")
{
    // tiny dt so the time error stays far below the spatial one
    const StudyProblem p = binary_heat_problem(1.0, 0.01);
    const ConvergenceReport r = spatial_convergence(p, {0.125, 0.0625, 1.0 / 24, 1.0 / 32}, 2.5e-6);
    REQUIRE(r.slope_linf.has_value());
    CHECK(r.slope_linf->slope >= 1.8);
    CHECK(r.slope_linf->slope <= 2.2);
}

TEST_CASE("truncation probe")
{
    const TruncationReport u = truncation_probe(manufactured_solution("uniform"), {0.1, 0.05}, {0.01});
    for (const auto& e : u.entries) {
        CHECK(e.tau1 == 0.0);
        CHECK(e.tau2 == 0.0);
        CHECK(e.tau3 == 0.0);
    }
    const auto sol = manufactured_solution("heat-mode");
    const TruncationReport t = truncation_probe(sol, {1e-3}, {1e-3, 5e-4});
    CHECK(t.entries[0].tau1 / t.entries[1].tau1 == doctest::Approx(2.0).epsilon(0.15));
    const TruncationReport s = truncation_probe(sol, {0.1, 0.05}, {1e-9});
    CHECK(s.entries[0].tau2 / s.entries[1].tau2 == doctest::Approx(4.0).epsilon(0.125));
    CHECK_THROWS(manufactured_solution("nope"));
}

TEST_CASE("csv writers")
{
    std::ostringstream os;
    write_history_csv(os, toy_history());
    CHECK(os.str().rfind("step,time,energy,min_rho,mass_drift_pointwise,mass_drift_species,dual_increment_sq\n", 0) == 0);
    ConvergenceReport r;
    r.params = {0.1};
    r.err_linf = {1.0 / 3};
    r.err_l2 = {0.25};
    std::ostringstream cs;
    write_convergence_csv(cs, r);
    CHECK(cs.str() == "param,err_linf,err_l2\n0.10000000000000001,0.33333333333333331,0.25\n");
}
