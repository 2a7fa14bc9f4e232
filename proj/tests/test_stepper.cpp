#include <doctest.h>

#include <cmath>

#include "msd/diagnostics.hpp"
#include "msd/initial_data.hpp"
#include "msd/stepper.hpp"
#include "oracles.hpp"

using namespace msd;

namespace {

CellField uniform_state(const GridSpec& g, std::vector<double> r)
{
    CellField rho(g, static_cast<int>(r.size()));
    for (int i = 0; i < rho.species(); ++i)
        for (std::size_t c = 0; c < g.cell_count(); ++c) rho(i, c) = r[i];
    return rho;
}

}  // namespace

TEST_CASE("step configuration validation")
{
    StepConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.dt = 0.0;
    CHECK_THROWS_AS(cfg.validate(), DomainError);
    cfg.dt = 1e-3;
    cfg.interior_margin = 1.0;
    CHECK_THROWS_AS(cfg.validate(), DomainError);
}

TEST_CASE("uniform states are fixed points")
{
    const GridSpec g(1, 8, 1.0);
    const FrictionMatrix b = FrictionMatrix::ternary_reference();
    const CellField rho = uniform_state(g, {0.2, 0.3, 0.5});
    const EdgeDiffusionTensor d = assemble_D_hat(rho, b, g);
    const std::vector<double> total = pointwise_total(rho);
    const CellField r = scheme_residual(reduced(rho), rho, d, g, 1e-3, total);
    for (double v : r.raw()) CHECK(std::abs(v) <= 1e-13);

    StepConfig cfg;
    const NewtonOutcome out = newton_solve(rho, d, g, cfg, total);
    CHECK(out.iterations <= 1);
    for (std::size_t k = 0; k < out.rho_reduced.raw().size(); ++k)
        CHECK(out.rho_reduced.raw()[k] == doctest::Approx(reduced(rho).raw()[k]).epsilon(1e-14));

    const EdgeField v = recover_velocities(rho, rho, d, g);
    for (double x : v.raw()) CHECK(x == 0.0);
}

TEST_CASE("a step solves the scheme and conserves mass")
{
    const GridSpec g(1, 40, 1.0);
    const FrictionMatrix b = FrictionMatrix::ternary_reference();
    const CellField rho0 = sample_profile(ternary_1d_profile(), g);
    const std::vector<double> total = pointwise_total(rho0);
    StepConfig cfg;
    cfg.dt = 5e-3;
    const StepResult s = take_step(rho0, b, g, cfg, total);

    const EdgeDiffusionTensor d = assemble_D_hat(rho0, b, g);
    const CellField r = scheme_residual(reduced(s.rho_next), rho0, d, g, cfg.dt, total);
    double worst = 0.0;
    for (double v : r.raw()) worst = std::max(worst, std::abs(v));
    CHECK(worst <= cfg.newton_tol);

    const auto before = species_sums(rho0);
    const auto after = species_sums(s.rho_next);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(after[i] - before[i]) <= 1e-12);
    for (std::size_t c = 0; c < g.cell_count(); ++c) {
        double sum = 0.0;
        for (int i = 0; i < 3; ++i) {
            CHECK(s.rho_next(i, c) > 0.0);
            sum += s.rho_next(i, c);
        }
        CHECK(std::abs(sum - total[c]) <= 1e-15);
    }
    CHECK(s.energy_next + s.dual_increment_sq / (2 * cfg.dt) <= entropy_full(rho0, g) + 1e-12);
}

TEST_CASE("velocities reproduce the mass update and carry no momentum")
{
    const GridSpec g(1, 24, 1.0);
    const FrictionMatrix b = FrictionMatrix::ternary_reference();
    const CellField rho0 = sample_profile(ternary_1d_profile(), g);
    StepConfig cfg;
    cfg.dt = 2e-3;
    const StepResult s = take_step(rho0, b, g, cfg, pointwise_total(rho0));
    const EdgeField avg = average_to_edges(rho0, g);
    EdgeField flux(g, 3);
    for (std::size_t k = 0; k < flux.raw().size(); ++k) flux.raw()[k] = avg.raw()[k] * s.velocities.raw()[k];
    const CellField div = divergence_to_cells(flux, g);
    for (int i = 0; i < 3; ++i)
        for (std::size_t c = 0; c < g.cell_count(); ++c)
            CHECK((s.rho_next(i, c) - rho0(i, c)) / cfg.dt + div(i, c) == doctest::Approx(0.0).epsilon(1e-8).scale(1.0));
    for (std::size_t e = 0; e < g.cell_count(); ++e) {
        double m = 0.0;
        for (int i = 0; i < 3; ++i) m += avg(i, 0, e) * s.velocities(i, 0, e);
        CHECK(std::abs(m) <= 1e-10);
    }
}

TEST_CASE("simulation state and time loop")
{
    const GridSpec g(1, 20, 1.0);
    const FrictionMatrix b = FrictionMatrix::ternary_reference();
    CellField rho0 = sample_profile(ternary_1d_profile(), g);
    const SimulationState s0 = SimulationState::initialize(g, b, rho0);
    REQUIRE(s0.history().size() == 1);
    CHECK(s0.history()[0].mass_drift_pointwise == 0.0);

    StepConfig cfg;
    const SimulationState same = advance(s0, cfg, 0);
    CHECK(same.rho().raw() == s0.rho().raw());
    CHECK(same.time() == 0.0);

    int calls = 0;
    const SimulationState s5 = advance(s0, cfg, 5, [&](const SimulationState&) { ++calls; });
    CHECK(calls == 5);
    CHECK(s5.step_index() == 5);
    CHECK(s5.time() == doctest::Approx(5e-3));
    CHECK(s5.history().size() == 6);
    CHECK(s0.step_index() == 0);

    CellField bad = rho0;
    bad(0, 3) += 0.01;
    CHECK_THROWS_AS(SimulationState::initialize(g, b, bad), DomainError);
    bad(0, 3) = 0.0;
    bad(2, 3) = 1.0 - bad(1, 3);
    CHECK_THROWS_AS(SimulationState::initialize(g, b, bad), DomainError);
    CHECK_THROWS_AS(SimulationState::initialize(g, FrictionMatrix::binary(1.0), rho0), DimensionError);
}

TEST_CASE("failing solves leave the state untouched")
{
    const GridSpec g(1, 20, 1.0);
    const SimulationState s0 =
        SimulationState::initialize(g, FrictionMatrix::ternary_reference(), sample_profile(ternary_1d_profile(), g));
    StepConfig cfg;
    cfg.max_newton_iters = 1;
    cfg.newton_tol = 1e-30;
    CHECK_THROWS_AS(advance(s0, cfg, 3), SolverError);
    CHECK(s0.step_index() == 0);
    CHECK(s0.history().size() == 1);
}

TEST_CASE("binary run tracks the heat mode")
{
    const GridSpec g(1, 32, 1.0);
    const FrictionMatrix b = FrictionMatrix::binary(1.0);
    SimulationState s = SimulationState::initialize(g, b, sample_profile(two_species_cosine_profile(), g));
    StepConfig cfg;
    cfg.dt = 1e-3;
    s = advance(s, cfg, 50);
    double err = 0.0;
    for (std::size_t c = 0; c < g.cell_count(); ++c)
        err = std::max(err, std::abs(s.rho()(0, c) - oracle::heat_mode(g.cell_center(c, 0), 0.05, 1.0)));
    CHECK(err < 2e-3);
    CHECK(err > 0.0);
}

TEST_CASE("two-dimensional steps conserve mass")
{
    const GridSpec g(2, 8, 1.0);
    SimulationState s =
        SimulationState::initialize(g, FrictionMatrix::ternary_reference(), sample_profile(radial_2d_profile(), g));
    s = advance(s, StepConfig{}, 5);
    const AuditSummary a = audit_run(s.history(), 1e-3);
    CHECK(a.clean(1e-3));
}
