// msd: driver for the Maxwell-Stefan solver and its verification suites.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "msd/config.hpp"
#include "msd/diagnostics.hpp"
#include "msd/initial_data.hpp"
#include "msd/stepper.hpp"
#include "msd/verification.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

enum Exit { kOk = 0, kFailure = 1, kUsage = 2, kSolver = 3, kAudit = 4 };

struct Options {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    bool quiet = false;
};

std::ostream& log_stream(const Options& o)
{
    static std::ofstream null;
    return o.quiet ? null : std::cout;
}

msd::RunConfig resolve(const Options& o)
{
    msd::RunConfig cfg = o.config.empty() ? msd::RunConfig::defaults() : msd::load_config(o.config);
    if (!o.out.empty()) cfg.output_dir = o.out;
    if (o.seed) cfg.seed = *o.seed;
    return cfg;
}

fs::path prepare_output(const msd::RunConfig& cfg)
{
    const fs::path dir(cfg.output_dir);
    fs::create_directories(dir);
    std::ofstream echo(dir / "effective_config.ini");
    msd::write_config(echo, cfg);
    return dir;
}

std::ofstream open_out(const fs::path& p)
{
    std::ofstream f(p);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    return f;
}

void write_json(const fs::path& p, const json& j)
{
    open_out(p) << std::setw(2) << j << '\n';
}

// Index of the cell whose centre is nearest x along axis 0 (ties go to the lower index).
std::size_t nearest_cell(const msd::GridSpec& grid, double x)
{
    const double h = grid.spacing();
    long j = std::lround(std::floor(x / h + 0.5)) - 1;
    if (std::abs(std::abs((j + 1) * h - x) - std::abs(j * h - x)) <= 1e-12 * h) --j;
    const long n = grid.cells_per_axis();
    return static_cast<std::size_t>(((j % n) + n) % n);
}

json audit_json(const msd::AuditSummary& a, double dt)
{
    return {{"steps", a.steps},
            {"max_pointwise_drift", a.max_pointwise_drift},
            {"max_species_drift", a.max_species_drift},
            {"min_density", a.min_density},
            {"energy_increase_count", a.energy_increase_count},
            {"certificate_violations", a.certificate_violations},
            {"unscaled_violations", a.unscaled_violations},
            {"energy_slack", a.energy_slack},
            {"clean", a.clean(dt)}};
}

int cmd_run(const Options& opt)
{
    const msd::RunConfig cfg = resolve(opt);
    const fs::path dir = prepare_output(cfg);
    std::ostream& log = log_stream(opt);
    const msd::GridSpec grid = cfg.grid();
    const msd::CellField rho0 = cfg.initial_file.empty()
                                    ? msd::sample_profile(msd::builtin_profile(cfg.initial), grid)
                                    : msd::read_tabulated(cfg.initial_file, grid, cfg.species);

    msd::SimulationState state = msd::SimulationState::initialize(grid, cfg.mixture(), rho0);
    std::ofstream fields = open_out(dir / "fields.csv");
    msd::write_field_rows(fields, state.rho(), grid, 0, 0.0, true);

    std::string failure;
    for (int k = 0; k < cfg.steps; ++k) {
        try {
            state = msd::advance(state, cfg.solver, 1);
        } catch (const msd::SolverError& e) {
            failure = "step " + std::to_string(k + 1) + ": " + e.what();
            break;
        }
        const int step = state.step_index();
        const bool last = step == cfg.steps;
        if (last || (cfg.emit_fields_every > 0 && step % cfg.emit_fields_every == 0))
            msd::write_field_rows(fields, state.rho(), grid, step, state.time(), false);
        if ((step % 100 == 0) || last)
            log << "step " << step << "  t=" << state.time() << "  F=" << std::setprecision(12)
                << state.history().back().energy << std::setprecision(6) << '\n';
    }

    std::ofstream diag = open_out(dir / "diagnostics.csv");
    msd::write_history_csv(diag, state.history());
    const msd::AuditSummary audit = msd::audit_run(state.history(), cfg.solver.dt);

    const std::size_t mid = nearest_cell(grid, 0.5 * grid.length());
    json meta = {{"command", "run"},
                 {"seed", cfg.seed},
                 {"initial", cfg.initial_file.empty() ? cfg.initial : cfg.initial_file},
                 {"steps_completed", state.step_index()},
                 {"final_time", state.time()},
                 {"cell_convention", "cell l (1-based) at x = l h; fields.csv lists every cell"},
                 {"midpoint_cell",
                  {{"x_target", 0.5 * grid.length()},
                   {"index_0based", mid},
                   {"x", grid.cell_center(mid, 0)},
                   {"rule", "nearest cell centre along x, ties to the lower index"}}},
                 {"audit", audit_json(audit, cfg.solver.dt)}};
    if (!failure.empty()) meta["failure"] = failure;
    write_json(dir / "metadata.json", meta);
    write_json(dir / "audit.json", audit_json(audit, cfg.solver.dt));

    log << "audit: steps " << audit.steps << ", min rho " << audit.min_density << ", drift " << audit.max_pointwise_drift
        << " / " << audit.max_species_drift << ", energy increases " << audit.energy_increase_count
        << ", certificate violations " << audit.certificate_violations << '\n';
    if (!failure.empty()) {
        std::cerr << "solver failure at " << failure << '\n';
        return kSolver;
    }
    if (!audit.clean(cfg.solver.dt)) {
        std::cerr << "audit violation, see " << (dir / "audit.json").string() << '\n';
        return kAudit;
    }
    return kOk;
}

msd::StudyProblem study_problem(const msd::RunConfig& cfg)
{
    if (cfg.dim != 1) throw msd::DomainError("convergence studies run on 1D configurations");
    if (!cfg.initial_file.empty()) throw msd::DomainError("convergence studies need a built-in initial condition");
    const msd::FrictionMatrix b = cfg.mixture();
    if (cfg.initial == "paper-1d" && b.matrix() == msd::FrictionMatrix::ternary_reference().matrix() &&
        cfg.length == 1.0)
        return msd::ternary_equilibrium_problem(cfg.t_final);
    return msd::equilibrium_problem(msd::builtin_profile(cfg.initial), b, cfg.length, cfg.t_final);
}

json slope_json(const std::optional<msd::SlopeFit>& s)
{
    if (!s) return nullptr;
    return {{"slope", s->slope}, {"intercept", s->intercept}, {"std_error", s->std_error},
            {"ci95", {s->ci_low, s->ci_high}}};
}

int write_convergence(const msd::RunConfig& cfg, const std::string& mode, const msd::ConvergenceReport& rep,
                      double fixed, std::ostream& log)
{
    const fs::path dir(cfg.output_dir);
    std::ofstream csv = open_out(dir / ("convergence_" + mode + ".csv"));
    msd::write_convergence_csv(csv, rep);
    json meta = {{"command", "converge-" + mode},
                 {"parameter", rep.parameter},
                 {mode == "space" ? "dt" : "h", fixed},
                 {"t_final", cfg.t_final},
                 {"points", rep.params.size()},
                 {"error_aggregation", "max over species"},
                 {"slope_linf", slope_json(rep.slope_linf)},
                 {"slope_l2", slope_json(rep.slope_l2)},
                 {"slope_asserted", rep.params.size() >= 4},
                 {"notes", rep.notes}};
    write_json(dir / ("convergence_" + mode + "_meta.json"), meta);

    log << std::setprecision(6);
    for (std::size_t k = 0; k < rep.params.size(); ++k)
        log << rep.parameter << " = " << rep.params[k] << "  err_linf = " << rep.err_linf[k]
            << "  err_l2 = " << rep.err_l2[k] << '\n';
    if (rep.slope_linf)
        log << "L-inf slope " << rep.slope_linf->slope << " [" << rep.slope_linf->ci_low << ", "
            << rep.slope_linf->ci_high << "]\n";
    else
        log << "slope omitted (single point)\n";
    return kOk;
}

int cmd_converge(const Options& opt, bool space)
{
    const msd::RunConfig cfg = resolve(opt);
    prepare_output(cfg);
    const msd::StudyProblem problem = study_problem(cfg);
    if (space) {
        const auto hs = msd::odd_cell_log_sweep(cfg.space_h_min, cfg.space_h_max, cfg.space_count, cfg.length);
        return write_convergence(cfg, "space", msd::spatial_convergence(problem, hs, cfg.space_dt, cfg.solver),
                                 cfg.space_dt, log_stream(opt));
    }
    const auto dts = msd::snapped_log_sweep(cfg.time_dt_min, cfg.time_dt_max, cfg.time_count, cfg.t_final);
    return write_convergence(cfg, "time", msd::temporal_convergence(problem, dts, cfg.time_h, cfg.solver), cfg.time_h,
                             log_stream(opt));
}

int cmd_verify(const Options& opt)
{
    const msd::RunConfig cfg = resolve(opt);
    const fs::path dir = prepare_output(cfg);
    std::ostream& log = log_stream(opt);
    const auto checks = msd::run_invariant_suite(cfg.seed);
    json rows = json::array();
    bool all = true;
    for (const auto& c : checks) {
        all = all && c.passed;
        log << (c.passed ? "PASS  " : "FAIL  ") << std::left << std::setw(38) << c.name << std::right
            << " measured " << std::setw(12) << c.measured << "  threshold " << c.threshold
            << (c.detail.empty() ? "" : "  (" + c.detail + ")") << '\n';
        rows.push_back({{"name", c.name}, {"passed", c.passed}, {"measured", c.measured},
                        {"threshold", c.threshold}, {"detail", c.detail}});
    }
    write_json(dir / "verify.json", {{"command", "verify"}, {"seed", cfg.seed}, {"all_passed", all}, {"checks", rows}});
    if (!all) std::cerr << "verification failed\n";
    return all ? kOk : kFailure;
}

int cmd_truncation(const Options& opt)
{
    const msd::RunConfig cfg = resolve(opt);
    const fs::path dir = prepare_output(cfg);
    const auto report = msd::truncation_probe(msd::manufactured_solution(cfg.truncation_solution), cfg.truncation_h,
                                              cfg.truncation_dt);
    std::ofstream csv = open_out(dir / "truncation.csv");
    msd::write_truncation_csv(csv, report);
    write_json(dir / "truncation_meta.json",
               {{"command", "truncation"}, {"solution", report.solution}, {"fitted_constant", report.fitted_constant}});
    std::ostream& log = log_stream(opt);
    for (const auto& e : report.entries)
        log << "h " << e.h << "  dt " << e.dt << "  tau1 " << e.tau1 << "  tau2 " << e.tau2 << "  tau3 " << e.tau3
            << '\n';
    log << "max tau ~ C (dt + h^2), C = " << report.fitted_constant << '\n';
    return kOk;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Maxwell-Stefan multicomponent diffusion solver"};
    app.require_subcommand(1);
    Options opt;
    std::uint64_t seed = 0;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config, "configuration file")->check(CLI::ExistingFile);
        sub->add_option("--out", opt.out, "output directory (overrides output.dir)");
        sub->add_option("--seed", seed, "seed for randomized property checks");
        sub->add_flag("--quiet", opt.quiet, "suppress progress output");
    };
    auto* run = app.add_subcommand("run", "time-step a configuration and audit it");
    auto* space = app.add_subcommand("converge-space", "spatial convergence study");
    auto* time = app.add_subcommand("converge-time", "temporal convergence study");
    auto* verify = app.add_subcommand("verify", "run the invariant suite");
    auto* trunc = app.add_subcommand("truncation", "local truncation errors of a manufactured solution");
    for (auto* s : {run, space, time, verify, trunc}) add_common(s);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kUsage;
    }
    for (auto* s : {run, space, time, verify, trunc})
        if (s->parsed() && s->count("--seed")) opt.seed = seed;

    try {
        if (*run) return cmd_run(opt);
        if (*space) return cmd_converge(opt, true);
        if (*time) return cmd_converge(opt, false);
        if (*verify) return cmd_verify(opt);
        if (*trunc) return cmd_truncation(opt);
    } catch (const msd::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailure;
    }
    return kUsage;
}
