#include "msd/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

namespace msd {

// ---------------------------------------------------------------- audits

bool AuditSummary::clean(double dt, double drift_tol) const
{
    return min_density > 0.0 && energy_increase_count == 0 && certificate_violations == 0 &&
           (dt > 0.5 || unscaled_violations == 0) && max_pointwise_drift <= drift_tol &&
           max_species_drift <= drift_tol;
}

AuditSummary audit_run(const std::vector<StepRecord>& history, double dt, double energy_slack)
{
    AuditSummary a;
    a.energy_slack = energy_slack;
    if (history.empty()) return a;
    a.steps = static_cast<int>(history.size()) - 1;
    a.min_density = history.front().min_density;
    for (std::size_t k = 0; k < history.size(); ++k) {
        const StepRecord& r = history[k];
        a.max_pointwise_drift = std::max(a.max_pointwise_drift, r.mass_drift_pointwise);
        a.max_species_drift = std::max(a.max_species_drift, r.mass_drift_species);
        a.min_density = std::min(a.min_density, r.min_density);
        if (k == 0) continue;
        const double prev = history[k - 1].energy;
        if (r.energy > prev + energy_slack) ++a.energy_increase_count;
        if (r.energy + r.dual_increment_sq / (2.0 * dt) > prev + energy_slack) ++a.certificate_violations;
        if (r.energy + r.dual_increment_sq > prev + energy_slack) ++a.unscaled_violations;
    }
    return a;
}

// ---------------------------------------------------------------- slope fit

SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y)
{
    if (x.size() != y.size()) throw DimensionError("fit_loglog: length mismatch");
    const std::size_t m = x.size();
    std::vector<double> lx(m), ly(m);
    for (std::size_t k = 0; k < m; ++k) {
        if (!(x[k] > 0.0) || !(y[k] > 0.0)) throw DomainError("fit_loglog: values must be positive");
        lx[k] = std::log(x[k]);
        ly[k] = std::log(y[k]);
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        mx += lx[k];
        my += ly[k];
    }
    mx /= static_cast<double>(m);
    my /= static_cast<double>(m);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        sxx += (lx[k] - mx) * (lx[k] - mx);
        sxy += (lx[k] - mx) * (ly[k] - my);
    }
    if (m < 2 || !(sxx > 1e-24)) throw DomainError("fit_loglog: need at least two distinct parameter values");

    SlopeFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.ci_low = fit.ci_high = fit.slope;
    if (m >= 3) {
        double ssr = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            const double res = ly[k] - (fit.intercept + fit.slope * lx[k]);
            ssr += res * res;
        }
        const double dof = static_cast<double>(m - 2);
        fit.std_error = std::sqrt(ssr / dof / sxx);
        const boost::math::students_t dist(dof);
        const double t = boost::math::quantile(boost::math::complement(dist, 0.025));
        fit.ci_low = fit.slope - t * fit.std_error;
        fit.ci_high = fit.slope + t * fit.std_error;
    }
    return fit;
}

// ---------------------------------------------------------------- studies

int cells_for_spacing(double length, double h)
{
    if (!(h > 0.0)) throw DomainError("grid spacing must be positive");
    const double ratio = length / h;
    const double rounded = std::round(ratio);
    if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio))
        throw DomainError("spacing " + std::to_string(h) + " does not divide the domain length");
    return static_cast<int>(rounded);
}

namespace {

int steps_for(double t_final, double dt)
{
    if (!(dt > 0.0)) throw DomainError("time step must be positive");
    const double ratio = t_final / dt;
    const double rounded = std::round(ratio);
    if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio))
        throw DomainError("time step " + std::to_string(dt) + " does not divide the final time");
    return static_cast<int>(rounded);
}

void finish_report(ConvergenceReport& report)
{
    if (report.params.size() >= 2) {
        report.slope_linf = fit_loglog(report.params, report.err_linf);
        report.slope_l2 = fit_loglog(report.params, report.err_l2);
    }
}

void require_monotone(const std::vector<double>& values)
{
    if (values.empty()) throw DomainError("convergence study needs at least one parameter value");
    bool increasing = true, decreasing = true;
    for (std::size_t k = 1; k < values.size(); ++k) {
        if (values[k] == values[k - 1])
            throw DomainError("degenerate fit: parameter value " + std::to_string(values[k]) + " is repeated");
        increasing = increasing && values[k] > values[k - 1];
        decreasing = decreasing && values[k] < values[k - 1];
    }
    if (!increasing && !decreasing) throw DomainError("parameter values must be strictly monotone");
}

}  // namespace

StudyProblem equilibrium_problem(const InitialProfile& profile, const FrictionMatrix& friction, double length,
                                 double t_final)
{
    const std::vector<double> mean = continuum_mean(profile, length);
    StudyProblem p{profile.name + "-equilibrium",
                   profile,
                   friction,
                   length,
                   t_final,
                   [mean](int i, double, double, double) { return mean[i]; },
                   {}};
    std::ostringstream note;
    note << std::setprecision(17) << "reference = continuum mean of initial data (";
    for (std::size_t i = 0; i < mean.size(); ++i) note << (i ? ", " : "") << mean[i];
    note << ")";
    p.notes.push_back(note.str());
    return p;
}

StudyProblem ternary_equilibrium_problem(double t_final)
{
    StudyProblem p = equilibrium_problem(ternary_1d_profile(), FrictionMatrix::ternary_reference(), 1.0, t_final);
    const std::vector<double> mean = continuum_mean(p.profile, 1.0);
    // third component: closure 1 - 0.7 - 1e-4
    const double expected[3] = {0.7, 1e-4, 1.0 - 0.7 - 1e-4};
    double worst = 0.0;
    for (int i = 0; i < 3; ++i) worst = std::max(worst, std::abs(mean[i] - expected[i]));
    if (worst > 1e-12)
        throw DomainError("reference state does not match (0.7, 0.0001, 0.2999): deviation " + std::to_string(worst));
    p.notes.push_back("reference cross-checked against (0.7, 0.0001, 0.2999)");
    return p;
}

StudyProblem binary_heat_problem(double b12, double t_final, double amplitude)
{
    StudyProblem p{"binary-heat-mode",
                   two_species_cosine_profile(amplitude, 1.0),
                   FrictionMatrix::binary(b12),
                   1.0,
                   t_final,
                   [b12, amplitude](int i, double x, double, double t) {
                       const double first = heat_mode_density(x, t, b12, amplitude, 1.0);
                       return i == 0 ? first : 1.0 - first;
                   },
                   {"reference = analytic heat mode"}};
    return p;
}

RunErrors run_and_measure(const StudyProblem& problem, int cells, int steps, const StepConfig& base)
{
    const GridSpec grid(problem.profile.dim, cells, problem.length);
    StepConfig cfg = base;
    cfg.dt = problem.t_final / steps;
    SimulationState state = SimulationState::initialize(grid, problem.friction, sample_profile(problem.profile, grid));
    state = advance(state, cfg, steps);

    RunErrors err;
    const CellField& rho = state.rho();
    for (int i = 0; i < rho.species(); ++i) {
        double sq = 0.0;
        for (std::size_t c = 0; c < grid.cell_count(); ++c) {
            const double x = grid.cell_center(c, 0);
            const double y = grid.dim() == 2 ? grid.cell_center(c, 1) : 0.0;
            const double diff = rho(i, c) - problem.reference(i, x, y, problem.t_final);
            err.linf = std::max(err.linf, std::abs(diff));
            sq += diff * diff;
        }
        err.l2 = std::max(err.l2, std::sqrt(grid.cell_volume() * sq));
    }
    return err;
}

namespace {

ConvergenceReport run_study(const std::string& parameter, const std::vector<double>& params,
                            const std::vector<std::pair<int, int>>& runs, const StudyProblem& problem,
                            const StepConfig& base)
{
    std::vector<std::future<RunErrors>> pending;
    pending.reserve(runs.size());
    for (const auto& [cells, steps] : runs)
        pending.push_back(std::async(std::launch::async, [&problem, &base, cells = cells, steps = steps] {
            return run_and_measure(problem, cells, steps, base);
        }));

    ConvergenceReport report;
    report.parameter = parameter;
    report.params = params;
    for (auto& f : pending) {
        const RunErrors e = f.get();
        report.err_linf.push_back(e.linf);
        report.err_l2.push_back(e.l2);
    }
    report.notes = problem.notes;
    report.notes.push_back("errors aggregate by max over species; slopes asserted on L-infinity");
    finish_report(report);
    return report;
}

}  // namespace

ConvergenceReport spatial_convergence(const StudyProblem& problem, const std::vector<double>& h_values, double dt,
                                      const StepConfig& base)
{
    require_monotone(h_values);
    const int steps = steps_for(problem.t_final, dt);
    std::vector<std::pair<int, int>> runs;
    for (double h : h_values) runs.emplace_back(cells_for_spacing(problem.length, h), steps);
    return run_study("h", h_values, runs, problem, base);
}

ConvergenceReport temporal_convergence(const StudyProblem& problem, const std::vector<double>& dt_values, double h,
                                       const StepConfig& base)
{
    require_monotone(dt_values);
    const int cells = cells_for_spacing(problem.length, h);
    std::vector<std::pair<int, int>> runs;
    for (double dt : dt_values) runs.emplace_back(cells, steps_for(problem.t_final, dt));
    return run_study("dt", dt_values, runs, problem, base);
}

std::vector<double> snapped_log_sweep(double lo, double hi, int count, double span)
{
    if (!(lo > 0.0) || !(hi >= lo) || count < 1) throw DomainError("invalid sweep range");
    std::vector<double> out;
    for (int k = 0; k < count; ++k) {
        const double t = count == 1 ? 0.0 : static_cast<double>(k) / (count - 1);
        const double raw = hi * std::pow(lo / hi, t);
        const double divisions = std::max(1.0, std::round(span / raw));
        const double snapped = span / divisions;
        if (out.empty() || std::abs(out.back() - snapped) > 1e-15 * span) out.push_back(snapped);
    }
    return out;
}

std::vector<double> odd_cell_log_sweep(double h_lo, double h_hi, int count, double length)
{
    if (!(h_lo > 0.0) || !(h_hi >= h_lo) || count < 1) throw DomainError("invalid sweep range");
    const int n_min = 2 * static_cast<int>(std::ceil((length / h_hi - 1.0) / 2.0)) + 1;
    const int n_max = 2 * static_cast<int>(std::floor((length / h_lo - 1.0) / 2.0)) + 1;
    if (n_max < std::max(n_min, 5)) throw DomainError("no odd cell count >= 5 in the requested range");
    std::vector<double> out;
    int last = 0;
    for (int k = 0; k < count; ++k) {
        const double t = count == 1 ? 0.0 : static_cast<double>(k) / (count - 1);
        const double cells = (length / h_hi) * std::pow(h_hi / h_lo, t);
        int odd = 2 * static_cast<int>(std::lround((cells - 1.0) / 2.0)) + 1;
        odd = std::clamp(odd, std::max(n_min, 5), n_max);
        if (odd != last) out.push_back(length / odd);
        last = odd;
    }
    return out;
}

// ---------------------------------------------------------------- truncation

ManufacturedSolution manufactured_solution(const std::string& id)
{
    if (id == "heat-mode") {
        constexpr double b12 = 1.0;
        constexpr double amplitude = 0.1;
        auto p = [](int i, double x, double t) {
            const double first = heat_mode_density(x, t, b12, amplitude, 1.0);
            return i == 0 ? first : 1.0 - first;
        };
        auto v = [p](int i, double x, double t) {
            const double k = 2.0 * std::numbers::pi;
            const double dx_first = -amplitude * k * std::exp(-k * k * t / b12) * std::sin(k * x);
            const double flux_first = -dx_first / b12;  // rho_1 v_1 = -(1/b12) d_x rho_1
            return i == 0 ? flux_first / p(0, x, t) : -flux_first / p(1, x, t);
        };
        return {"heat-mode", FrictionMatrix::binary(b12), 1.0, 2, p, v};
    }
    if (id == "uniform") {
        auto p = [](int i, double, double) { return i == 0 ? 0.3 : 0.7; };
        auto v = [](int, double, double) { return 0.0; };
        return {"uniform", FrictionMatrix::binary(1.0), 1.0, 2, p, v};
    }
    throw DomainError("unknown manufactured solution '" + id + "'");
}

namespace {

TruncationEntry probe_single(const ManufacturedSolution& sol, double h, double dt, double t0)
{
    const int cells = cells_for_spacing(sol.length, h);
    const GridSpec grid(1, cells, sol.length);
    const int n = sol.species;
    const double t1 = t0 + dt;

    CellField p_now(grid, n), p_next(grid, n);
    EdgeField v_next(grid, n);
    for (std::size_t c = 0; c < grid.cell_count(); ++c) {
        const double x = grid.cell_center(c, 0);
        const double xe = x + 0.5 * h;
        for (int i = 0; i < n; ++i) {
            p_now(i, c) = sol.density(i, x, t0);
            p_next(i, c) = sol.density(i, x, t1);
            v_next(i, 0, c) = sol.velocity(i, xe, t1);
            if (!(p_now(i, c) > 0.0 && p_now(i, c) < 1.0 && p_next(i, c) > 0.0 && p_next(i, c) < 1.0))
                throw DomainError("manufactured solution leaves (0, 1)");
        }
    }

    const EdgeField p_hat = average_to_edges(p_now, grid);
    EdgeField flux(grid, n);
    for (std::size_t k = 0; k < flux.raw().size(); ++k) flux.raw()[k] = p_hat.raw()[k] * v_next.raw()[k];
    const CellField div = divergence_to_cells(flux, grid);

    CellField logp(grid, n);
    for (std::size_t k = 0; k < logp.raw().size(); ++k) logp.raw()[k] = std::log(p_next.raw()[k]);
    const EdgeField dlog = gradient_to_edges(logp, grid);

    TruncationEntry e{h, dt, 0.0, 0.0, 0.0};
    for (std::size_t c = 0; c < grid.cell_count(); ++c) {
        double total_hat = 0.0, weighted = 0.0, momentum = 0.0;
        for (int j = 0; j < n; ++j) {
            total_hat += p_hat(j, 0, c);
            weighted += p_hat(j, 0, c) * dlog(j, 0, c);
            momentum += p_hat(j, 0, c) * v_next(j, 0, c);
        }
        for (int i = 0; i < n; ++i) {
            const double tau1 = (p_next(i, c) - p_now(i, c)) / dt + div(i, c);
            double friction = 0.0;
            for (int j = 0; j < n; ++j)
                if (j != i) friction += sol.friction(i, j) * p_hat(j, 0, c) * (v_next(i, 0, c) - v_next(j, 0, c));
            const double tau2 = dlog(i, 0, c) - weighted / total_hat + friction;
            e.tau1 = std::max(e.tau1, std::abs(tau1));
            e.tau2 = std::max(e.tau2, std::abs(tau2));
        }
        e.tau3 = std::max(e.tau3, std::abs(momentum));
    }
    return e;
}

}  // namespace

TruncationReport truncation_probe(const ManufacturedSolution& solution, const std::vector<double>& h_values,
                                  const std::vector<double>& dt_values, double t0)
{
    TruncationReport report;
    report.solution = solution.name;
    double num = 0.0, den = 0.0;
    for (double h : h_values)
        for (double dt : dt_values) {
            const TruncationEntry e = probe_single(solution, h, dt, t0);
            report.entries.push_back(e);
            const double scale = dt + h * h;
            num += std::max({e.tau1, e.tau2, e.tau3}) * scale;
            den += scale * scale;
        }
    report.fitted_constant = den > 0.0 ? num / den : 0.0;
    return report;
}

// ---------------------------------------------------------------- CSV

namespace {

struct PrecisionGuard {
    explicit PrecisionGuard(std::ostream& out) : out_(out), flags_(out.flags()), precision_(out.precision())
    {
        out_ << std::defaultfloat << std::setprecision(17);
    }
    ~PrecisionGuard()
    {
        out_.flags(flags_);
        out_.precision(precision_);
    }
    std::ostream& out_;
    std::ios::fmtflags flags_;
    std::streamsize precision_;
};

}  // namespace

void write_history_csv(std::ostream& out, const std::vector<StepRecord>& history)
{
    PrecisionGuard guard(out);
    out << "step,time,energy,min_rho,mass_drift_pointwise,mass_drift_species,dual_increment_sq\n";
    for (const StepRecord& r : history)
        out << r.step << ',' << r.time << ',' << r.energy << ',' << r.min_density << ',' << r.mass_drift_pointwise
            << ',' << r.mass_drift_species << ',' << r.dual_increment_sq << '\n';
}

void write_convergence_csv(std::ostream& out, const ConvergenceReport& report)
{
    PrecisionGuard guard(out);
    out << "param,err_linf,err_l2\n";
    for (std::size_t k = 0; k < report.params.size(); ++k)
        out << report.params[k] << ',' << report.err_linf[k] << ',' << report.err_l2[k] << '\n';
}

void write_truncation_csv(std::ostream& out, const TruncationReport& report)
{
    PrecisionGuard guard(out);
    out << "h,dt,tau1,tau2,tau3\n";
    for (const TruncationEntry& e : report.entries)
        out << e.h << ',' << e.dt << ',' << e.tau1 << ',' << e.tau2 << ',' << e.tau3 << '\n';
}

void write_field_rows(std::ostream& out, const CellField& rho, const GridSpec& grid, int step, double time,
                      bool header)
{
    PrecisionGuard guard(out);
    if (header) {
        out << "step,time,x";
        if (grid.dim() == 2) out << ",y";
        for (int i = 0; i < rho.species(); ++i) out << ",rho_" << i + 1;
        out << '\n';
    }
    for (std::size_t c = 0; c < grid.cell_count(); ++c) {
        out << step << ',' << time << ',' << grid.cell_center(c, 0);
        if (grid.dim() == 2) out << ',' << grid.cell_center(c, 1);
        for (int i = 0; i < rho.species(); ++i) out << ',' << rho(i, c);
        out << '\n';
    }
}

}  // namespace msd
