#include "msd/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

namespace msd {

namespace {

void require_above_floor(double rho, const char* what)
{
    if (!(rho > kDensityFloor) || !std::isfinite(rho))
        throw DomainError(std::string(what) + ": density at or below the positivity floor");
}

double entropy_density(double rho)
{
    return rho * std::log(rho);
}

}  // namespace

std::vector<double> pointwise_total(const CellField& rho)
{
    std::vector<double> total(rho.cells(), 0.0);
    for (int i = 0; i < rho.species(); ++i)
        for (std::size_t c = 0; c < rho.cells(); ++c) total[c] += rho(i, c);
    return total;
}

std::vector<double> species_sums(const CellField& f)
{
    std::vector<double> sums(static_cast<std::size_t>(f.species()));
    for (int i = 0; i < f.species(); ++i) sums[i] = compensated_sum(f.component(i));
    return sums;
}

void project_mean_zero(CellField& f)
{
    const auto sums = species_sums(f);
    for (int i = 0; i < f.species(); ++i) {
        const double mean = sums[i] / static_cast<double>(f.cells());
        for (double& v : f.component(i)) v -= mean;
    }
}

CellField complete_densities(const CellField& rho_t, std::span<const double> total)
{
    if (total.size() != rho_t.cells()) throw DimensionError("complete_densities: total length mismatch");
    const int m = rho_t.species();
    CellField full(rho_t.cells(), m + 1);
    for (std::size_t c = 0; c < rho_t.cells(); ++c) {
        double last = total[c];
        for (int i = 0; i < m; ++i) {
            require_above_floor(rho_t(i, c), "complete_densities");
            full(i, c) = rho_t(i, c);
            last -= rho_t(i, c);
        }
        require_above_floor(last, "complete_densities");
        full(m, c) = last;
    }
    return full;
}

double entropy_full(const CellField& rho, const GridSpec& grid)
{
    require_shape(rho, grid, "entropy_full");
    std::vector<double> terms(rho.raw().size());
    for (std::size_t k = 0; k < terms.size(); ++k) {
        require_above_floor(rho.raw()[k], "entropy_full");
        terms[k] = entropy_density(rho.raw()[k]);
    }
    return grid.cell_volume() * compensated_sum(terms);
}

double entropy_reduced(const CellField& rho_t, std::span<const double> total, const GridSpec& grid)
{
    require_shape(rho_t, grid, "entropy_reduced");
    return entropy_full(complete_densities(rho_t, total), grid);
}

double entropy_reduced(const CellField& rho_t, const GridSpec& grid)
{
    const std::vector<double> ones(rho_t.cells(), 1.0);
    return entropy_reduced(rho_t, ones, grid);
}

CellField entropy_grad_reduced(const CellField& rho_t, std::span<const double> total, const GridSpec& grid)
{
    require_shape(rho_t, grid, "entropy_grad_reduced");
    const CellField full = complete_densities(rho_t, total);
    const int m = rho_t.species();
    CellField grad(grid, m);
    for (std::size_t c = 0; c < grid.cell_count(); ++c) {
        const double log_last = std::log(full(m, c));
        for (int i = 0; i < m; ++i) grad(i, c) = std::log(full(i, c)) - log_last;
    }
    return grad;
}

CellField entropy_grad_reduced(const CellField& rho_t, const GridSpec& grid)
{
    const std::vector<double> ones(rho_t.cells(), 1.0);
    return entropy_grad_reduced(rho_t, ones, grid);
}

namespace {

void require_tensor(const EdgeDiffusionTensor& phi, const CellField& f, const GridSpec& grid, const char* what)
{
    require_shape(f, grid, what);
    if (!phi.matches(grid)) throw DimensionError(std::string(what) + ": tensor does not match grid");
    if (phi.reduced_species() != f.species())
        throw DimensionError(std::string(what) + ": tensor size != field species");
}

/// Edge fluxes Phi D_h f, stored like an EdgeField.
EdgeField weighted_gradient(const EdgeDiffusionTensor& phi, const CellField& f, const GridSpec& grid)
{
    const EdgeField grad = gradient_to_edges(f, grid);
    const int m = f.species();
    EdgeField flux(grid, m);
    Eigen::VectorXd local(m);
    for (int s = 0; s < grid.dim(); ++s)
        for (std::size_t e = 0; e < grid.cell_count(); ++e) {
            for (int j = 0; j < m; ++j) local[j] = grad(j, s, e);
            const Eigen::VectorXd mapped = phi.at(s, e) * local;
            for (int i = 0; i < m; ++i) flux(i, s, e) = mapped[i];
        }
    return flux;
}

}  // namespace

CellField apply_L_Phi(const EdgeDiffusionTensor& phi, const CellField& f, const GridSpec& grid)
{
    require_tensor(phi, f, grid, "apply_L_Phi");
    CellField out = divergence_to_cells(weighted_gradient(phi, f, grid), grid);
    for (double& v : out.raw()) v = -v;
    return out;
}

namespace {

double norm2(const std::vector<double>& v)
{
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
}

double dot(const std::vector<double>& a, const std::vector<double>& b)
{
    std::vector<double> products(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) products[k] = a[k] * b[k];
    return compensated_sum(products);
}

void require_mean_zero(const CellField& g, const char* what)
{
    double scale = 1.0;
    for (double v : g.raw()) scale = std::max(scale, std::abs(v));
    const double tol = 1e-12 * static_cast<double>(g.cells()) * scale;
    for (double s : species_sums(g))
        if (std::abs(s) > tol)
            throw DomainError(std::string(what) + ": right-hand side is not mean-zero per species");
}

}  // namespace

CellField solve_L_Phi(const EdgeDiffusionTensor& phi, const CellField& g, const GridSpec& grid, double tol,
                      LinearSolveStats* stats)
{
    require_tensor(phi, g, grid, "solve_L_Phi");
    require_mean_zero(g, "solve_L_Phi");

    const int m = g.species();
    CellField rhs = g;
    project_mean_zero(rhs);

    // Jacobi preconditioner: diagonal of L_Phi.
    const double inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
    CellField diag(grid, m);
    for (int i = 0; i < m; ++i)
        for (std::size_t c = 0; c < grid.cell_count(); ++c) {
            double d = 0.0;
            for (int s = 0; s < grid.dim(); ++s)
                d += phi.at(s, c)(i, i) + phi.at(s, grid.backward(c, s))(i, i);
            if (!(d > 0.0)) throw SolverError("solve_L_Phi: nonpositive diagonal, tensor is not SPD");
            diag(i, c) = d * inv_h2;
        }

    CellField x(grid, m);
    const double rhs_norm = norm2(rhs.raw());
    if (stats) *stats = {};
    if (rhs_norm == 0.0) return x;

    auto precondition = [&](const CellField& r) {
        CellField z(grid, m);
        for (std::size_t k = 0; k < z.raw().size(); ++k) z.raw()[k] = r.raw()[k] / diag.raw()[k];
        project_mean_zero(z);
        return z;
    };

    CellField r = rhs;
    CellField z = precondition(r);
    CellField p = z;
    double rz = dot(r.raw(), z.raw());
    const int max_iter = 10 * grid.cells_per_axis() * m;
    for (int it = 1; it <= max_iter; ++it) {
        CellField ap = apply_L_Phi(phi, p, grid);
        const double pap = dot(p.raw(), ap.raw());
        if (!(pap > 0.0)) throw SolverError("solve_L_Phi: operator is not positive definite");
        const double alpha = rz / pap;
        for (std::size_t k = 0; k < x.raw().size(); ++k) {
            x.raw()[k] += alpha * p.raw()[k];
            r.raw()[k] -= alpha * ap.raw()[k];
        }
        project_mean_zero(r);
        const double rel = norm2(r.raw()) / rhs_norm;
        if (rel <= tol) {
            project_mean_zero(x);
            if (stats) *stats = {it, rel};
            return x;
        }
        z = precondition(r);
        const double rz_next = dot(r.raw(), z.raw());
        const double beta = rz_next / rz;
        rz = rz_next;
        for (std::size_t k = 0; k < p.raw().size(); ++k) p.raw()[k] = z.raw()[k] + beta * p.raw()[k];
    }
    throw SolverError("solve_L_Phi: no convergence within " + std::to_string(max_iter) + " iterations");
}

DualNormRoutes dual_norm_sq_routes(const EdgeDiffusionTensor& phi, const CellField& g, const GridSpec& grid,
                                   double tol)
{
    const CellField f = solve_L_Phi(phi, g, grid, tol);
    const EdgeField grad = gradient_to_edges(f, grid);
    const EdgeField flux = weighted_gradient(phi, f, grid);
    CellField g0 = g;
    project_mean_zero(g0);
    return {inner_edges(grad, flux, grid), inner_cells(f, g0, grid)};
}

double dual_norm_sq(const EdgeDiffusionTensor& phi, const CellField& g, const GridSpec& grid, double tol)
{
    return dual_norm_sq_routes(phi, g, grid, tol).flux_form;
}

}  // namespace msd
