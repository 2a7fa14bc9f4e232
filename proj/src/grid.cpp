#include "msd/grid.hpp"

#include <cmath>

namespace msd {

GridSpec::GridSpec(int dim, int cells_per_axis, double domain_length)
    : dim_(dim), n_axis_(cells_per_axis), length_(domain_length)
{
    if (dim != 1 && dim != 2)
        throw DimensionError("grid dimension must be 1 or 2, got " + std::to_string(dim));
    if (cells_per_axis < 4)
        throw DimensionError("grid needs at least 4 cells per axis, got " + std::to_string(cells_per_axis));
    if (!(domain_length > 0.0) || !std::isfinite(domain_length))
        throw DomainError("domain length must be positive and finite");
    h_ = domain_length / cells_per_axis;
    cells_ = static_cast<std::size_t>(cells_per_axis);
    if (dim == 2) cells_ *= static_cast<std::size_t>(cells_per_axis);
    volume_ = dim == 1 ? h_ : h_ * h_;
}

std::size_t GridSpec::forward(std::size_t cell, int axis) const
{
    const std::size_t n = static_cast<std::size_t>(n_axis_);
    if (axis == 0) {
        const std::size_t j = cell % n;
        return j + 1 == n ? cell + 1 - n : cell + 1;
    }
    const std::size_t j = cell / n;
    return j + 1 == n ? cell % n : cell + n;
}

std::size_t GridSpec::backward(std::size_t cell, int axis) const
{
    const std::size_t n = static_cast<std::size_t>(n_axis_);
    if (axis == 0) {
        const std::size_t j = cell % n;
        return j == 0 ? cell + n - 1 : cell - 1;
    }
    const std::size_t j = cell / n;
    return j == 0 ? cell + (n - 1) * n : cell - n;
}

int GridSpec::coordinate(std::size_t cell, int axis) const
{
    const std::size_t n = static_cast<std::size_t>(n_axis_);
    return static_cast<int>(axis == 0 ? cell % n : cell / n);
}

double GridSpec::cell_center(std::size_t cell, int axis) const
{
    return (coordinate(cell, axis) + 1) * h_;
}

CellField::CellField(const GridSpec& grid, int species, double fill)
    : CellField(grid.cell_count(), species, fill)
{
}

CellField::CellField(std::size_t cells, int species, double fill)
    : species_(species), cells_(cells), values_(static_cast<std::size_t>(species) * cells, fill)
{
    if (species < 1) throw DimensionError("cell field needs at least one species");
}

EdgeField::EdgeField(const GridSpec& grid, int species, double fill)
    : species_(species), axes_(grid.dim()), edges_(grid.cell_count()),
      values_(static_cast<std::size_t>(species) * grid.dim() * grid.cell_count(), fill)
{
    if (species < 1) throw DimensionError("edge field needs at least one species");
}

void require_shape(const CellField& f, const GridSpec& grid, const char* what)
{
    if (!f.matches(grid))
        throw DimensionError(std::string(what) + ": cell field has " + std::to_string(f.cells()) +
                             " cells, grid has " + std::to_string(grid.cell_count()));
}

void require_shape(const EdgeField& f, const GridSpec& grid, const char* what)
{
    if (!f.matches(grid))
        throw DimensionError(std::string(what) + ": edge field shape does not match grid");
}

EdgeField gradient_to_edges(const CellField& f, const GridSpec& grid)
{
    require_shape(f, grid, "gradient_to_edges");
    EdgeField out(grid, f.species());
    const double inv_h = 1.0 / grid.spacing();
    for (int i = 0; i < f.species(); ++i)
        for (int s = 0; s < grid.dim(); ++s)
            for (std::size_t c = 0; c < grid.cell_count(); ++c)
                out(i, s, c) = (f(i, grid.forward(c, s)) - f(i, c)) * inv_h;
    return out;
}

CellField divergence_to_cells(const EdgeField& phi, const GridSpec& grid)
{
    require_shape(phi, grid, "divergence_to_cells");
    CellField out(grid, phi.species());
    const double inv_h = 1.0 / grid.spacing();
    for (int i = 0; i < phi.species(); ++i)
        for (std::size_t c = 0; c < grid.cell_count(); ++c) {
            double acc = 0.0;
            for (int s = 0; s < grid.dim(); ++s)
                acc += phi(i, s, c) - phi(i, s, grid.backward(c, s));
            out(i, c) = acc * inv_h;
        }
    return out;
}

EdgeField average_to_edges(const CellField& f, const GridSpec& grid)
{
    require_shape(f, grid, "average_to_edges");
    EdgeField out(grid, f.species());
    for (int i = 0; i < f.species(); ++i)
        for (int s = 0; s < grid.dim(); ++s)
            for (std::size_t c = 0; c < grid.cell_count(); ++c)
                out(i, s, c) = 0.5 * (f(i, c) + f(i, grid.forward(c, s)));
    return out;
}

double compensated_sum(std::span<const double> values)
{
    double sum = 0.0;
    double carry = 0.0;
    for (double v : values) {
        const double t = sum + v;
        if (std::abs(sum) >= std::abs(v))
            carry += (sum - t) + v;
        else
            carry += (v - t) + sum;
        sum = t;
    }
    return sum + carry;
}

namespace {

double weighted_dot(const std::vector<double>& a, const std::vector<double>& b, double weight)
{
    std::vector<double> products(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) products[k] = a[k] * b[k];
    return weight * compensated_sum(products);
}

}  // namespace

double inner_cells(const CellField& f, const CellField& g, const GridSpec& grid)
{
    require_shape(f, grid, "inner_cells");
    require_shape(g, grid, "inner_cells");
    if (f.species() != g.species()) throw DimensionError("inner_cells: species count mismatch");
    return weighted_dot(f.raw(), g.raw(), grid.cell_volume());
}

double inner_edges(const EdgeField& f, const EdgeField& g, const GridSpec& grid)
{
    require_shape(f, grid, "inner_edges");
    require_shape(g, grid, "inner_edges");
    if (f.species() != g.species()) throw DimensionError("inner_edges: species count mismatch");
    return weighted_dot(f.raw(), g.raw(), grid.cell_volume());
}

}  // namespace msd
