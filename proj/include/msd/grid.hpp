#pragma once

/// \file
/// Periodic staggered lattices on the torus [0, L]^d and the discrete
/// calculus (difference, divergence, averaging, inner products) that the
/// Maxwell-Stefan scheme is assembled from.
///
/// Storage convention: cell j (0-based) sits at x = (j+1) h. Edge j along an
/// axis sits between cell j and cell j+1 (mod N), i.e. at x = (j+1+1/2) h; the
/// last edge wraps around to the first cell. In 2D the flat cell index is
/// j0 + N * j1.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "msd/errors.hpp"

namespace msd {

class GridSpec {
public:
    GridSpec(int dim, int cells_per_axis, double domain_length);

    int dim() const { return dim_; }
    int cells_per_axis() const { return n_axis_; }
    double length() const { return length_; }
    double spacing() const { return h_; }

    /// Number of cells (= number of edges per axis).
    std::size_t cell_count() const { return cells_; }
    /// h^d, the quadrature weight of a single cell or edge.
    double cell_volume() const { return volume_; }

    /// Flat index of the neighbour of `cell` one step forward along `axis`.
    std::size_t forward(std::size_t cell, int axis) const;
    std::size_t backward(std::size_t cell, int axis) const;

    /// Per-axis integer coordinate (0-based) of a flat cell index.
    int coordinate(std::size_t cell, int axis) const;
    /// Physical position of a cell centre along `axis`, (coordinate+1) h.
    double cell_center(std::size_t cell, int axis) const;

    bool operator==(const GridSpec& other) const = default;

private:
    int dim_;
    int n_axis_;
    double length_;
    double h_;
    std::size_t cells_;
    double volume_;
};

/// Per-species scalar values on cell centres; species-major storage.
class CellField {
public:
    CellField() = default;
    CellField(const GridSpec& grid, int species, double fill = 0.0);
    CellField(std::size_t cells, int species, double fill = 0.0);

    int species() const { return species_; }
    std::size_t cells() const { return cells_; }

    double& operator()(int species, std::size_t cell) { return values_[species * cells_ + cell]; }
    double operator()(int species, std::size_t cell) const { return values_[species * cells_ + cell]; }

    std::span<double> component(int species) { return {values_.data() + species * cells_, cells_}; }
    std::span<const double> component(int species) const
    {
        return {values_.data() + species * cells_, cells_};
    }

    std::vector<double>& raw() { return values_; }
    const std::vector<double>& raw() const { return values_; }

    bool matches(const GridSpec& grid) const { return cells_ == grid.cell_count(); }

private:
    int species_ = 0;
    std::size_t cells_ = 0;
    std::vector<double> values_;
};

/// Per-species values on the staggered edge sets, one set per axis.
class EdgeField {
public:
    EdgeField() = default;
    EdgeField(const GridSpec& grid, int species, double fill = 0.0);

    int species() const { return species_; }
    int axes() const { return axes_; }
    std::size_t edges_per_axis() const { return edges_; }

    double& operator()(int species, int axis, std::size_t edge)
    {
        return values_[(species * axes_ + axis) * edges_ + edge];
    }
    double operator()(int species, int axis, std::size_t edge) const
    {
        return values_[(species * axes_ + axis) * edges_ + edge];
    }

    std::vector<double>& raw() { return values_; }
    const std::vector<double>& raw() const { return values_; }

    bool matches(const GridSpec& grid) const
    {
        return axes_ == grid.dim() && edges_ == grid.cell_count();
    }

private:
    int species_ = 0;
    int axes_ = 0;
    std::size_t edges_ = 0;
    std::vector<double> values_;
};

/// (D_h f) on every edge: forward difference quotient along each axis.
EdgeField gradient_to_edges(const CellField& f, const GridSpec& grid);

/// (d_h phi) on every cell: sum over axes of backward difference quotients.
CellField divergence_to_cells(const EdgeField& phi, const GridSpec& grid);

/// Arithmetic mean of the two cells adjacent to each edge.
EdgeField average_to_edges(const CellField& f, const GridSpec& grid);

/// h^d sum_{i,l} f g over cells.
double inner_cells(const CellField& f, const CellField& g, const GridSpec& grid);
/// h^d sum_{i,s,l} f g over all edge sets.
double inner_edges(const EdgeField& f, const EdgeField& g, const GridSpec& grid);

/// Neumaier-compensated sum.
double compensated_sum(std::span<const double> values);

void require_shape(const CellField& f, const GridSpec& grid, const char* what);
void require_shape(const EdgeField& f, const GridSpec& grid, const char* what);

}  // namespace msd
