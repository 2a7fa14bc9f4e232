#pragma once

/// \file
/// Friction coefficients and the per-edge matrices B, Q, Q^{-1} and the
/// reduced diffusion tensor D = Q^{-T} B^{-1} Q^{-1} that turns the
/// Maxwell-Stefan friction balance into an explicit flux law for the first
/// n-1 species. The eliminated species is always the last one.

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "msd/grid.hpp"

namespace msd {

/// Symmetric interspecies friction coefficients b_ij (i != j), strictly
/// positive off the diagonal. The diagonal is stored as zero and never read.
class FrictionMatrix {
public:
    /// Validates symmetry (relative 1e-12) and positivity of the off-diagonal.
    explicit FrictionMatrix(Eigen::MatrixXd b);

    /// Reference three-species mixture: b12 = b13 = 1/0.833, b23 = 1/0.168.
    static FrictionMatrix ternary_reference();
    static FrictionMatrix binary(double b12);

    int species() const { return static_cast<int>(b_.rows()); }
    double operator()(int i, int j) const { return b_(i, j); }
    const Eigen::MatrixXd& matrix() const { return b_; }

    FrictionMatrix scaled(double factor) const;

private:
    Eigen::MatrixXd b_;
};

/// B_ij = delta_ij sum_m b_im r_i r_m - b_ij r_i r_j, leading (n-1) block.
Eigen::MatrixXd assemble_B(std::span<const double> rho_hat, const FrictionMatrix& b);

/// Q_ij = delta_ij / r_i + 1 / r_n, (n-1) x (n-1).
Eigen::MatrixXd assemble_Q(std::span<const double> rho_hat);

/// (Q^{-1})_ij = delta_ij r_i - r_i r_j / sum_m r_m, using the actual sum.
Eigen::MatrixXd assemble_Qinv(std::span<const double> rho_hat);

/// D = Q^{-T} B^{-1} Q^{-1} at a single point; B^{-1} applied via Cholesky.
Eigen::MatrixXd diffusion_matrix(std::span<const double> rho_hat, const FrictionMatrix& b);

/// One (n-1) x (n-1) SPD matrix per edge point, indexed by (axis, edge).
class EdgeDiffusionTensor {
public:
    EdgeDiffusionTensor() = default;
    EdgeDiffusionTensor(const GridSpec& grid, int reduced_species);

    int reduced_species() const { return m_; }
    int axes() const { return axes_; }
    std::size_t edges_per_axis() const { return edges_; }

    Eigen::MatrixXd& at(int axis, std::size_t edge) { return blocks_[axis * edges_ + edge]; }
    const Eigen::MatrixXd& at(int axis, std::size_t edge) const { return blocks_[axis * edges_ + edge]; }

    bool matches(const GridSpec& grid) const
    {
        return axes_ == grid.dim() && edges_ == grid.cell_count();
    }

    /// Identity at every edge point (useful for Laplacian-type tests).
    static EdgeDiffusionTensor identity(const GridSpec& grid, int reduced_species);

private:
    int m_ = 0;
    int axes_ = 0;
    std::size_t edges_ = 0;
    std::vector<Eigen::MatrixXd> blocks_;
};

/// Assemble D at every edge point from the edge-averaged densities of
/// `rho_prev`. Requires rho_prev > 0 and sum_i rho_prev = 1 pointwise
/// (tolerance 1e-8).
EdgeDiffusionTensor assemble_D_hat(const CellField& rho_prev, const FrictionMatrix& b,
                                   const GridSpec& grid);

}  // namespace msd
