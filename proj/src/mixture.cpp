#include "msd/mixture.hpp"

#include <cmath>
#include <string>

namespace msd {

namespace {

void require_positive(std::span<const double> rho, const char* what)
{
    for (double r : rho)
        if (!(r > 0.0) || !std::isfinite(r))
            throw DomainError(std::string(what) + ": densities must be positive and finite");
}

}  // namespace

FrictionMatrix::FrictionMatrix(Eigen::MatrixXd b) : b_(std::move(b))
{
    if (b_.rows() != b_.cols()) throw DimensionError("friction matrix must be square");
    if (b_.rows() < 2) throw DimensionError("friction matrix needs at least two species");
    const int n = species();
    for (int i = 0; i < n; ++i) {
        b_(i, i) = 0.0;
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            if (!(b_(i, j) > 0.0) || !std::isfinite(b_(i, j)))
                throw DomainError("friction coefficient b(" + std::to_string(i + 1) + "," +
                                  std::to_string(j + 1) + ") must be positive");
            const double scale = std::max(std::abs(b_(i, j)), std::abs(b_(j, i)));
            if (std::abs(b_(i, j) - b_(j, i)) > 1e-12 * scale)
                throw DomainError("friction matrix is not symmetric at (" + std::to_string(i + 1) + "," +
                                  std::to_string(j + 1) + ")");
        }
    }
}

FrictionMatrix FrictionMatrix::ternary_reference()
{
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(3, 3);
    b(0, 1) = b(1, 0) = 1.0 / 0.833;
    b(0, 2) = b(2, 0) = 1.0 / 0.833;
    b(1, 2) = b(2, 1) = 1.0 / 0.168;
    return FrictionMatrix(b);
}

FrictionMatrix FrictionMatrix::binary(double b12)
{
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(2, 2);
    b(0, 1) = b(1, 0) = b12;
    return FrictionMatrix(b);
}

FrictionMatrix FrictionMatrix::scaled(double factor) const
{
    return FrictionMatrix(b_ * factor);
}

Eigen::MatrixXd assemble_B(std::span<const double> rho_hat, const FrictionMatrix& b)
{
    const int n = b.species();
    if (static_cast<int>(rho_hat.size()) != n) throw DimensionError("assemble_B: density length != species");
    require_positive(rho_hat, "assemble_B");
    Eigen::MatrixXd out(n - 1, n - 1);
    for (int i = 0; i < n - 1; ++i) {
        double diag = 0.0;
        for (int m = 0; m < n; ++m)
            if (m != i) diag += b(i, m) * rho_hat[i] * rho_hat[m];
        for (int j = 0; j < n - 1; ++j)
            out(i, j) = i == j ? diag : -b(i, j) * rho_hat[i] * rho_hat[j];
    }
    return out;
}

Eigen::MatrixXd assemble_Q(std::span<const double> rho_hat)
{
    const int n = static_cast<int>(rho_hat.size());
    if (n < 2) throw DimensionError("assemble_Q: need at least two species");
    require_positive(rho_hat, "assemble_Q");
    Eigen::MatrixXd q = Eigen::MatrixXd::Constant(n - 1, n - 1, 1.0 / rho_hat[n - 1]);
    for (int i = 0; i < n - 1; ++i) q(i, i) += 1.0 / rho_hat[i];
    return q;
}

Eigen::MatrixXd assemble_Qinv(std::span<const double> rho_hat)
{
    const int n = static_cast<int>(rho_hat.size());
    if (n < 2) throw DimensionError("assemble_Qinv: need at least two species");
    require_positive(rho_hat, "assemble_Qinv");
    double total = 0.0;
    for (double r : rho_hat) total += r;
    Eigen::MatrixXd qi(n - 1, n - 1);
    for (int i = 0; i < n - 1; ++i)
        for (int j = 0; j < n - 1; ++j)
            qi(i, j) = (i == j ? rho_hat[i] : 0.0) - rho_hat[i] * rho_hat[j] / total;
    return qi;
}

Eigen::MatrixXd diffusion_matrix(std::span<const double> rho_hat, const FrictionMatrix& b)
{
    const Eigen::MatrixXd bmat = assemble_B(rho_hat, b);
    const Eigen::MatrixXd qinv = assemble_Qinv(rho_hat);
    const Eigen::LLT<Eigen::MatrixXd> chol(bmat);
    if (chol.info() != Eigen::Success)
        throw SolverError("friction block B is not positive definite");
    Eigen::MatrixXd d = qinv.transpose() * chol.solve(qinv);
    // Exact symmetry; the product is symmetric up to roundoff.
    return 0.5 * (d + d.transpose());
}

EdgeDiffusionTensor::EdgeDiffusionTensor(const GridSpec& grid, int reduced_species)
    : m_(reduced_species), axes_(grid.dim()), edges_(grid.cell_count()),
      blocks_(static_cast<std::size_t>(grid.dim()) * grid.cell_count(),
              Eigen::MatrixXd::Zero(reduced_species, reduced_species))
{
    if (reduced_species < 1) throw DimensionError("diffusion tensor needs at least one reduced species");
}

EdgeDiffusionTensor EdgeDiffusionTensor::identity(const GridSpec& grid, int reduced_species)
{
    EdgeDiffusionTensor t(grid, reduced_species);
    for (auto& block : t.blocks_) block.setIdentity();
    return t;
}

EdgeDiffusionTensor assemble_D_hat(const CellField& rho_prev, const FrictionMatrix& b, const GridSpec& grid)
{
    require_shape(rho_prev, grid, "assemble_D_hat");
    const int n = b.species();
    if (rho_prev.species() != n) throw DimensionError("assemble_D_hat: species count mismatch");
    for (std::size_t c = 0; c < grid.cell_count(); ++c) {
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            if (!(rho_prev(i, c) > 0.0)) throw DomainError("assemble_D_hat: nonpositive density");
            total += rho_prev(i, c);
        }
        if (std::abs(total - 1.0) > 1e-8)
            throw DomainError("assemble_D_hat: densities do not sum to one at cell " + std::to_string(c));
    }

    const EdgeField avg = average_to_edges(rho_prev, grid);
    EdgeDiffusionTensor out(grid, n - 1);
    std::vector<double> point(static_cast<std::size_t>(n));
    for (int s = 0; s < grid.dim(); ++s)
        for (std::size_t e = 0; e < grid.cell_count(); ++e) {
            for (int i = 0; i < n; ++i) point[i] = avg(i, s, e);
            out.at(s, e) = diffusion_matrix(point, b);
        }
    return out;
}

}  // namespace msd
