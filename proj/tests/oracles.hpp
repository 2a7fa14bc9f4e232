#pragma once

// Reference implementations kept deliberately naive: plain loops over the
// formulas, no shared code with the library.

#include <cmath>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

// 1D periodic, cell l (0-based) at (l+1)h, edge l between cells l and l+1.
inline std::vector<double> gradient_1d(const std::vector<double>& f, double h)
{
    const std::size_t n = f.size();
    std::vector<double> out(n);
    for (std::size_t l = 0; l < n; ++l) out[l] = (f[(l + 1) % n] - f[l]) / h;
    return out;
}

inline std::vector<double> divergence_1d(const std::vector<double>& phi, double h)
{
    const std::size_t n = phi.size();
    std::vector<double> out(n);
    for (std::size_t l = 0; l < n; ++l) out[l] = (phi[l] - phi[(l + n - 1) % n]) / h;
    return out;
}

// Periodic Laplacian times -1: 3-point in 1D, 5-point in 2D (flat index i + N j).
inline std::vector<double> neg_laplacian(const std::vector<double>& f, int dim, int n_axis, double h)
{
    std::vector<double> out(f.size(), 0.0);
    auto at = [&](int i, int j) { return f[((i + n_axis) % n_axis) + n_axis * ((j + n_axis) % n_axis)]; };
    for (int j = 0; j < (dim == 2 ? n_axis : 1); ++j)
        for (int i = 0; i < n_axis; ++i) {
            double s = 2.0 * at(i, j) - at(i + 1, j) - at(i - 1, j);
            if (dim == 2) s += 2.0 * at(i, j) - at(i, j + 1) - at(i, j - 1);
            out[i + n_axis * j] = s / (h * h);
        }
    return out;
}

inline Eigen::MatrixXd B(const std::vector<double>& r, const Eigen::MatrixXd& b)
{
    const int n = static_cast<int>(r.size());
    Eigen::MatrixXd out(n - 1, n - 1);
    for (int i = 0; i < n - 1; ++i)
        for (int j = 0; j < n - 1; ++j) {
            double v = 0.0;
            if (i == j)
                for (int m = 0; m < n; ++m)
                    if (m != i) v += b(i, m) * r[i] * r[m];
            if (i != j) v -= b(i, j) * r[i] * r[j];
            out(i, j) = v;
        }
    return out;
}

// Friction balance for all n velocities. Row i of
//   grad mu_i - (sum_j r_j grad mu_j)/sum r = -sum_j b_ij r_j (v_i - v_j)
// is scaled by r_i; those rows then sum to zero, so the last one is replaced by
// sum_j r_j v_j = 0 and the square system is solved with full pivoting.
inline Eigen::VectorXd friction_fluxes(const std::vector<double>& r, const Eigen::MatrixXd& b,
                                       const std::vector<double>& grad_mu)
{
    const int n = static_cast<int>(r.size());
    double total = 0.0, w = 0.0;
    for (int j = 0; j < n; ++j) {
        total += r[j];
        w += r[j] * grad_mu[j];
    }
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd rhs(n);
    for (int i = 0; i < n - 1; ++i) {
        for (int j = 0; j < n; ++j)
            if (j != i) {
                a(i, i) -= r[i] * b(i, j) * r[j];
                a(i, j) += r[i] * b(i, j) * r[j];
            }
        rhs(i) = r[i] * (grad_mu[i] - w / total);
    }
    for (int j = 0; j < n; ++j) a(n - 1, j) = r[j];
    rhs(n - 1) = 0.0;
    const Eigen::VectorXd v = a.fullPivLu().solve(rhs);
    Eigen::VectorXd flux(n);
    for (int i = 0; i < n; ++i) flux(i) = r[i] * v(i);
    return flux;
}

inline double heat_mode(double x, double t, double b12, double amp = 0.1)
{
    const double k = 2.0 * std::numbers::pi;
    return 0.5 + amp * std::exp(-k * k * t / b12) * std::cos(k * x);
}

inline double entropy_loop(const std::vector<std::vector<double>>& rho, double cell_volume)
{
    double s = 0.0;
    for (const auto& species : rho)
        for (double v : species) s += v * std::log(v);
    return s * cell_volume;
}

}  // namespace oracle
