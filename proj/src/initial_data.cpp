#include "msd/initial_data.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace msd {

namespace {

double wrap_unit(double x)
{
    double w = std::fmod(x, 1.0);
    return w < 0.0 ? w + 1.0 : w;
}

double ternary_1d_first(double x)
{
    x = wrap_unit(x);
    if (x < 0.25) return 0.8;
    if (x < 0.5) return 1.6 * (0.75 - x);
    if (x < 0.75) return 1.6 * (x - 0.25);
    return 0.8;
}

double radial_first(double x, double y)
{
    const double r = std::hypot(wrap_unit(x) - 0.5, wrap_unit(y) - 0.5);
    return r <= 0.125 ? r / 2.0 + 0.1 : 0.6;
}

constexpr double kTrace = 1e-4;

}  // namespace

InitialProfile ternary_1d_profile()
{
    return {"paper-1d", 3, 1, [](int i, double x, double) {
                const double first = ternary_1d_first(x);
                if (i == 0) return first;
                if (i == 1) return kTrace;
                return 1.0 - first - kTrace;
            }};
}

InitialProfile radial_2d_profile()
{
    return {"paper-2d", 3, 2, [](int i, double x, double y) {
                const double first = radial_first(x, y);
                if (i == 0) return first;
                if (i == 1) return kTrace;
                return 1.0 - first - kTrace;
            }};
}

InitialProfile two_species_cosine_profile(double amplitude, double length)
{
    if (!(std::abs(amplitude) < 0.5)) throw DomainError("cosine amplitude must be below 1/2");
    return {"two-species-cosine", 2, 1, [amplitude, length](int i, double x, double) {
                const double first = 0.5 + amplitude * std::cos(2.0 * std::numbers::pi * x / length);
                return i == 0 ? first : 1.0 - first;
            }};
}

InitialProfile builtin_profile(const std::string& name)
{
    if (name == "paper-1d" || name == "ternary-1d") return ternary_1d_profile();
    if (name == "paper-2d" || name == "radial-2d") return radial_2d_profile();
    if (name == "two-species-cosine") return two_species_cosine_profile();
    throw DomainError("unknown built-in initial condition '" + name + "'");
}

CellField sample_profile(const InitialProfile& profile, const GridSpec& grid)
{
    if (profile.dim != grid.dim())
        throw DimensionError("profile '" + profile.name + "' is " + std::to_string(profile.dim) +
                             "-dimensional, grid is " + std::to_string(grid.dim()) + "-dimensional");
    CellField rho(grid, profile.species);
    for (std::size_t c = 0; c < grid.cell_count(); ++c) {
        const double x = grid.cell_center(c, 0);
        const double y = grid.dim() == 2 ? grid.cell_center(c, 1) : 0.0;
        for (int i = 0; i < profile.species; ++i) rho(i, c) = profile.density(i, x, y);
    }
    return rho;
}

std::vector<double> continuum_mean(const InitialProfile& profile, double length)
{
    if (profile.dim != 1) throw DimensionError("continuum_mean: only 1D profiles");
    constexpr int panels = 64;
    std::vector<double> means(static_cast<std::size_t>(profile.species), 0.0);
    for (int i = 0; i < profile.species; ++i) {
        auto f = [&](double x) { return profile.density(i, x, 0.0); };
        double acc = 0.0;
        for (int p = 0; p < panels; ++p) {
            const double a = length * p / panels;
            const double b = length * (p + 1) / panels;
            acc += boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, 5, 1e-15);
        }
        means[i] = acc / length;
    }
    return means;
}

double heat_mode_density(double x, double t, double b12, double amplitude, double length)
{
    const double k = 2.0 * std::numbers::pi / length;
    return 0.5 + amplitude * std::exp(-k * k * t / b12) * std::cos(k * x);
}

CellField read_tabulated(const std::string& path, const GridSpec& grid, int species)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open initial data file '" + path + "'");
    CellField rho(grid, species);
    std::string line;
    std::size_t row = 0;
    std::size_t line_no = 0;
    const int skip = grid.dim();
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::vector<double> cols;
        std::stringstream ss(line);
        std::string cell;
        bool numeric = true;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                cols.push_back(std::stod(cell, &used));
            } catch (const std::exception&) {
                numeric = false;
                break;
            }
        }
        if (!numeric) {
            if (row == 0) continue;  // header
            throw DomainError(path + ":" + std::to_string(line_no) + ": non-numeric entry");
        }
        if (static_cast<int>(cols.size()) != skip + species)
            throw DimensionError(path + ":" + std::to_string(line_no) + ": expected " +
                                 std::to_string(skip + species) + " columns, got " + std::to_string(cols.size()));
        if (row >= grid.cell_count())
            throw DimensionError(path + ": more rows than grid cells (" + std::to_string(grid.cell_count()) + ")");
        for (int i = 0; i < species; ++i) rho(i, row) = cols[skip + i];
        ++row;
    }
    if (row != grid.cell_count())
        throw DimensionError(path + ": " + std::to_string(row) + " rows, grid has " +
                             std::to_string(grid.cell_count()) + " cells");
    return rho;
}

}  // namespace msd
