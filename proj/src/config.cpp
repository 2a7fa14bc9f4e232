#include "msd/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "msd/initial_data.hpp"

namespace msd {

ConfigError::ConfigError(const std::string& source, int line, const std::string& key, const std::string& message)
    : std::runtime_error(source + (line > 0 ? ":" + std::to_string(line) : std::string()) +
                         (key.empty() ? std::string() : ": [" + key + "]") + ": " + message),
      line_(line), key_(key)
{
}

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_plain(const std::string& text)
{
    const std::string t = trim(text);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
        throw std::invalid_argument("not a number: '" + t + "'");
    return v;
}

long long parse_integer(const std::string& text)
{
    const std::string t = trim(text);
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || ptr != t.data() + t.size())
        throw std::invalid_argument("not an integer: '" + t + "'");
    return v;
}

std::vector<double> parse_list(const std::string& text)
{
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_number(item));
    if (out.empty()) throw std::invalid_argument("empty list");
    return out;
}

struct Entry {
    std::string value;
    int line = 0;
};

}  // namespace

double parse_number(const std::string& text)
{
    const auto slash = text.find('/');
    if (slash == std::string::npos) return parse_plain(text);
    const double num = parse_plain(text.substr(0, slash));
    const double den = parse_plain(text.substr(slash + 1));
    if (den == 0.0) throw std::invalid_argument("division by zero in '" + trim(text) + "'");
    return num / den;
}

RunConfig RunConfig::defaults()
{
    RunConfig cfg;
    cfg.friction = FrictionMatrix::ternary_reference().matrix();
    return cfg;
}

void RunConfig::validate() const
{
    auto fail = [](const std::string& key, const std::string& msg) { throw ConfigError("config", 0, key, msg); };
    if (dim != 1 && dim != 2) fail("grid.dim", "must be 1 or 2");
    if (cells < 4) fail("grid.N", "must be at least 4");
    if (!(length > 0.0)) fail("grid.L", "must be positive");
    if (species < 2) fail("mixture.n", "need at least two species");
    if (friction.rows() != species || friction.cols() != species) fail("mixture.b", "size does not match n");
    try {
        (void)FrictionMatrix(friction);
    } catch (const std::exception& e) {
        fail("mixture.b", e.what());
    }
    if (!(solver.dt > 0.0) || !std::isfinite(solver.dt)) fail("solver.dt", "must be positive");
    if (steps < 0) fail("solver.steps", "must be nonnegative");
    if (!(solver.newton_tol > 0.0)) fail("solver.newton_tol", "must be positive");
    if (solver.max_newton_iters < 1) fail("solver.max_newton_iters", "must be at least 1");
    if (!(solver.interior_margin > 0.0 && solver.interior_margin < 1.0))
        fail("solver.interior_margin", "must lie in (0, 1)");
    if (!(solver.linear_tol > 0.0)) fail("solver.linear_tol", "must be positive");
    if (emit_fields_every < 0) fail("output.emit_fields_every", "must be nonnegative");
    if (initial_file.empty()) {
        InitialProfile p;
        try {
            p = builtin_profile(initial);
        } catch (const std::exception& e) {
            fail("mixture.initial", e.what());
        }
        if (p.species != species)
            fail("mixture.initial", "'" + initial + "' has " + std::to_string(p.species) + " species, n = " +
                                        std::to_string(species));
        if (p.dim != dim)
            fail("mixture.initial", "'" + initial + "' is " + std::to_string(p.dim) + "-dimensional, grid.dim = " +
                                        std::to_string(dim));
    }
    if (!(t_final > 0.0)) fail("study.t_final", "must be positive");
    if (!(space_h_min > 0.0 && space_h_min <= space_h_max)) fail("study.space_h_min", "need 0 < min <= max");
    if (!(time_dt_min > 0.0 && time_dt_min <= time_dt_max)) fail("study.time_dt_min", "need 0 < min <= max");
    if (space_count < 1) fail("study.space_count", "must be at least 1");
    if (time_count < 1) fail("study.time_count", "must be at least 1");
    if (!(space_dt > 0.0)) fail("study.space_dt", "must be positive");
    if (!(time_h > 0.0)) fail("study.time_h", "must be positive");
    for (double v : truncation_h)
        if (!(v > 0.0)) fail("truncation.h_values", "entries must be positive");
    for (double v : truncation_dt)
        if (!(v > 0.0)) fail("truncation.dt_values", "entries must be positive");
}

RunConfig parse_config(std::istream& in, const std::string& source)
{
    std::map<std::string, Entry> entries;
    std::string section;
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find_first_of("#;");
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(source, line_no, "", "malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            static const char* known[] = {"grid", "mixture", "solver", "output", "study", "truncation", "verify"};
            if (std::find(std::begin(known), std::end(known), section) == std::end(known))
                throw ConfigError(source, line_no, section, "unknown section");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(source, line_no, "", "expected key = value");
        if (section.empty()) throw ConfigError(source, line_no, trim(line.substr(0, eq)), "key outside any section");
        const std::string key = section + "." + trim(line.substr(0, eq));
        if (entries.count(key)) throw ConfigError(source, line_no, key, "duplicate key");
        entries[key] = {trim(line.substr(eq + 1)), line_no};
    }

    RunConfig cfg = RunConfig::defaults();
    std::map<std::pair<int, int>, std::pair<double, int>> pairs;  // (i, j) -> value, line

    for (const auto& [key, e] : entries) {
        auto err = [&, &key = key, &e = e](const std::string& msg) { return ConfigError(source, e.line, key, msg); };
        try {
            const std::string& v = e.value;
            if (key == "grid.dim") cfg.dim = static_cast<int>(parse_integer(v));
            else if (key == "grid.N") cfg.cells = static_cast<int>(parse_integer(v));
            else if (key == "grid.L") cfg.length = parse_number(v);
            else if (key == "mixture.n") cfg.species = static_cast<int>(parse_integer(v));
            else if (key == "mixture.initial") cfg.initial = v;
            else if (key == "mixture.initial_file") cfg.initial_file = v;
            else if (key.rfind("mixture.b.", 0) == 0) {
                const std::string idx = key.substr(10);
                const auto dot = idx.find('.');
                if (dot == std::string::npos) throw err("expected b.i.j");
                const int i = static_cast<int>(parse_integer(idx.substr(0, dot)));
                const int j = static_cast<int>(parse_integer(idx.substr(dot + 1)));
                if (i == j) throw err("diagonal friction entries are not used");
                pairs[{i, j}] = {parse_number(v), e.line};
            }
            else if (key == "solver.dt") cfg.solver.dt = parse_number(v);
            else if (key == "solver.steps") cfg.steps = static_cast<int>(parse_integer(v));
            else if (key == "solver.newton_tol") cfg.solver.newton_tol = parse_number(v);
            else if (key == "solver.max_newton_iters") cfg.solver.max_newton_iters = static_cast<int>(parse_integer(v));
            else if (key == "solver.interior_margin") cfg.solver.interior_margin = parse_number(v);
            else if (key == "solver.linear_tol") cfg.solver.linear_tol = parse_number(v);
            else if (key == "output.dir") cfg.output_dir = v;
            else if (key == "output.emit_fields_every") cfg.emit_fields_every = static_cast<int>(parse_integer(v));
            else if (key == "study.t_final") cfg.t_final = parse_number(v);
            else if (key == "study.space_h_min") cfg.space_h_min = parse_number(v);
            else if (key == "study.space_h_max") cfg.space_h_max = parse_number(v);
            else if (key == "study.space_count") cfg.space_count = static_cast<int>(parse_integer(v));
            else if (key == "study.space_dt") cfg.space_dt = parse_number(v);
            else if (key == "study.time_dt_min") cfg.time_dt_min = parse_number(v);
            else if (key == "study.time_dt_max") cfg.time_dt_max = parse_number(v);
            else if (key == "study.time_count") cfg.time_count = static_cast<int>(parse_integer(v));
            else if (key == "study.time_h") cfg.time_h = parse_number(v);
            else if (key == "truncation.solution") cfg.truncation_solution = v;
            else if (key == "truncation.h_values") cfg.truncation_h = parse_list(v);
            else if (key == "truncation.dt_values") cfg.truncation_dt = parse_list(v);
            else if (key == "verify.seed") {
                std::uint64_t seed = 0;
                const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), seed);
                if (v.empty() || ec != std::errc() || ptr != v.data() + v.size())
                    throw err("not an unsigned integer: '" + v + "'");
                cfg.seed = seed;
            }
            else throw err("unknown key");
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& ex) {
            throw err(ex.what());
        }
    }

    if (!pairs.empty() || cfg.species != 3) {
        const int n = cfg.species;
        if (n < 2) throw ConfigError(source, entries.count("mixture.n") ? entries["mixture.n"].line : 0, "mixture.n",
                                     "need at least two species");
        Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);
        Eigen::MatrixXi seen = Eigen::MatrixXi::Zero(n, n);
        for (const auto& [ij, val] : pairs) {
            const auto [i, j] = ij;
            const std::string key = "mixture.b." + std::to_string(i) + "." + std::to_string(j);
            if (i < 1 || j < 1 || i > n || j > n) throw ConfigError(source, val.second, key, "index outside 1..n");
            if (!(val.first > 0.0)) throw ConfigError(source, val.second, key, "friction must be positive");
            if (seen(j - 1, i - 1)) {
                const double other = b(j - 1, i - 1);
                if (std::abs(other - val.first) > 1e-12 * std::max(std::abs(other), std::abs(val.first)))
                    throw ConfigError(source, val.second, key, "asymmetric friction: b.i.j != b.j.i");
            }
            b(i - 1, j - 1) = b(j - 1, i - 1) = val.first;
            seen(i - 1, j - 1) = 1;
        }
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (!seen(i, j) && !seen(j, i))
                    throw ConfigError(source, 0,
                                      "mixture.b." + std::to_string(i + 1) + "." + std::to_string(j + 1),
                                      "missing friction coefficient");
        cfg.friction = b;
    }

    try {
        cfg.validate();
    } catch (const ConfigError& e) {
        const auto it = entries.find(e.key());
        if (it != entries.end()) {
            const std::string msg = e.what();
            const auto cut = msg.find("]: ");
            throw ConfigError(source, it->second.line, e.key(), cut == std::string::npos ? msg : msg.substr(cut + 3));
        }
        const std::string msg = e.what();
        const auto cut = msg.find("]: ");
        throw ConfigError(source, 0, e.key(), cut == std::string::npos ? msg : msg.substr(cut + 3));
    }
    return cfg;
}

RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError(path, 0, "", "cannot open file");
    return parse_config(in, path);
}

void write_config(std::ostream& out, const RunConfig& cfg)
{
    const auto flags = out.flags();
    const auto prec = out.precision();
    out << std::setprecision(17);
    auto list = [&](const std::vector<double>& v) {
        for (std::size_t k = 0; k < v.size(); ++k) out << (k ? ", " : "") << v[k];
        out << '\n';
    };
    out << "[grid]\ndim = " << cfg.dim << "\nN = " << cfg.cells << "\nL = " << cfg.length << "\n\n";
    out << "[mixture]\nn = " << cfg.species << '\n';
    for (int i = 0; i < cfg.species; ++i)
        for (int j = i + 1; j < cfg.species; ++j)
            out << "b." << i + 1 << '.' << j + 1 << " = " << cfg.friction(i, j) << '\n';
    out << "initial = " << cfg.initial << '\n';
    if (!cfg.initial_file.empty()) out << "initial_file = " << cfg.initial_file << '\n';
    out << "\n[solver]\ndt = " << cfg.solver.dt << "\nsteps = " << cfg.steps
        << "\nnewton_tol = " << cfg.solver.newton_tol << "\nmax_newton_iters = " << cfg.solver.max_newton_iters
        << "\ninterior_margin = " << cfg.solver.interior_margin << "\nlinear_tol = " << cfg.solver.linear_tol
        << "\n\n";
    out << "[output]\ndir = " << cfg.output_dir << "\nemit_fields_every = " << cfg.emit_fields_every << "\n\n";
    out << "[study]\nt_final = " << cfg.t_final << "\nspace_h_min = " << cfg.space_h_min
        << "\nspace_h_max = " << cfg.space_h_max << "\nspace_count = " << cfg.space_count
        << "\nspace_dt = " << cfg.space_dt << "\ntime_dt_min = " << cfg.time_dt_min
        << "\ntime_dt_max = " << cfg.time_dt_max << "\ntime_count = " << cfg.time_count
        << "\ntime_h = " << cfg.time_h << "\n\n";
    out << "[truncation]\nsolution = " << cfg.truncation_solution << "\nh_values = ";
    list(cfg.truncation_h);
    out << "dt_values = ";
    list(cfg.truncation_dt);
    out << "\n[verify]\nseed = " << cfg.seed << '\n';
    out.flags(flags);
    out.precision(prec);
}

}  // namespace msd
