#include "popctl/config.hpp"

#include "popctl/errors.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace popctl {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& known_keys() {
    static const std::map<std::string, std::set<std::string>> keys = {
        {"problem", {"name", "sigma", "R", "T", "beta", "c0", "Q", "nu", "q"}},
        {"solver",
         {"mode", "lo", "hi", "n", "modes", "strict", "auto_widen", "M", "dt", "max_cells", "grid", "surface_times",
          "surface_points"}},
        {"experiment",
         {"agents", "realizations", "seed", "dt", "T", "snapshot_fractions", "snapshot_times", "init", "init_lo",
          "init_hi", "hist_lo", "hist_hi", "bins", "l1_threshold", "max_escape", "goals", "attractors", "radius",
          "min_improvement", "min_cluster_fraction", "baseline", "controller"}},
        {"output", {"directory", "trajectories"}},
    };
    return keys;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// Maps "section.key" to its line in the source text, for diagnostics.
std::map<std::string, int> line_index(const std::string& text) {
    std::map<std::string, int> lines;
    std::istringstream is(text);
    std::string line;
    std::string section;
    int n = 0;
    while (std::getline(is, line)) {
        ++n;
        const std::string t = trim(line);
        if (t.empty() || t[0] == ';' || t[0] == '#') {
            continue;
        }
        if (t.front() == '[' && t.back() == ']') {
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        const auto eq = t.find('=');
        if (eq != std::string::npos) {
            lines[section + "." + trim(t.substr(0, eq))] = n;
        }
    }
    return lines;
}

class Reader {
public:
    Reader(const pt::ptree& tree, std::map<std::string, int> lines, std::string source)
        : tree_(tree), lines_(std::move(lines)), source_(std::move(source)) {}

    [[noreturn]] void error(const std::string& field, const std::string& what) const {
        std::ostringstream os;
        os << source_;
        auto it = lines_.find(field);
        if (it != lines_.end()) {
            os << ':' << it->second;
        }
        os << ": " << field << ": " << what;
        fail(ErrorKind::configuration, os.str());
    }

    std::optional<std::string> raw(const std::string& field) const {
        auto v = tree_.get_optional<std::string>(pt::ptree::path_type(field, '.'));
        if (!v) {
            return std::nullopt;
        }
        return trim(*v);
    }

    double number(const std::string& field, const std::string& text) const {
        errno = 0;
        char* end = nullptr;
        const double v = std::strtod(text.c_str(), &end);
        if (text.empty() || end != text.c_str() + text.size() || errno == ERANGE || !std::isfinite(v)) {
            error(field, "expected a finite number, got '" + text + "'");
        }
        return v;
    }

    void get(const std::string& field, double& out) const {
        if (auto v = raw(field)) {
            out = number(field, *v);
        }
    }
    void get(const std::string& field, std::optional<double>& out) const {
        if (auto v = raw(field)) {
            out = number(field, *v);
        }
    }
    void get(const std::string& field, std::size_t& out) const {
        if (auto v = raw(field)) {
            const double d = number(field, *v);
            if (d < 0.0 || d != std::floor(d) || d > 1e15) {
                error(field, "expected a non-negative integer, got '" + *v + "'");
            }
            out = static_cast<std::size_t>(d);
        }
    }
    void get(const std::string& field, std::uint64_t& out, bool) const {
        if (auto v = raw(field)) {
            errno = 0;
            char* end = nullptr;
            const unsigned long long u = std::strtoull(v->c_str(), &end, 10);
            if (v->empty() || (*v)[0] == '-' || end != v->c_str() + v->size() || errno == ERANGE) {
                error(field, "expected an unsigned integer, got '" + *v + "'");
            }
            out = u;
        }
    }
    void get(const std::string& field, bool& out) const {
        if (auto v = raw(field)) {
            if (*v == "true" || *v == "1" || *v == "yes") {
                out = true;
            } else if (*v == "false" || *v == "0" || *v == "no") {
                out = false;
            } else {
                error(field, "expected true or false, got '" + *v + "'");
            }
        }
    }
    void get(const std::string& field, std::string& out) const {
        if (auto v = raw(field)) {
            out = *v;
        }
    }
    void get(const std::string& field, std::vector<double>& out) const {
        if (auto v = raw(field)) {
            out = list(field, *v);
        }
    }
    void get(const std::string& field, std::vector<Point>& out) const {
        if (auto v = raw(field)) {
            out.clear();
            std::istringstream is(*v);
            std::string item;
            while (std::getline(is, item, ';')) {
                if (!trim(item).empty()) {
                    out.push_back(list(field, item));
                }
            }
        }
    }

    std::vector<double> list(const std::string& field, const std::string& text) const {
        std::vector<double> out;
        std::istringstream is(text);
        std::string item;
        while (std::getline(is, item, ',')) {
            out.push_back(number(field, trim(item)));
        }
        return out;
    }

private:
    const pt::ptree& tree_;
    std::map<std::string, int> lines_;
    std::string source_;
};

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

std::string fmt(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        s += (i ? ", " : "") + fmt(v[i]);
    }
    return s;
}

std::string fmt(const std::vector<Point>& pts) {
    std::string s;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        s += (i ? "; " : "") + fmt(pts[i]);
    }
    return s;
}

Box make_box(const std::vector<double>& lo, const std::vector<double>& hi) {
    Box b;
    b.lo = lo;
    b.hi = hi;
    return b;
}

}  // namespace

RunConfig RunConfig::parse(std::istream& is, const std::vector<std::string>& overrides, const std::string& source) {
    const std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    pt::ptree tree;
    try {
        std::istringstream in(text);
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        fail(ErrorKind::configuration, source + ":" + std::to_string(e.line()) + ": " + e.message());
    }
    for (const auto& o : overrides) {
        const auto eq = o.find('=');
        const auto dot = o.find('.');
        if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
            fail(ErrorKind::configuration, "override '" + o + "' is not of the form section.key=value");
        }
        const std::string section = trim(o.substr(0, dot));
        const std::string key = trim(o.substr(dot + 1, eq - dot - 1));
        tree.put(pt::ptree::path_type(section + "." + key, '.'), trim(o.substr(eq + 1)));
    }
    for (const auto& [section, body] : tree) {
        auto it = known_keys().find(section);
        if (it == known_keys().end()) {
            if (body.empty() && !body.data().empty()) {
                fail(ErrorKind::configuration, source + ": key '" + section + "' outside any section");
            }
            fail(ErrorKind::configuration, source + ": unknown section [" + section + "]");
        }
        for (const auto& [key, value] : body) {
            if (!it->second.count(key)) {
                const auto lines = line_index(text);
                auto l = lines.find(section + "." + key);
                fail(ErrorKind::configuration, source + (l != lines.end() ? ":" + std::to_string(l->second) : "") +
                                                   ": unknown key " + section + "." + key);
            }
        }
    }

    const Reader r(tree, line_index(text), source);
    RunConfig c;
    auto& p = c.problem;
    r.get("problem.name", p.name);
    r.get("problem.sigma", p.sigma);
    r.get("problem.R", p.R);
    r.get("problem.T", p.T);
    r.get("problem.beta", p.beta);
    r.get("problem.c0", p.c0);
    r.get("problem.Q", p.Q);
    r.get("problem.nu", p.nu);
    r.get("problem.q", p.q);

    auto& s = c.solver;
    r.get("solver.mode", s.mode);
    r.get("solver.lo", s.lo);
    r.get("solver.hi", s.hi);
    r.get("solver.n", s.n);
    r.get("solver.modes", s.modes);
    r.get("solver.strict", s.strict);
    r.get("solver.auto_widen", s.auto_widen);
    r.get("solver.M", s.M);
    r.get("solver.dt", s.dt);
    r.get("solver.max_cells", s.max_cells);
    r.get("solver.grid", s.grid);
    r.get("solver.surface_times", s.surface_times);
    r.get("solver.surface_points", s.surface_points);

    auto& e = c.experiment;
    e.agents = 0;
    e.realizations = 0;
    r.get("experiment.agents", e.agents);
    r.get("experiment.realizations", e.realizations);
    r.get("experiment.seed", e.seed, true);
    r.get("experiment.dt", e.dt);
    r.get("experiment.T", e.T);
    r.get("experiment.snapshot_fractions", e.snapshot_fractions);
    r.get("experiment.snapshot_times", e.snapshot_times);
    r.get("experiment.init", e.init);
    r.get("experiment.init_lo", e.init_lo);
    r.get("experiment.init_hi", e.init_hi);
    r.get("experiment.hist_lo", e.hist_lo);
    r.get("experiment.hist_hi", e.hist_hi);
    r.get("experiment.bins", e.bins);
    r.get("experiment.l1_threshold", e.l1_threshold);
    r.get("experiment.max_escape", e.max_escape);
    r.get("experiment.goals", e.goals);
    r.get("experiment.attractors", e.attractors);
    r.get("experiment.radius", e.radius);
    r.get("experiment.min_improvement", e.min_improvement);
    r.get("experiment.min_cluster_fraction", e.min_cluster_fraction);
    r.get("experiment.baseline", e.baseline);
    r.get("experiment.controller", e.controller);

    r.get("output.directory", c.output.directory);
    r.get("output.trajectories", c.output.trajectories);

    // Validation and problem-dependent defaults.
    if (s.mode != "stationary" && s.mode != "finite_horizon") {
        r.error("solver.mode", "expected stationary or finite_horizon, got '" + s.mode + "'");
    }
    if (s.grid != "global" && s.grid != "local") {
        r.error("solver.grid", "expected global or local, got '" + s.grid + "'");
    }
    if (e.init != "uniform" && e.init != "stationary") {
        r.error("experiment.init", "expected uniform or stationary, got '" + e.init + "'");
    }
    if (!(s.dt > 0.0)) {
        r.error("solver.dt", "must be positive");
    }
    if (e.dt < 0.0) {
        r.error("experiment.dt", "must be positive");
    }
    if (e.bins == 0) {
        r.error("experiment.bins", "must be positive");
    }
    if (!(e.hist_hi > e.hist_lo)) {
        r.error("experiment.hist_hi", "must exceed hist_lo");
    }
    if (!(e.radius > 0.0)) {
        r.error("experiment.radius", "must be positive");
    }
    if (c.output.directory.empty()) {
        r.error("output.directory", "must not be empty");
    }

    const ControlProblem problem = c.build_problem();
    const std::size_t d = problem.dim;
    const bool stationary = s.mode == "stationary";
    if (s.lo.empty() && s.hi.empty()) {
        const double w = stationary ? 8.0 : (d == 1 ? 4.0 : 2.0);
        s.lo.assign(d, -w);
        s.hi.assign(d, w);
    }
    if (s.lo.size() != d || s.hi.size() != d) {
        r.error("solver.lo", "domain bounds need " + std::to_string(d) + " entries each");
    }
    for (std::size_t k = 0; k < d; ++k) {
        if (!(s.hi[k] > s.lo[k])) {
            r.error("solver.hi", "must exceed solver.lo in every dimension");
        }
    }
    if (stationary && d != 1) {
        r.error("solver.mode", "stationary mode needs a 1D problem");
    }
    if (e.agents == 0) {
        e.agents = stationary ? 500 : 400;
    }
    if (e.realizations == 0) {
        e.realizations = stationary ? 100 : 1;
    }
    if (e.dt == 0.0) {
        e.dt = stationary ? 0.01 : s.dt;
    }
    if (e.init_lo.empty() && e.init_hi.empty()) {
        e.init_lo.assign(d, -2.0);
        e.init_hi.assign(d, 2.0);
    }
    if (e.init_lo.size() != d || e.init_hi.size() != d) {
        r.error("experiment.init_lo", "initial box needs " + std::to_string(d) + " entries each");
    }
    if (!stationary) {
        const double T = c.horizon();
        const auto quarter = [&](double f) { return s.dt * std::round(f * T / s.dt); };
        if (s.surface_times.empty()) {
            s.surface_times = {0.0, quarter(0.25), quarter(0.5), quarter(0.75)};
        }
        if (e.snapshot_times.empty()) {
            e.snapshot_times = {quarter(0.25), quarter(0.5), quarter(0.75), T};
        }
        if (e.goals.empty() && problem.name == "double_goal_2d") {
            e.goals = {{1.0, 1.0}, {-1.0, -1.0}};
        }
        if (e.attractors.empty() && problem.name == "double_goal_2d") {
            e.attractors = {{1.0, 1.0}, {-1.0, -1.0}, {1.0, -1.0}, {-1.0, 1.0}};
        }
    }
    for (const auto& g : e.goals) {
        if (g.size() != d) {
            r.error("experiment.goals", "every goal needs " + std::to_string(d) + " coordinates");
        }
    }
    for (const auto& g : e.attractors) {
        if (g.size() != d) {
            r.error("experiment.attractors", "every attractor needs " + std::to_string(d) + " coordinates");
        }
    }
    return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
    std::ifstream is(path);
    if (!is) {
        fail(ErrorKind::configuration, "cannot open config file " + path.string());
    }
    return parse(is, overrides, path.string());
}

ControlProblem RunConfig::build_problem() const {
    const auto& p = problem;
    if (p.name == "custom") {
        if (p.nu.empty() || p.q.empty() || !p.sigma || !p.R) {
            fail(ErrorKind::configuration, "problem.name = custom needs nu, q, sigma and R");
        }
        return ControlProblem("custom", ScalarField::polynomial_1d(p.nu, "nu"), ScalarField::polynomial_1d(p.q, "q"),
                              *p.sigma, *p.R, p.T);
    }
    if (!p.nu.empty() || !p.q.empty()) {
        fail(ErrorKind::configuration, "problem.nu / problem.q are only valid with name = custom");
    }
    ControlProblem base = builtin_problem(p.name);
    if (p.name == "lqg_1d") {
        base = lqg_1d(p.beta.value_or(1.0), p.sigma.value_or(base.sigma), p.R.value_or(base.R));
    } else if (p.name == "uncontrolled_gibbs_1d") {
        base = uncontrolled_gibbs_1d(p.c0.value_or(1.0), p.sigma.value_or(base.sigma), p.R.value_or(base.R));
    } else if (p.name == "double_goal_2d") {
        base = double_goal_2d(p.Q.value_or(0.1), p.sigma.value_or(base.sigma), p.R.value_or(base.R),
                              p.T.value_or(base.horizon.value_or(4.0)));
    } else {
        if (p.sigma) {
            base = base.with_noise(*p.sigma);
        }
        if (p.R) {
            base = base.with_control_cost(*p.R);
        }
    }
    if (p.T) {
        base = base.with_horizon(*p.T);
    }
    return base;
}

double RunConfig::horizon() const {
    if (problem.T) {
        return *problem.T;
    }
    const ControlProblem p = build_problem();
    if (p.horizon) {
        return *p.horizon;
    }
    fail(ErrorKind::configuration, "finite-horizon mode needs problem.T");
}

SpectralOptions RunConfig::spectral_options() const {
    SpectralOptions o;
    o.a = solver.lo.at(0);
    o.b = solver.hi.at(0);
    o.n = solver.n;
    o.modes = solver.modes;
    o.strict = solver.strict;
    o.auto_widen = solver.auto_widen;
    return o;
}

QuadratureOptions RunConfig::quadrature_options() const {
    QuadratureOptions o;
    o.M = solver.M;
    o.dt = solver.dt;
    o.T = horizon();
    o.domain = make_box(solver.lo, solver.hi);
    o.max_cells = solver.max_cells;
    return o;
}

StationaryExperiment RunConfig::stationary_experiment() const {
    StationaryExperiment x;
    x.agents = experiment.agents;
    x.realizations = experiment.realizations;
    x.T = experiment.T;
    x.dt = experiment.dt;
    x.snapshot_fractions = experiment.snapshot_fractions;
    x.init = experiment.init == "uniform" ? InitialDensity::uniform : InitialDensity::stationary;
    x.init_box = make_box(experiment.init_lo, experiment.init_hi);
    x.hist_lo = experiment.hist_lo;
    x.hist_hi = experiment.hist_hi;
    x.bins = experiment.bins;
    x.l1_threshold = experiment.l1_threshold;
    x.max_escape = experiment.max_escape;
    x.seed = experiment.seed;
    return x;
}

FiniteHorizonExperiment RunConfig::finite_horizon_experiment() const {
    FiniteHorizonExperiment x;
    x.agents = experiment.agents * experiment.realizations;
    x.dt = experiment.dt;
    x.snapshot_times = experiment.snapshot_times;
    x.init_box = make_box(experiment.init_lo, experiment.init_hi);
    x.goals = experiment.goals;
    x.attractors = experiment.attractors;
    x.radius = experiment.radius;
    x.min_improvement = experiment.min_improvement;
    x.min_cluster_fraction = experiment.min_cluster_fraction;
    x.max_escape = experiment.max_escape;
    x.baseline = experiment.baseline;
    x.controlled = experiment.controller != "none";
    x.seed = experiment.seed;
    return x;
}

void RunConfig::write_ini(std::ostream& os) const {
    const auto opt = [&](const char* key, const std::optional<double>& v) {
        if (v) {
            os << key << " = " << fmt(*v) << '\n';
        }
    };
    os << "[problem]\n";
    os << "name = " << problem.name << '\n';
    opt("sigma", problem.sigma);
    opt("R", problem.R);
    opt("T", problem.T);
    opt("beta", problem.beta);
    opt("c0", problem.c0);
    opt("Q", problem.Q);
    if (!problem.nu.empty()) {
        os << "nu = " << fmt(problem.nu) << '\n';
    }
    if (!problem.q.empty()) {
        os << "q = " << fmt(problem.q) << '\n';
    }
    os << "\n[solver]\n";
    os << "mode = " << solver.mode << '\n';
    os << "lo = " << fmt(solver.lo) << '\n';
    os << "hi = " << fmt(solver.hi) << '\n';
    os << "n = " << solver.n << '\n';
    os << "modes = " << solver.modes << '\n';
    os << "strict = " << (solver.strict ? "true" : "false") << '\n';
    os << "auto_widen = " << (solver.auto_widen ? "true" : "false") << '\n';
    os << "M = " << solver.M << '\n';
    os << "dt = " << fmt(solver.dt) << '\n';
    os << "max_cells = " << solver.max_cells << '\n';
    os << "grid = " << solver.grid << '\n';
    if (!solver.surface_times.empty()) {
        os << "surface_times = " << fmt(solver.surface_times) << '\n';
    }
    os << "surface_points = " << solver.surface_points << '\n';
    os << "\n[experiment]\n";
    os << "agents = " << experiment.agents << '\n';
    os << "realizations = " << experiment.realizations << '\n';
    os << "seed = " << experiment.seed << '\n';
    os << "dt = " << fmt(experiment.dt) << '\n';
    opt("T", experiment.T);
    os << "snapshot_fractions = " << fmt(experiment.snapshot_fractions) << '\n';
    if (!experiment.snapshot_times.empty()) {
        os << "snapshot_times = " << fmt(experiment.snapshot_times) << '\n';
    }
    os << "init = " << experiment.init << '\n';
    os << "init_lo = " << fmt(experiment.init_lo) << '\n';
    os << "init_hi = " << fmt(experiment.init_hi) << '\n';
    os << "hist_lo = " << fmt(experiment.hist_lo) << '\n';
    os << "hist_hi = " << fmt(experiment.hist_hi) << '\n';
    os << "bins = " << experiment.bins << '\n';
    os << "l1_threshold = " << fmt(experiment.l1_threshold) << '\n';
    os << "max_escape = " << fmt(experiment.max_escape) << '\n';
    if (!experiment.goals.empty()) {
        os << "goals = " << fmt(experiment.goals) << '\n';
    }
    if (!experiment.attractors.empty()) {
        os << "attractors = " << fmt(experiment.attractors) << '\n';
    }
    os << "radius = " << fmt(experiment.radius) << '\n';
    os << "min_improvement = " << fmt(experiment.min_improvement) << '\n';
    os << "min_cluster_fraction = " << fmt(experiment.min_cluster_fraction) << '\n';
    os << "baseline = " << (experiment.baseline ? "true" : "false") << '\n';
    if (!experiment.controller.empty()) {
        os << "controller = " << experiment.controller << '\n';
    }
    os << "\n[output]\n";
    os << "directory = " << output.directory << '\n';
    os << "trajectories = " << (output.trajectories ? "true" : "false") << '\n';
}

std::string RunConfig::to_ini() const {
    std::ostringstream os;
    write_ini(os);
    return os.str();
}

}  // namespace popctl
