#pragma once

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "chemo_field.hpp"
#include "coupled_ensemble.hpp"
#include "mesh.hpp"
#include "model_params.hpp"
#include "velocity_jump.hpp"

namespace runtumble {

// Run configuration: flat `key = value` lines grouped into [section] tables,
// `#` comments.  CLI flags override file values; file values override the
// experiment preset.

struct SweepConfig {
    std::vector<double> epsilon{0.05, 0.1, 0.2, 0.4};
    std::vector<double> tau{1.0};
    std::vector<double> tbar{10.0, 20.0, 30.0};
    std::size_t n = 10000;
};

struct VrConfig {
    std::size_t n = 5000;
    double tbar_end = 50.0;
    long long reinit_steps = 1;  // PDE steps between corrections; 0 = single final correction
    std::vector<double> snapshots{12.5, 25.0, 37.5, 50.0};
    int realizations = 100;
};

struct LimitConfig {
    std::vector<double> epsilon{0.8, 0.4, 0.2, 0.1};
    double tbar = 2.0;
    std::size_t n = 10000;
    double sde_dt = 1e-3;
};

struct RunConfig {
    std::string experiment = "trajectory";
    std::uint64_t seed = 20260822;
    unsigned workers = 1;
    std::string out_dir = ".";
    bool record_trajectory = false;

    ModelParams params;
    Domain domain;
    std::vector<FieldTerm> field_terms;
    InitSpec init;
    double grid_dx = 0.1;
    double grid_dt_pde = 0.1;
    double traj_tbar_end = 30.0;

    SweepConfig sweep;
    VrConfig vr;
    LimitConfig limit;

    ChemoField field() const { return ChemoField(field_terms); }
    Mesh mesh() const { return Mesh::regular(domain.length, grid_dx, domain.bc); }
};

inline RunConfig default_config(const std::string& experiment) {
    RunConfig c;
    c.experiment = experiment;
    c.params = ModelParams{};
    c.domain = Domain{20.0, Boundary::Reflecting};
    if (experiment == "trajectory") {
        c.field_terms = {{5.0, 1.0, 7.5}, {5.0, 1.0, 12.5}};
        c.init = {{PositionInit::Point, 8.0, 0.0}, {VelocityInit::Fixed, 1}};
        c.traj_tbar_end = 30.0;
    } else if (experiment == "sweep") {
        c.field_terms = {{1.0, 1.0, 7.5}, {1.0, 1.0, 12.5}};
        c.init = {{PositionInit::Point, 8.0, 0.0}, {VelocityInit::Fixed, 1}};
    } else if (experiment == "vr" || experiment == "variance-study") {
        c.domain = Domain{20.0, Boundary::Periodic};
        c.field_terms = {{2.0, 1.0, 7.5}, {2.0, 1.0, 12.5}};
        c.params.epsilon = 0.5;
        c.params.rate_floor = 0.1 * c.params.lambda0;
        c.init = {{PositionInit::Uniform, 13.0, 15.0}, {VelocityInit::UniformSign, 1}};
    } else if (experiment == "limit-check") {
        c.domain = Domain{20.0, Boundary::Periodic};
        c.field_terms = {{2.0, 1.0, 7.5}, {2.0, 1.0, 12.5}};
        c.init = {{PositionInit::Uniform, 13.0, 15.0}, {VelocityInit::UniformSign, 1}};
    } else {
        throw std::invalid_argument("unknown experiment: " + experiment);
    }
    return c;
}

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (ch == ',' || ch == ' ' || ch == '\t') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

inline double parse_double(const std::string& s, const std::string& key) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (...) {
        throw std::invalid_argument("config: bad number for " + key + ": '" + s + "'");
    }
}

inline std::vector<double> parse_double_list(const std::string& s, const std::string& key) {
    std::vector<double> out;
    for (const auto& tok : split_list(s)) out.push_back(parse_double(tok, key));
    if (out.empty()) throw std::invalid_argument("config: empty list for " + key);
    return out;
}

inline std::uint64_t parse_u64(const std::string& s, const std::string& key) {
    try {
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(s, &pos);
        if (pos != s.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (...) {
        throw std::invalid_argument("config: bad integer for " + key + ": '" + s + "'");
    }
}

inline std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string fmt_list(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ", ";
        s += fmt_double(v[i]);
    }
    return s;
}

}  // namespace detail

// Applies `key = value` pairs from an INI-style file.  Unknown keys are
// rejected so typos do not silently fall back to defaults.
inline void apply_config_file(RunConfig& c, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open " + path);
    std::string line, section;
    std::vector<double> f_alpha, f_beta, f_center;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::invalid_argument("config: bad section header at line " +
                                            std::to_string(lineno));
            section = detail::trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: expected key = value at line " +
                                        std::to_string(lineno));
        const std::string key =
            (section.empty() ? "" : section + ".") + detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        using detail::parse_double;
        using detail::parse_double_list;
        using detail::parse_u64;
        using detail::split_list;

        if (key == "experiment") {
            if (val != c.experiment)
                throw std::invalid_argument(
                    "config: experiment '" + val + "' does not match the subcommand");
        } else if (key == "seed") {
            c.seed = parse_u64(val, key);
        } else if (key == "workers") {
            c.workers = static_cast<unsigned>(parse_u64(val, key));
        } else if (key == "out") {
            c.out_dir = val;
        } else if (key == "record_trajectory") {
            c.record_trajectory = parse_u64(val, key) != 0;
        } else if (key == "field.alpha") {
            f_alpha = parse_double_list(val, key);
        } else if (key == "field.beta") {
            f_beta = parse_double_list(val, key);
        } else if (key == "field.center") {
            f_center = parse_double_list(val, key);
        } else if (key == "params.epsilon") {
            c.params.epsilon = parse_double(val, key);
        } else if (key == "params.tau") {
            c.params.tau = parse_double(val, key);
        } else if (key == "params.lambda0") {
            c.params.lambda0 = parse_double(val, key);
        } else if (key == "params.b") {
            c.params.b = parse_double(val, key);
        } else if (key == "params.rate_kind") {
            if (val == "arctan") c.params.rate_kind = RateKind::Arctan;
            else if (val == "linear") c.params.rate_kind = RateKind::Linear;
            else throw std::invalid_argument("config: rate_kind must be arctan or linear");
        } else if (key == "params.dt") {
            c.params.dt = parse_double(val, key);
        } else if (key == "params.rate_floor") {
            if (val == "none") c.params.rate_floor.reset();
            else c.params.rate_floor = parse_double(val, key);
        } else if (key == "domain.length") {
            c.domain.length = parse_double(val, key);
        } else if (key == "domain.boundary") {
            if (val == "reflecting") c.domain.bc = Boundary::Reflecting;
            else if (val == "periodic") c.domain.bc = Boundary::Periodic;
            else throw std::invalid_argument(
                "config: boundary must be reflecting or periodic");
        } else if (key == "init.position") {
            const auto toks = split_list(val);
            if (toks.size() == 2 && toks[0] == "point") {
                c.init.position = {PositionInit::Point, parse_double(toks[1], key), 0.0};
            } else if (toks.size() == 3 && toks[0] == "uniform") {
                c.init.position = {PositionInit::Uniform, parse_double(toks[1], key),
                                   parse_double(toks[2], key)};
            } else {
                throw std::invalid_argument(
                    "config: init.position must be 'point X' or 'uniform LO HI'");
            }
        } else if (key == "init.velocity") {
            const auto toks = split_list(val);
            if (toks.size() == 1 && toks[0] == "uniform") {
                c.init.velocity = {VelocityInit::UniformSign, 1};
            } else if (toks.size() == 2 && toks[0] == "fixed") {
                const double v = parse_double(toks[1], key);
                if (v != 1.0 && v != -1.0)
                    throw std::invalid_argument("config: init.velocity sign must be +-1");
                c.init.velocity = {VelocityInit::Fixed, v > 0 ? 1 : -1};
            } else {
                throw std::invalid_argument(
                    "config: init.velocity must be 'fixed +-1' or 'uniform'");
            }
        } else if (key == "grid.dx") {
            c.grid_dx = parse_double(val, key);
        } else if (key == "grid.dt_pde") {
            c.grid_dt_pde = parse_double(val, key);
        } else if (key == "trajectory.tbar_end") {
            c.traj_tbar_end = parse_double(val, key);
        } else if (key == "sweep.epsilon") {
            c.sweep.epsilon = parse_double_list(val, key);
        } else if (key == "sweep.tau") {
            c.sweep.tau = parse_double_list(val, key);
        } else if (key == "sweep.tbar") {
            c.sweep.tbar = parse_double_list(val, key);
        } else if (key == "sweep.n") {
            c.sweep.n = parse_u64(val, key);
        } else if (key == "vr.n") {
            c.vr.n = parse_u64(val, key);
        } else if (key == "vr.tbar_end") {
            c.vr.tbar_end = parse_double(val, key);
        } else if (key == "vr.reinit_steps") {
            c.vr.reinit_steps = static_cast<long long>(parse_u64(val, key));
        } else if (key == "vr.snapshots") {
            c.vr.snapshots = parse_double_list(val, key);
        } else if (key == "vr.realizations") {
            c.vr.realizations = static_cast<int>(parse_u64(val, key));
        } else if (key == "limit.epsilon") {
            c.limit.epsilon = parse_double_list(val, key);
        } else if (key == "limit.tbar") {
            c.limit.tbar = parse_double(val, key);
        } else if (key == "limit.n") {
            c.limit.n = parse_u64(val, key);
        } else if (key == "limit.sde_dt") {
            c.limit.sde_dt = parse_double(val, key);
        } else {
            throw std::invalid_argument("config: unknown key '" + key + "' at line " +
                                        std::to_string(lineno));
        }
    }
    // A file that touches the field replaces the preset field wholesale.
    if (!f_alpha.empty() || !f_beta.empty() || !f_center.empty()) {
        if (f_alpha.empty() || f_center.empty())
            throw std::invalid_argument("config: field.alpha and field.center are both required");
        if (f_beta.empty()) f_beta.assign(f_alpha.size(), 1.0);
        if (f_beta.size() != f_alpha.size() || f_center.size() != f_alpha.size())
            throw std::invalid_argument("config: field term lists differ in length");
        c.field_terms.clear();
        for (std::size_t i = 0; i < f_alpha.size(); ++i)
            c.field_terms.push_back({f_alpha[i], f_beta[i], f_center[i]});
    }
}

// Canonical echo of the effective configuration, used for CSV headers and for
// reproducing a run.
inline std::vector<std::pair<std::string, std::string>> describe(const RunConfig& c) {
    using detail::fmt_double;
    using detail::fmt_list;
    std::vector<std::pair<std::string, std::string>> kv;
    kv.emplace_back("experiment", c.experiment);
    kv.emplace_back("seed", std::to_string(c.seed));
    kv.emplace_back("workers", std::to_string(c.workers));
    kv.emplace_back("record_trajectory", c.record_trajectory ? "1" : "0");
    std::vector<double> alphas, betas, centers;
    for (const auto& t : c.field_terms) {
        alphas.push_back(t.alpha);
        betas.push_back(t.beta);
        centers.push_back(t.center);
    }
    kv.emplace_back("field.alpha", fmt_list(alphas));
    kv.emplace_back("field.beta", fmt_list(betas));
    kv.emplace_back("field.center", fmt_list(centers));
    kv.emplace_back("params.epsilon", fmt_double(c.params.epsilon));
    kv.emplace_back("params.tau", fmt_double(c.params.tau));
    kv.emplace_back("params.lambda0", fmt_double(c.params.lambda0));
    kv.emplace_back("params.b", fmt_double(c.params.b));
    kv.emplace_back("params.rate_kind",
                    c.params.rate_kind == RateKind::Arctan ? "arctan" : "linear");
    kv.emplace_back("params.dt", fmt_double(c.params.dt));
    kv.emplace_back("params.rate_floor",
                    c.params.rate_floor ? fmt_double(*c.params.rate_floor) : "none");
    kv.emplace_back("domain.length", fmt_double(c.domain.length));
    kv.emplace_back("domain.boundary",
                    c.domain.bc == Boundary::Reflecting ? "reflecting" : "periodic");
    if (c.init.position.kind == PositionInit::Point)
        kv.emplace_back("init.position", "point " + fmt_double(c.init.position.a));
    else
        kv.emplace_back("init.position", "uniform " + fmt_double(c.init.position.a) +
                                             " " + fmt_double(c.init.position.b));
    if (c.init.velocity.kind == VelocityInit::UniformSign)
        kv.emplace_back("init.velocity", "uniform");
    else
        kv.emplace_back("init.velocity",
                        c.init.velocity.v0 > 0 ? "fixed 1" : "fixed -1");
    kv.emplace_back("grid.dx", fmt_double(c.grid_dx));
    kv.emplace_back("grid.dt_pde", fmt_double(c.grid_dt_pde));
    if (c.experiment == "trajectory")
        kv.emplace_back("trajectory.tbar_end", fmt_double(c.traj_tbar_end));
    if (c.experiment == "sweep") {
        kv.emplace_back("sweep.epsilon", fmt_list(c.sweep.epsilon));
        kv.emplace_back("sweep.tau", fmt_list(c.sweep.tau));
        kv.emplace_back("sweep.tbar", fmt_list(c.sweep.tbar));
        kv.emplace_back("sweep.n", std::to_string(c.sweep.n));
    }
    if (c.experiment == "vr" || c.experiment == "variance-study") {
        kv.emplace_back("vr.n", std::to_string(c.vr.n));
        kv.emplace_back("vr.tbar_end", fmt_double(c.vr.tbar_end));
        kv.emplace_back("vr.reinit_steps", std::to_string(c.vr.reinit_steps));
        kv.emplace_back("vr.snapshots", fmt_list(c.vr.snapshots));
        kv.emplace_back("vr.realizations", std::to_string(c.vr.realizations));
    }
    if (c.experiment == "limit-check") {
        kv.emplace_back("limit.epsilon", fmt_list(c.limit.epsilon));
        kv.emplace_back("limit.tbar", fmt_double(c.limit.tbar));
        kv.emplace_back("limit.n", std::to_string(c.limit.n));
        kv.emplace_back("limit.sde_dt", fmt_double(c.limit.sde_dt));
    }
    return kv;
}

// Rejects configurations the solvers cannot honor: bad field terms, a mesh
// that does not divide the domain, a CFL violation, or a control rate that
// can reach zero with no floor configured.
inline void validate_run_config(const RunConfig& c) {
    c.params.validate();
    c.domain.validate();
    const ChemoField field = c.field();
    if (c.experiment != "trajectory" && c.experiment != "sweep") {
        Mesh::regular(c.domain.length, c.grid_dx, c.domain.bc);
        if (c.params.epsilon * c.grid_dt_pde / c.grid_dx > 1.0 + 1e-12)
            throw std::invalid_argument(
                "config: CFL bound eps*dt_pde/dx <= 1 violated");
        for (double e : c.limit.epsilon)
            if (c.experiment == "limit-check" && e * c.grid_dt_pde / c.grid_dx > 1.0 + 1e-12)
                throw std::invalid_argument(
                    "config: CFL bound violated for a limit-check epsilon");
    }
    if (!(c.workers >= 1)) throw std::invalid_argument("config: workers must be >= 1");
    if (!(c.grid_dt_pde > 0.0)) throw std::invalid_argument("config: grid.dt_pde must be > 0");
    if (!(c.traj_tbar_end > 0.0))
        throw std::invalid_argument("config: trajectory.tbar_end must be > 0");
    if (c.init.position.kind == PositionInit::Point) {
        if (c.init.position.a < 0.0 || c.init.position.a > c.domain.length)
            throw std::invalid_argument("config: init position outside the domain");
    } else {
        if (!(c.init.position.a < c.init.position.b) || c.init.position.a < 0.0 ||
            c.init.position.b > c.domain.length)
            throw std::invalid_argument("config: init position interval invalid");
    }
    if (c.init.velocity.kind == VelocityInit::Fixed &&
        c.init.velocity.v0 != 1 && c.init.velocity.v0 != -1)
        throw std::invalid_argument("config: init velocity must be +1 or -1");
    auto require_positive = [](const std::vector<double>& xs, const char* what) {
        if (xs.empty()) throw std::invalid_argument(std::string("config: empty list for ") + what);
        for (double x : xs)
            if (!(x > 0.0))
                throw std::invalid_argument(std::string("config: nonpositive entry in ") + what);
    };
    auto require_increasing = [](const std::vector<double>& xs, const char* what) {
        for (std::size_t i = 1; i < xs.size(); ++i)
            if (!(xs[i] > xs[i - 1]))
                throw std::invalid_argument(std::string("config: ") + what +
                                            " must be strictly increasing");
    };
    if (c.experiment == "sweep") {
        require_positive(c.sweep.epsilon, "sweep.epsilon");
        require_positive(c.sweep.tau, "sweep.tau");
        require_positive(c.sweep.tbar, "sweep.tbar");
        require_increasing(c.sweep.tbar, "sweep.tbar");
        if (c.sweep.n == 0) throw std::invalid_argument("config: sweep.n must be > 0");
    }
    if (c.experiment == "vr" || c.experiment == "variance-study") {
        if (c.vr.n == 0) throw std::invalid_argument("config: vr.n must be > 0");
        if (!(c.vr.tbar_end > 0.0))
            throw std::invalid_argument("config: vr.tbar_end must be > 0");
        if (c.vr.reinit_steps < 0)
            throw std::invalid_argument("config: vr.reinit_steps must be >= 0");
        if (c.experiment == "vr") {
            require_increasing(c.vr.snapshots, "vr.snapshots");
            for (double ts : c.vr.snapshots)
                if (ts < 0.0 || ts > c.vr.tbar_end + 1e-12)
                    throw std::invalid_argument("config: vr snapshot outside [0, tbar_end]");
        }
        if (c.experiment == "variance-study" && c.vr.realizations < 2)
            throw std::invalid_argument("config: vr.realizations must be >= 2");
    }
    if (c.experiment == "limit-check") {
        require_positive(c.limit.epsilon, "limit.epsilon");
        if (!(c.limit.tbar > 0.0)) throw std::invalid_argument("config: limit.tbar must be > 0");
        if (c.limit.n == 0) throw std::invalid_argument("config: limit.n must be > 0");
        if (!(c.limit.sde_dt > 0.0))
            throw std::invalid_argument("config: limit.sde_dt must be > 0");
    }
    if (!c.params.rate_floor) {
        // The control rate lambda0 - eps*A(x)*v is linear in eps, so checking the
        // largest eps the run will use covers the whole sweep.
        double eps_max = c.params.epsilon;
        const std::vector<double>* swept = nullptr;
        if (c.experiment == "sweep") swept = &c.sweep.epsilon;
        if (c.experiment == "limit-check") swept = &c.limit.epsilon;
        if (swept)
            for (double e : *swept) eps_max = std::max(eps_max, e);
        const int scan = 4096;
        double min_rate = c.params.lambda0;
        for (int i = 0; i <= scan; ++i) {
            const double x = c.domain.length * static_cast<double>(i) / scan;
            const double a = drift_field(c.params, field, x);
            for (int v : {-1, 1}) {
                const double lam = c.params.lambda0 - eps_max * a * v;
                if (lam < min_rate) min_rate = lam;
            }
        }
        if (min_rate <= 0.0)
            throw std::invalid_argument(
                "config: control rate reaches zero on this field; set params.rate_floor");
    }
}

}  // namespace runtumble
