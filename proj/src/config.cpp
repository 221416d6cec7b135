#include "abf/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "abf/errors.hpp"
#include "abf/grid.hpp"
#include "abf/io.hpp"

namespace abf {

Engine engine_from_name(const std::string& name) {
    if (name == "pde") return Engine::Pde;
    if (name == "particles") return Engine::Particles;
    if (name == "stationary") return Engine::Stationary;
    if (name == "sweep") return Engine::Sweep;
    if (name == "diagnose") return Engine::Diagnose;
    throw ConfigError("unknown engine: " + name);
}

std::string engine_name(Engine e) {
    switch (e) {
        case Engine::Pde: return "pde";
        case Engine::Particles: return "particles";
        case Engine::Stationary: return "stationary";
        case Engine::Sweep: return "sweep";
        case Engine::Diagnose: return "diagnose";
    }
    return "?";
}

InitialKind initial_kind_from_name(const std::string& name) {
    if (name == "uniform") return InitialKind::Uniform;
    if (name == "skewed_x") return InitialKind::SkewedX;
    if (name == "skewed_xy") return InitialKind::SkewedXY;
    throw ConfigError("unknown initial density: " + name);
}

std::string initial_kind_name(InitialKind k) {
    switch (k) {
        case InitialKind::Uniform: return "uniform";
        case InitialKind::SkewedX: return "skewed_x";
        case InitialKind::SkewedXY: return "skewed_xy";
    }
    return "?";
}

ReferenceKind reference_kind_from_name(const std::string& name) {
    if (name == "conservative") return ReferenceKind::Conservative;
    if (name == "fixed_point") return ReferenceKind::FixedPoint;
    if (name == "uniform") return ReferenceKind::Uniform;
    throw ConfigError("unknown reference: " + name);
}

std::string reference_kind_name(ReferenceKind k) {
    switch (k) {
        case ReferenceKind::Conservative: return "conservative";
        case ReferenceKind::FixedPoint: return "fixed_point";
        case ReferenceKind::Uniform: return "uniform";
    }
    return "?";
}

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string strip_comment(const std::string& line) {
    bool in_quote = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') in_quote = !in_quote;
        if (line[i] == '#' && !in_quote) return line.substr(0, i);
    }
    return line;
}

std::string unquote(const std::string& raw, const std::string& key) {
    std::string v = trim(raw);
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
    if (!v.empty() && v.front() == '"')
        throw ConfigError("unterminated string for key " + key);
    return v;
}

double parse_double(const std::string& raw, const std::string& key) {
    const std::string v = trim(raw);
    char* end = nullptr;
    double x = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size() || !std::isfinite(x))
        throw ConfigError("key " + key + ": expected a finite number, got '" + v + "'");
    return x;
}

long long parse_int(const std::string& raw, const std::string& key) {
    const std::string v = trim(raw);
    char* end = nullptr;
    long long x = std::strtoll(v.c_str(), &end, 10);
    if (v.empty() || end != v.c_str() + v.size())
        throw ConfigError("key " + key + ": expected an integer, got '" + v + "'");
    return x;
}

std::uint64_t parse_u64(const std::string& raw, const std::string& key) {
    const std::string v = trim(raw);
    char* end = nullptr;
    unsigned long long x = std::strtoull(v.c_str(), &end, 10);
    if (v.empty() || v.front() == '-' || end != v.c_str() + v.size())
        throw ConfigError("key " + key + ": expected an unsigned integer, got '" + v + "'");
    return static_cast<std::uint64_t>(x);
}

std::vector<std::string> parse_array(const std::string& raw, const std::string& key) {
    std::string v = trim(raw);
    if (v.size() < 2 || v.front() != '[' || v.back() != ']')
        throw ConfigError("key " + key + ": expected an array [..]");
    v = v.substr(1, v.size() - 2);
    std::vector<std::string> items;
    std::string cur;
    for (char c : v) {
        if (c == ',') {
            items.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    cur = trim(cur);
    if (!cur.empty()) items.push_back(cur);
    for (const std::string& it : items)
        if (it.empty()) throw ConfigError("key " + key + ": empty array element");
    return items;
}

std::vector<double> parse_double_array(const std::string& raw, const std::string& key) {
    std::vector<double> out;
    for (const std::string& it : parse_array(raw, key)) out.push_back(parse_double(it, key));
    return out;
}

std::vector<int> parse_int_array(const std::string& raw, const std::string& key) {
    std::vector<int> out;
    for (const std::string& it : parse_array(raw, key))
        out.push_back(static_cast<int>(parse_int(it, key)));
    return out;
}

std::vector<std::string> parse_string_array(const std::string& raw, const std::string& key) {
    std::vector<std::string> out;
    for (const std::string& it : parse_array(raw, key)) out.push_back(unquote(it, key));
    return out;
}

int parse_bounded_int(const std::string& raw, const std::string& key, long long lo, long long hi) {
    long long x = parse_int(raw, key);
    if (x < lo || x > hi)
        throw ConfigError("key " + key + ": value " + std::to_string(x) + " outside [" +
                          std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return static_cast<int>(x);
}

void set_value(ExperimentConfig& cfg, const std::string& section, const std::string& key,
               const std::string& raw) {
    const std::string full = section + "." + key;
    if (section == "provenance") return; // manifests parse back as configs
    if (section == "experiment") {
        if (key == "engine") cfg.engine = engine_from_name(unquote(raw, full));
        else if (key == "method") cfg.method = bias_method_from_name(unquote(raw, full));
        else if (key == "seed") cfg.seed = parse_u64(raw, full);
        else if (key == "threads") cfg.threads = parse_bounded_int(raw, full, 1, 1024);
        else if (key == "label") cfg.label = unquote(raw, full);
        else throw ConfigError("unknown key " + full);
        return;
    }
    if (section == "force") {
        if (key == "potential") cfg.potential = potential_kind_from_name(unquote(raw, full));
        else if (key == "perturbation")
            cfg.perturbation = perturbation_kind_from_name(unquote(raw, full));
        else if (key == "epsilon") cfg.epsilon = parse_double(raw, full);
        else if (key == "beta") cfg.beta = parse_double(raw, full);
        else if (key == "dimension") cfg.dimension = parse_bounded_int(raw, full, 1, 16);
        else throw ConfigError("unknown key " + full);
        return;
    }
    if (section == "grid") {
        if (key == "resolution") cfg.resolution = parse_int_array(raw, full);
        else if (key == "m") cfg.m = parse_bounded_int(raw, full, 1, 16);
        else throw ConfigError("unknown key " + full);
        return;
    }
    if (section == "run") {
        if (key == "dt") cfg.dt = parse_double(raw, full);
        else if (key == "t_end") cfg.t_end = parse_double(raw, full);
        else if (key == "output_stride") cfg.output_stride = parse_bounded_int(raw, full, 1, 1 << 30);
        else if (key == "bias_stride") cfg.bias_stride = parse_bounded_int(raw, full, 1, 1 << 30);
        else if (key == "initial") cfg.initial = initial_kind_from_name(unquote(raw, full));
        else if (key == "init_amplitude") cfg.init_amplitude = parse_double(raw, full);
        else if (key == "n_particles") cfg.n_particles = parse_u64(raw, full);
        else if (key == "bins") cfg.bins = parse_int_array(raw, full);
        else if (key == "schedule") cfg.schedule = parse_double_array(raw, full);
        else throw ConfigError("unknown key " + full);
        return;
    }
    if (section == "stationary") {
        if (key == "solver") cfg.solver = stationary_method_from_name(unquote(raw, full));
        else if (key == "tol") cfg.tol = parse_double(raw, full);
        else if (key == "max_iters") cfg.max_iters = parse_bounded_int(raw, full, 1, 1 << 30);
        else if (key == "fp_tol") cfg.fp_tol = parse_double(raw, full);
        else if (key == "fp_max_iters") cfg.fp_max_iters = parse_bounded_int(raw, full, 1, 1 << 30);
        else throw ConfigError("unknown key " + full);
        return;
    }
    if (section == "sweep") {
        if (key == "epsilons") cfg.epsilons = parse_double_array(raw, full);
        else if (key == "norm_p") cfg.norm_p = parse_double(raw, full);
        else throw ConfigError("unknown key " + full);
        return;
    }
    if (section == "diagnostics") {
        if (key == "reference") cfg.reference = reference_kind_from_name(unquote(raw, full));
        else if (key == "fit_start") cfg.fit_start = parse_double(raw, full);
        else if (key == "fit_end") cfg.fit_end = parse_double(raw, full);
        else if (key == "observables") cfg.observables = parse_string_array(raw, full);
        else if (key == "inequality_trials")
            cfg.inequality_trials = parse_bounded_int(raw, full, 1, 1 << 30);
        else if (key == "audit_pairs") cfg.audit_pairs = parse_bounded_int(raw, full, 1, 1 << 30);
        else if (key == "bootstrap_replicates")
            cfg.bootstrap_replicates = parse_bounded_int(raw, full, 2, 1 << 30);
        else throw ConfigError("unknown key " + full);
        return;
    }
    throw ConfigError("unknown section [" + section + "]");
}

const std::set<std::string>& known_observables() {
    static const std::set<std::string> names = {"cos_x", "sin_x", "cos_2x", "cos_y", "sin_y"};
    return names;
}

} // namespace

ExperimentConfig parse_config_string(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(strip_comment(line));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw ConfigError("line " + std::to_string(lineno) + ": empty section name");
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string raw = trim(line.substr(eq + 1));
        if (key.empty() || raw.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        if (section.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": key outside any [section]");
        try {
            set_value(cfg, section, key, raw);
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_string(buf.str());
}

void apply_override(ExperimentConfig& cfg, const std::string& dotted_key,
                    const std::string& value) {
    const std::size_t dot = dotted_key.find('.');
    if (dot == std::string::npos || dot == 0 || dot + 1 >= dotted_key.size())
        throw ConfigError("override key must look like section.key: " + dotted_key);
    set_value(cfg, dotted_key.substr(0, dot), dotted_key.substr(dot + 1), value);
}

void validate_config(const ExperimentConfig& cfg) {
    if (cfg.dimension < 1 || cfg.dimension > 16)
        throw ConfigError("force.dimension must be in 1..16");
    if (static_cast<int>(cfg.resolution.size()) != cfg.dimension)
        throw ConfigError("grid.resolution must list one size per dimension");
    for (int r : cfg.resolution)
        if (r < 2 || r > 4096) throw ConfigError("grid.resolution entries must be in 2..4096");
    if (cfg.m < 1 || cfg.m > cfg.dimension)
        throw ConfigError("grid.m must satisfy 1 <= m <= dimension");
    if (!(cfg.beta > 0.0)) throw ConfigError("force.beta must be positive");
    if (!std::isfinite(cfg.epsilon)) throw ConfigError("force.epsilon must be finite");
    if (cfg.threads < 1) throw ConfigError("experiment.threads must be positive");

    TorusGrid grid(cfg.resolution, cfg.m);
    if (grid.size() > (1u << 24)) throw ConfigError("grid too large for this laboratory");

    ForceField force = [&] {
        try {
            return ForceField::library(cfg.potential, cfg.perturbation, cfg.epsilon, cfg.beta,
                                       cfg.dimension, cfg.seed);
        } catch (const ContractViolation& e) {
            throw ConfigError(std::string("force: ") + e.what());
        }
    }();

    const bool timed = cfg.engine == Engine::Pde || cfg.engine == Engine::Particles;
    if (timed && !(cfg.t_end > 0.0)) throw ConfigError("run.t_end must be positive");
    if (!(cfg.dt >= 0.0) || !std::isfinite(cfg.dt)) throw ConfigError("run.dt must be >= 0");

    if (cfg.engine == Engine::Pde && cfg.dt > 0.0) {
        const VectorField f_grid = force.force_field(grid);
        const double bound = 0.5 * grid.min_spacing() / std::max(2.0 * f_grid.norm_linf(), 1.0);
        if (cfg.dt > bound)
            throw ConfigError("run.dt = " + io::format_double(cfg.dt) +
                              " exceeds the stability bound " + io::format_double(bound));
    }
    if (cfg.engine == Engine::Particles) {
        if (!(cfg.dt > 0.0)) throw ConfigError("run.dt must be positive for particle runs");
        if (cfg.n_particles < 1) throw ConfigError("run.n_particles must be positive");
        if (static_cast<int>(cfg.bins.size()) != cfg.m)
            throw ConfigError("run.bins must list one bin count per reaction-coordinate axis");
        for (int b : cfg.bins)
            if (b < 2 || b > 4096) throw ConfigError("run.bins entries must be in 2..4096");
        double prev = 0.0;
        for (double s : cfg.schedule) {
            if (!(s >= prev) || s > cfg.t_end + 1e-12)
                throw ConfigError("run.schedule must be ascending within [0, t_end]");
            prev = s;
        }
    }
    if (cfg.engine == Engine::Sweep) {
        if (cfg.epsilons.empty()) throw ConfigError("sweep.epsilons must be nonempty");
        double prev = 0.0;
        for (double e : cfg.epsilons) {
            if (!(e > prev)) throw ConfigError("sweep.epsilons must be positive and ascending");
            prev = e;
        }
        if (!(cfg.norm_p >= 1.0)) throw ConfigError("sweep.norm_p must be >= 1");
        if (cfg.perturbation != PerturbationKind::None) {
            const ForceField probe = ForceField::library(cfg.potential, cfg.perturbation, 1.0,
                                                         cfg.beta, cfg.dimension, cfg.seed);
            const double sup = probe.perturbation_field(grid).norm_linf();
            if (cfg.epsilons.back() * sup > 1.0 + 1e-12)
                throw ConfigError("sweep amplitude violates epsilon * sup|Delta| <= 1");
        }
    }
    if (!(cfg.init_amplitude > -1.0 && cfg.init_amplitude < 1.0))
        throw ConfigError("run.init_amplitude must lie in (-1, 1)");
    if (!(cfg.tol > 0.0) || !(cfg.fp_tol > 0.0))
        throw ConfigError("stationary tolerances must be positive");
    if (cfg.fit_start < 0.0 || cfg.fit_end < 0.0 ||
        (cfg.fit_end > 0.0 && cfg.fit_end <= cfg.fit_start))
        throw ConfigError("diagnostics fit window must satisfy 0 <= fit_start < fit_end");
    for (const std::string& name : cfg.observables)
        if (known_observables().find(name) == known_observables().end())
            throw ConfigError("unknown observable: " + name);
}

namespace {

std::string quoted(const std::string& s) { return "\"" + s + "\""; }

std::string int_array(const std::vector<int>& v) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i)
        out += (i ? ", " : "") + std::to_string(v[i]);
    return out + "]";
}

std::string double_array(const std::vector<double>& v) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i)
        out += (i ? ", " : "") + io::format_double(v[i]);
    return out + "]";
}

std::string string_array(const std::vector<std::string>& v) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + quoted(v[i]);
    return out + "]";
}

} // namespace

std::string render_config(const ExperimentConfig& cfg) {
    std::ostringstream out;
    out << "[experiment]\n";
    out << "engine = " << quoted(engine_name(cfg.engine)) << "\n";
    out << "method = " << quoted(bias_method_name(cfg.method)) << "\n";
    out << "seed = " << cfg.seed << "\n";
    out << "threads = " << cfg.threads << "\n";
    out << "label = " << quoted(cfg.label) << "\n";
    out << "\n[force]\n";
    out << "potential = " << quoted(potential_kind_name(cfg.potential)) << "\n";
    out << "perturbation = " << quoted(perturbation_kind_name(cfg.perturbation)) << "\n";
    out << "epsilon = " << io::format_double(cfg.epsilon) << "\n";
    out << "beta = " << io::format_double(cfg.beta) << "\n";
    out << "dimension = " << cfg.dimension << "\n";
    out << "\n[grid]\n";
    out << "resolution = " << int_array(cfg.resolution) << "\n";
    out << "m = " << cfg.m << "\n";
    out << "\n[run]\n";
    out << "dt = " << io::format_double(cfg.dt) << "\n";
    out << "t_end = " << io::format_double(cfg.t_end) << "\n";
    out << "output_stride = " << cfg.output_stride << "\n";
    out << "bias_stride = " << cfg.bias_stride << "\n";
    out << "initial = " << quoted(initial_kind_name(cfg.initial)) << "\n";
    out << "init_amplitude = " << io::format_double(cfg.init_amplitude) << "\n";
    out << "n_particles = " << cfg.n_particles << "\n";
    out << "bins = " << int_array(cfg.bins) << "\n";
    out << "schedule = " << double_array(cfg.schedule) << "\n";
    out << "\n[stationary]\n";
    out << "solver = " << quoted(stationary_method_name(cfg.solver)) << "\n";
    out << "tol = " << io::format_double(cfg.tol) << "\n";
    out << "max_iters = " << cfg.max_iters << "\n";
    out << "fp_tol = " << io::format_double(cfg.fp_tol) << "\n";
    out << "fp_max_iters = " << cfg.fp_max_iters << "\n";
    out << "\n[sweep]\n";
    out << "epsilons = " << double_array(cfg.epsilons) << "\n";
    out << "norm_p = " << io::format_double(cfg.norm_p) << "\n";
    out << "\n[diagnostics]\n";
    out << "reference = " << quoted(reference_kind_name(cfg.reference)) << "\n";
    out << "fit_start = " << io::format_double(cfg.fit_start) << "\n";
    out << "fit_end = " << io::format_double(cfg.fit_end) << "\n";
    out << "observables = " << string_array(cfg.observables) << "\n";
    out << "inequality_trials = " << cfg.inequality_trials << "\n";
    out << "audit_pairs = " << cfg.audit_pairs << "\n";
    out << "bootstrap_replicates = " << cfg.bootstrap_replicates << "\n";
    return out.str();
}

} // namespace abf
