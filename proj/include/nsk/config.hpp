#pragma once

// Plain-text run configuration. The on-disk format is a small TOML subset:
// [section] headers, key = value scalars (numbers, booleans, quoted strings)
// and # comments. Unknown sections or keys are hard errors so that a typo
// cannot silently fall back to a default. echo_config() emits a canonical
// dump that parses back to the same configuration, and whose text is what
// the manifest hash covers.

#include <cctype>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

#include "io.hpp"
#include "solver.hpp"

namespace nsk {

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::string strip_comment(const std::string& line) {
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') quoted = !quoted;
        if (line[i] == '#' && !quoted) return line.substr(0, i);
    }
    return line;
}

// flat "section.key" -> raw value text
inline std::map<std::string, std::string> parse_toml_subset(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(strip_comment(line));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::invalid_argument("config line " + std::to_string(lineno) +
                                            ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw std::invalid_argument("config line " + std::to_string(lineno) +
                                            ": empty section name");
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (key.empty() || val.empty())
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key = value");
        std::string full = section.empty() ? key : section + "." + key;
        if (kv.count(full))
            throw std::invalid_argument("config: duplicate key '" + full + "'");
        kv[full] = val;
    }
    return kv;
}

class ConfigReader {
  public:
    explicit ConfigReader(const std::string& text) : kv_(parse_toml_subset(text)) {}

    double number(const std::string& key, double fallback) {
        auto it = kv_.find(key);
        if (it == kv_.end()) return fallback;
        seen_.insert(key);
        std::size_t pos = 0;
        double v = 0.0;
        try {
            v = std::stod(it->second, &pos);
        } catch (const std::exception&) {
            throw std::invalid_argument("config key '" + key + "': not a number: " + it->second);
        }
        if (pos != it->second.size())
            throw std::invalid_argument("config key '" + key + "': not a number: " + it->second);
        return v;
    }

    int integer(const std::string& key, int fallback) {
        double v = number(key, static_cast<double>(fallback));
        int i = static_cast<int>(v);
        if (static_cast<double>(i) != v)
            throw std::invalid_argument("config key '" + key + "': expected an integer");
        return i;
    }

    std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
        double v = number(key, static_cast<double>(fallback));
        if (v < 0.0 || v != std::floor(v))
            throw std::invalid_argument("config key '" + key +
                                        "': expected a nonnegative integer");
        return static_cast<std::uint64_t>(v);
    }

    bool boolean(const std::string& key, bool fallback) {
        auto it = kv_.find(key);
        if (it == kv_.end()) return fallback;
        seen_.insert(key);
        if (it->second == "true") return true;
        if (it->second == "false") return false;
        throw std::invalid_argument("config key '" + key + "': expected true or false");
    }

    std::string text(const std::string& key, const std::string& fallback) {
        auto it = kv_.find(key);
        if (it == kv_.end()) return fallback;
        seen_.insert(key);
        const std::string& raw = it->second;
        if (raw.size() < 2 || raw.front() != '"' || raw.back() != '"')
            throw std::invalid_argument("config key '" + key + "': expected a quoted string");
        return raw.substr(1, raw.size() - 2);
    }

    void reject_unknown() const {
        for (const auto& [key, val] : kv_)
            if (!seen_.count(key))
                throw std::invalid_argument("config: unknown key '" + key + "'");
    }

  private:
    std::map<std::string, std::string> kv_;
    std::set<std::string> seen_;
};

}  // namespace detail

inline SimConfig parse_config_text(const std::string& text) {
    detail::ConfigReader rd(text);
    SimConfig cfg;

    cfg.dim = rd.integer("grid.dim", cfg.dim);
    cfg.n = rd.integer("grid.n", cfg.n);
    cfg.length = rd.number("grid.length", cfg.length);

    double kappa = rd.number("physics.kappa", 1.0);
    double mu = rd.number("physics.mu", 0.25);
    double lambda = rd.number("physics.lambda", 1.0 - 2.0 * mu);
    if (!(kappa > 0.0))
        throw std::invalid_argument("config key 'physics.kappa': capillarity must be positive");
    if (!(mu > 0.0))
        throw std::invalid_argument("config key 'physics.mu': shear viscosity must be positive");
    if (std::abs(2.0 * mu + lambda - 1.0) > 1e-12)
        throw std::invalid_argument(
            "config key 'physics.lambda': normalized viscosities need 2 mu + lambda = 1");
    cfg.lin = LinearParams{kappa, mu, lambda};

    std::string laws = rd.text("coefficients.laws", "linear");
    double gamma = rd.number("coefficients.gamma", 1.5);
    if (laws == "constant") {
        cfg.model = CoefficientModel::constant_laws();
    } else if (laws == "linear") {
        cfg.model = CoefficientModel::linear_laws(gamma);
    } else {
        throw std::invalid_argument(
            "config key 'coefficients.laws': expected \"constant\" or \"linear\"");
    }
    cfg.model.truncation = rd.integer("coefficients.truncation", cfg.model.truncation);

    cfg.dt = rd.number("time.dt", cfg.dt);
    cfg.dt_floor = rd.number("time.dt_floor", cfg.dt_floor);
    cfg.t_end = rd.number("time.t_end", cfg.t_end);
    cfg.cfl = rd.number("time.cfl", cfg.cfl);
    cfg.nonlinear = rd.boolean("time.nonlinear", cfg.nonlinear);
    std::string mode = rd.text("time.mode", "plain");
    if (mode == "plain") {
        cfg.mode = StepMode::plain;
    } else if (mode == "weighted") {
        cfg.mode = StepMode::gevrey_weighted;
    } else {
        throw std::invalid_argument("config key 'time.mode': expected \"plain\" or \"weighted\"");
    }
    cfg.c0 = rd.number("time.c0", cfg.c0);

    cfg.p = rd.number("diagnostics.p", cfg.p);
    cfg.k0 = rd.integer("diagnostics.k0", cfg.k0);
    cfg.sample_every = rd.integer("diagnostics.sample_every", cfg.sample_every);
    cfg.blowup_guard = rd.number("diagnostics.blowup_guard", cfg.blowup_guard);
    cfg.data.seed = rd.unsigned_integer("diagnostics.seed", cfg.data.seed);
    cfg.data.k_lo = rd.integer("diagnostics.k_lo", cfg.data.k_lo);
    cfg.data.k_hi = rd.integer("diagnostics.k_hi", cfg.data.k_hi);
    cfg.data.amplitude_a = rd.number("diagnostics.amplitude_a", cfg.data.amplitude_a);
    cfg.data.amplitude_u = rd.number("diagnostics.amplitude_u", cfg.data.amplitude_u);
    cfg.data.solenoidal_u = rd.boolean("diagnostics.solenoidal_u", cfg.data.solenoidal_u);
    rd.reject_unknown();

    if (cfg.dim == 2 && cfg.p == 4.0)
        throw std::invalid_argument(
            "config key 'diagnostics.p': the high-frequency integrability window excludes p = 4 "
            "in two dimensions");
    cfg.validate();
    return cfg;
}

inline SimConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

// Canonical dump: every key explicit, doubles at full precision, fixed order.
inline std::string echo_config(const SimConfig& cfg) {
    std::ostringstream os;
    os << "[grid]\n";
    os << "dim = " << cfg.dim << "\n";
    os << "n = " << cfg.n << "\n";
    os << "length = " << fmt_g17(cfg.length) << "\n";
    os << "\n[physics]\n";
    os << "kappa = " << fmt_g17(cfg.lin.kappa_bar) << "\n";
    os << "mu = " << fmt_g17(cfg.lin.mu_bar) << "\n";
    os << "lambda = " << fmt_g17(cfg.lin.lambda_bar) << "\n";
    os << "\n[coefficients]\n";
    bool constant = cfg.model.mu_fluct().eval(0.5) == 0.0;
    os << "laws = " << (constant ? "\"constant\"" : "\"linear\"") << "\n";
    if (!constant) {
        // recover gamma from the power-law slope gap: gap'(0) = 2 - gamma
        double gamma = 2.0 - cfg.model.pressure_slope_gap().derivative().constant_term();
        os << "gamma = " << fmt_g17(gamma) << "\n";
    }
    os << "truncation = " << cfg.model.truncation << "\n";
    os << "\n[time]\n";
    os << "dt = " << fmt_g17(cfg.dt) << "\n";
    os << "dt_floor = " << fmt_g17(cfg.dt_floor) << "\n";
    os << "t_end = " << fmt_g17(cfg.t_end) << "\n";
    os << "cfl = " << fmt_g17(cfg.cfl) << "\n";
    os << "nonlinear = " << (cfg.nonlinear ? "true" : "false") << "\n";
    os << "mode = " << (cfg.mode == StepMode::plain ? "\"plain\"" : "\"weighted\"") << "\n";
    os << "c0 = " << fmt_g17(cfg.c0) << "\n";
    os << "\n[diagnostics]\n";
    os << "p = " << fmt_g17(cfg.p) << "\n";
    os << "k0 = " << cfg.k0 << "\n";
    os << "sample_every = " << cfg.sample_every << "\n";
    os << "blowup_guard = " << fmt_g17(cfg.blowup_guard) << "\n";
    os << "seed = " << cfg.data.seed << "\n";
    os << "k_lo = " << cfg.data.k_lo << "\n";
    os << "k_hi = " << cfg.data.k_hi << "\n";
    os << "amplitude_a = " << fmt_g17(cfg.data.amplitude_a) << "\n";
    os << "amplitude_u = " << fmt_g17(cfg.data.amplitude_u) << "\n";
    os << "solenoidal_u = " << (cfg.data.solenoidal_u ? "true" : "false") << "\n";
    return os.str();
}

// FNV-1a, printed as 16 hex digits; stable across platforms for fixed input.
inline std::string fnv_hex(const std::string& text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

inline std::string config_hash(const SimConfig& cfg) { return fnv_hex(echo_config(cfg)); }

}  // namespace nsk
