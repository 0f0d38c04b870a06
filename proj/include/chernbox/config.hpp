#pragma once

#include "chernbox/format.hpp"

#include <cerrno>
#include <climits>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace chernbox {

// Flat scalar configuration shared by every subcommand. A file supplies
// key = value lines, command-line flags override, defaults fill the rest.
struct RunConfig {
    double delta = 1.0;
    int d = 2;
    int L = 12;
    std::string bc = "simple";
    double f = 0.5;      // central-window fraction for the marker
    int w = 2;           // boundary strip width for mode classification
    double theta = 0.5;  // boundary-weight threshold for edge modes
    double eta = 6.0;
    double t = 0.0;
    int N = 8;
    std::optional<std::uint64_t> master_seed;
    double a = -0.4;
    double b = 0.4;
    double s = 0.5;
    double epsilon = 1e-3;
    double beta = 0.5;
    int kgrid = 24;
    int workers = 1;
    int order = 3;      // almost-analytic extension order
    double step = 0.01; // quadrature grid step
    int dim = 40;       // test-matrix dimension for hs-check
    int M = 12;         // ambient box size for decouple-check
    double zim = 0.5;   // imaginary part of the resolvent energy
    double lambda = 0.0;
    bool independent_omega = false;
    std::string tgrid = "0,0.15,0.3";
    std::string Llist = "6,10,14";
    std::string out;    // output directory; empty = environment default
    std::string stem;   // output file stem; empty = subcommand name
    std::string config; // config file path as given on the command line
};

namespace cfgdetail {

inline bool parse_double(const std::string& text, double& out) {
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(text.c_str(), &end);
    if (end == text.c_str() || *end != '\0' || errno == ERANGE) return false;
    out = v;
    return true;
}

inline bool parse_int(const std::string& text, int& out) {
    errno = 0;
    char* end = nullptr;
    const long v = std::strtol(text.c_str(), &end, 10);
    if (end == text.c_str() || *end != '\0' || errno == ERANGE) return false;
    if (v < INT_MIN || v > INT_MAX) return false;
    out = static_cast<int>(v);
    return true;
}

inline bool parse_uint64(const std::string& text, std::uint64_t& out) {
    if (text.empty() || text[0] == '-') return false;
    errno = 0;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(text.c_str(), &end, 10);
    if (end == text.c_str() || *end != '\0' || errno == ERANGE) return false;
    out = v;
    return true;
}

} // namespace cfgdetail

// One key = value assignment read from a config file.
struct ConfigEntry {
    std::string key;
    std::string value;
    int line = 0;
};

// Parses flat INI text: blank lines and #/; comments are skipped, everything
// else must be key = value. Syntax problems are collected, not thrown.
inline std::vector<ConfigEntry> parse_ini(const std::string& text, std::vector<std::string>& errors) {
    std::vector<ConfigEntry> out;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    const auto trim = [](std::string v) {
        const auto b = v.find_first_not_of(" \t\r");
        const auto e = v.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : v.substr(b, e - b + 1);
    };
    while (std::getline(in, raw)) {
        ++line;
        const std::string s = trim(raw);
        if (s.empty() || s[0] == '#' || s[0] == ';') continue;
        const auto eq = s.find('=');
        if (eq == std::string::npos) {
            errors.push_back("line " + std::to_string(line) + ": expected key = value, got \"" + s + "\"");
            continue;
        }
        ConfigEntry e;
        e.key = trim(s.substr(0, eq));
        e.value = trim(s.substr(eq + 1));
        e.line = line;
        if (e.key.empty()) {
            errors.push_back("line " + std::to_string(line) + ": empty key");
            continue;
        }
        out.push_back(std::move(e));
    }
    return out;
}

// Assigns parsed entries onto the config. Unknown keys and unparsable values
// are all collected so a single failure report names every offender.
inline void apply_entries(RunConfig& cfg, const std::vector<ConfigEntry>& entries,
                          std::vector<std::string>& errors) {
    using Setter = std::function<bool(RunConfig&, const std::string&)>;
    static const std::map<std::string, Setter> table = {
        {"delta", [](RunConfig& c, const std::string& v) { return cfgdetail::parse_double(v, c.delta); }},
        {"d", [](RunConfig& c, const std::string& v) { return cfgdetail::parse_int(v, c.d); }},
        {"L", [](RunConfig& c, const std::string& v) { return cfgdetail::parse_int(v, c.L); }},
        {"bc", [](RunConfig& c, const std::string& v) { c.bc = v; return true; }},
        {"f", [](RunConfig& c, const std::string& v) { return cfgdetail::parse_double(v, c.f); }},
        {"w", [](RunConfig& c, const std::string& v) { return cfgdetail::parse_int(v, c.w); }},
        {"theta", [](RunConfig& c, const std::string& v) { return cfgdetail::parse_double(v, c.theta); }},
        {"eta", [](RunConfig& c, const std::string& v) { return cfgdetail::parse_double(v, c.eta); }},
        {"t", [](RunConfig& c, const std::string& v) { return cfgdetail::parse_double(v, c.t); }},
        {"N", [](RunConfig& c, const std::string& v) { return cfgdetail::parse_int(v, c.N); }},
        {"master_seed",
         [](RunConfig& c, const std::string& v) {
             std::uint64_t x = 0;
             if (!cfgdetail::parse_uint64(v, x)) return false;
             c.master_seed = x;
             return true;
         }},
        {"a", [](RunConfig& c, const std::string& v) { return cfgdetail::parse_double(v, c.a); }},
        {"b", [](RunConfig& c, const std::string& v) { return cfgdetail::parse_double(v, c.b); }},
        {"s", [](RunConfig& c, const std::string& v) { return cfgdetail::parse_double(v, c.s); }},
        {"epsilon", [](RunConfig& c, const std::string& v) { return cfgdetail::parse_double(v, c.epsilon); }},
        {"beta", [](RunConfig& c, const std::string& v) { return cfgdetail::parse_double(v, c.beta); }},
        {"kgrid", [](RunConfig& c, const std::string& v) { return cfgdetail::parse_int(v, c.kgrid); }},
        {"workers", [](RunConfig& c, const std::string& v) { return cfgdetail::parse_int(v, c.workers); }},
        {"order", [](RunConfig& c, const std::string& v) { return cfgdetail::parse_int(v, c.order); }},
        {"step", [](RunConfig& c, const std::string& v) { return cfgdetail::parse_double(v, c.step); }},
        {"dim", [](RunConfig& c, const std::string& v) { return cfgdetail::parse_int(v, c.dim); }},
        {"M", [](RunConfig& c, const std::string& v) { return cfgdetail::parse_int(v, c.M); }},
        {"zim", [](RunConfig& c, const std::string& v) { return cfgdetail::parse_double(v, c.zim); }},
        {"lambda", [](RunConfig& c, const std::string& v) { return cfgdetail::parse_double(v, c.lambda); }},
        {"independent_omega",
         [](RunConfig& c, const std::string& v) {
             if (v == "true" || v == "1") c.independent_omega = true;
             else if (v == "false" || v == "0") c.independent_omega = false;
             else return false;
             return true;
         }},
        {"tgrid", [](RunConfig& c, const std::string& v) { c.tgrid = v; return true; }},
        {"Llist", [](RunConfig& c, const std::string& v) { c.Llist = v; return true; }},
        {"out", [](RunConfig& c, const std::string& v) { c.out = v; return true; }},
        {"stem", [](RunConfig& c, const std::string& v) { c.stem = v; return true; }},
    };
    for (const ConfigEntry& e : entries) {
        const auto it = table.find(e.key);
        if (it == table.end()) {
            errors.push_back("unknown key \"" + e.key + "\" (line " + std::to_string(e.line) + ")");
            continue;
        }
        if (!it->second(cfg, e.value))
            errors.push_back("invalid value for \"" + e.key + "\": \"" + e.value + "\" (line " +
                             std::to_string(e.line) + ")");
    }
}

// Range validation for the keys a given subcommand actually consumes.
// Returns every violated constraint.
inline std::vector<std::string> validate_config(const RunConfig& cfg,
                                                const std::vector<std::string>& keys) {
    std::vector<std::string> bad;
    const auto uses = [&](const char* k) {
        for (const std::string& key : keys)
            if (key == k) return true;
        return false;
    };
    if (uses("d") && cfg.d != 2) bad.push_back("d: only the two-band model is wired to the CLI (d = 2)");
    if (uses("L") && cfg.L < 1) bad.push_back("L: L >= 1 required");
    if (uses("bc") && cfg.bc != "simple" && cfg.bc != "periodic")
        bad.push_back("bc: must be \"simple\" or \"periodic\"");
    if (uses("f") && !(cfg.f > 0.0 && cfg.f <= 1.0)) bad.push_back("f: window fraction in (0, 1] required");
    if (uses("w") && cfg.w < 0) bad.push_back("w: boundary width >= 0 required");
    if (uses("theta") && !(cfg.theta >= 0.0 && cfg.theta <= 1.0))
        bad.push_back("theta: threshold in [0, 1] required");
    if (uses("eta") && !(cfg.eta > 0.0)) bad.push_back("eta: eta > 0 required");
    if (uses("t") && !(cfg.t >= 0.0 && cfg.t <= 1.0)) bad.push_back("t: t in [0, 1] required");
    if (uses("N") && cfg.N < 1) bad.push_back("N: at least one realization required");
    if (uses("a") && !(cfg.a < cfg.b)) bad.push_back("a: a < b required");
    if (uses("s") && !(cfg.s > 0.0 && cfg.s < 1.0)) bad.push_back("s: fractional power in (0, 1) required");
    if (uses("epsilon") && !(cfg.epsilon > 0.0)) bad.push_back("epsilon: epsilon > 0 required");
    if (uses("beta") && !(cfg.beta > 0.0)) bad.push_back("beta: beta > 0 required");
    if (uses("kgrid") && cfg.kgrid < 4) bad.push_back("kgrid: kgrid >= 4 required");
    if (uses("workers") && cfg.workers < 1) bad.push_back("workers: workers >= 1 required");
    if (uses("order") && (cfg.order < 0 || cfg.order > 20))
        bad.push_back("order: extension order in [0, 20] required");
    if (uses("step") && !(cfg.step > 0.0)) bad.push_back("step: step > 0 required");
    if (uses("dim") && (cfg.dim < 1 || cfg.dim > 64)) bad.push_back("dim: dimension in [1, 64] required");
    if (uses("M") && cfg.M <= cfg.L + 1) bad.push_back("M: ambient size M > L + 1 required");
    if (uses("zim") && cfg.zim == 0.0) bad.push_back("zim: nonzero imaginary part required");
    return bad;
}

// Parses a comma-separated list of doubles; failures land in errors.
inline std::vector<double> parse_double_list(const std::string& key, const std::string& text,
                                             std::vector<std::string>& errors) {
    std::vector<double> out;
    std::istringstream in(text);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        double v = 0.0;
        if (!cfgdetail::parse_double(tok, v)) {
            errors.push_back("invalid value for \"" + key + "\": \"" + tok + "\"");
            continue;
        }
        out.push_back(v);
    }
    if (out.empty()) errors.push_back("empty list for \"" + key + "\"");
    return out;
}

inline std::vector<int> parse_int_list(const std::string& key, const std::string& text,
                                       std::vector<std::string>& errors) {
    std::vector<int> out;
    std::istringstream in(text);
    std::string tok;
    while (std::getline(in, tok, ',')) {
        int v = 0;
        if (!cfgdetail::parse_int(tok, v)) {
            errors.push_back("invalid value for \"" + key + "\": \"" + tok + "\"");
            continue;
        }
        out.push_back(v);
    }
    if (out.empty()) errors.push_back("empty list for \"" + key + "\"");
    return out;
}

// Resolved-config echo: a JSON object covering exactly the requested keys.
inline std::string config_json(const RunConfig& cfg, const std::vector<std::string>& keys) {
    using fmtutil::json_double;
    using fmtutil::json_escape;
    std::string s = "{";
    bool first = true;
    const auto emit = [&](const std::string& k, const std::string& v) {
        if (!first) s += ", ";
        first = false;
        s += "\"" + k + "\": " + v;
    };
    for (const std::string& k : keys) {
        if (k == "delta") emit(k, json_double(cfg.delta));
        else if (k == "d") emit(k, std::to_string(cfg.d));
        else if (k == "L") emit(k, std::to_string(cfg.L));
        else if (k == "bc") emit(k, "\"" + json_escape(cfg.bc) + "\"");
        else if (k == "f") emit(k, json_double(cfg.f));
        else if (k == "w") emit(k, std::to_string(cfg.w));
        else if (k == "theta") emit(k, json_double(cfg.theta));
        else if (k == "eta") emit(k, json_double(cfg.eta));
        else if (k == "t") emit(k, json_double(cfg.t));
        else if (k == "N") emit(k, std::to_string(cfg.N));
        else if (k == "master_seed")
            emit(k, cfg.master_seed ? "\"" + std::to_string(*cfg.master_seed) + "\"" : "null");
        else if (k == "a") emit(k, json_double(cfg.a));
        else if (k == "b") emit(k, json_double(cfg.b));
        else if (k == "s") emit(k, json_double(cfg.s));
        else if (k == "epsilon") emit(k, json_double(cfg.epsilon));
        else if (k == "beta") emit(k, json_double(cfg.beta));
        else if (k == "kgrid") emit(k, std::to_string(cfg.kgrid));
        else if (k == "workers") emit(k, std::to_string(cfg.workers));
        else if (k == "order") emit(k, std::to_string(cfg.order));
        else if (k == "step") emit(k, json_double(cfg.step));
        else if (k == "dim") emit(k, std::to_string(cfg.dim));
        else if (k == "M") emit(k, std::to_string(cfg.M));
        else if (k == "zim") emit(k, json_double(cfg.zim));
        else if (k == "lambda") emit(k, json_double(cfg.lambda));
        else if (k == "independent_omega") emit(k, cfg.independent_omega ? "true" : "false");
        else if (k == "tgrid") emit(k, "\"" + json_escape(cfg.tgrid) + "\"");
        else if (k == "Llist") emit(k, "\"" + json_escape(cfg.Llist) + "\"");
        else if (k == "out") emit(k, "\"" + json_escape(cfg.out) + "\"");
        else if (k == "config") emit(k, "\"" + json_escape(cfg.config) + "\"");
        else if (k == "stem") emit(k, "\"" + json_escape(cfg.stem) + "\"");
    }
    s += "}";
    return s;
}

} // namespace chernbox
