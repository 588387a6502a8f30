#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "curvedirac/curvedirac.hpp"

namespace curvedirac::cli {

/// Usage or configuration problem; maps to exit code 2.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& message) : Error("config_error", message) {}
    ConfigError(std::string tag, const std::string& message) : Error(std::move(tag), message) {}
};

enum class MetricKind { wormhole, flat, expression };
enum class Method { closed, spectral };
enum class Format { csv, json };

struct MetricSelection {
    MetricKind kind = MetricKind::wormhole;
    double b0 = 10.0;
    std::string expression;
    Bindings params;
    std::vector<double> singular;
};

/// Key/value entries in file order; keys mirror the long CLI flags.
using ConfigEntries = std::vector<std::pair<std::string, std::string>>;

inline std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct RunConfig {
    MetricSelection metric;
    double x0 = -10.0;
    double sigma = 5.0;
    double x_min = -60.0;
    double x_max = 60.0;
    std::size_t n = 1024;
    double t_end = 20.0;
    double stride = 1.0;
    Method method = Method::closed;
    Format format = Format::csv;
    std::string out;
    double tol = 5e-6;
    double drift_tol = 1e-8;
    bool skip_map = false;

    static RunConfig simulate_defaults() { return {}; }

    static RunConfig verify_defaults() {
        RunConfig c;
        c.x0 = 30.0;
        c.x_min = 2.0;
        c.x_max = 130.0;
        c.n = 4096;
        c.t_end = 10.0;
        c.stride = 1.0;
        return c;
    }

    GridSpec grid() const { return GridSpec(x_min, x_max, n); }
    GaussianPacket packet() const { return GaussianPacket(x0, sigma); }
    std::size_t frame_count() const { return static_cast<std::size_t>(std::floor(t_end / stride + 1e-9)) + 1; }

    ConfigEntries to_entries() const;
    std::string to_text() const;
};

namespace detail {

inline double parse_double(std::string_view key, std::string_view text) {
    double v = 0.0;
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, v);
    if (text.empty() || ec != std::errc() || ptr != last || !std::isfinite(v))
        throw ConfigError("'" + std::string(key) + "' expects a number, got '" + std::string(text) + "'");
    return v;
}

inline std::size_t parse_count(std::string_view key, std::string_view text) {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size())
        throw ConfigError("'" + std::string(key) + "' expects a non-negative integer, got '" + std::string(text) + "'");
    return v;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const auto p = s.find(sep, start);
        parts.push_back(s.substr(start, p == std::string_view::npos ? std::string_view::npos : p - start));
        if (p == std::string_view::npos) break;
        start = p + 1;
    }
    return parts;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

} // namespace detail

inline ConfigEntries RunConfig::to_entries() const {
    ConfigEntries e;
    switch (metric.kind) {
    case MetricKind::wormhole:
        e.emplace_back("metric", "wormhole");
        e.emplace_back("b0", format_number(metric.b0));
        break;
    case MetricKind::flat: e.emplace_back("metric", "flat"); break;
    case MetricKind::expression: {
        e.emplace_back("omega-expr", metric.expression);
        for (const auto& [name, value] : metric.params) e.emplace_back("param", name + "=" + format_number(value));
        std::string s;
        for (std::size_t i = 0; i < metric.singular.size(); ++i) s += (i ? "," : "") + format_number(metric.singular[i]);
        e.emplace_back("singular", s);
        break;
    }
    }
    e.emplace_back("x0", format_number(x0));
    e.emplace_back("sigma", format_number(sigma));
    e.emplace_back("grid", format_number(x_min) + ":" + format_number(x_max) + ":" + std::to_string(n));
    e.emplace_back("t-end", format_number(t_end));
    e.emplace_back("stride", format_number(stride));
    e.emplace_back("method", method == Method::closed ? "closed" : "spectral");
    e.emplace_back("format", format == Format::csv ? "csv" : "json");
    e.emplace_back("out", out);
    e.emplace_back("tol", format_number(tol));
    e.emplace_back("drift-tol", format_number(drift_tol));
    if (skip_map) e.emplace_back("skip-map", "true");
    return e;
}

inline std::string RunConfig::to_text() const {
    std::string text;
    for (const auto& [k, v] : to_entries()) text += k + "=" + v + "\n";
    return text;
}

/// Applies entries on top of `base`. Later entries win, except `param`, which accumulates.
inline RunConfig apply_entries(RunConfig cfg, const ConfigEntries& entries) {
    using detail::parse_count;
    using detail::parse_double;
    bool params_reset = false;
    for (const auto& [key, value] : entries) {
        if (key == "metric") {
            if (value == "wormhole") cfg.metric.kind = MetricKind::wormhole;
            else if (value == "flat") cfg.metric.kind = MetricKind::flat;
            else throw ConfigError("unknown metric '" + value + "' (expected wormhole or flat)");
        } else if (key == "b0") {
            cfg.metric.b0 = parse_double(key, value);
        } else if (key == "omega-expr") {
            cfg.metric.kind = MetricKind::expression;
            cfg.metric.expression = value;
        } else if (key == "param") {
            if (!params_reset) {
                cfg.metric.params.clear();
                params_reset = true;
            }
            const auto eq = value.find('=');
            if (eq == std::string::npos || eq == 0) throw ConfigError("param expects name=value, got '" + value + "'");
            cfg.metric.params[value.substr(0, eq)] = parse_double(key, std::string_view(value).substr(eq + 1));
        } else if (key == "singular") {
            cfg.metric.singular.clear();
            if (!detail::trim(value).empty())
                for (auto part : detail::split(value, ',')) cfg.metric.singular.push_back(parse_double(key, detail::trim(part)));
        } else if (key == "x0") {
            cfg.x0 = parse_double(key, value);
        } else if (key == "sigma") {
            cfg.sigma = parse_double(key, value);
        } else if (key == "grid") {
            const auto parts = detail::split(value, ':');
            if (parts.size() != 3) throw ConfigError("grid expects xmin:xmax:n, got '" + value + "'");
            cfg.x_min = parse_double(key, parts[0]);
            cfg.x_max = parse_double(key, parts[1]);
            cfg.n = parse_count(key, parts[2]);
        } else if (key == "t-end") {
            cfg.t_end = parse_double(key, value);
        } else if (key == "stride") {
            cfg.stride = parse_double(key, value);
        } else if (key == "method") {
            if (value == "closed") cfg.method = Method::closed;
            else if (value == "spectral") cfg.method = Method::spectral;
            else throw ConfigError("unknown method '" + value + "' (expected closed or spectral)");
        } else if (key == "format") {
            if (value == "csv") cfg.format = Format::csv;
            else if (value == "json") cfg.format = Format::json;
            else throw ConfigError("unknown format '" + value + "' (expected csv or json)");
        } else if (key == "out") {
            cfg.out = value;
        } else if (key == "tol") {
            cfg.tol = parse_double(key, value);
        } else if (key == "drift-tol") {
            cfg.drift_tol = parse_double(key, value);
        } else if (key == "skip-map") {
            cfg.skip_map = value == "true" || value == "1";
        } else {
            throw ConfigError("unknown configuration key '" + key + "'");
        }
    }
    return cfg;
}

/// Flat key=value text; blank lines and lines starting with '#' are ignored.
inline ConfigEntries parse_config_text(std::string_view text) {
    ConfigEntries entries;
    std::size_t line_no = 0;
    for (auto line : detail::split(text, '\n')) {
        ++line_no;
        line = detail::trim(line);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError("config line " + std::to_string(line_no) + " is not key=value");
        entries.emplace_back(std::string(detail::trim(line.substr(0, eq))), std::string(detail::trim(line.substr(eq + 1))));
    }
    return entries;
}

inline ConfigEntries read_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

/// Conformal factor for the selected metric. Expression factors are validated over the run grid.
inline ConformalFactor build_conformal_factor(const RunConfig& cfg) {
    switch (cfg.metric.kind) {
    case MetricKind::wormhole: return wormhole_conformal_factor(cfg.metric.b0);
    case MetricKind::flat: return constant_conformal_factor(1.0);
    case MetricKind::expression: break;
    }
    return compile_conformal_factor(cfg.metric.expression, cfg.metric.params, cfg.metric.singular,
                                    {cfg.x_min, cfg.x_max});
}

enum class Command { simulate, verify, reproduce, map };

/// Checks every module precondition a run depends on, before any computation.
/// Throws the first violation (as ConfigError, or the module's own error type).
inline void validate(const RunConfig& cfg, Command command) {
    if (cfg.metric.kind == MetricKind::wormhole && !(cfg.metric.b0 > 0.0))
        throw ConfigError("b0 must be > 0, got " + format_number(cfg.metric.b0));
    if (cfg.metric.kind == MetricKind::expression && cfg.metric.expression.empty())
        throw ConfigError("omega-expr is empty");
    if (!(cfg.sigma > 0.0)) throw ConfigError("sigma must be > 0, got " + format_number(cfg.sigma));
    if (!(cfg.t_end >= 0.0)) throw ConfigError("t-end must be >= 0");
    if (!(cfg.stride > 0.0)) throw ConfigError("stride must be > 0");
    if (!(cfg.tol > 0.0) || !(cfg.drift_tol > 0.0)) throw ConfigError("tolerances must be > 0");
    const GridSpec grid = cfg.grid();
    if ((command == Command::verify || cfg.method == Method::spectral) && command != Command::map)
        grid.require_power_of_two();

    const ConformalFactor cf = build_conformal_factor(cfg);
    if (command == Command::map) return;

    const GaussianPacket packet = cfg.packet();
    require_contained(packet, grid, 0.0);
    require_contained(packet, grid, cfg.t_end);

    if (command == Command::verify) {
        if (cf.singular_points().size() > 1) throw ConfigError("verify supports metrics with at most one singular point");
        require_single_branch(grid, cf);
        const double r = std::fmod(cfg.t_end, cfg.stride);
        if (std::min(r, cfg.stride - r) > 1e-9 * std::max(1.0, cfg.t_end))
            throw ConfigError("t-end must be a multiple of stride for verify");
    }
}

} // namespace curvedirac::cli
