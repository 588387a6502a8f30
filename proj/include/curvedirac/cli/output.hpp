#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "curvedirac/cli/run_config.hpp"

namespace curvedirac::cli {

/// Flat solution, its curved image, and the run that produced them.
struct SimulationRecord {
    RunConfig config;
    Provenance provenance = Provenance::closed_form;
    std::string metric_label;
    std::vector<MappedSolution> frames;
};

inline constexpr std::string_view csv_header =
    "t,x,re_up,im_up,re_dn,im_dn,density_flat,density_curved,masked,provenance";

/// max over unmasked points of the curved density divided by max of the flat density.
/// Restricting to x > 0 gives the one-sided variant used for the figure panels.
inline double distortion(const MappedSolution& frame, bool positive_side_only = false) {
    const auto flat = density(frame.flat);
    const auto curved = curved_density(flat, frame.conformal, frame.flat.grid);
    double flat_max = 0.0;
    double curved_max = 0.0;
    for (std::size_t j = 0; j < flat.size(); ++j) {
        flat_max = std::max(flat_max, flat[j]);
        if (curved.mask[j] || (positive_side_only && !(frame.flat.grid.x(j) > 0.0))) continue;
        curved_max = std::max(curved_max, curved.values[j]);
    }
    return flat_max > 0.0 ? curved_max / flat_max : 0.0;
}

/// CSV rows: components are those of the flat spinor phi; density_curved is
/// density_flat / Omega and is left empty on masked rows.
inline void write_csv(std::ostream& os, const SimulationRecord& record) {
    os << csv_header << '\n';
    const std::string_view prov = to_string(record.provenance);
    for (const auto& frame : record.frames) {
        const auto& phi = frame.flat;
        const auto flat = density(phi);
        const auto curved = curved_density(flat, frame.conformal, phi.grid);
        const std::string t = format_number(phi.time);
        for (std::size_t j = 0; j < phi.size(); ++j) {
            os << t << ',' << format_number(phi.grid.x(j)) << ',' << format_number(phi.up[j].real()) << ','
               << format_number(phi.up[j].imag()) << ',' << format_number(phi.down[j].real()) << ','
               << format_number(phi.down[j].imag()) << ',' << format_number(flat[j]) << ',';
            if (curved.mask[j]) os << ",1,";
            else os << format_number(curved.values[j]) << ",0,";
            os << prov << '\n';
        }
    }
}

inline nlohmann::ordered_json config_to_json(const RunConfig& cfg) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [k, v] : cfg.to_entries()) {
        if (k == "param") j[k].push_back(v);
        else j[k] = v;
    }
    return j;
}

inline void write_json(std::ostream& os, const SimulationRecord& record) {
    nlohmann::ordered_json doc;
    doc["config"] = config_to_json(record.config);
    doc["metric"] = record.metric_label;
    doc["provenance"] = to_string(record.provenance);
    doc["columns"] = csv_header;
    auto& frames = doc["frames"] = nlohmann::ordered_json::array();
    for (const auto& frame : record.frames) {
        const auto& phi = frame.flat;
        const auto flat = density(phi);
        const auto curved = curved_density(flat, frame.conformal, phi.grid);
        nlohmann::ordered_json f;
        f["t"] = phi.time;
        f["distortion"] = distortion(frame);
        f["x"] = phi.grid.points();
        std::vector<double> re_up, im_up, re_dn, im_dn;
        nlohmann::ordered_json dc = nlohmann::ordered_json::array();
        std::vector<int> masked;
        for (std::size_t j = 0; j < phi.size(); ++j) {
            re_up.push_back(phi.up[j].real());
            im_up.push_back(phi.up[j].imag());
            re_dn.push_back(phi.down[j].real());
            im_dn.push_back(phi.down[j].imag());
            if (curved.mask[j]) dc.push_back(nullptr);
            else dc.push_back(curved.values[j]);
            masked.push_back(curved.mask[j] ? 1 : 0);
        }
        f["re_up"] = re_up;
        f["im_up"] = im_up;
        f["re_dn"] = re_dn;
        f["im_dn"] = im_dn;
        f["density_flat"] = flat;
        f["density_curved"] = std::move(dc);
        f["masked"] = masked;
        frames.push_back(std::move(f));
    }
    os << doc.dump(1) << '\n';
}

/// One field snapshot read back from the CSV schema.
struct CsvFrame {
    double t = 0.0;
    std::vector<double> x;
    std::vector<Complex> up, down;
    std::string provenance;
};

/// Reads rows in the CSV schema, grouping consecutive rows by t.
inline std::vector<CsvFrame> read_csv_frames(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || detail::trim(line) != csv_header)
        throw ConfigError("csv_schema", "input does not start with the expected CSV header");
    std::vector<CsvFrame> frames;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto cols = detail::split(detail::trim(line), ',');
        if (cols.size() != 10)
            throw ConfigError("csv_schema", "line " + std::to_string(line_no) + " has " + std::to_string(cols.size()) +
                                                " columns, expected 10");
        const double t = detail::parse_double("t", cols[0]);
        if (frames.empty() || frames.back().t != t) frames.push_back({t, {}, {}, {}, std::string(cols[9])});
        auto& f = frames.back();
        f.x.push_back(detail::parse_double("x", cols[1]));
        f.up.emplace_back(detail::parse_double("re_up", cols[2]), detail::parse_double("im_up", cols[3]));
        f.down.emplace_back(detail::parse_double("re_dn", cols[4]), detail::parse_double("im_dn", cols[5]));
    }
    return frames;
}

/// Reconstructs the uniform grid of a CSV frame.
inline GridSpec grid_from_points(const std::vector<double>& x) {
    if (x.size() < 16) throw ConfigError("csv_schema", "a frame needs at least 16 grid points");
    const double dx = (x.back() - x.front()) / static_cast<double>(x.size() - 1);
    for (std::size_t j = 1; j < x.size(); ++j)
        if (std::abs(x[j] - x[j - 1] - dx) > 1e-9 * std::max(1.0, std::abs(dx)))
            throw ConfigError("csv_schema", "grid points are not uniformly spaced");
    return GridSpec(x.front(), x.front() + dx * static_cast<double>(x.size()), x.size());
}

namespace detail {

struct Rgb {
    double r, g, b;
};

/// Piecewise-linear dark-to-bright colour ramp on [0, 1].
inline Rgb heat_color(double v) {
    static constexpr std::array<Rgb, 5> stops{{
        {0.00, 0.00, 0.02},
        {0.34, 0.06, 0.43},
        {0.73, 0.21, 0.33},
        {0.98, 0.55, 0.04},
        {0.99, 1.00, 0.64},
    }};
    v = std::clamp(v, 0.0, 1.0) * static_cast<double>(stops.size() - 1);
    const auto i = std::min(static_cast<std::size_t>(v), stops.size() - 2);
    const double f = v - static_cast<double>(i);
    const Rgb& a = stops[i];
    const Rgb& b = stops[i + 1];
    return {a.r + f * (b.r - a.r), a.g + f * (b.g - a.g), a.b + f * (b.b - a.b)};
}

inline std::string hex_color(const Rgb& c) {
    char buf[8];
    auto to_byte = [](double v) { return static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); };
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", to_byte(c.r), to_byte(c.g), to_byte(c.b));
    return buf;
}

} // namespace detail

struct HeatMap {
    std::string title;
    std::vector<double> x;
    std::vector<double> t;
    /// values[k][j] at (t[k], x[j]); masked cells are drawn grey.
    std::vector<std::vector<double>> values;
    std::vector<std::vector<bool>> mask;
};

/// Rectilinear SVG: x to the right, t upwards, colour scaled by the panel maximum.
inline std::string render_heatmap_svg(const HeatMap& map) {
    constexpr int cell_w = 2;
    constexpr int cell_h = 4;
    constexpr int margin_left = 50;
    constexpr int margin_top = 30;
    constexpr int margin_bottom = 40;
    const int nx = static_cast<int>(map.x.size());
    const int nt = static_cast<int>(map.t.size());
    const int width = margin_left + nx * cell_w + 20;
    const int height = margin_top + nt * cell_h + margin_bottom;

    double peak = 0.0;
    for (std::size_t k = 0; k < map.values.size(); ++k)
        for (std::size_t j = 0; j < map.values[k].size(); ++j)
            if (!map.mask[k][j]) peak = std::max(peak, map.values[k][j]);

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
    os << "<text x=\"" << margin_left << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"13\">" << map.title
       << "</text>\n";
    os << "<g shape-rendering=\"crispEdges\">\n";
    for (int k = 0; k < nt; ++k) {
        const int y = margin_top + (nt - 1 - k) * cell_h;
        for (int j = 0; j < nx; ++j) {
            const bool masked = map.mask[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)];
            const double v = map.values[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)];
            const std::string fill = masked ? "#808080" : detail::hex_color(detail::heat_color(peak > 0 ? v / peak : 0));
            os << "<rect x=\"" << margin_left + j * cell_w << "\" y=\"" << y << "\" width=\"" << cell_w
               << "\" height=\"" << cell_h << "\" fill=\"" << fill << "\"/>\n";
        }
    }
    os << "</g>\n";
    const int axis_y = margin_top + nt * cell_h;
    auto label = [&](int px, int py, const std::string& text, const char* anchor) {
        os << "<text x=\"" << px << "\" y=\"" << py << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\""
           << anchor << "\">" << text << "</text>\n";
    };
    if (nx > 0 && nt > 0) {
        label(margin_left, axis_y + 15, "x=" + format_number(map.x.front()), "start");
        label(margin_left + nx * cell_w, axis_y + 15, "x=" + format_number(map.x.back()), "end");
        label(margin_left - 5, axis_y, "t=" + format_number(map.t.front()), "end");
        label(margin_left - 5, margin_top + 10, "t=" + format_number(map.t.back()), "end");
    }
    os << "</svg>\n";
    return os.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("filesystem_error", "cannot open '" + path + "' for writing");
    out << content;
    if (!out) throw Error("filesystem_error", "failed writing '" + path + "'");
}

} // namespace curvedirac::cli
