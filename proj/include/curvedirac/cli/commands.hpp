#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "curvedirac/cli/output.hpp"
#include "curvedirac/cli/run_config.hpp"

namespace curvedirac::cli {

enum ExitCode : int { exit_success = 0, exit_verification_failed = 1, exit_usage = 2, exit_runtime = 3 };

/// Flat packet -> (closed form | spectral) evolution -> curved image, one frame per output time.
inline SimulationRecord run_simulation(const RunConfig& cfg) {
    const ConformalFactor cf = build_conformal_factor(cfg);
    const GridSpec grid = cfg.grid();
    const GaussianPacket packet = cfg.packet();
    SimulationRecord record{cfg, cfg.method == Method::closed ? Provenance::closed_form : Provenance::spectral,
                            cf.label(), {}};

    const SpinorField initial = gaussian_initial(packet, grid);
    for (std::size_t k = 0; k < cfg.frame_count(); ++k) {
        const double t = static_cast<double>(k) * cfg.stride;
        const SpinorField phi = cfg.method == Method::closed ? evolve_gaussian_closed_form(packet, grid, t)
                                                             : evolve_spectral(initial, t);
        record.frames.push_back(map_to_curved(phi, cf));
    }
    return record;
}

inline std::string render_record(const SimulationRecord& record) {
    std::ostringstream os;
    if (record.config.format == Format::csv) write_csv(os, record);
    else write_json(os, record);
    return os.str();
}

/// Writes the record to cfg.out (plus a `<out>.config` echo) or to `stdout_sink`.
inline void emit_record(const SimulationRecord& record, std::ostream& stdout_sink) {
    const std::string body = render_record(record);
    if (record.config.out.empty()) {
        stdout_sink << body;
        return;
    }
    write_text_file(record.config.out, body);
    write_text_file(record.config.out + ".config", record.config.to_text());
}

inline int cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
    const SimulationRecord record = run_simulation(cfg);
    emit_record(record, out);
    double worst = 0.0;
    for (const auto& f : record.frames) worst = std::max(worst, distortion(f));
    log << "simulate: " << record.frames.size() << " frames, metric " << record.metric_label << ", provenance "
        << to_string(record.provenance) << ", max distortion " << format_number(worst) << '\n';
    return exit_success;
}

// --- verify -----------------------------------------------------------------

struct VerifyCheck {
    std::string name;
    double value = 0.0;
    double threshold = 0.0;
    bool passed = false;
    std::string relation; ///< "<=" or ">="
};

struct VerifyLevel {
    std::size_t n = 0;
    double dt = 0.0;
    double max_error = 0.0;
};

struct VerifyReport {
    std::vector<VerifyLevel> levels;
    double weighted_norm_drift = 0.0;
    double residual = 0.0;
    std::vector<VerifyCheck> checks;
    EvolutionRecord fd_record;
    bool passed() const {
        return std::all_of(checks.begin(), checks.end(), [](const VerifyCheck& c) { return c.passed; });
    }
};

inline constexpr double convergence_min_ratio = 8.0;
inline constexpr double convergence_floor = 1e-10;

namespace detail {

inline SpinorField reference_flat(const RunConfig& cfg, const GridSpec& grid, double t) {
    const GaussianPacket packet = cfg.packet();
    if (cfg.method == Method::closed) return evolve_gaussian_closed_form(packet, grid, t);
    return evolve_spectral(gaussian_initial(packet, grid), t);
}

struct LevelRun {
    VerifyLevel level;
    EvolutionRecord record;
    SolverConfig solver;
};

inline LevelRun run_level(const RunConfig& cfg, const ConformalFactor& cf, std::size_t n) {
    const GridSpec grid(cfg.x_min, cfg.x_max, n);
    const SpinorField phi0 = gaussian_initial(cfg.packet(), grid);
    const SpinorField psi0 = cfg.skip_map ? phi0 : map_to_curved(phi0, cf).curved;
    const SolverConfig solver = SolverConfig::for_grid(grid, cfg.t_end, cfg.stride);
    EvolutionRecord record = evolve_curved(psi0, cf, solver);
    const SpinorField expected = map_to_curved(reference_flat(cfg, grid, cfg.t_end), cf).curved;
    const double err = max_spinor_distance(record.frames.back(), expected);
    return {{n, solver.dt(), err}, std::move(record), solver};
}

} // namespace detail

/// Cross-checks the transformation against a direct integration of the curved equation.
///
/// The fd-oracle evolves psi(x,0) = Omega^{-1/2} phi(x,0) (or the unmapped phi with
/// skip_map) and is compared with Omega^{-1/2} phi(x,t) at three resolutions n, 2n, 4n.
inline VerifyReport run_verification(const RunConfig& cfg) {
    const ConformalFactor cf = build_conformal_factor(cfg);
    VerifyReport report;

    auto base = detail::run_level(cfg, cf, cfg.n);
    report.levels.push_back(base.level);

    const double w0 = weighted_norm(base.record.frames.front(), cf);
    for (const auto& f : base.record.frames)
        report.weighted_norm_drift = std::max(report.weighted_norm_drift, std::abs(weighted_norm(f, cf) - w0));

    // Residual on three closely spaced slices continuing from the final state.
    const SolverConfig short_run(base.solver.dt(), 2.0 * base.solver.dt(), cfg.grid().dx(), base.solver.scheme(), 1);
    report.residual = residual(evolve_curved(base.record.frames.back(), cf, short_run), cf, base.solver.scheme());

    for (std::size_t refine = 1; refine <= 2; ++refine)
        report.levels.push_back(detail::run_level(cfg, cf, cfg.n << refine).level);
    report.fd_record = std::move(base.record);

    report.checks.push_back({"max_norm_error", report.levels[0].max_error, cfg.tol,
                             report.levels[0].max_error <= cfg.tol, "<="});
    report.checks.push_back({"weighted_norm_drift", report.weighted_norm_drift, cfg.drift_tol,
                             report.weighted_norm_drift <= cfg.drift_tol, "<="});
    for (std::size_t i = 1; i < report.levels.size(); ++i) {
        const double coarse = report.levels[i - 1].max_error;
        const double fine = report.levels[i].max_error;
        const double ratio = fine > 0.0 ? coarse / fine : std::numeric_limits<double>::infinity();
        report.checks.push_back({"convergence_ratio_n" + std::to_string(report.levels[i].n), ratio,
                                 convergence_min_ratio,
                                 ratio >= convergence_min_ratio || fine <= convergence_floor, ">="});
    }
    return report;
}

inline SimulationRecord fd_record_as_simulation(const RunConfig& cfg, const EvolutionRecord& fd, const ConformalFactor& cf) {
    SimulationRecord record{cfg, Provenance::fd_oracle, cf.label(), {}};
    for (const auto& psi : fd.frames) record.frames.push_back(map_to_curved(map_to_flat(psi, cf), cf));
    return record;
}

inline void print_report(std::ostream& os, const RunConfig& cfg, const std::string& label, const VerifyReport& r) {
    os << "verify metric=" << label << " grid=" << format_number(cfg.x_min) << ":" << format_number(cfg.x_max) << ":"
       << cfg.n << " t_end=" << format_number(cfg.t_end) << (cfg.skip_map ? " (unmapped initial data)" : "") << '\n';
    for (const auto& l : r.levels)
        os << "  level n=" << l.n << " dt=" << format_number(l.dt) << " max_norm_error=" << format_number(l.max_error)
           << '\n';
    os << "  residual=" << format_number(r.residual) << '\n';
    for (const auto& c : r.checks)
        os << (c.passed ? "PASS " : "FAIL ") << c.name << " = " << format_number(c.value) << " (" << c.relation << ' '
           << format_number(c.threshold) << ")\n";
    os << (r.passed() ? "RESULT PASS" : "RESULT FAIL") << '\n';
}

inline int cmd_verify(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
    const ConformalFactor cf = build_conformal_factor(cfg);
    const VerifyReport report = run_verification(cfg);
    print_report(out, cfg, cf.label(), report);

    if (!cfg.out.empty()) {
        if (cfg.format == Format::json) {
            nlohmann::ordered_json doc;
            doc["config"] = config_to_json(cfg);
            doc["metric"] = cf.label();
            auto& levels = doc["levels"] = nlohmann::ordered_json::array();
            for (const auto& l : report.levels) levels.push_back({{"n", l.n}, {"dt", l.dt}, {"max_norm_error", l.max_error}});
            doc["residual"] = report.residual;
            doc["weighted_norm_drift"] = report.weighted_norm_drift;
            auto& checks = doc["checks"] = nlohmann::ordered_json::array();
            for (const auto& c : report.checks)
                checks.push_back({{"name", c.name}, {"value", c.value}, {"threshold", c.threshold}, {"passed", c.passed}});
            doc["result"] = report.passed() ? "PASS" : "FAIL";
            write_text_file(cfg.out, doc.dump(1) + "\n");
        } else {
            std::ostringstream os;
            write_csv(os, fd_record_as_simulation(cfg, report.fd_record, cf));
            write_text_file(cfg.out, os.str());
        }
        write_text_file(cfg.out + ".config", cfg.to_text());
    }
    if (!report.passed()) {
        for (const auto& c : report.checks)
            if (!c.passed) {
                log << "error[verification_failed]: check '" << c.name << "' failed with value " << format_number(c.value)
                    << '\n';
                break;
            }
        return exit_verification_failed;
    }
    return exit_success;
}

// --- map ----------------------------------------------------------------------

/// Maps flat-spinor CSV data (any provenance, e.g. measured or numerical phi) to the curved metric.
inline int cmd_map(const RunConfig& cfg, const std::string& input, std::ostream& out, std::ostream& log) {
    std::ifstream in(input, std::ios::binary);
    if (!in) throw ConfigError("cannot read input '" + input + "'");
    const auto frames = read_csv_frames(in);
    const ConformalFactor cf = build_conformal_factor(cfg);
    SimulationRecord record{cfg, Provenance::closed_form, cf.label(), {}};
    for (const auto& f : frames) {
        if (f.provenance == "spectral") record.provenance = Provenance::spectral;
        else if (f.provenance == "fd-oracle") record.provenance = Provenance::fd_oracle;
        record.frames.push_back(map_to_curved(SpinorField(grid_from_points(f.x), f.up, f.down, f.t), cf));
    }
    emit_record(record, out);
    log << "map: " << record.frames.size() << " frames mapped with " << cf.label() << '\n';
    return exit_success;
}

// --- figure reproduction ------------------------------------------------------

struct Fig1Options {
    double b0 = 10.0;
    double sigma = 5.0;
    double x_min = -60.0;
    double x_max = 60.0;
    std::size_t n = 256;
    double t_end = 40.0;
    double stride = 0.5;
};

struct Fig1Panel {
    char id = 'a';
    bool curved = false;
    double x0 = 0.0;
    SimulationRecord record;

    std::string stem() const {
        return std::string("panel_") + id + (curved ? "_curved" : "_flat") + "_x0_" + format_number(x0);
    }
};

struct Fig1Result {
    Fig1Options options;
    std::vector<Fig1Panel> panels;
    /// Largest deviation of the flat peak from x0 + t, in grid cells, and of the peak height from 2/N (relative).
    double flat_peak_offset_cells = 0.0;
    double flat_peak_height_deviation = 0.0;
    /// max curved density near the throat (|x| < b0) over max flat density, x0 = -10 column.
    double throat_focusing = 0.0;
    /// x0 -> max over t of the one-sided (x > 0) distortion.
    std::vector<std::pair<double, double>> distortion_by_x0;

    bool translation_ok() const { return flat_peak_offset_cells <= 0.5 + 1e-9 && flat_peak_height_deviation <= 1e-2; }
    bool focusing_ok() const { return throat_focusing > 2.0; }
    bool distortion_order_ok() const {
        double d1 = 0.0, d5 = 0.0;
        for (const auto& [x0, d] : distortion_by_x0) {
            if (x0 == 1.0) d1 = d;
            if (x0 == 5.0) d5 = d;
        }
        return d1 > d5;
    }
};

/// Builds the six panels: flat (a, c, e) and wormhole (b, d, f) densities for x0 in {-10, 1, 5}.
/// The window is a display window, so the closed form is sampled without containment checks.
inline Fig1Result reproduce_fig1(const Fig1Options& opt = {}) {
    Fig1Result result{opt, {}, 0.0, 0.0, 0.0, {}};
    const GridSpec grid(opt.x_min, opt.x_max, opt.n);
    const ConformalFactor flat_cf = constant_conformal_factor(1.0);
    const ConformalFactor worm_cf = wormhole_conformal_factor(opt.b0);
    const std::size_t frames = static_cast<std::size_t>(std::floor(opt.t_end / opt.stride + 1e-9)) + 1;
    const std::array<double, 3> centres{-10.0, 1.0, 5.0};
    const std::array<char, 6> ids{'a', 'b', 'c', 'd', 'e', 'f'};

    for (std::size_t c = 0; c < centres.size(); ++c) {
        const GaussianPacket packet(centres[c], opt.sigma);
        for (int curved = 0; curved < 2; ++curved) {
            RunConfig cfg;
            cfg.metric.kind = curved ? MetricKind::wormhole : MetricKind::flat;
            cfg.metric.b0 = opt.b0;
            cfg.x0 = centres[c];
            cfg.sigma = opt.sigma;
            cfg.x_min = opt.x_min;
            cfg.x_max = opt.x_max;
            cfg.n = opt.n;
            cfg.t_end = opt.t_end;
            cfg.stride = opt.stride;
            const ConformalFactor& cf = curved ? worm_cf : flat_cf;
            Fig1Panel panel{ids[2 * c + static_cast<std::size_t>(curved)], curved == 1, centres[c],
                            {cfg, Provenance::closed_form, cf.label(), {}}};
            for (std::size_t k = 0; k < frames; ++k)
                panel.record.frames.push_back(map_to_curved(sample_gaussian(packet, grid, static_cast<double>(k) * opt.stride), cf));
            result.panels.push_back(std::move(panel));
        }
    }

    const double peak_density = 2.0 / GaussianPacket(0.0, opt.sigma).normalization();
    for (const auto& panel : result.panels) {
        if (!panel.curved) {
            for (const auto& frame : panel.record.frames) {
                const double centre = panel.x0 + frame.flat.time;
                if (centre < opt.x_min || centre > opt.x_max) continue;
                const auto rho = density(frame.flat);
                const auto it = std::max_element(rho.begin(), rho.end());
                const double x_peak = grid.x(static_cast<std::size_t>(it - rho.begin()));
                result.flat_peak_offset_cells =
                    std::max(result.flat_peak_offset_cells, std::abs(x_peak - centre) / grid.dx());
                result.flat_peak_height_deviation =
                    std::max(result.flat_peak_height_deviation, std::abs(*it - peak_density) / peak_density);
            }
            continue;
        }
        double worst = 0.0;
        for (const auto& frame : panel.record.frames) worst = std::max(worst, distortion(frame, true));
        result.distortion_by_x0.emplace_back(panel.x0, worst);

        if (panel.x0 == -10.0) {
            double curved_max = 0.0, flat_max = 0.0;
            for (const auto& frame : panel.record.frames) {
                const auto rho = density(frame.flat);
                const auto psi = curved_density(rho, frame.conformal, grid);
                for (std::size_t j = 0; j < rho.size(); ++j) {
                    flat_max = std::max(flat_max, rho[j]);
                    if (!psi.mask[j] && std::abs(grid.x(j)) < opt.b0) curved_max = std::max(curved_max, psi.values[j]);
                }
            }
            result.throat_focusing = curved_max / flat_max;
        }
    }
    return result;
}

inline HeatMap panel_heatmap(const Fig1Panel& panel) {
    HeatMap map;
    map.title = std::string("(") + panel.id + ") " + (panel.curved ? "wormhole" : "flat") + ", x0=" +
                format_number(panel.x0) + ", density scaled to panel max";
    map.x = panel.record.frames.front().flat.grid.points();
    for (const auto& frame : panel.record.frames) {
        map.t.push_back(frame.flat.time);
        const auto rho = density(frame.flat);
        if (panel.curved) {
            auto psi = curved_density(rho, frame.conformal, frame.flat.grid);
            map.values.push_back(std::move(psi.values));
            map.mask.push_back(std::move(psi.mask));
        } else {
            map.values.push_back(rho);
            map.mask.emplace_back(rho.size(), false);
        }
    }
    return map;
}

inline int cmd_reproduce_fig1(const std::string& directory, const Fig1Options& opt, std::ostream& log) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(directory, ec);
    if (ec) throw Error("filesystem_error", "cannot create '" + directory + "': " + ec.message());

    const Fig1Result result = reproduce_fig1(opt);
    nlohmann::ordered_json summary;
    summary["window"] = {{"x_min", opt.x_min}, {"x_max", opt.x_max}, {"n", opt.n}, {"t_min", 0.0},
                         {"t_max", opt.t_end}, {"t_stride", opt.stride}};
    summary["b0"] = opt.b0;
    summary["sigma"] = opt.sigma;
    summary["color_scale"] = "linear, normalised to each panel's maximum unmasked density";
    summary["distortion_metric"] = "max over t of (max unmasked curved density on x>0) / (max flat density)";
    auto& panels = summary["panels"] = nlohmann::ordered_json::array();
    for (const auto& panel : result.panels) {
        const std::string base = (fs::path(directory) / panel.stem()).string();
        std::ostringstream csv;
        write_csv(csv, panel.record);
        write_text_file(base + ".csv", csv.str());
        write_text_file(base + ".svg", render_heatmap_svg(panel_heatmap(panel)));
        panels.push_back({{"id", std::string(1, panel.id)},
                          {"spacetime", panel.curved ? "wormhole" : "flat"},
                          {"x0", panel.x0},
                          {"csv", panel.stem() + ".csv"},
                          {"svg", panel.stem() + ".svg"}});
    }
    auto& d = summary["distortion"] = nlohmann::ordered_json::object();
    for (const auto& [x0, v] : result.distortion_by_x0) d[format_number(x0)] = v;
    summary["throat_focusing"] = result.throat_focusing;
    summary["flat_peak_offset_cells"] = result.flat_peak_offset_cells;
    summary["flat_peak_height_deviation"] = result.flat_peak_height_deviation;
    summary["checks"] = {{"rigid_translation", result.translation_ok()},
                         {"throat_focusing", result.focusing_ok()},
                         {"distortion_x0_1_exceeds_x0_5", result.distortion_order_ok()}};
    write_text_file((fs::path(directory) / "summary.json").string(), summary.dump(1) + "\n");

    log << "reproduce-fig1: wrote 6 panels to " << directory << " (focusing " << format_number(result.throat_focusing)
        << ")\n";
    return exit_success;
}

} // namespace curvedirac::cli
