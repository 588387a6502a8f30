#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "curvedirac/cli/commands.hpp"

namespace {

using namespace curvedirac;
using namespace curvedirac::cli;

struct RunFlags {
    std::string config_file;
    std::vector<std::pair<std::string, CLI::Option*>> scalar;
    std::vector<std::string> params;
    CLI::Option* params_opt = nullptr;
    std::vector<std::string> values;
    bool skip_map = false;
    CLI::Option* skip_map_opt = nullptr;

    void add_to(CLI::App& app) {
        app.add_option("--config", config_file, "flat key=value file; flags given on the command line take precedence");
        static const std::vector<std::pair<std::string, std::string>> keys{
            {"metric", "builtin metric: wormhole | flat"},
            {"b0", "wormhole throat radius"},
            {"omega-expr", "expression for Omega(x)"},
            {"singular", "comma-separated singular points of the expression"},
            {"x0", "packet centre"},
            {"sigma", "packet width"},
            {"grid", "xmin:xmax:n"},
            {"t-end", "final time"},
            {"stride", "output time interval"},
            {"method", "flat evolution: closed | spectral"},
            {"out", "output path (stdout when empty)"},
            {"format", "csv | json"},
            {"tol", "verify: max-norm error tolerance"},
            {"drift-tol", "verify: weighted-norm drift tolerance"},
        };
        values.resize(keys.size());
        for (std::size_t i = 0; i < keys.size(); ++i)
            scalar.emplace_back(keys[i].first, app.add_option("--" + keys[i].first, values[i], keys[i].second));
        params_opt = app.add_option("--param", params, "expression parameter binding name=value (repeatable)");
    }

    RunConfig resolve(RunConfig defaults) const {
        ConfigEntries entries;
        if (!config_file.empty()) entries = read_config_file(config_file);
        for (std::size_t i = 0; i < scalar.size(); ++i)
            if (scalar[i].second->count() > 0) entries.emplace_back(scalar[i].first, values[i]);
        for (const auto& p : params) entries.emplace_back("param", p);
        if (skip_map) entries.emplace_back("skip-map", "true");
        return apply_entries(std::move(defaults), entries);
    }
};

void report_error(const Error& e) { std::cerr << "error[" << e.tag() << "]: " << e.what() << '\n'; }

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Maps free massless 1+1D Dirac solutions onto static curved spacetimes"};
    app.require_subcommand(1);

    RunFlags simulate_flags, verify_flags, map_flags;
    auto* simulate = app.add_subcommand("simulate", "evolve a flat Gaussian packet and map it to the curved metric");
    simulate_flags.add_to(*simulate);

    auto* verify = app.add_subcommand("verify", "cross-check the mapping against direct integration of the curved equation");
    verify_flags.add_to(*verify);
    verify->add_flag("--skip-map", verify_flags.skip_map, "negative control: evolve the unmapped flat packet");

    auto* map = app.add_subcommand("map", "map flat-spinor CSV data onto the curved metric");
    map_flags.add_to(*map);
    std::string map_input;
    map->add_option("--input", map_input, "CSV file in the output schema")->required();

    auto* fig = app.add_subcommand("reproduce-fig1", "write the six wormhole/flat density panels with SVG heat maps");
    std::string fig_dir = "fig1";
    Fig1Options fig_opts;
    fig->add_option("dir", fig_dir, "output directory");
    fig->add_option("--n", fig_opts.n, "grid points across the window");
    fig->add_option("--stride", fig_opts.stride, "time between rows of the panels");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_success : exit_usage;
    }

    RunConfig cfg;
    Command command = Command::simulate;
    try {
        if (*simulate) {
            cfg = simulate_flags.resolve(RunConfig::simulate_defaults());
        } else if (*verify) {
            cfg = verify_flags.resolve(RunConfig::verify_defaults());
            command = Command::verify;
        } else if (*map) {
            cfg = map_flags.resolve(RunConfig::simulate_defaults());
            command = Command::map;
        }
        if (!*fig) validate(cfg, command);
    } catch (const Error& e) {
        report_error(e);
        return exit_usage;
    }

    try {
        if (*fig) return cmd_reproduce_fig1(fig_dir, fig_opts, std::cerr);
        switch (command) {
        case Command::simulate: return cmd_simulate(cfg, std::cout, std::cerr);
        case Command::verify: return cmd_verify(cfg, std::cout, std::cerr);
        case Command::map: return cmd_map(cfg, map_input, std::cout, std::cerr);
        case Command::reproduce: break;
        }
    } catch (const Error& e) {
        report_error(e);
        return exit_runtime;
    } catch (const std::exception& e) {
        std::cerr << "error[internal]: " << e.what() << '\n';
        return exit_runtime;
    }
    return exit_success;
}
