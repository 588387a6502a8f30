#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <gtest/gtest.h>
#include <json.hpp>

#include "curvedirac/cli/commands.hpp"

using namespace curvedirac;
using namespace curvedirac::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("curvedirac_test_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    return dir / name;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

std::vector<std::string> columns(const std::string& line) {
    std::vector<std::string> cols;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cols.push_back(cell);
    if (!line.empty() && line.back() == ',') cols.emplace_back();
    return cols;
}

std::string simulate_csv(const RunConfig& cfg) { return render_record(run_simulation(cfg)); }

RunConfig small_verify() {
    RunConfig cfg = RunConfig::verify_defaults();
    cfg.n = 1024;
    return cfg;
}

int run_cli(const std::string& args, const fs::path& stdout_file = "/dev/null", const fs::path& stderr_file = "/dev/null") {
    const std::string cmd = std::string(CURVEDIRAC_CLI_PATH) + " " + args + " >" + stdout_file.string() + " 2>" +
                            stderr_file.string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST(Config, TextRoundTrip) {
    RunConfig cfg = RunConfig::simulate_defaults();
    cfg.metric.kind = MetricKind::expression;
    cfg.metric.expression = "sqrt(x^2/(x^2+b0^2))";
    cfg.metric.params = {{"b0", 7.5}};
    cfg.metric.singular = {0.0};
    cfg.x0 = -12.25;
    cfg.t_end = 3.0;
    cfg.stride = 0.1;
    cfg.format = Format::json;
    const RunConfig back = apply_entries(RunConfig::simulate_defaults(), parse_config_text(cfg.to_text()));
    EXPECT_EQ(back.to_text(), cfg.to_text());
    EXPECT_EQ(back.stride, 0.1);
    EXPECT_EQ(back.metric.params.at("b0"), 7.5);
}

TEST(Config, Errors) {
    const RunConfig base = RunConfig::simulate_defaults();
    EXPECT_THROW((void)apply_entries(base, {{"bogus", "1"}}), ConfigError);
    EXPECT_THROW((void)apply_entries(base, {{"b0", "ten"}}), ConfigError);
    EXPECT_THROW((void)apply_entries(base, {{"grid", "0:1"}}), ConfigError);
    EXPECT_THROW((void)apply_entries(base, {{"metric", "schwarzschild"}}), ConfigError);
    EXPECT_THROW((void)apply_entries(base, {{"param", "=3"}}), ConfigError);
    EXPECT_THROW((void)parse_config_text("x0 5\n"), ConfigError);
    EXPECT_EQ(parse_config_text("# comment\n\n x0 = 5 \n").at(0).second, "5");
}

TEST(Config, ValidationFailsFast) {
    RunConfig cfg = RunConfig::simulate_defaults();
    cfg.metric.b0 = -1.0;
    EXPECT_THROW(validate(cfg, Command::simulate), ConfigError);

    cfg = RunConfig::simulate_defaults();
    cfg.x0 = 55.0;
    try {
        validate(cfg, Command::simulate);
        FAIL();
    } catch (const GridError& e) {
        EXPECT_EQ(e.tag(), "grid_too_small");
    }

    cfg = RunConfig::simulate_defaults();
    cfg.method = Method::spectral;
    cfg.n = 1000;
    EXPECT_THROW(validate(cfg, Command::simulate), GridError);

    cfg = RunConfig::simulate_defaults();
    cfg.metric.kind = MetricKind::expression;
    cfg.metric.expression = "x";
    EXPECT_THROW(validate(cfg, Command::simulate), ValidationError);

    cfg = RunConfig::verify_defaults();
    cfg.x_min = -60.0;
    cfg.x0 = 0.0;
    EXPECT_THROW(validate(cfg, Command::verify), Error);
    EXPECT_NO_THROW(validate(RunConfig::verify_defaults(), Command::verify));
    EXPECT_NO_THROW(validate(RunConfig::simulate_defaults(), Command::simulate));
}

TEST(Simulate, CsvSchemaAndMaskedRows) {
    RunConfig cfg = RunConfig::simulate_defaults();
    cfg.n = 256;
    cfg.t_end = 2.0;
    const auto text = simulate_csv(cfg);
    const auto lines = lines_of(text);
    ASSERT_EQ(lines.front(), "t,x,re_up,im_up,re_dn,im_dn,density_flat,density_curved,masked,provenance");
    EXPECT_EQ(lines.size(), 1 + 3 * 256u);
    EXPECT_EQ(text.find('\r'), std::string::npos);

    int masked = 0;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto c = columns(lines[i]);
        ASSERT_EQ(c.size(), 10u) << lines[i];
        EXPECT_EQ(c[9], "closed-form");
        const double x = std::stod(c[1]);
        const double rho = std::stod(c[6]);
        if (c[8] == "1") {
            ++masked;
            EXPECT_EQ(x, 0.0);
            EXPECT_TRUE(c[7].empty());
            continue;
        }
        EXPECT_EQ(c[8], "0");
        const double rho_c = std::stod(c[7]);
        if (rho > 1e-200) { EXPECT_NEAR(rho_c / rho, std::sqrt(100.0 + x * x) / std::abs(x), 1e-12 * rho_c / rho); }
        const double re_up = std::stod(c[2]), re_dn = std::stod(c[4]);
        EXPECT_EQ(re_up, re_dn);
        EXPECT_NEAR(rho, 2.0 * re_up * re_up, 1e-15);
    }
    EXPECT_EQ(masked, 3);
}

TEST(Simulate, FlatMetricGivesEqualDensities) {
    RunConfig cfg = RunConfig::simulate_defaults();
    cfg.metric.kind = MetricKind::flat;
    cfg.n = 128;
    cfg.t_end = 1.0;
    const auto lines = lines_of(simulate_csv(cfg));
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto c = columns(lines[i]);
        ASSERT_EQ(c[6], c[7]);
        ASSERT_EQ(c[8], "0");
    }
}

TEST(Simulate, DistortionGrowsNearThroat) {
    auto worst = [](double x0) {
        RunConfig cfg = RunConfig::simulate_defaults();
        cfg.x0 = x0;
        cfg.t_end = 5.0;
        const auto rec = run_simulation(cfg);
        double d = 0.0;
        for (const auto& f : rec.frames) d = std::max(d, distortion(f));
        return d;
    };
    EXPECT_GT(worst(1.0), worst(5.0));
    EXPECT_GT(worst(5.0), 1.0);
}

TEST(Simulate, SpectralAgreesWithClosedForm) {
    RunConfig cfg = RunConfig::simulate_defaults();
    cfg.t_end = 10.0;
    cfg.stride = 5.0;
    const auto closed = run_simulation(cfg);
    cfg.method = Method::spectral;
    const auto spectral = run_simulation(cfg);
    EXPECT_EQ(spectral.provenance, Provenance::spectral);
    ASSERT_EQ(closed.frames.size(), spectral.frames.size());
    for (std::size_t k = 0; k < closed.frames.size(); ++k)
        EXPECT_LE(max_spinor_distance(closed.frames[k].flat, spectral.frames[k].flat), 1e-8);
}

TEST(Simulate, DeterministicAndEchoReproduces) {
    RunConfig cfg = RunConfig::simulate_defaults();
    cfg.n = 256;
    cfg.t_end = 3.0;
    cfg.method = Method::spectral;
    cfg.out = scratch("run.csv").string();
    std::ostringstream sink, log;
    ASSERT_EQ(cmd_simulate(cfg, sink, log), exit_success);
    const std::string first = slurp(cfg.out);
    ASSERT_EQ(cmd_simulate(cfg, sink, log), exit_success);
    EXPECT_EQ(slurp(cfg.out), first);

    RunConfig echoed = apply_entries(RunConfig::simulate_defaults(), read_config_file(cfg.out + ".config"));
    EXPECT_EQ(echoed.to_text(), cfg.to_text());
    echoed.out = scratch("rerun.csv").string();
    ASSERT_EQ(cmd_simulate(echoed, sink, log), exit_success);
    EXPECT_EQ(slurp(echoed.out), first);
}

TEST(Simulate, JsonOutput) {
    RunConfig cfg = RunConfig::simulate_defaults();
    cfg.n = 64;
    cfg.x_min = -32;
    cfg.x_max = 32;
    cfg.x0 = -5;
    cfg.sigma = 2;
    cfg.t_end = 1.0;
    cfg.format = Format::json;
    const auto doc = nlohmann::json::parse(simulate_csv(cfg));
    EXPECT_EQ(doc["provenance"], "closed-form");
    EXPECT_EQ(doc["config"]["x0"], "-5");
    ASSERT_EQ(doc["frames"].size(), 2u);
    const auto& f = doc["frames"][1];
    EXPECT_EQ(f["t"], 1.0);
    EXPECT_EQ(f["x"].size(), 64u);
    EXPECT_TRUE(f["density_curved"][32].is_null());
    EXPECT_EQ(f["masked"][32], 1);
}

TEST(Verify, WormholePasses) {
    const RunConfig cfg = small_verify();
    const auto report = run_verification(cfg);
    ASSERT_EQ(report.levels.size(), 3u);
    EXPECT_LE(report.levels[0].max_error, 5e-6);
    EXPECT_LE(report.weighted_norm_drift, 1e-8);
    EXPECT_LT(report.residual, 1e-4);
    EXPECT_TRUE(report.passed());
    for (const auto& c : report.checks) EXPECT_TRUE(c.passed) << c.name << " " << c.value;
}

TEST(Verify, FlatPassesTightly) {
    RunConfig cfg = small_verify();
    cfg.metric.kind = MetricKind::flat;
    const auto report = run_verification(cfg);
    EXPECT_TRUE(report.passed());
    EXPECT_LE(report.levels[0].max_error, 1e-8);
}

TEST(Verify, SkipMapControlFails) {
    RunConfig cfg = small_verify();
    cfg.skip_map = true;
    const auto report = run_verification(cfg);
    EXPECT_FALSE(report.passed());
    EXPECT_GT(report.levels[0].max_error, 1e-2);
    std::ostringstream out, log;
    EXPECT_EQ(cmd_verify(cfg, out, log), exit_verification_failed);
    EXPECT_NE(out.str().find("RESULT FAIL"), std::string::npos);
    EXPECT_NE(log.str().find("error[verification_failed]"), std::string::npos);
}

TEST(Verify, ExpressionMetricMatchesBuiltin) {
    RunConfig cfg = small_verify();
    const auto builtin = run_verification(cfg);
    cfg.metric.kind = MetricKind::expression;
    cfg.metric.expression = "sqrt(x^2/(x^2+b0^2))";
    cfg.metric.params = {{"b0", 10.0}};
    cfg.metric.singular = {0.0};
    const auto dsl = run_verification(cfg);
    EXPECT_TRUE(dsl.passed());
    EXPECT_NEAR(dsl.levels[0].max_error, builtin.levels[0].max_error, 1e-12);
}

TEST(ReproduceFig1, ChecksAndFiles) {
    const auto result = reproduce_fig1();
    ASSERT_EQ(result.panels.size(), 6u);
    EXPECT_TRUE(result.translation_ok()) << result.flat_peak_offset_cells << " " << result.flat_peak_height_deviation;
    EXPECT_TRUE(result.focusing_ok()) << result.throat_focusing;
    EXPECT_TRUE(result.distortion_order_ok());

    const fs::path dir = scratch("fig1");
    std::ostringstream log;
    ASSERT_EQ(cmd_reproduce_fig1(dir.string(), {}, log), exit_success);
    std::size_t csv = 0, svg = 0;
    for (const auto& e : fs::directory_iterator(dir)) {
        csv += e.path().extension() == ".csv";
        svg += e.path().extension() == ".svg";
    }
    EXPECT_EQ(csv, 6u);
    EXPECT_EQ(svg, 6u);
    const auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
    EXPECT_EQ(summary["panels"].size(), 6u);
    EXPECT_TRUE(summary["checks"]["throat_focusing"].get<bool>());
    EXPECT_NE(slurp(dir / "panel_b_curved_x0_-10.svg").find("#808080"), std::string::npos);
}

TEST(MapCommand, MapsSimulatedFlatData) {
    RunConfig flat = RunConfig::simulate_defaults();
    flat.metric.kind = MetricKind::flat;
    flat.n = 256;
    flat.t_end = 2.0;
    const fs::path in = scratch("flat.csv");
    { std::ofstream(in, std::ios::binary) << simulate_csv(flat); }

    RunConfig worm = RunConfig::simulate_defaults();
    worm.n = 256;
    worm.t_end = 2.0;
    std::ostringstream mapped, log;
    ASSERT_EQ(cmd_map(worm, in.string(), mapped, log), exit_success);
    EXPECT_EQ(mapped.str(), simulate_csv(worm));

    const fs::path bad = scratch("bad.csv");
    { std::ofstream(bad) << "a,b\n"; }
    EXPECT_THROW((void)cmd_map(worm, bad.string(), mapped, log), ConfigError);
}

TEST(Executable, ExitCodesAndErrors) {
    const fs::path out = scratch("stdout.txt"), err = scratch("stderr.txt");
    EXPECT_EQ(run_cli("--help", out), 0);
    EXPECT_EQ(run_cli("simulate --grid=-40:40:128 --t-end 1", out, err), 0);
    EXPECT_EQ(lines_of(slurp(out)).front(), std::string(csv_header));

    EXPECT_EQ(run_cli("simulate --b0 -1", out, err), 2);
    EXPECT_EQ(slurp(err).rfind("error[config_error]: ", 0), 0u) << slurp(err);
    EXPECT_EQ(run_cli("simulate --x0 55", out, err), 2);
    EXPECT_NE(slurp(err).find("error[grid_too_small]"), std::string::npos);
    EXPECT_EQ(run_cli("simulate --omega-expr 'sqrt('", out, err), 2);
    EXPECT_NE(slurp(err).find("error[syntax_error]"), std::string::npos) << slurp(err);
    EXPECT_EQ(run_cli("simulate --no-such-flag", out, err), 2);
    EXPECT_EQ(run_cli("", out, err), 2);
    EXPECT_EQ(run_cli("map --input /nonexistent/file.csv", out, err), 3);

    EXPECT_EQ(run_cli("verify --grid 2:130:1024 --skip-map", out, err), 1);
    EXPECT_NE(slurp(out).find("RESULT FAIL"), std::string::npos);
    EXPECT_EQ(run_cli("verify --grid 2:130:1024", out, err), 0);
    EXPECT_NE(slurp(out).find("RESULT PASS"), std::string::npos);

    const fs::path cfg = scratch("run.cfg");
    { std::ofstream(cfg) << "grid=-30:30:128\nt-end=1\nx0=-5\n"; }
    const fs::path csv = scratch("cli.csv");
    EXPECT_EQ(run_cli("simulate --config " + cfg.string() + " --x0=-4 --out " + csv.string(), out, err), 0);
    const std::string echo = slurp(csv.string() + ".config");
    EXPECT_NE(echo.find("x0=-4\n"), std::string::npos) << echo;
    EXPECT_NE(echo.find("grid=-30:30:128\n"), std::string::npos) << echo;
    EXPECT_NE(echo.find("t-end=1\n"), std::string::npos) << echo;
}
