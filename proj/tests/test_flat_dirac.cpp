#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "curvedirac/curvedirac.hpp"

using namespace curvedirac;

namespace {

// dx = 1/8, so the packet centres fall on grid points
const GridSpec default_grid(-64.0, 64.0, 1024);

double chirality_norm(const SpinorField& f, int sign) {
    std::vector<double> rho(f.size());
    for (std::size_t j = 0; j < f.size(); ++j)
        rho[j] = 0.5 * std::norm(f.up[j] + static_cast<double>(sign) * f.down[j]);
    return trapezoid(rho, f.grid.dx());
}

// Mixed-chirality smooth data with a complex phase, well inside the grid.
SpinorField mixed_packet(const GridSpec& grid) {
    SpinorField f(grid);
    for (std::size_t j = 0; j < grid.n(); ++j) {
        const double x = grid.x(j);
        f.up[j] = std::exp(-(x + 5) * (x + 5) / 20.0) * std::polar(1.0, 0.7 * x);
        f.down[j] = Complex(0.0, 0.5) * std::exp(-(x - 3) * (x - 3) / 30.0);
    }
    return f;
}

EvolutionRecord closed_form_slices(const GaussianPacket& p, const GridSpec& grid, double t0, double dt) {
    EvolutionRecord r;
    for (int k = -1; k <= 1; ++k) r.frames.push_back(sample_gaussian(p, grid, t0 + k * dt));
    return r;
}

} // namespace

TEST(GaussianPacket, PeakAndNormalisation) {
    const GaussianPacket p(-10.0, 5.0);
    const auto f = gaussian_initial(p, default_grid);
    const double expected_peak = std::pow(2.0 * std::numbers::pi * 25.0, -0.25);
    EXPECT_NEAR(f.up[(64 - 10) * 8].real(), expected_peak, 1e-12);
    EXPECT_NEAR(p.peak_amplitude(), expected_peak, 1e-15);
    EXPECT_NEAR(total_probability(f), 1.0, 1e-6);
    for (std::size_t j = 0; j < f.size(); ++j) ASSERT_EQ(f.up[j], f.down[j]);
}

TEST(GaussianPacket, RejectsBadWidth) {
    EXPECT_THROW(GaussianPacket(0.0, 0.0), InvalidArgument);
    EXPECT_THROW(GaussianPacket(0.0, -1.0), InvalidArgument);
    EXPECT_THROW(GaussianPacket(NAN, 1.0), InvalidArgument);
}

TEST(ClosedForm, TranslatesRightAtUnitSpeed) {
    const GaussianPacket p(-10.0, 5.0);
    const auto f0 = evolve_gaussian_closed_form(p, default_grid, 0.0);
    const auto g = gaussian_initial(p, default_grid);
    EXPECT_EQ(max_spinor_distance(f0, g), 0.0);

    const auto f = evolve_gaussian_closed_form(p, default_grid, 20.0);
    std::size_t argmax = 0;
    for (std::size_t j = 0; j < f.size(); ++j)
        if (f.magnitude(j) > f.magnitude(argmax)) argmax = j;
    EXPECT_NEAR(default_grid.x(argmax), 10.0, 1e-12);
    for (std::size_t j = 0; j < f.size(); ++j) {
        const double x = default_grid.x(j);
        const double u = (20.0 - (x + 10.0)) / 5.0;
        ASSERT_NEAR(f.up[j].real(), std::exp(-u * u) / std::sqrt(std::sqrt(2 * std::numbers::pi * 25.0)), 1e-15);
    }
    EXPECT_THROW((void)evolve_gaussian_closed_form(p, default_grid, -1.0), InvalidArgument);
}

TEST(ClosedForm, GridTooSmall) {
    const GaussianPacket p(0.0, 5.0);
    try {
        (void)gaussian_initial(p, GridSpec(-10.0, 10.0, 256));
        FAIL();
    } catch (const GridError& e) {
        EXPECT_EQ(e.tag(), "grid_too_small");
    }
    EXPECT_THROW((void)evolve_gaussian_closed_form(p, default_grid, 100.0), GridError);
}

TEST(Spectral, MatchesClosedForm) {
    const GaussianPacket p(-10.0, 5.0);
    const auto init = gaussian_initial(p, default_grid);
    Diagnostics diag;
    for (double t : {0.0, 5.0, 20.0, 37.5}) {
        const auto s = evolve_spectral(init, t, &diag);
        const auto c = evolve_gaussian_closed_form(p, default_grid, t);
        EXPECT_LE(max_spinor_distance(s, c), 1e-8) << "t=" << t;
        EXPECT_DOUBLE_EQ(s.time, t);
    }
    EXPECT_TRUE(diag.warnings.empty());
}

TEST(Spectral, RequiresPowerOfTwo) {
    const GridSpec g(-60.0, 60.0, 1000);
    try {
        (void)evolve_spectral(SpinorField(g), 1.0);
        FAIL();
    } catch (const GridError& e) {
        EXPECT_EQ(e.tag(), "non_power_of_two_grid");
    }
}

TEST(Spectral, PlaneWaveKeepsUnitModulus) {
    const GridSpec g(0.0, 2 * std::numbers::pi * 4, 256);
    const double k = 3.0 / 4.0 * 1.0; // 3 periods over the box
    SpinorField f(g);
    for (std::size_t j = 0; j < g.n(); ++j) {
        f.up[j] = spinor_basis::u_pos[0] * std::polar(1.0, k * g.x(j));
        f.down[j] = spinor_basis::u_pos[1] * std::polar(1.0, k * g.x(j));
    }
    Diagnostics diag;
    const double t = 7.3;
    const auto out = evolve_spectral(f, t, &diag);
    EXPECT_FALSE(diag.warnings.empty());
    for (std::size_t j = 0; j < g.n(); ++j) {
        ASSERT_NEAR(out.magnitude(j), 1.0, 1e-12);
        ASSERT_NEAR(std::abs(out.up[j] - spinor_basis::inv_sqrt2 * std::polar(1.0, k * (g.x(j) - t))), 0.0, 1e-12);
    }
}

TEST(Spectral, LeftMoverTravelsLeft) {
    const GaussianPacket p(10.0, 5.0);
    auto f = gaussian_initial(p, default_grid);
    for (auto& d : f.down) d = -d;
    const auto out = evolve_spectral(f, 20.0);
    std::size_t argmax = 0;
    for (std::size_t j = 0; j < out.size(); ++j)
        if (out.magnitude(j) > out.magnitude(argmax)) argmax = j;
    EXPECT_NEAR(default_grid.x(argmax), -10.0, 1e-9);
    for (std::size_t j = 0; j < out.size(); ++j) ASSERT_NEAR(std::abs(out.up[j] + out.down[j]), 0.0, 1e-12);
}

TEST(Spectral, ConservesNormAndChiralities) {
    const auto f = mixed_packet(default_grid);
    const double total = total_probability(f);
    const double plus = chirality_norm(f, +1);
    const double minus = chirality_norm(f, -1);
    for (double t = 0.0; t <= 40.0; t += 2.5) {
        const auto g = evolve_spectral(f, t);
        EXPECT_NEAR(total_probability(g), total, 1e-10);
        EXPECT_NEAR(chirality_norm(g, +1), plus, 1e-10);
        EXPECT_NEAR(chirality_norm(g, -1), minus, 1e-10);
    }
}

TEST(Spectral, SemigroupProperty) {
    const auto f = mixed_packet(default_grid);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> ts(0.0, 20.0);
    for (int i = 0; i < 10; ++i) {
        const double s = ts(rng), t = ts(rng);
        const auto two_step = evolve_spectral(evolve_spectral(f, s), t);
        const auto one_step = evolve_spectral(f, s + t);
        EXPECT_LE(max_spinor_distance(two_step, one_step), 1e-10);
    }
}

TEST(FlatResidual, SecondOrderInTime) {
    const GaussianPacket p(0.0, 5.0);
    const auto flat = constant_conformal_factor();
    const double t0 = 1.0;
    double prev = 0.0;
    for (double dx : {2e-3, 1e-3}) {
        const GridSpec g(-40.0, 40.0, static_cast<std::size_t>(std::llround(80.0 / dx)));
        const double r = residual(closed_form_slices(p, g, t0, dx), flat);
        EXPECT_GT(r, 0.0);
        if (prev > 0.0) { EXPECT_GE(prev / r, 3.9) << prev << " -> " << r; }
        prev = r;
    }
    // refining only the time step at fixed dx
    const GridSpec g(-40.0, 40.0, 40000);
    const double r1 = residual(closed_form_slices(p, g, t0, 1e-3), flat);
    const double r2 = residual(closed_form_slices(p, g, t0, 5e-4), flat);
    EXPECT_GE(r1 / r2, 3.9);
}

TEST(Density, Examples) {
    EXPECT_EQ(density(SpinorField(default_grid))[17], 0.0);
    const GaussianPacket p(-10.0, 5.0);
    const auto f = gaussian_initial(p, default_grid);
    auto rotated = f;
    const Complex phase = std::polar(1.0, 1.234);
    for (auto& c : rotated.up) c *= phase;
    for (auto& c : rotated.down) c *= phase;
    const auto a = density(f), b = density(rotated);
    for (std::size_t j = 0; j < a.size(); ++j) ASSERT_NEAR(a[j], b[j], 1e-16);
    EXPECT_NEAR(*std::max_element(a.begin(), a.end()), 2.0 / p.normalization(), 1e-15);
}
