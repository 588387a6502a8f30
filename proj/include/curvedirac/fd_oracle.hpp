#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "curvedirac/fft.hpp"
#include "curvedirac/field.hpp"
#include "curvedirac/metric.hpp"

namespace curvedirac {

enum class DerivativeScheme { spectral, fourth_order };

inline std::string_view to_string(DerivativeScheme s) {
    return s == DerivativeScheme::spectral ? "spectral" : "fourth-order";
}

/// Fixed-step classic RK4 settings. The CFL bound dt <= 0.5*dx is checked here.
class SolverConfig {
public:
    SolverConfig(double dt, double t_end, double dx, DerivativeScheme scheme = DerivativeScheme::spectral,
                 std::size_t output_every = 1)
        : dt_(dt), t_end_(t_end), scheme_(scheme), output_every_(output_every) {
        if (!(dt > 0.0)) throw InvalidArgument("time step must be > 0");
        if (!(t_end >= 0.0)) throw InvalidArgument("end time must be >= 0");
        if (!(dx > 0.0)) throw InvalidArgument("grid spacing must be > 0");
        if (dt > 0.5 * dx * (1.0 + 1e-12))
            throw InvalidArgument("cfl_violation", "time step " + std::to_string(dt) + " exceeds CFL bound 0.5*dx = " +
                                                       std::to_string(0.5 * dx));
        if (output_every == 0) throw InvalidArgument("output stride must be >= 1 step");
        steps_ = static_cast<std::size_t>(std::llround(t_end / dt));
        if (std::abs(static_cast<double>(steps_) * dt - t_end) > 1e-9 * std::max(1.0, t_end))
            throw InvalidArgument("end time " + std::to_string(t_end) + " is not a multiple of the time step");
        max_dt_ = 0.5 * dx;
    }

    /// Largest CFL-compliant step that lands exactly on every output time.
    static SolverConfig for_grid(const GridSpec& grid, double t_end, double output_stride,
                                 DerivativeScheme scheme = DerivativeScheme::spectral, double cfl = 0.5) {
        if (!(cfl > 0.0 && cfl <= 0.5)) throw InvalidArgument("CFL number must lie in (0, 0.5]");
        if (!(output_stride > 0.0)) throw InvalidArgument("output stride must be > 0");
        const double max_dt = cfl * grid.dx();
        if (t_end == 0.0) return SolverConfig(max_dt, 0.0, grid.dx(), scheme, 1);
        const auto per_output = static_cast<std::size_t>(std::ceil(output_stride / max_dt - 1e-9));
        return SolverConfig(output_stride / static_cast<double>(per_output), t_end, grid.dx(), scheme, per_output);
    }

    double dt() const noexcept { return dt_; }
    double t_end() const noexcept { return t_end_; }
    std::size_t steps() const noexcept { return steps_; }
    DerivativeScheme scheme() const noexcept { return scheme_; }
    std::size_t output_every() const noexcept { return output_every_; }
    double max_dt() const noexcept { return max_dt_; }
    static constexpr std::string_view integrator() { return "rk4"; }

private:
    double dt_;
    double t_end_;
    DerivativeScheme scheme_;
    std::size_t output_every_;
    std::size_t steps_ = 0;
    double max_dt_ = 0.0;
};

namespace detail {

/// Periodic first derivative with the configured scheme.
class PeriodicDerivative {
public:
    PeriodicDerivative(const GridSpec& grid, DerivativeScheme scheme) : scheme_(scheme), inv12dx_(1.0 / (12.0 * grid.dx())) {
        if (scheme == DerivativeScheme::spectral) spectral_ = std::make_unique<SpectralDerivative>(grid);
    }

    void apply(std::span<const Complex> in, std::span<Complex> out) {
        if (spectral_) {
            spectral_->apply(in, out);
            return;
        }
        const std::size_t n = in.size();
        for (std::size_t j = 0; j < n; ++j) {
            const Complex& p1 = in[(j + 1) % n];
            const Complex& p2 = in[(j + 2) % n];
            const Complex& m1 = in[(j + n - 1) % n];
            const Complex& m2 = in[(j + n - 2) % n];
            out[j] = (8.0 * (p1 - m1) - (p2 - m2)) * inv12dx_;
        }
    }

private:
    DerivativeScheme scheme_;
    double inv12dx_;
    std::unique_ptr<SpectralDerivative> spectral_;
};

/// Half log-derivative Omega'/(2 Omega) on the grid; masked points get 0.
/// This is the only metric information the curved solver ever sees.
inline std::vector<double> half_log_derivative(const GridSpec& grid, const ConformalFactor& cf) {
    std::vector<double> g(grid.n(), 0.0);
    for (std::size_t j = 0; j < grid.n(); ++j) {
        const double x = grid.x(j);
        if (!cf.is_excluded(x)) g[j] = 0.5 * log_derivative(cf, x);
    }
    return g;
}

/// d(psi)/dt = -sigma_x d(psi)/dx - (Omega'/2 Omega) sigma_x psi
class CurvedDiracOperator {
public:
    CurvedDiracOperator(const GridSpec& grid, const ConformalFactor& cf, DerivativeScheme scheme)
        : n_(grid.n()), g_(detail::half_log_derivative(grid, cf)), derivative_(grid, scheme), du_(n_), dd_(n_) {}

    void apply(std::span<const Complex> up, std::span<const Complex> down, std::span<Complex> out_up,
               std::span<Complex> out_down) {
        derivative_.apply(up, du_);
        derivative_.apply(down, dd_);
        for (std::size_t j = 0; j < n_; ++j) {
            out_up[j] = -dd_[j] - g_[j] * down[j];
            out_down[j] = -du_[j] - g_[j] * up[j];
        }
    }

    const std::vector<double>& damping() const noexcept { return g_; }

private:
    std::size_t n_;
    std::vector<double> g_;
    PeriodicDerivative derivative_;
    std::vector<Complex> du_, dd_;
};

inline double seam_ratio(const SpinorField& f, double reference_peak) {
    const std::size_t n = f.size();
    const double edge = std::max({f.magnitude(0), f.magnitude(1), f.magnitude(n - 2), f.magnitude(n - 1)});
    return reference_peak > 0.0 ? edge / reference_peak : 0.0;
}

} // namespace detail

/// Rejects evolution domains that contain a singular point of cf.
inline void require_single_branch(const GridSpec& grid, const ConformalFactor& cf) {
    const double r = cf.exclusion_radius();
    for (double s : cf.singular_points()) {
        if (s >= grid.x_min() - r && s <= grid.x_max() + r)
            throw Error("domain_straddles_singularity",
                        "evolution domain [" + std::to_string(grid.x_min()) + ", " + std::to_string(grid.x_max()) +
                            "] contains the singular point x=" + std::to_string(s));
    }
}

/// Time derivative of psi under the static massless curved equation.
inline SpinorField rhs(const SpinorField& field, const ConformalFactor& cf,
                       DerivativeScheme scheme = DerivativeScheme::spectral) {
    require_single_branch(field.grid, cf);
    detail::CurvedDiracOperator op(field.grid, cf, scheme);
    SpinorField out(field.grid, field.time);
    op.apply(field.up, field.down, out.up, out.down);
    return out;
}

/// Integrates i d(psi)/dt = (-i sigma_x d/dx + V sigma_x) psi with RK4 on one branch.
/// Frames are recorded every `config.output_every()` steps and at the final time.
inline EvolutionRecord evolve_curved(const SpinorField& initial, const ConformalFactor& cf, const SolverConfig& config) {
    const GridSpec& grid = initial.grid;
    require_single_branch(grid, cf);
    if (config.dt() > 0.5 * grid.dx() * (1.0 + 1e-12))
        throw InvalidArgument("cfl_violation", "time step exceeds 0.5*dx for this grid");

    const std::size_t n = grid.n();
    detail::CurvedDiracOperator op(grid, cf, config.scheme());
    const double peak = max_magnitude(initial);
    if (detail::seam_ratio(initial, peak) >= 1e-8) throw ContainmentError(initial.time);

    EvolutionRecord record{Provenance::fd_oracle, {initial}};
    SpinorField psi = initial;
    std::vector<Complex> k1u(n), k1d(n), k2u(n), k2d(n), k3u(n), k3d(n), k4u(n), k4d(n), su(n), sd(n);
    const double dt = config.dt();

    auto stage = [&](const std::vector<Complex>& ku, const std::vector<Complex>& kd, double scale) {
        for (std::size_t j = 0; j < n; ++j) {
            su[j] = psi.up[j] + scale * ku[j];
            sd[j] = psi.down[j] + scale * kd[j];
        }
    };

    for (std::size_t step = 1; step <= config.steps(); ++step) {
        op.apply(psi.up, psi.down, k1u, k1d);
        stage(k1u, k1d, 0.5 * dt);
        op.apply(su, sd, k2u, k2d);
        stage(k2u, k2d, 0.5 * dt);
        op.apply(su, sd, k3u, k3d);
        stage(k3u, k3d, dt);
        op.apply(su, sd, k4u, k4d);
        for (std::size_t j = 0; j < n; ++j) {
            psi.up[j] += dt / 6.0 * (k1u[j] + 2.0 * k2u[j] + 2.0 * k3u[j] + k4u[j]);
            psi.down[j] += dt / 6.0 * (k1d[j] + 2.0 * k2d[j] + 2.0 * k3d[j] + k4d[j]);
        }
        psi.time = initial.time + static_cast<double>(step) * dt;

        if (detail::seam_ratio(psi, peak) >= 1e-8) throw ContainmentError(psi.time);
        if (step % config.output_every() == 0 || step == config.steps()) record.frames.push_back(psi);
    }
    return record;
}

/// Max-norm of the discrete residual d(psi)/dt + sigma_x d(psi)/dx + (Omega'/2 Omega) sigma_x psi
/// (central time differences between consecutive frames; space via `scheme`).
///
/// Masked points and the three cells on either side of them are skipped; with the
/// finite-difference scheme the three cells next to each end of the grid are skipped
/// too, so non-periodic samples can be checked.
inline double residual(const EvolutionRecord& record, const ConformalFactor& cf,
                       DerivativeScheme scheme = DerivativeScheme::fourth_order) {
    const auto& frames = record.frames;
    if (frames.size() < 3) throw InvalidArgument("insufficient_slices", "residual needs at least 3 time slices");
    const double dt = frames[1].time - frames[0].time;
    if (!(dt > 0.0)) throw InvalidArgument("time slices must be increasing");
    for (std::size_t k = 1; k < frames.size(); ++k) {
        if (!frames[k].grid.same_points(frames[0].grid)) throw InvalidArgument("time slices use different grids");
        if (std::abs(frames[k].time - frames[k - 1].time - dt) > 1e-9 * std::max(1.0, dt))
            throw InvalidArgument("time slices are not uniformly spaced");
    }

    const GridSpec& grid = frames[0].grid;
    const std::size_t n = grid.n();
    std::vector<bool> skip(n, false);
    constexpr std::size_t guard = 3;
    for (std::size_t j = 0; j < n; ++j) {
        if (!cf.is_excluded(grid.x(j))) continue;
        const std::size_t lo = j >= guard ? j - guard : 0;
        for (std::size_t i = lo; i <= std::min(n - 1, j + guard); ++i) skip[i] = true;
    }
    if (scheme == DerivativeScheme::fourth_order)
        for (std::size_t i = 0; i < guard; ++i) skip[i] = skip[n - 1 - i] = true;

    const auto g = detail::half_log_derivative(grid, cf);
    detail::PeriodicDerivative derivative(grid, scheme);
    std::vector<Complex> du(n), dd(n);
    double worst = 0.0;
    for (std::size_t k = 1; k + 1 < frames.size(); ++k) {
        const auto& f = frames[k];
        derivative.apply(f.up, du);
        derivative.apply(f.down, dd);
        for (std::size_t j = 0; j < n; ++j) {
            if (skip[j]) continue;
            const Complex dt_up = (frames[k + 1].up[j] - frames[k - 1].up[j]) / (2.0 * dt);
            const Complex dt_down = (frames[k + 1].down[j] - frames[k - 1].down[j]) / (2.0 * dt);
            const Complex r_up = dt_up + dd[j] + g[j] * f.down[j];
            const Complex r_down = dt_down + du[j] + g[j] * f.up[j];
            worst = std::max(worst, std::sqrt(std::norm(r_up) + std::norm(r_down)));
        }
    }
    return worst;
}

} // namespace curvedirac
