#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "curvedirac/error.hpp"
#include "curvedirac/quadrature.hpp"

namespace curvedirac {

/// Static conformal factor Omega(x) of a 1+1D metric ds^2 = Omega^2(x) (dt^2 - dx^2).
///
/// Immutable after construction. The evaluators are plain callables, so
/// `omega(x)` and `omega_prime(x)` are defined everywhere the underlying
/// profile is; the operations below (`effective_potential`, `log_derivative`,
/// `phase_integral`) are the ones that refuse singular points.
class ConformalFactor {
public:
    using Profile = std::function<double(double)>;

    struct Definition {
        Profile omega;
        Profile omega_prime;
        std::vector<double> singular_points;
        std::string label;
        /// Characteristic length; the singularity exclusion radius is 1e-9 * max(1, length_scale).
        double length_scale = 1.0;
        /// Closed-form log Omega, when one is known. Empty means phase_integral uses quadrature.
        Profile log_omega;
    };

    explicit ConformalFactor(Definition def) : def_(std::move(def)) {
        if (!def_.omega || !def_.omega_prime) throw InvalidArgument("conformal factor needs omega and omega_prime");
        if (!(def_.length_scale > 0.0)) throw InvalidArgument("length scale must be positive");
        auto& sp = def_.singular_points;
        std::sort(sp.begin(), sp.end());
        sp.erase(std::unique(sp.begin(), sp.end()), sp.end());
    }

    double omega(double x) const { return def_.omega(x); }
    double omega_prime(double x) const { return def_.omega_prime(x); }
    const std::vector<double>& singular_points() const noexcept { return def_.singular_points; }
    const std::string& label() const noexcept { return def_.label; }
    double length_scale() const noexcept { return def_.length_scale; }

    bool has_closed_form_log() const noexcept { return static_cast<bool>(def_.log_omega); }
    double closed_form_log_omega(double x) const { return def_.log_omega(x); }

    double exclusion_radius() const noexcept { return 1e-9 * std::max(1.0, def_.length_scale); }

    /// Singular point within the exclusion radius of x, if any.
    std::optional<double> nearby_singular_point(double x) const {
        const double r = exclusion_radius();
        for (double s : def_.singular_points)
            if (std::abs(x - s) <= r) return s;
        return std::nullopt;
    }

    bool is_excluded(double x) const { return nearby_singular_point(x).has_value(); }

    void require_regular(double x) const {
        if (auto s = nearby_singular_point(x)) throw SingularityError(x, *s);
    }

    /// Open interval (lo, hi) between consecutive singular points that contains x.
    std::pair<double, double> branch_of(double x) const {
        double lo = -std::numeric_limits<double>::infinity();
        double hi = std::numeric_limits<double>::infinity();
        for (double s : def_.singular_points) {
            if (s < x) lo = s;
            else { hi = s; break; }
        }
        return {lo, hi};
    }

private:
    Definition def_;
};

/// Omega(x) = c, the flat (c = 1) or rescaled-flat metric.
inline ConformalFactor constant_conformal_factor(double value = 1.0) {
    if (!(value > 0.0)) throw InvalidArgument("constant conformal factor must be positive");
    const double log_value = std::log(value);
    return ConformalFactor({
        .omega = [value](double) { return value; },
        .omega_prime = [](double) { return 0.0; },
        .singular_points = {},
        .label = value == 1.0 ? "flat" : "constant(" + std::to_string(value) + ")",
        .length_scale = 1.0,
        .log_omega = [log_value](double) { return log_value; },
    });
}

/// Traversable wormhole with shape function b(r) = b0^2 / r.
///
/// In the tortoise-like coordinate x = +-sqrt(r^2 - b0^2) the metric becomes
/// conformally flat with Omega^2 = c^2 = x^2 / (x^2 + b0^2). We take the
/// non-negative root on both sides of the throat, so Omega = |x| / sqrt(x^2 + b0^2)
/// and the throat x = 0 is the only singular point.
class WormholeMetric {
public:
    explicit WormholeMetric(double b0) : b0_(b0) {
        if (!(b0 > 0.0) || !std::isfinite(b0))
            throw InvalidArgument("invalid throat radius b0=" + std::to_string(b0) + " (must be > 0)");
    }

    double b0() const noexcept { return b0_; }

    /// b(r) = b0^2 / r
    double shape(double r) const { return b0_ * b0_ / r; }

    double omega(double x) const { return std::abs(x) / std::hypot(x, b0_); }

    double omega_prime(double x) const {
        const double s = x * x + b0_ * b0_;
        const double magnitude = b0_ * b0_ / (s * std::sqrt(s));
        return x > 0.0 ? magnitude : (x < 0.0 ? -magnitude : 0.0);
    }

    /// log Omega = 1/2 log(x^2 / (b0^2 + x^2)), written to stay accurate for |x| >> b0.
    double log_omega(double x) const {
        const double q = b0_ / x;
        return -0.5 * std::log1p(q * q);
    }

    ConformalFactor conformal_factor() const {
        const WormholeMetric m = *this;
        return ConformalFactor({
            .omega = [m](double x) { return m.omega(x); },
            .omega_prime = [m](double x) { return m.omega_prime(x); },
            .singular_points = {0.0},
            .label = "wormhole(b0=" + std::to_string(b0_) + ")",
            .length_scale = b0_,
            .log_omega = [m](double x) { return m.log_omega(x); },
        });
    }

private:
    double b0_;
};

inline ConformalFactor wormhole_conformal_factor(double b0) { return WormholeMetric(b0).conformal_factor(); }

/// Omega'/Omega at a regular point.
inline double log_derivative(const ConformalFactor& cf, double x) {
    cf.require_regular(x);
    return cf.omega_prime(x) / cf.omega(x);
}

/// Effective non-hermitian potential V(x) = -i Omega' / (2 Omega).
inline std::complex<double> effective_potential(const ConformalFactor& cf, double x) {
    return {0.0, -0.5 * log_derivative(cf, x)};
}

/// Reference point inside the branch of x used to anchor the quadrature path.
inline double branch_reference_point(const ConformalFactor& cf, double x) {
    const auto [lo, hi] = cf.branch_of(x);
    const bool lo_finite = std::isfinite(lo);
    const bool hi_finite = std::isfinite(hi);
    if (lo_finite && hi_finite) return 0.5 * (lo + hi);
    if (lo_finite) return lo + std::max(1.0, std::abs(lo));
    if (hi_finite) return hi - std::max(1.0, std::abs(hi));
    return 0.0;
}

/// Antiderivative of Omega'/Omega, normalised so that it equals log Omega(x).
///
/// Closed-form factors return log Omega directly. Otherwise the log-derivative
/// is integrated from a reference point in the same branch and log Omega(ref)
/// is added; the path never leaves the branch of x.
inline double phase_integral(const ConformalFactor& cf, double x, const QuadratureTolerance& tol = {}) {
    cf.require_regular(x);
    if (cf.has_closed_form_log()) return cf.closed_form_log_omega(x);

    const double ref = branch_reference_point(cf, x);
    cf.require_regular(ref);
    const double integral = integrate_panel_doubling(
        [&cf](double s) { return cf.omega_prime(s) / cf.omega(s); }, ref, x, tol);
    return integral + std::log(cf.omega(ref));
}

enum class Branch : int { negative = -1, positive = +1 };

/// x = +-sqrt(r^2 - b0^2); the sign selects the side of the throat.
inline double radius_to_x(double b0, double r, Branch branch) {
    const WormholeMetric metric(b0);
    if (!(r >= metric.b0()))
        throw InvalidArgument("radius r=" + std::to_string(r) + " is inside the throat b0=" + std::to_string(b0));
    return static_cast<int>(branch) * std::sqrt((r - b0) * (r + b0));
}

inline double x_to_radius(double b0, double x) {
    const WormholeMetric metric(b0);
    return std::hypot(x, metric.b0());
}

} // namespace curvedirac
