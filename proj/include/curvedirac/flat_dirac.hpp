#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "curvedirac/fft.hpp"
#include "curvedirac/field.hpp"

namespace curvedirac {

/// Gaussian initial packet centred at x0 with width sigma, spinor (1, 1)^T.
class GaussianPacket {
public:
    GaussianPacket(double x0, double sigma) : x0_(x0), sigma_(sigma) {
        if (!std::isfinite(x0)) throw InvalidArgument("packet centre must be finite");
        if (!(sigma > 0.0) || !std::isfinite(sigma))
            throw InvalidArgument("packet width sigma must be > 0, got " + std::to_string(sigma));
    }

    double x0() const noexcept { return x0_; }
    double sigma() const noexcept { return sigma_; }

    /// N = sqrt(2 pi sigma^2)
    double normalization() const noexcept { return std::sqrt(2.0 * std::numbers::pi * sigma_ * sigma_); }

    /// Per-component amplitude of the freely evolved packet, N^{-1/2} exp(-(t - (x - x0))^2 / sigma^2).
    double amplitude(double x, double t) const {
        const double u = (t - (x - x0_)) / sigma_;
        return std::exp(-u * u) / std::sqrt(normalization());
    }

    double peak_amplitude() const { return 1.0 / std::sqrt(normalization()); }

private:
    double x0_;
    double sigma_;
};

namespace spinor_basis {
inline const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
/// Massless plane-wave spinors as written for the free equation; note u_neg = -u_pos.
inline const std::array<Complex, 2> u_pos{inv_sqrt2, inv_sqrt2};
inline const std::array<Complex, 2> u_neg{-inv_sqrt2, -inv_sqrt2};
/// sigma_x eigenvectors used for general data: right movers (+1) and left movers (-1).
inline const std::array<Complex, 2> right_mover{inv_sqrt2, inv_sqrt2};
inline const std::array<Complex, 2> left_mover{inv_sqrt2, -inv_sqrt2};
} // namespace spinor_basis

/// Collects non-fatal notices (e.g. periodic wraparound) from evolvers.
struct Diagnostics {
    std::vector<std::string> warnings;
};

/// Samples the closed-form packet at time t with no containment check.
/// Used for display windows where clipping is acceptable.
inline SpinorField sample_gaussian(const GaussianPacket& packet, const GridSpec& grid, double t) {
    SpinorField f(grid, t);
    for (std::size_t j = 0; j < grid.n(); ++j) {
        const double a = packet.amplitude(grid.x(j), t);
        f.up[j] = a;
        f.down[j] = a;
    }
    return f;
}

inline void require_contained(const GaussianPacket& packet, const GridSpec& grid, double t) {
    const double centre = packet.x0() + t;
    auto relative = [&](double x) {
        const double u = (x - centre) / packet.sigma();
        return std::exp(-u * u);
    };
    if (!(centre > grid.x_min() && centre < grid.x_max()) || relative(grid.x_min()) > 1e-8 ||
        relative(grid.x_max()) > 1e-8) {
        throw GridError("grid_too_small", "grid [" + std::to_string(grid.x_min()) + ", " +
                                              std::to_string(grid.x_max()) + "] clips the packet centred at x=" +
                                              std::to_string(centre) + " (t=" + std::to_string(t) + ")");
    }
}

/// phi(x, 0) sampled on the grid.
inline SpinorField gaussian_initial(const GaussianPacket& packet, const GridSpec& grid) {
    require_contained(packet, grid, 0.0);
    return sample_gaussian(packet, grid, 0.0);
}

/// Exact free evolution: the (1,1)^T packet translates rigidly to the right at unit speed.
inline SpinorField evolve_gaussian_closed_form(const GaussianPacket& packet, const GridSpec& grid, double t) {
    if (!(t >= 0.0)) throw InvalidArgument("evolution time must be >= 0");
    require_contained(packet, grid, t);
    return sample_gaussian(packet, grid, t);
}

namespace detail {
inline double boundary_ratio(const SpinorField& f) {
    const double peak = max_magnitude(f);
    if (peak == 0.0) return 0.0;
    const std::size_t n = f.size();
    return std::max(f.magnitude(0), f.magnitude(n - 1)) / peak;
}
} // namespace detail

/// Spectral solution of the free massless equation for arbitrary initial data.
///
/// The field is split into sigma_x chiralities chi+- = (up +- down)/sqrt(2);
/// chi+ moves right and chi- moves left at unit speed, so each Fourier mode
/// picks up exp(-+ i k t).
inline SpinorField evolve_spectral(const SpinorField& initial, double t, Diagnostics* diagnostics = nullptr) {
    const GridSpec& grid = initial.grid;
    grid.require_power_of_two();
    if (diagnostics && detail::boundary_ratio(initial) >= 1e-8)
        diagnostics->warnings.push_back("initial data does not decay to 1e-8 of its peak at the periodic seam");

    const std::size_t n = grid.n();
    const double s = spinor_basis::inv_sqrt2;
    std::vector<Complex> right(n), left(n);
    for (std::size_t j = 0; j < n; ++j) {
        right[j] = s * (initial.up[j] + initial.down[j]);
        left[j] = s * (initial.up[j] - initial.down[j]);
    }

    FftPlan plan(n);
    const auto k = wavenumbers(grid);
    plan.forward(right, right);
    plan.forward(left, left);
    for (std::size_t j = 0; j < n; ++j) {
        if (j == n / 2) {
            const double c = std::cos(k[j] * t);
            right[j] *= c;
            left[j] *= c;
            continue;
        }
        const Complex shift = std::polar(1.0, -k[j] * t);
        right[j] *= shift;
        left[j] *= std::conj(shift);
    }
    plan.backward(right, right);
    plan.backward(left, left);

    SpinorField out(grid, initial.time + t);
    for (std::size_t j = 0; j < n; ++j) {
        out.up[j] = s * (right[j] + left[j]);
        out.down[j] = s * (right[j] - left[j]);
    }
    if (diagnostics && detail::boundary_ratio(out) >= 1e-8)
        diagnostics->warnings.push_back("evolved field reaches the periodic seam at t=" + std::to_string(out.time));
    return out;
}

/// Pointwise |up|^2 + |down|^2.
inline std::vector<double> density(const SpinorField& field) {
    std::vector<double> rho(field.size());
    for (std::size_t j = 0; j < field.size(); ++j) rho[j] = std::norm(field.up[j]) + std::norm(field.down[j]);
    return rho;
}

inline double total_probability(const SpinorField& field) { return trapezoid(density(field), field.grid.dx()); }

} // namespace curvedirac
