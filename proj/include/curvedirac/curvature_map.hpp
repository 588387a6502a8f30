#pragma once

#include <cmath>
#include <vector>

#include "curvedirac/field.hpp"
#include "curvedirac/flat_dirac.hpp"
#include "curvedirac/metric.hpp"

namespace curvedirac {

/// True at grid indices inside the exclusion radius of a singular point.
inline std::vector<bool> singular_mask(const GridSpec& grid, const ConformalFactor& cf) {
    std::vector<bool> mask(grid.n());
    for (std::size_t j = 0; j < grid.n(); ++j) mask[j] = cf.is_excluded(grid.x(j));
    return mask;
}

/// Real multiplier Omega^{-1/2} sampled on the grid (0 where masked).
inline std::vector<double> curvature_multiplier(const GridSpec& grid, const ConformalFactor& cf) {
    std::vector<double> m(grid.n(), 0.0);
    for (std::size_t j = 0; j < grid.n(); ++j) {
        const double x = grid.x(j);
        if (!cf.is_excluded(x)) m[j] = 1.0 / std::sqrt(cf.omega(x));
    }
    return m;
}

/// A flat solution phi together with its curved image psi = Omega^{-1/2} phi.
struct MappedSolution {
    SpinorField flat;
    SpinorField curved;
    ConformalFactor conformal;
    /// Masked entries of `curved` hold 0 and carry no meaning.
    std::vector<bool> mask;
};

/// psi = exp(-i \int V dx) phi = Omega^{-1/2} phi. The "phase" is real, so only
/// amplitudes change. Grid points at a singularity are masked rather than clamped.
inline MappedSolution map_to_curved(const SpinorField& flat, const ConformalFactor& cf) {
    const GridSpec grid = flat.grid.with_exclusions(cf);
    const auto m = curvature_multiplier(grid, cf);
    SpinorField curved(grid, flat.time);
    for (std::size_t j = 0; j < grid.n(); ++j) {
        curved.up[j] = m[j] * flat.up[j];
        curved.down[j] = m[j] * flat.down[j];
    }
    SpinorField flat_copy(grid, flat.up, flat.down, flat.time);
    return {std::move(flat_copy), std::move(curved), cf, singular_mask(grid, cf)};
}

/// phi = Omega^{1/2} psi; masked points stay zero.
inline SpinorField map_to_flat(const SpinorField& curved, const ConformalFactor& cf) {
    const GridSpec grid = curved.grid.with_exclusions(cf);
    SpinorField flat(grid, curved.time);
    for (std::size_t j = 0; j < grid.n(); ++j) {
        const double x = grid.x(j);
        if (cf.is_excluded(x)) continue;
        const double s = std::sqrt(cf.omega(x));
        flat.up[j] = s * curved.up[j];
        flat.down[j] = s * curved.down[j];
    }
    return flat;
}

struct MaskedDensity {
    std::vector<double> values;
    std::vector<bool> mask;
};

/// |psi|^2 = Omega^{-1} |phi|^2 pointwise. For the wormhole the factor is
/// sqrt(b0^2 + x^2) / |x| on both sides of the throat.
inline MaskedDensity curved_density(const std::vector<double>& flat_density, const ConformalFactor& cf,
                                    const GridSpec& grid) {
    if (flat_density.size() != grid.n()) throw InvalidArgument("density and grid sizes differ");
    MaskedDensity out{std::vector<double>(grid.n(), 0.0), singular_mask(grid, cf)};
    for (std::size_t j = 0; j < grid.n(); ++j) {
        if (flat_density[j] < 0.0) throw InvalidArgument("flat density must be non-negative");
        if (!out.mask[j]) out.values[j] = flat_density[j] / cf.omega(grid.x(j));
    }
    return out;
}

/// \int Omega |psi|^2 dx, conserved by the curved evolution and equal to the flat norm of phi.
inline double weighted_norm(const SpinorField& curved, const ConformalFactor& cf) {
    const auto rho = density(curved);
    std::vector<double> w(rho.size(), 0.0);
    for (std::size_t j = 0; j < rho.size(); ++j) {
        const double x = curved.grid.x(j);
        if (!cf.is_excluded(x)) w[j] = cf.omega(x) * rho[j];
    }
    return trapezoid(w, curved.grid.dx());
}

} // namespace curvedirac
