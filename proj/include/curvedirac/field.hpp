#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "curvedirac/error.hpp"
#include "curvedirac/metric.hpp"

namespace curvedirac {

using Complex = std::complex<double>;

/// Uniform periodic grid: x_j = x_min + j*dx, j = 0..n-1, dx = (x_max - x_min)/n.
class GridSpec {
public:
    GridSpec(double x_min, double x_max, std::size_t n) : x_min_(x_min), x_max_(x_max), n_(n) {
        if (!(x_min < x_max) || !std::isfinite(x_min) || !std::isfinite(x_max))
            throw GridError("invalid_grid", "grid requires finite x_min < x_max");
        if (n < 16) throw GridError("invalid_grid", "grid requires n >= 16, got " + std::to_string(n));
        dx_ = (x_max - x_min) / static_cast<double>(n);
    }

    double x_min() const noexcept { return x_min_; }
    double x_max() const noexcept { return x_max_; }
    std::size_t n() const noexcept { return n_; }
    double dx() const noexcept { return dx_; }
    double length() const noexcept { return x_max_ - x_min_; }
    double x(std::size_t j) const noexcept { return x_min_ + static_cast<double>(j) * dx_; }

    std::vector<double> points() const {
        std::vector<double> xs(n_);
        for (std::size_t j = 0; j < n_; ++j) xs[j] = x(j);
        return xs;
    }

    bool is_power_of_two() const noexcept { return (n_ & (n_ - 1)) == 0; }

    void require_power_of_two() const {
        if (!is_power_of_two())
            throw GridError("non_power_of_two_grid", "spectral methods need a power-of-two grid, got n=" + std::to_string(n_));
    }

    /// Indices within the exclusion radius of any singular point of cf.
    const std::vector<std::size_t>& excluded_indices() const noexcept { return excluded_; }

    GridSpec with_exclusions(const ConformalFactor& cf) const {
        GridSpec g = *this;
        g.excluded_.clear();
        for (std::size_t j = 0; j < n_; ++j)
            if (cf.is_excluded(x(j))) g.excluded_.push_back(j);
        return g;
    }

    bool is_excluded(std::size_t j) const {
        return std::binary_search(excluded_.begin(), excluded_.end(), j);
    }

    /// Same sample points (exclusion bookkeeping is not compared).
    bool same_points(const GridSpec& o) const noexcept {
        return x_min_ == o.x_min_ && x_max_ == o.x_max_ && n_ == o.n_;
    }

private:
    double x_min_;
    double x_max_;
    std::size_t n_;
    double dx_ = 0.0;
    std::vector<std::size_t> excluded_;
};

/// Two-component spinor sampled on a grid at one instant. Component order
/// matches sigma_x = [[0,1],[1,0]], sigma_z = diag(1,-1).
struct SpinorField {
    GridSpec grid;
    std::vector<Complex> up;
    std::vector<Complex> down;
    double time = 0.0;

    SpinorField(GridSpec g, double t = 0.0)
        : grid(std::move(g)), up(grid.n()), down(grid.n()), time(t) {}

    SpinorField(GridSpec g, std::vector<Complex> u, std::vector<Complex> d, double t)
        : grid(std::move(g)), up(std::move(u)), down(std::move(d)), time(t) {
        if (up.size() != grid.n() || down.size() != grid.n())
            throw InvalidArgument("spinor components must have grid.n() entries");
    }

    std::size_t size() const noexcept { return up.size(); }

    /// Euclidean spinor norm at index j.
    double magnitude(std::size_t j) const { return std::sqrt(std::norm(up[j]) + std::norm(down[j])); }

    bool all_finite() const {
        auto finite = [](const Complex& c) { return std::isfinite(c.real()) && std::isfinite(c.imag()); };
        return std::all_of(up.begin(), up.end(), finite) && std::all_of(down.begin(), down.end(), finite);
    }
};

/// sup_j |a(x_j) - b(x_j)|, with |.| the Euclidean norm of the spinor difference.
/// Indices for which `skip(j)` is true are ignored.
template <class Skip>
double max_spinor_distance(const SpinorField& a, const SpinorField& b, Skip&& skip) {
    if (a.size() != b.size()) throw InvalidArgument("fields live on different grids");
    double worst = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        if (skip(j)) continue;
        worst = std::max(worst, std::sqrt(std::norm(a.up[j] - b.up[j]) + std::norm(a.down[j] - b.down[j])));
    }
    return worst;
}

inline double max_spinor_distance(const SpinorField& a, const SpinorField& b) {
    return max_spinor_distance(a, b, [](std::size_t) { return false; });
}

inline double max_magnitude(const SpinorField& f) {
    double m = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j) m = std::max(m, f.magnitude(j));
    return m;
}

/// Trapezoid rule over the sampled points.
inline double trapezoid(const std::vector<double>& values, double dx) {
    if (values.empty()) return 0.0;
    double sum = 0.0;
    for (double v : values) sum += v;
    sum -= 0.5 * (values.front() + values.back());
    return sum * dx;
}

enum class Provenance { closed_form, spectral, fd_oracle };

inline std::string_view to_string(Provenance p) {
    switch (p) {
    case Provenance::closed_form: return "closed-form";
    case Provenance::spectral: return "spectral";
    case Provenance::fd_oracle: return "fd-oracle";
    }
    return "unknown";
}

/// Time-ordered snapshots of a field.
struct EvolutionRecord {
    Provenance provenance = Provenance::closed_form;
    std::vector<SpinorField> frames;

    std::vector<double> times() const {
        std::vector<double> ts;
        ts.reserve(frames.size());
        for (const auto& f : frames) ts.push_back(f.time);
        return ts;
    }
};

} // namespace curvedirac
