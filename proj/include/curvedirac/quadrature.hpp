#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "curvedirac/error.hpp"

namespace curvedirac {

struct QuadratureTolerance {
    double absolute = 1e-10;
    double relative = 1e-10;
    std::size_t max_panels = std::size_t{1} << 20;
};

/// Composite Simpson rule on [a, b] with panel doubling. Every level reuses the
/// previous level's samples; iteration stops when two successive estimates agree
/// to max(absolute, relative*|I|). Throws QuadratureError once max_panels is hit.
template <class F>
double integrate_panel_doubling(F&& f, double a, double b, const QuadratureTolerance& tol = {}) {
    if (a == b) return 0.0;
    const double length = b - a;

    std::size_t panels = 2;
    double ends = f(a) + f(b);
    double evens = 0.0;
    double odds = f(a + 0.5 * length);
    double previous = length / 6.0 * (ends + 4.0 * odds);

    while (panels < tol.max_panels) {
        panels *= 2;
        const double h = length / static_cast<double>(panels);
        evens += odds;
        odds = 0.0;
        for (std::size_t i = 1; i < panels; i += 2) odds += f(a + static_cast<double>(i) * h);
        const double current = h / 3.0 * (ends + 4.0 * odds + 2.0 * evens);
        // Require a few levels so a lucky early agreement cannot stop the loop.
        if (panels >= 16 &&
            std::abs(current - previous) <= std::max(tol.absolute, tol.relative * std::abs(current))) {
            return current;
        }
        previous = current;
    }
    throw QuadratureError("adaptive quadrature on [" + std::to_string(a) + ", " + std::to_string(b) +
                          "] did not converge within " + std::to_string(tol.max_panels) + " panels");
}

} // namespace curvedirac
