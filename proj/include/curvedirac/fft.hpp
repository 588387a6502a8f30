#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <mutex>
#include <numbers>
#include <span>
#include <vector>

#include <fftw3.h>

#include "curvedirac/field.hpp"

namespace curvedirac {

namespace detail {
// FFTW planning is not thread-safe; execution of an existing plan is.
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}
} // namespace detail

/// Complex 1D transform of fixed length, backed by FFTW. The backward
/// transform is normalised so that backward(forward(v)) == v.
class FftPlan {
public:
    explicit FftPlan(std::size_t n) : n_(n) {
        buffer_ = fftw_alloc_complex(n);
        std::lock_guard lock(detail::fftw_planner_mutex());
        forward_ = fftw_plan_dft_1d(static_cast<int>(n), buffer_, buffer_, FFTW_FORWARD, FFTW_ESTIMATE);
        backward_ = fftw_plan_dft_1d(static_cast<int>(n), buffer_, buffer_, FFTW_BACKWARD, FFTW_ESTIMATE);
    }

    FftPlan(const FftPlan&) = delete;
    FftPlan& operator=(const FftPlan&) = delete;

    ~FftPlan() {
        std::lock_guard lock(detail::fftw_planner_mutex());
        fftw_destroy_plan(forward_);
        fftw_destroy_plan(backward_);
        fftw_free(buffer_);
    }

    std::size_t size() const noexcept { return n_; }

    void forward(std::span<const Complex> in, std::span<Complex> out) { run(forward_, in, out, 1.0); }

    void backward(std::span<const Complex> in, std::span<Complex> out) {
        run(backward_, in, out, 1.0 / static_cast<double>(n_));
    }

private:
    void run(fftw_plan plan, std::span<const Complex> in, std::span<Complex> out, double scale) {
        auto* buf = reinterpret_cast<Complex*>(buffer_);
        std::copy(in.begin(), in.end(), buf);
        fftw_execute(plan);
        for (std::size_t i = 0; i < n_; ++i) out[i] = buf[i] * scale;
    }

    std::size_t n_;
    fftw_complex* buffer_ = nullptr;
    fftw_plan forward_ = nullptr;
    fftw_plan backward_ = nullptr;
};

/// Angular wavenumbers in FFT order for a periodic grid of length L.
/// The Nyquist entry (index n/2) is reported as +pi/dx.
inline std::vector<double> wavenumbers(const GridSpec& grid) {
    const std::size_t n = grid.n();
    const double base = 2.0 * std::numbers::pi / grid.length();
    std::vector<double> k(n);
    for (std::size_t j = 0; j < n; ++j) {
        const auto signed_j = j <= n / 2 ? static_cast<double>(j) : static_cast<double>(j) - static_cast<double>(n);
        k[j] = base * signed_j;
    }
    return k;
}

/// d/dx of periodic samples by Fourier multiplication; the Nyquist mode is dropped.
class SpectralDerivative {
public:
    explicit SpectralDerivative(const GridSpec& grid)
        : plan_(grid.n()), k_(wavenumbers(grid)), scratch_(grid.n()) {
        grid.require_power_of_two();
    }

    void apply(std::span<const Complex> in, std::span<Complex> out) {
        const std::size_t n = k_.size();
        plan_.forward(in, scratch_);
        for (std::size_t j = 0; j < n; ++j) scratch_[j] *= Complex(0.0, k_[j]);
        scratch_[n / 2] = 0.0;
        plan_.backward(scratch_, out);
    }

private:
    FftPlan plan_;
    std::vector<double> k_;
    std::vector<Complex> scratch_;
};

} // namespace curvedirac
