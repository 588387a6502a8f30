#pragma once

#include <cmath>

namespace curvedirac {

/// Forward-mode dual number: value + derivative * eps, eps^2 = 0.
template <class T>
struct Dual {
    T value{};
    T derivative{};

    constexpr Dual() = default;
    constexpr Dual(T v) : value(v) {}
    constexpr Dual(T v, T d) : value(v), derivative(d) {}

    static constexpr Dual variable(T v) { return {v, T(1)}; }

    friend constexpr Dual operator-(const Dual& a) { return {-a.value, -a.derivative}; }
    friend constexpr Dual operator+(const Dual& a, const Dual& b) { return {a.value + b.value, a.derivative + b.derivative}; }
    friend constexpr Dual operator-(const Dual& a, const Dual& b) { return {a.value - b.value, a.derivative - b.derivative}; }
    friend constexpr Dual operator*(const Dual& a, const Dual& b) {
        return {a.value * b.value, a.derivative * b.value + a.value * b.derivative};
    }
    friend constexpr Dual operator/(const Dual& a, const Dual& b) {
        return {a.value / b.value, (a.derivative * b.value - a.value * b.derivative) / (b.value * b.value)};
    }
};

template <class T> Dual<T> sqrt(const Dual<T>& a) {
    const T s = std::sqrt(a.value);
    return {s, a.derivative / (T(2) * s)};
}
template <class T> Dual<T> exp(const Dual<T>& a) {
    const T e = std::exp(a.value);
    return {e, e * a.derivative};
}
template <class T> Dual<T> log(const Dual<T>& a) { return {std::log(a.value), a.derivative / a.value}; }
template <class T> Dual<T> sin(const Dual<T>& a) { return {std::sin(a.value), std::cos(a.value) * a.derivative}; }
template <class T> Dual<T> cos(const Dual<T>& a) { return {std::cos(a.value), -std::sin(a.value) * a.derivative}; }
template <class T> Dual<T> tan(const Dual<T>& a) {
    const T c = std::cos(a.value);
    return {std::tan(a.value), a.derivative / (c * c)};
}
template <class T> Dual<T> tanh(const Dual<T>& a) {
    const T t = std::tanh(a.value);
    return {t, (T(1) - t * t) * a.derivative};
}
/// Derivative taken as sign(value) * derivative; callers must reject value == 0.
template <class T> Dual<T> abs(const Dual<T>& a) {
    return {std::abs(a.value), a.value < T(0) ? -a.derivative : a.derivative};
}

/// a^n for integer-valued constant n.
template <class T> Dual<T> pow_integer(const Dual<T>& a, T n) {
    if (n == T(0)) return {T(1), T(0)};
    return {std::pow(a.value, n), n * std::pow(a.value, n - T(1)) * a.derivative};
}

/// a^b for a > 0.
template <class T> Dual<T> pow(const Dual<T>& a, const Dual<T>& b) {
    const T p = std::pow(a.value, b.value);
    return {p, p * (b.derivative * std::log(a.value) + b.value * a.derivative / a.value)};
}

} // namespace curvedirac
