#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <type_traits>

namespace noelab {

// Forward-mode dual number with N partials over scalar T. Nesting
// (T = DualN<M, ...>) yields exact mixed higher derivatives.
template <int N, class T = double>
struct DualN {
    T val{};
    std::array<T, N> grad{};

    constexpr DualN() = default;
    constexpr DualN(double c) : val(c) {}
    constexpr DualN(const T& v)
        requires(!std::is_same_v<T, double>)
        : val(v) {}

    static constexpr DualN variable(const T& v, int index) {
        DualN d(v);
        d.grad[index] = T(1.0);
        return d;
    }

    friend constexpr DualN operator+(const DualN& a, const DualN& b) {
        DualN r(a.val + b.val);
        for (int i = 0; i < N; ++i) r.grad[i] = a.grad[i] + b.grad[i];
        return r;
    }
    friend constexpr DualN operator-(const DualN& a, const DualN& b) {
        DualN r(a.val - b.val);
        for (int i = 0; i < N; ++i) r.grad[i] = a.grad[i] - b.grad[i];
        return r;
    }
    friend constexpr DualN operator*(const DualN& a, const DualN& b) {
        DualN r(a.val * b.val);
        for (int i = 0; i < N; ++i) r.grad[i] = a.grad[i] * b.val + a.val * b.grad[i];
        return r;
    }
    friend constexpr DualN operator/(const DualN& a, const DualN& b) {
        DualN r(a.val / b.val);
        const T b2 = b.val * b.val;
        for (int i = 0; i < N; ++i) r.grad[i] = (a.grad[i] * b.val - a.val * b.grad[i]) / b2;
        return r;
    }
    friend constexpr DualN operator-(const DualN& a) {
        DualN r(-a.val);
        for (int i = 0; i < N; ++i) r.grad[i] = -a.grad[i];
        return r;
    }

    DualN& operator+=(const DualN& b) { return *this = *this + b; }
    DualN& operator-=(const DualN& b) { return *this = *this - b; }
    DualN& operator*=(const DualN& b) { return *this = *this * b; }
    DualN& operator/=(const DualN& b) { return *this = *this / b; }
};

inline constexpr double scalar_value(double x) { return x; }
inline constexpr double scalar_value(float x) { return x; }

template <int N, class T>
constexpr double scalar_value(const DualN<N, T>& d) {
    return scalar_value(d.val);
}

using std::sqrt;

template <int N, class T>
DualN<N, T> sqrt(const DualN<N, T>& a) {
    DualN<N, T> r;
    r.val = sqrt(a.val);
    const T half_inv = T(0.5) / r.val;
    for (int i = 0; i < N; ++i) r.grad[i] = a.grad[i] * half_inv;
    return r;
}

template <int N, class T>
constexpr bool operator<(const DualN<N, T>& a, const DualN<N, T>& b) {
    return scalar_value(a) < scalar_value(b);
}
template <int N, class T>
constexpr bool operator>(const DualN<N, T>& a, const DualN<N, T>& b) {
    return scalar_value(a) > scalar_value(b);
}

// Common instantiations.
using Dual8 = DualN<8, double>;                    // d/dx, d/dw in one pass
using Dual4 = DualN<4, double>;
using DualXW = DualN<4, DualN<4, double>>;         // outer: x partials, inner: w partials
using DualDir = DualN<1, DualXW>;                  // one extra directional derivative

}  // namespace noelab
