#pragma once

#include <cstdint>
#include <numeric>
#include <string>

namespace noelab {

// Exact rational with reduced numerator/denominator, denominator > 0.
// Small enough exponents that int64 never overflows in practice.
struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;

    constexpr Rational() = default;
    constexpr Rational(std::int64_t n) : num(n), den(1) {}
    constexpr Rational(std::int64_t n, std::int64_t d) : num(n), den(d) { reduce(); }

    constexpr void reduce() {
        if (den < 0) {
            num = -num;
            den = -den;
        }
        const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
        if (g > 1) {
            num /= g;
            den /= g;
        }
        if (num == 0) den = 1;
    }

    friend constexpr Rational operator+(Rational a, Rational b) {
        return Rational{a.num * b.den + b.num * a.den, a.den * b.den};
    }
    friend constexpr Rational operator-(Rational a, Rational b) {
        return Rational{a.num * b.den - b.num * a.den, a.den * b.den};
    }
    friend constexpr Rational operator*(Rational a, Rational b) {
        return Rational{a.num * b.num, a.den * b.den};
    }
    friend constexpr Rational operator/(Rational a, Rational b) {
        return Rational{a.num * b.den, a.den * b.num};
    }
    friend constexpr Rational operator-(Rational a) { return Rational{-a.num, a.den}; }
    friend constexpr bool operator==(Rational a, Rational b) {
        return a.num == b.num && a.den == b.den;
    }
    friend constexpr bool operator!=(Rational a, Rational b) { return !(a == b); }

    constexpr bool is_zero() const { return num == 0; }
    constexpr bool is_integer() const { return den == 1; }

    std::string str() const {
        if (den == 1) return std::to_string(num);
        return std::to_string(num) + "/" + std::to_string(den);
    }
};

}  // namespace noelab
