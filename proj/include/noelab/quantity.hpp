#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <string_view>

#include "noelab/errors.hpp"
#include "noelab/rational.hpp"

namespace noelab {

// Physical dimension over the two base measure lines: time (second) and
// distance (meter). Exponents are exact rationals. With hbar = 1 baked in,
// mass carries dimension s/m^2.
struct Dim {
    Rational time_exp{0};
    Rational length_exp{0};

    friend constexpr bool operator==(const Dim& a, const Dim& b) {
        return a.time_exp == b.time_exp && a.length_exp == b.length_exp;
    }
    friend constexpr bool operator!=(const Dim& a, const Dim& b) { return !(a == b); }

    friend constexpr Dim operator*(const Dim& a, const Dim& b) {
        return Dim{a.time_exp + b.time_exp, a.length_exp + b.length_exp};
    }
    friend constexpr Dim operator/(const Dim& a, const Dim& b) {
        return Dim{a.time_exp - b.time_exp, a.length_exp - b.length_exp};
    }
    constexpr Dim inv() const { return Dim{-time_exp, -length_exp}; }
    constexpr Dim pow(Rational r) const { return Dim{time_exp * r, length_exp * r}; }

    constexpr bool is_dimensionless() const {
        return time_exp.is_zero() && length_exp.is_zero();
    }

    std::string str() const {
        if (is_dimensionless()) return "dimensionless";
        std::string out;
        if (!time_exp.is_zero()) out += "s^" + time_exp.str();
        if (!length_exp.is_zero()) {
            if (!out.empty()) out += " ";
            out += "m^" + length_exp.str();
        }
        return out;
    }
};

namespace dims {
inline constexpr Dim dimensionless{};
inline constexpr Dim second{Rational{1}, Rational{0}};
inline constexpr Dim meter{Rational{0}, Rational{1}};
// measure line of mass values I/(D (x) D), hbar = 1
inline constexpr Dim mass{Rational{1}, Rational{-2}};
inline constexpr Dim per_second{Rational{-1}, Rational{0}};
inline constexpr Dim meter_per_second{Rational{-1}, Rational{1}};
}  // namespace dims

// With c = 1 physical distances are identified with time intervals:
// the length exponent folds into the time exponent. Idempotent.
constexpr Dim collapse_relativistic(const Dim& d) {
    return Dim{d.time_exp + d.length_exp, Rational{0}};
}

// Dimension checks are correctness scaffolding; a single switch removes
// them from release hot loops.
#ifdef NOELAB_DISABLE_DIM_CHECKS
inline constexpr bool kDimChecks = false;
#else
inline constexpr bool kDimChecks = true;
#endif

struct Quantity {
    double value = 0.0;
    Dim dim{};

    constexpr Quantity() = default;
    constexpr Quantity(double v) : value(v) {}
    constexpr Quantity(double v, Dim d) : value(v), dim(d) {}

    friend Quantity operator+(const Quantity& a, const Quantity& b) {
        if (kDimChecks && a.dim != b.dim)
            throw DimensionMismatch("cannot add " + a.dim.str() + " to " + b.dim.str());
        return Quantity{a.value + b.value, a.dim};
    }
    friend Quantity operator-(const Quantity& a, const Quantity& b) {
        if (kDimChecks && a.dim != b.dim)
            throw DimensionMismatch("cannot subtract " + b.dim.str() + " from " + a.dim.str());
        return Quantity{a.value - b.value, a.dim};
    }
    friend constexpr Quantity operator*(const Quantity& a, const Quantity& b) {
        return Quantity{a.value * b.value, a.dim * b.dim};
    }
    friend constexpr Quantity operator/(const Quantity& a, const Quantity& b) {
        return Quantity{a.value / b.value, a.dim / b.dim};
    }
    friend constexpr Quantity operator*(double s, const Quantity& q) {
        return Quantity{s * q.value, q.dim};
    }
    friend constexpr Quantity operator*(const Quantity& q, double s) {
        return Quantity{q.value * s, q.dim};
    }
    friend constexpr Quantity operator/(const Quantity& q, double s) {
        return Quantity{q.value / s, q.dim};
    }
    friend constexpr Quantity operator-(const Quantity& q) {
        return Quantity{-q.value, q.dim};
    }
};

inline Quantity q_add(const Quantity& a, const Quantity& b) { return a + b; }
inline Quantity q_sub(const Quantity& a, const Quantity& b) { return a - b; }
inline Quantity q_mul(const Quantity& a, const Quantity& b) { return a * b; }
inline Quantity q_div(const Quantity& a, const Quantity& b) { return a / b; }

inline Quantity sqrt(const Quantity& q) {
    return Quantity{std::sqrt(q.value), q.dim.pow(Rational{1, 2})};
}

inline Quantity collapse_relativistic(const Quantity& q) {
    return Quantity{q.value, collapse_relativistic(q.dim)};
}

// ---------------------------------------------------------------------------
// Unit suffix grammar: <float><unit>, unit in {s, m, s/m2, 1/s, dimensionless}.
// The unit is matched from the end of the field, which is unambiguous on this
// closed set ("1.51/s" is 1.5 * 1/s, "2s" is 2 seconds, "0.5" is a pure number).
// ---------------------------------------------------------------------------

inline Dim unit_from_name(std::string_view name) {
    if (name == "s") return dims::second;
    if (name == "m") return dims::meter;
    if (name == "s/m2") return dims::mass;
    if (name == "1/s") return dims::per_second;
    if (name.empty() || name == "dimensionless") return dims::dimensionless;
    throw ParseError("unknown unit '" + std::string(name) + "'");
}

inline std::string unit_name(const Dim& d) {
    if (d == dims::second) return "s";
    if (d == dims::meter) return "m";
    if (d == dims::mass) return "s/m2";
    if (d == dims::per_second) return "1/s";
    if (d == dims::dimensionless) return "dimensionless";
    return d.str();
}

inline Quantity parse_quantity(std::string_view text) {
    // trim
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t')) text.remove_suffix(1);
    if (text.empty()) throw ParseError("empty quantity literal");

    if (text == "1/s") return Quantity{1.0, dims::per_second};  // bare unit

    Dim dim = dims::dimensionless;
    std::string_view num = text;
    for (std::string_view suffix : {"s/m2", "1/s", "s", "m"}) {
        if (num.size() > suffix.size() && num.ends_with(suffix)) {
            num.remove_suffix(suffix.size());
            dim = unit_from_name(suffix);
            break;
        }
    }

    std::string num_str(num);
    std::size_t pos = 0;
    double value = 0.0;
    try {
        value = std::stod(num_str, &pos);
    } catch (const std::exception&) {
        throw ParseError("bad quantity literal '" + std::string(text) + "'");
    }
    if (pos != num_str.size())
        throw ParseError("trailing characters in quantity literal '" + std::string(text) + "'");
    return Quantity{value, dim};
}

// 17 significant digits, round-trip exact for doubles.
inline std::string format17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string format_quantity(const Quantity& q) {
    std::string unit = unit_name(q.dim);
    if (unit == "dimensionless") return format17(q.value);
    return format17(q.value) + unit;
}

}  // namespace noelab
