#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "noelab/errors.hpp"
#include "noelab/quantity.hpp"

namespace noelab {

using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;

enum class ModelKind { NonRelativistic, Relativistic };

inline std::string model_name(ModelKind m) {
    return m == ModelKind::NonRelativistic ? "nonrel" : "rel";
}

// Strict future-likeness margin on normalized data; inputs inside the
// margin are rejected so that solvers never differentiate across the cone.
inline constexpr double kFutureMargin = 1e-12;

// ---------------------------------------------------------------------------
// Chart-level primitives. The canonical chart fixes an origin and an
// orthonormal basis adapted to tau (nonrel) or g (rel); components are plain
// numbers (time in s, space in m; everything in s relativistically).
// Frame independence is asserted by covariance tests over the group action.
// ---------------------------------------------------------------------------

inline double chart_tau(const Vec4& w) { return w[0]; }

inline double chart_spatial_dot(const Vec4& a, const Vec4& b) {
    return a[1] * b[1] + a[2] * b[2] + a[3] * b[3];
}

// Lorentz form, signature (-,+,+,+); normalized so g(u,u) = -1 on V(1).
inline double chart_g(const Vec4& a, const Vec4& b) {
    return -a[0] * b[0] + chart_spatial_dot(a, b);
}

inline bool chart_is_future_like(const Vec4& w, ModelKind model,
                                 double margin = kFutureMargin) {
    const double scale = w.norm();
    if (!(scale > 0.0)) return false;
    if (model == ModelKind::NonRelativistic) {
        return w[0] > margin * scale;
    }
    return w[0] > 0.0 && -chart_g(w, w) > margin * scale * scale;
}

// ---------------------------------------------------------------------------
// Dimensioned wrappers
// ---------------------------------------------------------------------------

// A spacetime vector in the canonical chart. Slot 0 is timelike, slots 1-3
// spacelike; slots 1-3 share one dimension. Relativistic vectors store
// collapsed dimensions (c = 1), so all four slots agree.
struct FourVector {
    Vec4 values = Vec4::Zero();
    Dim time_dim{};
    Dim space_dim{};
    ModelKind model = ModelKind::NonRelativistic;

    FourVector() = default;
    FourVector(const Vec4& v, Dim t_dim, Dim s_dim, ModelKind m)
        : values(v), time_dim(t_dim), space_dim(s_dim), model(m) {
        if (model == ModelKind::Relativistic) {
            time_dim = collapse_relativistic(time_dim);
            space_dim = collapse_relativistic(space_dim);
            if (kDimChecks && time_dim != space_dim)
                throw DimensionMismatch("relativistic four-vector slots disagree after collapse");
        }
    }

    Quantity component(int i) const {
        return Quantity{values[i], i == 0 ? time_dim : space_dim};
    }

    friend FourVector operator+(const FourVector& a, const FourVector& b) {
        require_same_kind(a, b);
        return FourVector{a.values + b.values, a.time_dim, a.space_dim, a.model};
    }
    friend FourVector operator-(const FourVector& a, const FourVector& b) {
        require_same_kind(a, b);
        return FourVector{a.values - b.values, a.time_dim, a.space_dim, a.model};
    }
    friend FourVector operator*(double s, const FourVector& a) {
        return FourVector{s * a.values, a.time_dim, a.space_dim, a.model};
    }

    static void require_same_kind(const FourVector& a, const FourVector& b) {
        if (a.model != b.model) throw WrongModel("mixing spacetime models");
        if (kDimChecks && (a.time_dim != b.time_dim || a.space_dim != b.space_dim))
            throw DimensionMismatch("four-vector dimensions differ");
    }
};

// Displacement-type vector: (s, m, m, m) nonrel, all s rel.
inline FourVector displacement(ModelKind model, const Vec4& v) {
    if (model == ModelKind::NonRelativistic)
        return FourVector{v, dims::second, dims::meter, model};
    return FourVector{v, dims::second, dims::second, model};
}

// Velocity-type vector (element of M/I): (1, m/s, m/s, m/s) nonrel,
// dimensionless rel.
inline FourVector velocity_vector(ModelKind model, const Vec4& v) {
    if (model == ModelKind::NonRelativistic)
        return FourVector{v, dims::dimensionless, dims::meter_per_second, model};
    return FourVector{v, dims::dimensionless, dims::dimensionless, model};
}

// A point of spacetime, stored as displacement from the fixed chart origin.
struct Event {
    FourVector displacement_from_origin;

    Event() = default;
    explicit Event(const FourVector& d) : displacement_from_origin(d) {}
    Event(ModelKind model, const Vec4& chart) : displacement_from_origin(displacement(model, chart)) {}

    ModelKind model() const { return displacement_from_origin.model; }
    const Vec4& chart() const { return displacement_from_origin.values; }

    friend FourVector operator-(const Event& a, const Event& b) {
        return a.displacement_from_origin - b.displacement_from_origin;
    }
    friend Event operator+(const Event& a, const FourVector& w) {
        return Event{a.displacement_from_origin + w};
    }
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

// Time evaluation function tau; linear, kernel is the spacelike subspace E.
inline Quantity tau_of(const FourVector& w) {
    if (w.model != ModelKind::NonRelativistic)
        throw WrongModel("tau is a non-relativistic structure");
    return w.component(0);
}

// Euclidean structure b on E x E; defined on spacelike vectors only.
inline Quantity b_inner(const FourVector& e1, const FourVector& e2) {
    if (e1.model != ModelKind::NonRelativistic || e2.model != ModelKind::NonRelativistic)
        throw WrongModel("b is a non-relativistic structure");
    if (e1.values[0] != 0.0 || e2.values[0] != 0.0)
        throw NotSpacelike("b requires tau == 0 arguments");
    return Quantity{chart_spatial_dot(e1.values, e2.values),
                    e1.space_dim * e2.space_dim};
}

// Arrow-oriented Lorentz form g, signature (-,+,+,+).
inline Quantity g_inner(const FourVector& w1, const FourVector& w2) {
    if (w1.model != ModelKind::Relativistic || w2.model != ModelKind::Relativistic)
        throw WrongModel("g is a relativistic structure");
    return Quantity{chart_g(w1.values, w2.values), w1.time_dim * w2.time_dim};
}

// Member of V(1): tau(u) = 1 (nonrel, affine space) or g(u,u) = -1 and
// future-like (rel, hyperboloid).
struct Velocity {
    FourVector v;

    static Velocity from_chart(ModelKind model, const Vec4& chart) {
        return Velocity::checked(velocity_vector(model, chart));
    }

    static Velocity checked(const FourVector& fv) {
        if (fv.model == ModelKind::NonRelativistic) {
            if (fv.values[0] != 1.0)
                throw NotFutureLike("non-relativistic velocity must have tau == 1");
        } else {
            const double n = chart_g(fv.values, fv.values);
            if (std::abs(n + 1.0) > 1e-12 || !(fv.values[0] > 0.0))
                throw NotFutureLike("relativistic velocity must satisfy g(u,u) == -1, future-like");
        }
        Velocity out;
        out.v = fv;
        return out;
    }

    static Velocity rest(ModelKind model) {
        return from_chart(model, Vec4{1.0, 0.0, 0.0, 0.0});
    }

    const Vec4& chart() const { return v.values; }
    ModelKind model() const { return v.model; }
};

// Future-like vector (open cone containing V(1)).
struct FutureVector {
    FourVector w;

    static FutureVector checked(const FourVector& fv, double margin = kFutureMargin) {
        if (!chart_is_future_like(fv.values, fv.model, margin))
            throw NotFutureLike("vector is not future-like (margin " + format17(margin) + ")");
        FutureVector out;
        out.w = fv;
        return out;
    }
};

// Projection onto V(1): w / (tau . w) non-relativistically, w / |w|_g
// relativistically. Idempotent on V(1).
inline Velocity normalize_to_V1(const FourVector& w) {
    if (!chart_is_future_like(w.values, w.model))
        throw NotFutureLike("normalize_to_V1 requires a future-like vector");
    if (w.model == ModelKind::NonRelativistic) {
        const Vec4 u = w.values / w.values[0];
        FourVector fv{u, w.time_dim / w.time_dim, w.space_dim / w.time_dim, w.model};
        fv.values[0] = 1.0;  // exact
        return Velocity::checked(fv);
    }
    const double norm = std::sqrt(-chart_g(w.values, w.values));
    FourVector fv{w.values / norm, dims::dimensionless, dims::dimensionless, w.model};
    return Velocity::checked(fv);
}

inline Velocity normalize_to_V1(const FutureVector& w) { return normalize_to_V1(w.w); }

}  // namespace noelab
