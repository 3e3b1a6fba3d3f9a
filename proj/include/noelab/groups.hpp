#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "noelab/errors.hpp"
#include "noelab/spacetime.hpp"

namespace noelab {

inline Mat4 minkowski_metric() {
    Mat4 g = Mat4::Identity();
    g(0, 0) = -1.0;
    return g;
}

// Affine Lie-algebra element H: linear part (4x4) plus translation part.
// Components are chart numbers (the canonical chart absorbs the s/m
// conversion factors in the boost slots).
struct Generator {
    Mat4 linear = Mat4::Zero();
    Vec4 translation = Vec4::Zero();
    ModelKind model = ModelKind::NonRelativistic;

    // H(x) = linear * (x - o) + translation, already vectorized at o.
    Vec4 at(const Vec4& x) const { return linear * x + translation; }
};

// Largest violation of the model's algebra invariant, relative to the
// generator's own scale. Non-rel: tau . H = 0 and H|_E antisymmetric.
// Rel: H g-antisymmetric (g H antisymmetric as a matrix).
inline double algebra_violation(const Generator& h) {
    const double scale =
        std::max({1.0, h.linear.cwiseAbs().maxCoeff(), h.translation.cwiseAbs().maxCoeff()});
    double viol = 0.0;
    if (h.model == ModelKind::NonRelativistic) {
        for (int j = 0; j < 4; ++j) viol = std::max(viol, std::abs(h.linear(0, j)));
        for (int a = 1; a < 4; ++a)
            for (int b = 1; b < 4; ++b)
                viol = std::max(viol, std::abs(h.linear(a, b) + h.linear(b, a)));
    } else {
        const Mat4 gh = minkowski_metric() * h.linear;
        const Mat4 sym = gh + gh.transpose();
        viol = sym.cwiseAbs().maxCoeff();
    }
    return viol / scale;
}

inline void require_algebra(const Generator& h, double tol = 1e-10) {
    const double v = algebra_violation(h);
    if (v > tol)
        throw AlgebraViolation("generator violates the " + model_name(h.model) +
                               " algebra invariant by " + format17(v));
}

// Affine transformation x -> linear * x + translation in the canonical chart.
struct AffineMap {
    Mat4 linear = Mat4::Identity();
    Vec4 translation = Vec4::Zero();
    ModelKind model = ModelKind::NonRelativistic;

    static AffineMap identity(ModelKind m) {
        AffineMap out;
        out.model = m;
        return out;
    }

    Vec4 apply_chart(const Vec4& x) const { return linear * x + translation; }

    friend AffineMap compose(const AffineMap& a, const AffineMap& b) {
        if (a.model != b.model) throw WrongModel("composing maps of different models");
        AffineMap out;
        out.model = a.model;
        out.linear = a.linear * b.linear;
        out.translation = a.linear * b.translation + a.translation;
        return out;
    }
};

// e^{sH}: linear part sums (sH)^n / n!, affine part sums s^n H^{n-1} h / n!.
// Terms are added until they fall below 1e-16 of the accumulated norm; the
// 40-term cap flags pathological inputs.
inline AffineMap exp_generator(const Generator& gen, double s) {
    require_algebra(gen);
    constexpr int kMaxTerms = 40;
    const Mat4 sh = s * gen.linear;

    AffineMap out;
    out.model = gen.model;
    Mat4 lin = Mat4::Identity();
    Vec4 tr = s * gen.translation;
    Mat4 mterm = Mat4::Identity();
    Vec4 vterm = tr;

    bool converged = false;
    for (int k = 1; k <= kMaxTerms; ++k) {
        mterm = (mterm * sh) / static_cast<double>(k);
        lin += mterm;
        vterm = (sh * vterm) / static_cast<double>(k + 1);
        tr += vterm;

        const double acc = std::max({1e-300, lin.cwiseAbs().maxCoeff(), tr.cwiseAbs().maxCoeff()});
        const double term = std::max(mterm.cwiseAbs().maxCoeff(), vterm.cwiseAbs().maxCoeff());
        if (term < 1e-16 * acc) {
            converged = true;
            break;
        }
    }
    if (!converged) throw Error("exp_generator series did not converge within 40 terms");

    out.linear = lin;
    out.translation = tr;
    return out;
}

// Membership in the proper Noether group (nonrel: tau . L = tau, L|_E
// b-orthogonal, orientation preserved) or the proper Poincare group
// (rel: g-orthogonal, det +1, future cone preserved).
inline bool is_member(const AffineMap& map, double tol = 1e-10) {
    const Mat4& l = map.linear;
    if (map.model == ModelKind::NonRelativistic) {
        if (std::abs(l(0, 0) - 1.0) > tol) return false;
        for (int j = 1; j < 4; ++j)
            if (std::abs(l(0, j)) > tol) return false;
        const Eigen::Matrix3d r = l.block<3, 3>(1, 1);
        const Eigen::Matrix3d defect = r.transpose() * r - Eigen::Matrix3d::Identity();
        if (defect.cwiseAbs().maxCoeff() > tol) return false;
        return std::abs(r.determinant() - 1.0) <= tol;
    }
    const Mat4 g = minkowski_metric();
    const Mat4 defect = l.transpose() * g * l - g;
    if (defect.cwiseAbs().maxCoeff() > tol) return false;
    if (std::abs(l.determinant() - 1.0) > tol) return false;
    return l(0, 0) > 0.0;  // arrow orientation; |L00| >= 1 given g-orthogonality
}

inline Event apply_affine(const AffineMap& map, const Event& x) {
    if (map.model != x.model()) throw WrongModel("map/event model mismatch");
    return Event{map.model, map.apply_chart(x.chart())};
}

inline FourVector apply_linear(const AffineMap& map, const FourVector& w) {
    if (map.model != w.model) throw WrongModel("map/vector model mismatch");
    return FourVector{map.linear * w.values, w.time_dim, w.space_dim, w.model};
}

// ---------------------------------------------------------------------------
// Standard basis of the ten-dimensional algebra: four translations, three
// spatial rotations, three boosts.
// ---------------------------------------------------------------------------

inline Generator translation_generator(ModelKind model, const Vec4& h) {
    Generator g;
    g.model = model;
    g.translation = h;
    return g;
}

inline Generator rotation_generator(ModelKind model, int axis) {
    if (axis < 1 || axis > 3) throw Error("rotation axis must be 1, 2 or 3");
    const int b = axis % 3 + 1, c = (axis + 1) % 3 + 1;
    Generator g;
    g.model = model;
    g.linear(b, c) = -1.0;
    g.linear(c, b) = 1.0;
    return g;
}

inline Generator boost_generator(ModelKind model, int axis) {
    if (axis < 1 || axis > 3) throw Error("boost axis must be 1, 2 or 3");
    Generator g;
    g.model = model;
    g.linear(axis, 0) = 1.0;
    if (model == ModelKind::Relativistic) g.linear(0, axis) = 1.0;
    return g;
}

inline std::vector<Generator> standard_basis(ModelKind model) {
    std::vector<Generator> basis;
    basis.reserve(10);
    for (int i = 0; i < 4; ++i) {
        Vec4 h = Vec4::Zero();
        h[i] = 1.0;
        basis.push_back(translation_generator(model, h));
    }
    for (int a = 1; a <= 3; ++a) basis.push_back(rotation_generator(model, a));
    for (int a = 1; a <= 3; ++a) basis.push_back(boost_generator(model, a));
    return basis;
}

inline std::string standard_basis_name(int index) {
    static const char* names[10] = {"t0", "t1",   "t2",   "t3",   "rot1",
                                    "rot2", "rot3", "boost1", "boost2", "boost3"};
    return names[index];
}

// Flatten to R^20 (16 linear + 4 translation entries) for rank checks.
inline Eigen::VectorXd vectorize_generator(const Generator& g) {
    Eigen::VectorXd v(20);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) v[4 * i + j] = g.linear(i, j);
    for (int i = 0; i < 4; ++i) v[16 + i] = g.translation[i];
    return v;
}

inline Mat4 commutator(const Mat4& a, const Mat4& b) { return a * b - b * a; }

}  // namespace noelab
