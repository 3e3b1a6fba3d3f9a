#pragma once

#include <array>
#include <string>
#include <utility>

#include "noelab/dual.hpp"
#include "noelab/errors.hpp"
#include "noelab/expr.hpp"
#include "noelab/ftd.hpp"
#include "noelab/quantity.hpp"
#include "noelab/sampling.hpp"
#include "noelab/spacetime.hpp"

namespace noelab {

// Lagrangians refuse to evaluate this close to the light cone instead of
// extrapolating (relative to the chart norm of w).
inline constexpr double kConeRefusalMargin = 1e-9;

enum class PhiKind { Zero, Free };

// An evaluatable Lagrangian, stored with its homogeneous degree-1 extension
// from V(1) to the future cone built in. Restricted to V(1) it reproduces
// the physical Lagrangian; eval(x, lambda w) = lambda eval(x, w) for
// lambda > 0 holds by construction.
struct LagrangianSpec {
    enum class Kind { FreeNonRel, CounterexampleB, FreeRel, UserExpr };

    ModelKind model = ModelKind::NonRelativistic;
    Kind kind = Kind::FreeNonRel;

    double mass = 1.0;                  // chart value of m
    Vec4 c = Vec4{1.0, 0.0, 0.0, 0.0};  // center velocity in V(1)

    Vec4 origin = Vec4::Zero();  // o, chart coordinates (CounterexampleB)
    Mat4 b = Mat4::Zero();       // antisymmetric coupling (CounterexampleB)
    PhiKind phi_kind = PhiKind::Free;

    ExprPtr expression;       // UserExpr body over x0..x3, w0..w3 on V(1)
    std::string expr_source;

    // phi(u) = 1/2 m |u - c|^2; m in the measure line of mass values.
    static LagrangianSpec free_nonrel(const Quantity& m, const Velocity& vc) {
        if (kDimChecks && m.dim != dims::mass)
            throw DimensionMismatch("non-relativistic mass must have dimension s/m2");
        if (vc.model() != ModelKind::NonRelativistic)
            throw WrongModel("free_nonrel needs a non-relativistic center velocity");
        LagrangianSpec out;
        out.model = ModelKind::NonRelativistic;
        out.kind = Kind::FreeNonRel;
        out.mass = m.value;
        out.c = vc.chart();
        return out;
    }

    // L(x, u) = (x - o) . B . u + phi(u) with antisymmetric B; the
    // translation-symmetric Lagrangian with essential spacetime dependence.
    static LagrangianSpec counterexample_b(const Event& o, const Mat4& coupling,
                                           PhiKind phi = PhiKind::Free,
                                           const Quantity& m = Quantity{1.0, dims::mass},
                                           const Velocity* vc = nullptr) {
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                if (coupling(i, j) != -coupling(j, i))
                    throw AlgebraViolation("counterexample coupling B must be exactly antisymmetric");
        LagrangianSpec out;
        out.model = o.model();
        out.kind = Kind::CounterexampleB;
        out.origin = o.chart();
        out.b = coupling;
        out.phi_kind = phi;
        if (out.model == ModelKind::NonRelativistic) {
            if (kDimChecks && m.dim != dims::mass)
                throw DimensionMismatch("non-relativistic mass must have dimension s/m2");
            out.mass = m.value;
            out.c = vc ? vc->chart() : Vec4{1.0, 0.0, 0.0, 0.0};
            if (vc && vc->model() != out.model) throw WrongModel("center velocity model mismatch");
        } else {
            if (kDimChecks && collapse_relativistic(m.dim) != dims::per_second)
                throw DimensionMismatch("relativistic mass must collapse to dimension 1/s");
            out.mass = m.value;
        }
        return out;
    }

    // phi(w) = m |w|; constant m on V(1), the action is m x proper time.
    static LagrangianSpec free_rel(const Quantity& m) {
        if (kDimChecks && collapse_relativistic(m.dim) != dims::per_second)
            throw DimensionMismatch("relativistic mass must collapse to dimension 1/s");
        LagrangianSpec out;
        out.model = ModelKind::Relativistic;
        out.kind = Kind::FreeRel;
        out.mass = m.value;
        return out;
    }

    // Expression given on V(1); the homogeneous extension is supplied here,
    // the user never writes it. Rejected unless the V(1) restriction has
    // dimension 1/s.
    static LagrangianSpec user_expr(ModelKind model, const std::string& source) {
        LagrangianSpec out;
        out.model = model;
        out.kind = Kind::UserExpr;
        out.expression = ExprParser::parse(source);
        out.expr_source = source;

        std::array<Quantity, 8> vars;
        if (model == ModelKind::NonRelativistic) {
            vars[0] = Quantity{2.0, dims::second};
            for (int i = 1; i < 4; ++i) vars[i] = Quantity{0.5 * i, dims::meter};
            vars[4] = Quantity{1.0, dims::dimensionless};
            for (int i = 1; i < 4; ++i) vars[4 + i] = Quantity{0.25 * i, dims::meter_per_second};
        } else {
            for (int i = 0; i < 4; ++i) vars[i] = Quantity{0.5 + i, dims::second};
            vars[4] = Quantity{1.25, dims::dimensionless};
            for (int i = 1; i < 4; ++i) vars[4 + i] = Quantity{0.2 * i, dims::dimensionless};
        }
        const Quantity probe = out.expression->eval(vars);
        if (probe.dim != dims::per_second)
            throw DimensionMismatch("Lagrangian expression restricted to V(1) has dimension " +
                                    probe.dim.str() + ", expected 1/s");
        return out;
    }
};

// ---------------------------------------------------------------------------
// Evaluation kernel, templated over the scalar so the same code path serves
// values, dual-number derivatives of any order, and dimension audits.
// ---------------------------------------------------------------------------

template <class S>
S lagrangian_kernel(const LagrangianSpec& lag, const std::array<S, 4>& x,
                    const std::array<S, 4>& w) {
    switch (lag.kind) {
        case LagrangianSpec::Kind::FreeNonRel: {
            S acc(0.0);
            for (int a = 1; a < 4; ++a) {
                const S r = w[a] / w[0] - S(lag.c[a]);
                acc += r * r;
            }
            return S(0.5 * lag.mass) * acc * w[0];
        }
        case LagrangianSpec::Kind::CounterexampleB: {
            S total(0.0);
            for (int i = 0; i < 4; ++i) {
                if (lag.b.row(i).isZero(0.0)) continue;
                S xi = x[i] - S(lag.origin[i]);
                for (int j = 0; j < 4; ++j)
                    if (lag.b(i, j) != 0.0) total += xi * S(lag.b(i, j)) * w[j];
            }
            if (lag.phi_kind == PhiKind::Free) {
                if (lag.model == ModelKind::NonRelativistic) {
                    S acc(0.0);
                    for (int a = 1; a < 4; ++a) {
                        const S r = w[a] / w[0] - S(lag.c[a]);
                        acc += r * r;
                    }
                    total += S(0.5 * lag.mass) * acc * w[0];
                } else {
                    using std::sqrt;
                    using noelab::sqrt;
                    total += S(lag.mass) *
                             sqrt(w[0] * w[0] - w[1] * w[1] - w[2] * w[2] - w[3] * w[3]);
                }
            }
            return total;
        }
        case LagrangianSpec::Kind::FreeRel: {
            using std::sqrt;
            using noelab::sqrt;
            return S(lag.mass) * sqrt(w[0] * w[0] - w[1] * w[1] - w[2] * w[2] - w[3] * w[3]);
        }
        case LagrangianSpec::Kind::UserExpr: {
            std::array<S, 8> vars;
            for (int i = 0; i < 4; ++i) vars[i] = x[i];
            if (lag.model == ModelKind::NonRelativistic) {
                for (int i = 0; i < 4; ++i) vars[4 + i] = w[i] / w[0];
                return lag.expression->template eval<S>(vars) * w[0];
            }
            using std::sqrt;
            using noelab::sqrt;
            const S norm = sqrt(w[0] * w[0] - w[1] * w[1] - w[2] * w[2] - w[3] * w[3]);
            for (int i = 0; i < 4; ++i) vars[4 + i] = w[i] / norm;
            return lag.expression->template eval<S>(vars) * norm;
        }
    }
    throw Error("corrupt LagrangianSpec");
}

inline void check_eval_args(const LagrangianSpec& lag, const Vec4& w_chart) {
    if (lag.model == ModelKind::NonRelativistic) {
        if (!chart_is_future_like(w_chart, lag.model))
            throw NotFutureLike("Lagrangian argument w is not future-like");
    } else {
        const double scale = w_chart.norm();
        if (!(w_chart[0] > 0.0) ||
            !(-chart_g(w_chart, w_chart) > kConeRefusalMargin * kConeRefusalMargin * scale * scale))
            throw NotFutureLike("relativistic Lagrangian refuses near-cone argument");
    }
}

inline double eval_chart(const LagrangianSpec& lag, const Vec4& x, const Vec4& w) {
    check_eval_args(lag, w);
    return lagrangian_kernel<double>(lag, to_scalar4<double>(x), to_scalar4<double>(w));
}

inline void check_velocity_dims(const LagrangianSpec& lag, const FourVector& w) {
    if (w.model != lag.model) throw WrongModel("Lagrangian/argument model mismatch");
    if (!kDimChecks) return;
    if (lag.model == ModelKind::NonRelativistic) {
        if (w.time_dim != dims::dimensionless || w.space_dim != dims::meter_per_second)
            throw DimensionMismatch("velocity argument must be an element of M/I");
    } else {
        if (w.time_dim != dims::dimensionless)
            throw DimensionMismatch("relativistic velocity argument must be dimensionless");
    }
}

// Extension-level evaluation; on velocity arguments the result lives in R/I.
inline Quantity eval(const LagrangianSpec& lag, const Event& x, const FourVector& w) {
    if (x.model() != lag.model) throw WrongModel("Lagrangian/event model mismatch");
    check_velocity_dims(lag, w);
    return Quantity{eval_chart(lag, x.chart(), w.values), dims::per_second};
}

inline Quantity eval(const LagrangianSpec& lag, const Event& x, const Velocity& u) {
    return eval(lag, x, u.v);
}

// Exact forward-mode partial derivatives of the extension.
inline void eval_jet_chart(const LagrangianSpec& lag, const Vec4& x, const Vec4& w, double& value,
                           Vec4& dx, Vec4& dw) {
    check_eval_args(lag, w);
    std::array<Dual8, 4> xs, ws;
    for (int i = 0; i < 4; ++i) {
        xs[i] = Dual8::variable(x[i], i);
        ws[i] = Dual8::variable(w[i], 4 + i);
    }
    const Dual8 r = lagrangian_kernel<Dual8>(lag, xs, ws);
    value = r.val;
    for (int i = 0; i < 4; ++i) {
        dx[i] = r.grad[i];
        dw[i] = r.grad[4 + i];
    }
}

inline Vec4 grad_x(const LagrangianSpec& lag, const Event& x, const FourVector& w) {
    if (x.model() != lag.model) throw WrongModel("Lagrangian/event model mismatch");
    check_velocity_dims(lag, w);
    double value;
    Vec4 dx, dw;
    eval_jet_chart(lag, x.chart(), w.values, value, dx, dw);
    return dx;
}

inline Vec4 grad_w(const LagrangianSpec& lag, const Event& x, const FourVector& w) {
    if (x.model() != lag.model) throw WrongModel("Lagrangian/event model mismatch");
    check_velocity_dims(lag, w);
    double value;
    Vec4 dx, dw;
    eval_jet_chart(lag, x.chart(), w.values, value, dx, dw);
    return dw;
}

// ---------------------------------------------------------------------------
// Equivalence: L2 - L1 is a full time-derivative.
// ---------------------------------------------------------------------------

inline PhaseField lagrangian_field(const LagrangianSpec& lag) {
    PhaseField field;
    field.model = lag.model;
    field.f = [lag](const std::array<DualXW, 4>& x, const std::array<DualXW, 4>& w) {
        return lagrangian_kernel<DualXW>(lag, x, w);
    };
    return field;
}

inline PhaseField difference_field(const LagrangianSpec& l2, const LagrangianSpec& l1) {
    PhaseField field;
    field.model = l1.model;
    field.f = [l1, l2](const std::array<DualXW, 4>& x, const std::array<DualXW, 4>& w) {
        return lagrangian_kernel<DualXW>(l2, x, w) - lagrangian_kernel<DualXW>(l1, x, w);
    };
    return field;
}

// Typical magnitude of the Lagrangian over the sampling box, used to make
// residuals relative.
inline double sample_scale(const LagrangianSpec& lag, const FtdOptions& opts) {
    Sobol4 sobol;
    double scale = 0.0;
    const int n = std::min(opts.x_samples, 64);
    for (int k = 0; k < n; ++k) {
        const Vec4 x = opts.box.map(sobol.next());
        RngStream rng(RngStream::derive(opts.seed, 0xACE0 + static_cast<std::uint64_t>(k)));
        for (int d = 0; d < 4; ++d) {
            const Vec4 w = sample_future_direction(rng, lag.model);
            scale = std::max(scale, std::abs(eval_chart(lag, x, w)));
        }
    }
    return std::max(scale, 1e-300);
}

inline bool are_equivalent(const LagrangianSpec& l1, const LagrangianSpec& l2,
                           FtdOptions opts = {}) {
    if (l1.model != l2.model) throw WrongModel("equivalence needs a common spacetime model");
    if (opts.scale_override <= 0.0)
        opts.scale_override = std::max(sample_scale(l1, opts), sample_scale(l2, opts));
    return is_full_time_derivative(difference_field(l2, l1), opts).yes;
}

}  // namespace noelab
