#pragma once

#include <array>
#include <functional>
#include <limits>

#include "noelab/dual.hpp"
#include "noelab/errors.hpp"
#include "noelab/sampling.hpp"
#include "noelab/spacetime.hpp"

namespace noelab {

template <class S>
std::array<S, 4> to_scalar4(const Vec4& v) {
    return {S(v[0]), S(v[1]), S(v[2]), S(v[3])};
}

// Seed x in the outer partials and w in the inner partials: one evaluation
// yields f, grad_w f (the witness candidate) and the mixed second
// derivatives d2f/dx dw needed for the curl test.
inline void seed_xw(const Vec4& x, const Vec4& w, std::array<DualXW, 4>& xs,
                    std::array<DualXW, 4>& ws) {
    for (int i = 0; i < 4; ++i) {
        xs[i] = DualXW(DualN<4>(x[i]));
        xs[i].grad[i] = DualN<4>(1.0);
        ws[i] = DualXW(DualN<4>::variable(w[i], i));
    }
}

// A scalar field on (event, future-vector) pairs, evaluatable with exact
// first derivatives and mixed x-w second derivatives.
struct PhaseField {
    ModelKind model = ModelKind::NonRelativistic;
    std::function<DualXW(const std::array<DualXW, 4>&, const std::array<DualXW, 4>&)> f;

    double value(const Vec4& x, const Vec4& w) const {
        std::array<DualXW, 4> xs, ws;
        for (int i = 0; i < 4; ++i) {
            xs[i] = DualXW(DualN<4>(x[i]));
            ws[i] = DualXW(DualN<4>(w[i]));
        }
        return scalar_value(f(xs, ws));
    }

    struct Jet {
        double value;
        Vec4 grad_w;
        Mat4 dxdw;  // dxdw(i, j) = d2 f / dx_i dw_j
    };

    Jet jet(const Vec4& x, const Vec4& w) const {
        std::array<DualXW, 4> xs, ws;
        seed_xw(x, w, xs, ws);
        const DualXW r = f(xs, ws);
        Jet out;
        out.value = scalar_value(r);
        for (int j = 0; j < 4; ++j) out.grad_w[j] = r.val.grad[j];
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) out.dxdw(i, j) = r.grad[i].grad[j];
        return out;
    }
};

struct FtdOptions {
    SampleBox box{};             // 4-cube of half-width 10 around the origin
    int x_samples = 256;         // Sobol points in the box
    int w_dirs = 16;             // random future directions per point
    double tol = 1e-7;           // relative to scale
    double scale_override = 0;   // 0: use max |f| over samples
    std::uint64_t seed = 0x5EED;
    int min_x_samples = 8;
    int min_w_dirs = 2;
};

struct FtdResult {
    bool yes = false;
    double lin_residual = 0.0;    // relative to scale
    double curl_residual = 0.0;   // relative to scale
    double scale = 0.0;           // normalization used
    double max_abs = 0.0;         // max |f| over samples
    double witness_norm = 0.0;    // max |a(x)| over samples
    Vec4 worst_x = Vec4::Zero();  // sample with the largest violation
    Vec4 worst_w = Vec4::Zero();
    std::function<Vec4(const Vec4&)> witness;  // a(x) = grad_w f(x, .)
};

// Certifies that f(x, w) = a(x) . w for some curl-free covector field a,
// i.e. that f is Dphi(x) . w for a potential phi. The test is sampling
// based: linearity of f in w over the future cone, plus symmetry of the
// x-Jacobian of the witness a(x) = grad_w f.
inline FtdResult is_full_time_derivative(const PhaseField& field, const FtdOptions& opts = {}) {
    if (opts.x_samples < opts.min_x_samples || opts.w_dirs < opts.min_w_dirs ||
        !(opts.box.half_width > 0.0))
        throw SamplingDegenerate("full-time-derivative check needs at least " +
                                 std::to_string(opts.min_x_samples) + " points and " +
                                 std::to_string(opts.min_w_dirs) + " directions");

    FtdResult res;
    double max_abs_f = 0.0;
    double max_lin = 0.0;
    double max_curl = 0.0;

    // Reference direction comfortably inside the future cone.
    const Vec4 w_ref = field.model == ModelKind::NonRelativistic
                           ? Vec4{1.0, 0.23, -0.11, 0.05}
                           : Vec4{1.3, 0.23, -0.11, 0.05};

    Sobol4 sobol;
    for (int k = 0; k < opts.x_samples; ++k) {
        const Vec4 x = opts.box.map(sobol.next());
        RngStream rng(RngStream::derive(opts.seed, static_cast<std::uint64_t>(k)));

        const PhaseField::Jet jet = field.jet(x, w_ref);
        max_abs_f = std::max(max_abs_f, std::abs(jet.value));
        res.witness_norm = std::max(res.witness_norm, jet.grad_w.norm());

        for (int i = 0; i < 4; ++i)
            for (int j = i + 1; j < 4; ++j) {
                const double c = std::abs(jet.dxdw(i, j) - jet.dxdw(j, i));
                if (c > max_curl) {
                    max_curl = c;
                    res.worst_x = x;
                    res.worst_w = w_ref;
                }
            }

        for (int d = 0; d < opts.w_dirs; ++d) {
            const Vec4 w1 = sample_future_direction(rng, field.model);
            const Vec4 w2 = sample_future_direction(rng, field.model);
            const double alpha = rng.uniform(0.1, 2.0);
            const double beta = rng.uniform(0.1, 2.0);

            const double f1 = field.value(x, w1);
            const double f2 = field.value(x, w2);
            const double fc = field.value(x, alpha * w1 + beta * w2);
            max_abs_f = std::max({max_abs_f, std::abs(f1), std::abs(f2), std::abs(fc)});

            // additivity on the cone, and agreement with the witness
            const double combo = std::abs(fc - alpha * f1 - beta * f2);
            const double predict = std::abs(f1 - jet.grad_w.dot(w1));
            const double lin = std::max(combo, predict);
            if (lin > max_lin) {
                max_lin = lin;
                res.worst_x = x;
                res.worst_w = w1;
            }
        }
    }

    res.max_abs = max_abs_f;
    res.scale = opts.scale_override > 0.0 ? opts.scale_override : std::max(max_abs_f, 1e-300);
    res.lin_residual = max_lin / res.scale;
    res.curl_residual = max_curl / res.scale;
    res.yes = res.lin_residual < opts.tol && res.curl_residual < opts.tol;

    const PhaseField f_copy = field;
    const Vec4 w_ref_copy = w_ref;
    res.witness = [f_copy, w_ref_copy](const Vec4& x) { return f_copy.jet(x, w_ref_copy).grad_w; };
    return res;
}

}  // namespace noelab
