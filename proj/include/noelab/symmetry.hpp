#pragma once

#include <future>
#include <ostream>
#include <string>
#include <vector>

#include "noelab/ftd.hpp"
#include "noelab/groups.hpp"
#include "noelab/lagrangian.hpp"

namespace noelab {

enum class SymmetryStatus { ExactInvariance, UpToFullTimeDerivative, NotASymmetry };

inline std::string status_name(SymmetryStatus s) {
    switch (s) {
        case SymmetryStatus::ExactInvariance: return "exact";
        case SymmetryStatus::UpToFullTimeDerivative: return "ftd";
        case SymmetryStatus::NotASymmetry: return "fail";
    }
    return "?";
}

// Verdict thresholds: exact invariance when the pullback defect vanishes at
// 1e-10 of the Lagrangian's scale; not a symmetry when the linearity or curl
// residual of the defect exceeds 1e-6 of the scale; the band in between is a
// symmetry up to a full time-derivative provided the curl test passes.
inline constexpr double kExactTol = 1e-10;
inline constexpr double kFailTol = 1e-6;

struct SymmetryVerdict {
    SymmetryStatus status = SymmetryStatus::NotASymmetry;
    double max_delta = 0.0;       // max |Delta| relative to scale
    double lin_residual = 0.0;    // relative
    double curl_residual = 0.0;   // relative
    double witness_norm = 0.0;
    double scale = 0.0;
    std::uint64_t seed = 0;
    Vec4 worst_x = Vec4::Zero();
    Vec4 worst_w = Vec4::Zero();
    std::function<Vec4(const Vec4&)> witness;

    bool is_symmetry() const { return status != SymmetryStatus::NotASymmetry; }
};

namespace detail {

inline SymmetryVerdict classify(const FtdResult& r, const FtdOptions& opts) {
    SymmetryVerdict v;
    v.max_delta = r.max_abs / r.scale;
    v.lin_residual = r.lin_residual;
    v.curl_residual = r.curl_residual;
    v.witness_norm = r.witness_norm;
    v.scale = r.scale;
    v.seed = opts.seed;
    v.worst_x = r.worst_x;
    v.worst_w = r.worst_w;
    v.witness = r.witness;
    if (v.max_delta < kExactTol)
        v.status = SymmetryStatus::ExactInvariance;
    else if (v.lin_residual > kFailTol || v.curl_residual > kFailTol)
        v.status = SymmetryStatus::NotASymmetry;
    else
        v.status = SymmetryStatus::UpToFullTimeDerivative;
    return v;
}

}  // namespace detail

// Finite symmetry test, Delta(x, w) = L(Fx, DF w) - L(x, w) on the
// homogeneous extension (affine F, so DF is exact; for group members the
// time-rescaling factor is absorbed by homogeneity). The verdict is the
// full-time-derivative certificate of Delta.
inline SymmetryVerdict check_finite_symmetry(const LagrangianSpec& lag, const AffineMap& map,
                                             FtdOptions opts = {}) {
    if (map.model != lag.model) throw WrongModel("symmetry map/Lagrangian model mismatch");
    if (!is_member(map))
        throw NotAGroupElement("finite symmetry candidates must pass is_member");

    PhaseField delta;
    delta.model = lag.model;
    delta.f = [lag, map](const std::array<DualXW, 4>& x, const std::array<DualXW, 4>& w) {
        std::array<DualXW, 4> fx, lw;
        for (int i = 0; i < 4; ++i) {
            fx[i] = DualXW(map.translation[i]);
            lw[i] = DualXW(0.0);
            for (int j = 0; j < 4; ++j) {
                if (map.linear(i, j) != 0.0) {
                    fx[i] += DualXW(map.linear(i, j)) * x[j];
                    lw[i] += DualXW(map.linear(i, j)) * w[j];
                }
            }
        }
        return lagrangian_kernel<DualXW>(lag, fx, lw) - lagrangian_kernel<DualXW>(lag, x, w);
    };

    if (opts.scale_override <= 0.0) opts.scale_override = sample_scale(lag, opts);
    return detail::classify(is_full_time_derivative(delta, opts), opts);
}

// Infinitesimal symmetry test, Eq. of the s -> 0 limit: the defect is
// deltaL(x, w) = grad_x L . H(x) + grad_w L . (H w), computed exactly as the
// directional derivative of L along the one-parameter flow of H.
inline SymmetryVerdict check_infinitesimal_symmetry(const LagrangianSpec& lag,
                                                    const Generator& gen, FtdOptions opts = {}) {
    if (gen.model != lag.model) throw WrongModel("generator/Lagrangian model mismatch");
    require_algebra(gen);

    PhaseField delta;
    delta.model = lag.model;
    delta.f = [lag, gen](const std::array<DualXW, 4>& x, const std::array<DualXW, 4>& w) {
        using S1 = DualN<1, DualXW>;
        std::array<S1, 4> xs, ws;
        for (int i = 0; i < 4; ++i) {
            DualXW hx(gen.translation[i]);
            DualXW hw(0.0);
            for (int j = 0; j < 4; ++j) {
                if (gen.linear(i, j) != 0.0) {
                    hx += DualXW(gen.linear(i, j)) * x[j];
                    hw += DualXW(gen.linear(i, j)) * w[j];
                }
            }
            xs[i] = S1(x[i]);
            xs[i].grad[0] = hx;
            ws[i] = S1(w[i]);
            ws[i].grad[0] = hw;
        }
        return lagrangian_kernel<S1>(lag, xs, ws).grad[0];
    };

    if (opts.scale_override <= 0.0) opts.scale_override = sample_scale(lag, opts);
    return detail::classify(is_full_time_derivative(delta, opts), opts);
}

// ---------------------------------------------------------------------------
// Free point-mass certification: all ten basis directions plus K random
// finite group elements.
// ---------------------------------------------------------------------------

struct CertifyRecord {
    std::string name;
    SymmetryStatus status = SymmetryStatus::NotASymmetry;
    double lin_residual = 0.0;
    double curl_residual = 0.0;
    double witness_norm = 0.0;
    double max_delta = 0.0;
    std::uint64_t seed = 0;
};

struct CertifyReport {
    std::vector<CertifyRecord> records;  // 10 infinitesimal, then K finite
    int infinitesimal_count = 10;

    bool all_symmetric() const {
        for (const auto& r : records)
            if (r.status == SymmetryStatus::NotASymmetry) return false;
        return true;
    }
    bool all_exact() const {
        for (const auto& r : records)
            if (r.status != SymmetryStatus::ExactInvariance) return false;
        return true;
    }

    void write_text(std::ostream& os) const {
        for (const auto& r : records) {
            os << r.name << ": " << status_name(r.status)
               << "  max_delta=" << format17(r.max_delta)
               << "  lin_residual=" << format17(r.lin_residual)
               << "  curl_residual=" << format17(r.curl_residual)
               << "  witness_norm=" << format17(r.witness_norm) << "  seed=" << r.seed << "\n";
        }
    }

    void write_csv(std::ostream& os) const {
        os << "generator,status,lin_residual,curl_residual,witness_norm,seed\n";
        for (const auto& r : records) {
            os << r.name << "," << status_name(r.status) << "," << format17(r.lin_residual)
               << "," << format17(r.curl_residual) << "," << format17(r.witness_norm) << ","
               << r.seed << "\n";
        }
    }
};

struct CertifyOptions {
    FtdOptions ftd{};
    int random_finite = 20;  // K random group elements
    std::uint64_t seed = 0x5EED;
};

// Random algebra element with O(1) rotation/boost strengths.
inline Generator random_algebra_element(RngStream& rng, ModelKind model) {
    Generator g;
    g.model = model;
    Eigen::Matrix3d spatial;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) spatial(a, b) = rng.uniform(-1.0, 1.0);
    g.linear.block<3, 3>(1, 1) = 0.5 * (spatial - spatial.transpose());
    for (int a = 1; a < 4; ++a) {
        g.linear(a, 0) = rng.uniform(-1.0, 1.0);
        if (model == ModelKind::Relativistic) g.linear(0, a) = g.linear(a, 0);
    }
    for (int i = 0; i < 4; ++i) g.translation[i] = rng.uniform(-3.0, 3.0);
    return g;
}

inline CertifyReport certify_free(const LagrangianSpec& lag, const CertifyOptions& opts = {}) {
    const auto basis = standard_basis(lag.model);
    const double scale = sample_scale(lag, opts.ftd);

    CertifyReport report;
    report.infinitesimal_count = static_cast<int>(basis.size());
    const int total = report.infinitesimal_count + opts.random_finite;
    report.records.resize(total);

    std::vector<std::future<CertifyRecord>> jobs;
    jobs.reserve(total);
    for (int k = 0; k < total; ++k) {
        jobs.push_back(std::async(std::launch::async, [&, k]() {
            FtdOptions ftd = opts.ftd;
            ftd.seed = RngStream::derive(opts.seed, static_cast<std::uint64_t>(k));
            ftd.scale_override = scale;
            CertifyRecord rec;
            rec.seed = ftd.seed;
            SymmetryVerdict verdict;
            if (k < report.infinitesimal_count) {
                rec.name = standard_basis_name(k);
                verdict = check_infinitesimal_symmetry(lag, basis[k], ftd);
            } else {
                rec.name = "finite" + std::to_string(k - report.infinitesimal_count);
                RngStream rng(RngStream::derive(opts.seed, 0xF1D0 + k));
                const Generator h = random_algebra_element(rng, lag.model);
                verdict = check_finite_symmetry(lag, exp_generator(h, 1.0), ftd);
            }
            rec.status = verdict.status;
            rec.lin_residual = verdict.lin_residual;
            rec.curl_residual = verdict.curl_residual;
            rec.witness_norm = verdict.witness_norm;
            rec.max_delta = verdict.max_delta;
            return rec;
        }));
    }
    for (int k = 0; k < total; ++k) report.records[k] = jobs[k].get();  // merged by index
    return report;
}

}  // namespace noelab
