#pragma once

#include <Eigen/Sparse>
#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "noelab/lagrangian.hpp"
#include "noelab/sampling.hpp"

namespace noelab {

// ---------------------------------------------------------------------------
// Discretized fixed-endpoint paths
// ---------------------------------------------------------------------------

// N+1 chart nodes over a strictly increasing parameter grid on [0, 1]
// (uniform s_i = i/N unless remapped). Every chord must stay future-like.
struct WorldPath {
    ModelKind model = ModelKind::NonRelativistic;
    std::vector<Vec4> nodes;
    std::vector<double> grid;

    int segments() const { return static_cast<int>(nodes.size()) - 1; }
    Vec4 chord(int i) const { return nodes[i + 1] - nodes[i]; }
    double dt(int i) const { return grid[i + 1] - grid[i]; }
    Event node_event(int i) const { return Event{model, nodes[i]}; }

    static WorldPath straight(const Event& x0, const Event& x1, int n) {
        if (x0.model() != x1.model()) throw WrongModel("endpoint models differ");
        WorldPath p;
        p.model = x0.model();
        p.nodes.resize(n + 1);
        p.grid.resize(n + 1);
        for (int i = 0; i <= n; ++i) {
            const double s = static_cast<double>(i) / n;
            p.grid[i] = s;
            p.nodes[i] = (1.0 - s) * x0.chart() + s * x1.chart();
        }
        return p;
    }
};

inline bool chord_ok(ModelKind model, const Vec4& c) {
    if (model == ModelKind::NonRelativistic) return chart_is_future_like(c, model);
    const double scale = c.norm();
    return c[0] > 0.0 &&
           -chart_g(c, c) > kConeRefusalMargin * kConeRefusalMargin * scale * scale;
}

inline void require_chords_future(const WorldPath& p) {
    for (int i = 0; i < p.segments(); ++i)
        if (!chord_ok(p.model, p.chord(i)))
            throw ChordNotFutureLike("chord " + std::to_string(i) + " is not future-like");
}

// Model norm of a chord: tau (nonrel) or the g-norm (rel).
inline double chord_norm(ModelKind model, const Vec4& c) {
    return model == ModelKind::NonRelativistic ? c[0] : std::sqrt(-chart_g(c, c));
}

// ---------------------------------------------------------------------------
// Action and its exact derivatives
// ---------------------------------------------------------------------------

// Midpoint-rule action: sum of L((p_i + p_{i+1})/2, chord_i / ds_i) ds_i.
// Degree-1 homogeneity cancels ds exactly, so the value is invariant under
// any strictly increasing remap of the node parameters.
inline double action(const LagrangianSpec& lag, const WorldPath& p) {
    if (lag.model != p.model) throw WrongModel("Lagrangian/path model mismatch");
    require_chords_future(p);
    double total = 0.0;
    for (int i = 0; i < p.segments(); ++i) {
        const double ds = p.dt(i);
        const Vec4 mid = 0.5 * (p.nodes[i] + p.nodes[i + 1]);
        const Vec4 w = p.chord(i) / ds;
        total += lagrangian_kernel<double>(lag, to_scalar4<double>(mid), to_scalar4<double>(w)) * ds;
    }
    return total;
}

namespace detail {

// Per-segment jet of the quadrature term with respect to the 8 coordinates
// of its two nodes (0..3 first node, 4..7 second node).
template <class S>
S segment_term(const LagrangianSpec& lag, const std::array<S, 8>& q, double ds) {
    std::array<S, 4> mid, w;
    const double inv_ds = 1.0 / ds;
    for (int k = 0; k < 4; ++k) {
        mid[k] = (q[k] + q[4 + k]) * 0.5;
        w[k] = (q[4 + k] - q[k]) * inv_ds;
    }
    return lagrangian_kernel<S>(lag, mid, w) * S(ds);
}

}  // namespace detail

// Exact derivative of the discrete action with respect to interior node
// coordinates (endpoint-fixed variations), stacked 4 per node.
inline Eigen::VectorXd action_gradient(const LagrangianSpec& lag, const WorldPath& p) {
    if (lag.model != p.model) throw WrongModel("Lagrangian/path model mismatch");
    require_chords_future(p);
    const int n = p.segments();
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(4 * (n - 1));
    for (int i = 0; i < n; ++i) {
        std::array<Dual8, 8> q;
        for (int k = 0; k < 4; ++k) {
            q[k] = Dual8::variable(p.nodes[i][k], k);
            q[4 + k] = Dual8::variable(p.nodes[i + 1][k], 4 + k);
        }
        const Dual8 term = detail::segment_term<Dual8>(lag, q, p.dt(i));
        if (i > 0)
            for (int k = 0; k < 4; ++k) grad[4 * (i - 1) + k] += term.grad[k];
        if (i < n - 1)
            for (int k = 0; k < 4; ++k) grad[4 * i + k] += term.grad[4 + k];
    }
    return grad;
}

// ---------------------------------------------------------------------------
// Block-tridiagonal symmetric systems (4x4 blocks)
// ---------------------------------------------------------------------------

struct BlockTridiag {
    std::vector<Mat4> diag;   // M blocks
    std::vector<Mat4> upper;  // M-1 blocks

    explicit BlockTridiag(int m) : diag(m, Mat4::Zero()), upper(m > 0 ? m - 1 : 0, Mat4::Zero()) {}

    Eigen::VectorXd multiply(const Eigen::VectorXd& v) const {
        const int m = static_cast<int>(diag.size());
        Eigen::VectorXd out(4 * m);
        for (int i = 0; i < m; ++i) {
            Vec4 acc = diag[i] * Vec4(v.segment<4>(4 * i));
            if (i > 0) acc += upper[i - 1].transpose() * Vec4(v.segment<4>(4 * (i - 1)));
            if (i + 1 < m) acc += upper[i] * Vec4(v.segment<4>(4 * (i + 1)));
            out.segment<4>(4 * i) = acc;
        }
        return out;
    }
};

// Banded LU with partial pivoting. The reparameterization degeneracy makes
// individual diagonal blocks singular along chord directions, so a
// no-pivoting block elimination would break down even when the full matrix
// is fine.
class TridiagSolver {
  public:
    bool factor(const BlockTridiag& t, double shift) {
        const int m = static_cast<int>(t.diag.size());
        const int dim = 4 * m;
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(28 * m);
        for (int i = 0; i < m; ++i)
            for (int r = 0; r < 4; ++r)
                for (int c = 0; c < 4; ++c) {
                    const double v = t.diag[i](r, c) + (r == c ? shift : 0.0);
                    if (v != 0.0) trip.emplace_back(4 * i + r, 4 * i + c, v);
                }
        for (int i = 0; i + 1 < m; ++i)
            for (int r = 0; r < 4; ++r)
                for (int c = 0; c < 4; ++c)
                    if (t.upper[i](r, c) != 0.0) {
                        trip.emplace_back(4 * i + r, 4 * (i + 1) + c, t.upper[i](r, c));
                        trip.emplace_back(4 * (i + 1) + c, 4 * i + r, t.upper[i](r, c));
                    }
        Eigen::SparseMatrix<double> mat(dim, dim);
        mat.setFromTriplets(trip.begin(), trip.end());
        solver_.compute(mat);
        return solver_.info() == Eigen::Success;
    }

    Eigen::VectorXd solve(const Eigen::VectorXd& b) const { return solver_.solve(b); }

  private:
    Eigen::SparseLU<Eigen::SparseMatrix<double>> solver_;
};

// ---------------------------------------------------------------------------
// Stationarity solver
// ---------------------------------------------------------------------------

enum class GaugeOption { UniformChordPenalty, ReparamProjection };

inline std::string gauge_name(GaugeOption g) {
    return g == GaugeOption::UniformChordPenalty ? "uniform-chord" : "projection";
}

struct SolveOptions {
    GaugeOption gauge = GaugeOption::UniformChordPenalty;
    int max_iterations = 150;
    double penalty_kappa = 1e3;
    double perturb_scale = 0.0;      // optional initial-guess perturbation
    std::uint64_t seed = 0x5EED;
    const WorldPath* initial = nullptr;
};

struct ActionReport {
    double action = 0.0;
    double gradient_norm = 0.0;           // endpoint-fixed action gradient
    std::vector<double> el_residuals;     // per interior node
    std::vector<Vec4> momentum;           // per segment
    double momentum_deviation = 0.0;      // max pairwise distance
    double momentum_mean_norm = 0.0;
    int iterations = 0;
    GaugeOption gauge = GaugeOption::UniformChordPenalty;
};

struct SolveResult {
    WorldPath path;
    ActionReport report;
};

// Momentum grad_w L sampled along the path at segment midpoints.
inline std::vector<Vec4> momentum_series(const LagrangianSpec& lag, const WorldPath& p) {
    if (lag.model != p.model) throw WrongModel("Lagrangian/path model mismatch");
    require_chords_future(p);
    std::vector<Vec4> out(p.segments());
    for (int i = 0; i < p.segments(); ++i) {
        const Vec4 mid = 0.5 * (p.nodes[i] + p.nodes[i + 1]);
        const Vec4 w = p.chord(i) / p.dt(i);
        double value;
        Vec4 dx, dw;
        eval_jet_chart(lag, mid, w, value, dx, dw);
        out[i] = dw;
    }
    return out;
}

inline double momentum_deviation(const std::vector<Vec4>& series) {
    double dev = 0.0;
    for (std::size_t i = 0; i < series.size(); ++i)
        for (std::size_t j = i + 1; j < series.size(); ++j)
            dev = std::max(dev, (series[i] - series[j]).norm());
    return dev;
}

inline double momentum_mean_norm(const std::vector<Vec4>& series) {
    double total = 0.0;
    for (const Vec4& m : series) total += m.norm();
    return series.empty() ? 0.0 : total / static_cast<double>(series.size());
}

// Node-centered measurement of the continuum Euler-Lagrange equation:
// grad_x L at the node (with central velocity) minus the divided difference
// of grad_w L at the adjacent midpoints. O(1/N^2) on solver output, O(1) on
// generic paths.
inline std::vector<double> el_residual(const LagrangianSpec& lag, const WorldPath& p) {
    if (lag.model != p.model) throw WrongModel("Lagrangian/path model mismatch");
    require_chords_future(p);
    const int n = p.segments();
    std::vector<double> out(n - 1, 0.0);

    std::vector<Vec4> gw(n);
    for (int i = 0; i < n; ++i) {
        const Vec4 mid = 0.5 * (p.nodes[i] + p.nodes[i + 1]);
        const Vec4 w = p.chord(i) / p.dt(i);
        double value;
        Vec4 dx;
        eval_jet_chart(lag, mid, w, value, dx, gw[i]);
    }
    for (int i = 1; i < n; ++i) {
        const double half_span = 0.5 * (p.grid[i + 1] - p.grid[i - 1]);
        const Vec4 v = (p.nodes[i + 1] - p.nodes[i - 1]) / (2.0 * half_span);
        double value;
        Vec4 dx, dw;
        eval_jet_chart(lag, p.nodes[i], v, value, dx, dw);
        out[i - 1] = (dx - (gw[i] - gw[i - 1]) / half_span).norm();
    }
    return out;
}

// Proper time along a relativistic path: sum of the g-norms of the chords.
inline Quantity proper_time(const WorldPath& p) {
    if (p.model != ModelKind::Relativistic)
        throw WrongModel("proper time is a relativistic quantity");
    require_chords_future(p);
    double total = 0.0;
    for (int i = 0; i < p.segments(); ++i) total += std::sqrt(-chart_g(p.chord(i), p.chord(i)));
    return Quantity{total, dims::second};
}

// Max Euclidean node distance from the straight segment between endpoints.
inline double chord_deviation(const WorldPath& p) {
    const Vec4 d = p.nodes.back() - p.nodes.front();
    const Vec4 u = d / d.norm();
    double dev = 0.0;
    for (const Vec4& node : p.nodes) {
        const Vec4 rel = node - p.nodes.front();
        dev = std::max(dev, (rel - rel.dot(u) * u).norm());
    }
    return dev;
}

// Max pairwise spread of the unit chords (discrete pdot/|pdot|).
inline double unit_chord_deviation(const WorldPath& p) {
    std::vector<Vec4> units(p.segments());
    for (int i = 0; i < p.segments(); ++i) {
        const Vec4 c = p.chord(i);
        units[i] = p.model == ModelKind::Relativistic ? Vec4(c / std::sqrt(-chart_g(c, c)))
                                                      : Vec4(c / c[0]);
    }
    return momentum_deviation(units);
}

// Redistribute nodes to uniform chord norm along the polyline (gauge
// normalization for comparing solutions as point sets).
inline WorldPath resample_uniform(const WorldPath& p) {
    const int n = p.segments();
    std::vector<double> cum(n + 1, 0.0);
    for (int i = 0; i < n; ++i) cum[i + 1] = cum[i] + chord_norm(p.model, p.chord(i));
    WorldPath out = p;
    int seg = 0;
    for (int j = 1; j < n; ++j) {
        const double target = cum[n] * j / n;
        while (seg + 1 < n && cum[seg + 1] < target) ++seg;
        const double local = (target - cum[seg]) / (cum[seg + 1] - cum[seg]);
        out.nodes[j] = (1.0 - local) * p.nodes[seg] + local * p.nodes[seg + 1];
        out.grid[j] = static_cast<double>(j) / n;
    }
    out.grid[0] = 0.0;
    out.grid[n] = 1.0;
    return out;
}

namespace detail {

struct QuadraticModel {
    Eigen::VectorXd grad;
    BlockTridiag hess;
    double value = 0.0;
    explicit QuadraticModel(int m) : grad(Eigen::VectorXd::Zero(4 * m)), hess(m) {}
};

using Dual88 = DualN<8, DualN<8, double>>;

inline void seed8(std::array<Dual88, 8>& q, const Vec4& a, const Vec4& b) {
    for (int k = 0; k < 4; ++k) {
        q[k] = Dual88(DualN<8>::variable(a[k], k));
        q[k].grad[k] = DualN<8>(1.0);
        q[4 + k] = Dual88(DualN<8>::variable(b[k], 4 + k));
        q[4 + k].grad[4 + k] = DualN<8>(1.0);
    }
}

// Gradient and Hessian of the discrete action over interior nodes.
inline QuadraticModel assemble_action(const LagrangianSpec& lag, const std::vector<Vec4>& nodes,
                                      double ds) {
    const int n = static_cast<int>(nodes.size()) - 1;
    QuadraticModel model(n - 1);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        std::array<Dual88, 8> q;
        seed8(q, nodes[i], nodes[i + 1]);
        const Dual88 term = segment_term<Dual88>(lag, q, ds);
        total += scalar_value(term);

        Eigen::Matrix<double, 8, 8> h;
        Eigen::Matrix<double, 8, 1> g;
        for (int r = 0; r < 8; ++r) {
            g[r] = term.grad[r].val;
            for (int c = 0; c < 8; ++c) h(r, c) = term.grad[r].grad[c];
        }
        if (i > 0) {
            model.grad.segment<4>(4 * (i - 1)) += g.head<4>();
            model.hess.diag[i - 1] += h.topLeftCorner<4, 4>();
        }
        if (i < n - 1) {
            model.grad.segment<4>(4 * i) += g.tail<4>();
            model.hess.diag[i] += h.bottomRightCorner<4, 4>();
        }
        if (i > 0 && i < n - 1) model.hess.upper[i - 1] += h.topRightCorner<4, 4>();
    }
    model.value = total;
    return model;
}

// Gradient-only pass for line searches.
inline Eigen::VectorXd action_grad_interior(const LagrangianSpec& lag,
                                            const std::vector<Vec4>& nodes, double ds,
                                            double* value_out = nullptr) {
    const int n = static_cast<int>(nodes.size()) - 1;
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(4 * (n - 1));
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        std::array<Dual8, 8> q;
        for (int k = 0; k < 4; ++k) {
            q[k] = Dual8::variable(nodes[i][k], k);
            q[4 + k] = Dual8::variable(nodes[i + 1][k], 4 + k);
        }
        const Dual8 term = segment_term<Dual8>(lag, q, ds);
        total += term.val;
        if (i > 0)
            for (int k = 0; k < 4; ++k) grad[4 * (i - 1) + k] += term.grad[k];
        if (i < n - 1)
            for (int k = 0; k < 4; ++k) grad[4 * i + k] += term.grad[4 + k];
    }
    if (value_out) *value_out = total;
    return grad;
}

// Chord-norm jet via nested duals: n(c), dn/dc, d2n/dc2.
inline void chord_norm_jet(ModelKind model, const Vec4& c, double& n, Vec4& dn, Mat4& k) {
    using D44 = DualN<4, DualN<4, double>>;
    std::array<D44, 4> cd;
    for (int i = 0; i < 4; ++i) {
        cd[i] = D44(DualN<4>::variable(c[i], i));
        cd[i].grad[i] = DualN<4>(1.0);
    }
    D44 r;
    if (model == ModelKind::NonRelativistic) {
        r = cd[0];
    } else {
        using noelab::sqrt;
        r = sqrt(cd[0] * cd[0] - cd[1] * cd[1] - cd[2] * cd[2] - cd[3] * cd[3]);
    }
    n = scalar_value(r);
    for (int i = 0; i < 4; ++i) {
        dn[i] = r.val.grad[i];
        for (int j = 0; j < 4; ++j) k(i, j) = r.grad[i].grad[j];
    }
}

struct PenaltyModel {
    Eigen::VectorXd grad;
    BlockTridiag hess;            // tridiagonal part
    Eigen::VectorXd rank1;        // subtract rank1 rank1^T from hess
    double value = 0.0;
    explicit PenaltyModel(int m)
        : grad(Eigen::VectorXd::Zero(4 * m)), hess(m), rank1(Eigen::VectorXd::Zero(4 * m)) {}
};

// P = kappa sum_i (|chord_i| - mean)^2; gradient and Hessian over interior
// nodes. The mean coupling contributes one dense rank-1 term, kept separate
// for a Sherman-Morrison solve.
inline PenaltyModel assemble_penalty(ModelKind model, const std::vector<Vec4>& nodes,
                                     double kappa) {
    const int n = static_cast<int>(nodes.size()) - 1;
    PenaltyModel pm(n - 1);

    std::vector<double> norms(n);
    std::vector<Vec4> dns(n);
    std::vector<Mat4> ks(n);
    double mean = 0.0;
    for (int i = 0; i < n; ++i) {
        chord_norm_jet(model, nodes[i + 1] - nodes[i], norms[i], dns[i], ks[i]);
        mean += norms[i];
    }
    mean /= n;

    double value = 0.0;
    Eigen::VectorXd grad_mean = Eigen::VectorXd::Zero(4 * (n - 1));  // sum_i grad n_i
    for (int i = 0; i < n; ++i) {
        const double dev = norms[i] - mean;
        value += kappa * dev * dev;

        // n_i depends on node i (as -dn) and node i+1 (as +dn)
        if (i > 0) {
            pm.grad.segment<4>(4 * (i - 1)) += 2.0 * kappa * dev * (-dns[i]);
            grad_mean.segment<4>(4 * (i - 1)) += -dns[i];
            pm.hess.diag[i - 1] += 2.0 * kappa * (dns[i] * dns[i].transpose() + dev * ks[i]);
        }
        if (i < n - 1) {
            pm.grad.segment<4>(4 * i) += 2.0 * kappa * dev * dns[i];
            grad_mean.segment<4>(4 * i) += dns[i];
            pm.hess.diag[i] += 2.0 * kappa * (dns[i] * dns[i].transpose() + dev * ks[i]);
        }
        if (i > 0 && i < n - 1)
            pm.hess.upper[i - 1] += 2.0 * kappa * (-dns[i] * dns[i].transpose() - dev * ks[i]);
    }
    pm.value = value;
    pm.rank1 = std::sqrt(2.0 * kappa / n) * grad_mean;
    return pm;
}

// ---------------------------------------------------------------------------
// Non-relativistic solves with quadratic phi and spatial coupling reduce
// exactly: stationarity over the node times has the closed-form solution
// dt_i proportional to |dx_i| (equal speeds), which collapses the action to
// R(x) = (m / 2T) L^2 + coupling terms with L the spatial polyline length.
// The reduced system is well conditioned where the raw 4d one has O(1/N^2)
// sliding modes whose Newton basin is narrower than the required tolerance.
// ---------------------------------------------------------------------------

inline bool reducible_nonrel(const LagrangianSpec& lag) {
    if (lag.model != ModelKind::NonRelativistic) return false;
    if (lag.kind == LagrangianSpec::Kind::FreeNonRel) return true;
    if (lag.kind == LagrangianSpec::Kind::CounterexampleB && lag.phi_kind == PhiKind::Free) {
        for (int k = 0; k < 4; ++k)
            if (lag.b(0, k) != 0.0 || lag.b(k, 0) != 0.0) return false;
        return true;
    }
    return false;
}

using Dual66 = DualN<6, DualN<6, double>>;

struct ReducedModel {
    double length = 0.0;
    double coupling = 0.0;
    Eigen::VectorXd grad_length;    // 3 per interior node
    Eigen::VectorXd grad_coupling;
    std::vector<Eigen::Matrix3d> h_diag;   // tridiagonal Hessian of
    std::vector<Eigen::Matrix3d> h_upper;  // L and coupling combined later
    std::vector<Eigen::Matrix3d> hl_diag;
    std::vector<Eigen::Matrix3d> hl_upper;
};

inline bool assemble_reduced(const LagrangianSpec& lag, const std::vector<Eigen::Vector3d>& xs,
                             ReducedModel& out) {
    const int n = static_cast<int>(xs.size()) - 1;
    const int m = n - 1;
    const Eigen::Matrix3d bs = lag.b.block<3, 3>(1, 1);
    out.length = 0.0;
    out.coupling = 0.0;
    out.grad_length = Eigen::VectorXd::Zero(3 * m);
    out.grad_coupling = Eigen::VectorXd::Zero(3 * m);
    out.h_diag.assign(m, Eigen::Matrix3d::Zero());
    out.h_upper.assign(std::max(m - 1, 0), Eigen::Matrix3d::Zero());
    out.hl_diag.assign(m, Eigen::Matrix3d::Zero());
    out.hl_upper.assign(std::max(m - 1, 0), Eigen::Matrix3d::Zero());

    double scale = 0.0;
    for (int i = 0; i < n; ++i) scale = std::max(scale, (xs[i + 1] - xs[i]).norm());

    for (int i = 0; i < n; ++i) {
        std::array<Dual66, 6> q;
        for (int k = 0; k < 3; ++k) {
            q[k] = Dual66(DualN<6>::variable(xs[i][k], k));
            q[k].grad[k] = DualN<6>(1.0);
            q[3 + k] = Dual66(DualN<6>::variable(xs[i + 1][k], 3 + k));
            q[3 + k].grad[3 + k] = DualN<6>(1.0);
        }
        Dual66 len2(0.0);
        for (int k = 0; k < 3; ++k) {
            const Dual66 d = q[3 + k] - q[k];
            len2 += d * d;
        }
        if (scalar_value(len2) < 1e-20 * scale * scale) return false;  // collapsed chord
        using noelab::sqrt;
        const Dual66 len = sqrt(len2);
        Dual66 cp(0.0);
        for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) {
                if (bs(a, b) == 0.0) continue;
                cp += (q[a] + q[3 + a]) * 0.5 * Dual66(bs(a, b)) * (q[3 + b] - q[b]);
            }
        }

        out.length += scalar_value(len);
        out.coupling += scalar_value(cp);
        Eigen::Matrix<double, 6, 1> gl, gc;
        Eigen::Matrix<double, 6, 6> hl, hc;
        for (int r = 0; r < 6; ++r) {
            gl[r] = len.grad[r].val;
            gc[r] = cp.grad[r].val;
            for (int c = 0; c < 6; ++c) {
                hl(r, c) = len.grad[r].grad[c];
                hc(r, c) = cp.grad[r].grad[c];
            }
        }
        if (i > 0) {
            out.grad_length.segment<3>(3 * (i - 1)) += gl.head<3>();
            out.grad_coupling.segment<3>(3 * (i - 1)) += gc.head<3>();
            out.hl_diag[i - 1] += hl.topLeftCorner<3, 3>();
            out.h_diag[i - 1] += hc.topLeftCorner<3, 3>();
        }
        if (i < n - 1) {
            out.grad_length.segment<3>(3 * i) += gl.tail<3>();
            out.grad_coupling.segment<3>(3 * i) += gc.tail<3>();
            out.hl_diag[i] += hl.bottomRightCorner<3, 3>();
            out.h_diag[i] += hc.bottomRightCorner<3, 3>();
        }
        if (i > 0 && i < n - 1) {
            out.hl_upper[i - 1] += hl.topRightCorner<3, 3>();
            out.h_upper[i - 1] += hc.topRightCorner<3, 3>();
        }
    }
    return true;
}

// Newton with a positive rank-1 update (H + u u^T) via Sherman-Morrison.
inline bool solve_reduced_system(const std::vector<Eigen::Matrix3d>& diag,
                                 const std::vector<Eigen::Matrix3d>& upper,
                                 const Eigen::VectorXd& u, const Eigen::VectorXd& rhs,
                                 double shift, Eigen::VectorXd& step) {
    const int m = static_cast<int>(diag.size());
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(18 * m);
    for (int i = 0; i < m; ++i)
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) {
                const double v = diag[i](r, c) + (r == c ? shift : 0.0);
                if (v != 0.0) trip.emplace_back(3 * i + r, 3 * i + c, v);
            }
    for (int i = 0; i + 1 < m; ++i)
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                if (upper[i](r, c) != 0.0) {
                    trip.emplace_back(3 * i + r, 3 * (i + 1) + c, upper[i](r, c));
                    trip.emplace_back(3 * (i + 1) + c, 3 * i + r, upper[i](r, c));
                }
    Eigen::SparseMatrix<double> mat(3 * m, 3 * m);
    mat.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(mat);
    if (lu.info() != Eigen::Success) return false;
    const Eigen::VectorXd hb = lu.solve(rhs);
    const Eigen::VectorXd hu = lu.solve(u);
    const double denom = 1.0 + u.dot(hu);
    if (std::abs(denom) < 1e-14) return false;
    step = -(hb - hu * (u.dot(hb) / denom));
    return step.allFinite();
}

// Minimizes R(x) = (m/2T) L(x)^2 + coupling(x) over interior spatial nodes,
// then assigns node times by the exact stationarity rule dt_i = T l_i / L.
inline bool solve_nonrel_reduced(const LagrangianSpec& lag, WorldPath& path, int max_iterations) {
    const int n = path.segments();
    const int m = n - 1;
    const double total_time = path.nodes[n][0] - path.nodes[0][0];
    const double mt = lag.mass / total_time;

    std::vector<Eigen::Vector3d> xs(n + 1);
    for (int i = 0; i <= n; ++i) xs[i] = path.nodes[i].tail<3>();

    ReducedModel model;
    if (!assemble_reduced(lag, xs, model)) return false;
    auto objective = [&](const ReducedModel& rm) {
        return 0.5 * mt * rm.length * rm.length + rm.coupling;
    };
    auto gradient = [&](const ReducedModel& rm) {
        return Eigen::VectorXd(mt * rm.length * rm.grad_length + rm.grad_coupling);
    };

    double lambda = 0.0;
    for (int iter = 0; iter < max_iterations; ++iter) {
        const double value = objective(model);
        const Eigen::VectorXd grad = gradient(model);
        if (grad.norm() < 1e-12 * (1.0 + std::abs(value))) break;

        // Hessian: mt (L * hess(L) + gradL gradL^T) + hess(coupling)
        std::vector<Eigen::Matrix3d> diag(m), upper(std::max(m - 1, 0));
        for (int i = 0; i < m; ++i) diag[i] = mt * model.length * model.hl_diag[i] + model.h_diag[i];
        for (int i = 0; i + 1 < m; ++i)
            upper[i] = mt * model.length * model.hl_upper[i] + model.h_upper[i];
        const Eigen::VectorXd u = std::sqrt(mt) * model.grad_length;

        double diag_scale = 1.0;
        for (int i = 0; i < m; ++i) diag_scale = std::max(diag_scale, diag[i].cwiseAbs().maxCoeff());

        bool accepted = false;
        for (int attempt = 0; attempt < 30 && !accepted; ++attempt) {
            Eigen::VectorXd step;
            if (!solve_reduced_system(diag, upper, u, grad, lambda * diag_scale, step) ||
                grad.dot(step) > -1e-14 * grad.norm() * step.norm()) {
                lambda = std::max(30.0 * lambda, 1e-8);
                continue;
            }
            double t = 1.0;
            for (int back = 0; back < 30 && !accepted; ++back, t *= 0.5) {
                std::vector<Eigen::Vector3d> trial = xs;
                for (int i = 0; i < m; ++i) trial[i + 1] += t * step.segment<3>(3 * i);
                ReducedModel trial_model;
                if (!assemble_reduced(lag, trial, trial_model)) continue;
                if (objective(trial_model) <= value + 1e-4 * t * grad.dot(step)) {
                    xs = trial;
                    model = trial_model;
                    accepted = true;
                }
            }
            if (!accepted) lambda = std::max(30.0 * lambda, 1e-8);
        }
        if (!accepted) return false;
        lambda *= 0.25;
        if (lambda < 1e-14) lambda = 0.0;
    }

    // exact time assignment: equal speeds along the polyline
    const double t0 = path.nodes[0][0];
    double cum = 0.0;
    for (int i = 0; i <= n; ++i) {
        if (i > 0) cum += (xs[i] - xs[i - 1]).norm();
        if (i > 0 && i < n) path.nodes[i][0] = t0 + total_time * cum / model.length;
        path.nodes[i].tail<3>() = xs[i];
    }
    return true;
}

inline double action_value_raw(const LagrangianSpec& lag, const std::vector<Vec4>& nodes,
                               double ds) {
    const int n = static_cast<int>(nodes.size()) - 1;
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        const Vec4 mid = 0.5 * (nodes[i] + nodes[i + 1]);
        const Vec4 w = (nodes[i + 1] - nodes[i]) / ds;
        total += lagrangian_kernel<double>(lag, to_scalar4<double>(mid), to_scalar4<double>(w)) * ds;
    }
    return total;
}

inline double penalty_value(ModelKind model, const std::vector<Vec4>& nodes, double kappa) {
    const int n = static_cast<int>(nodes.size()) - 1;
    std::vector<double> norms(n);
    double mean = 0.0;
    for (int i = 0; i < n; ++i) {
        norms[i] = chord_norm(model, nodes[i + 1] - nodes[i]);
        mean += norms[i];
    }
    mean /= n;
    double value = 0.0;
    for (int i = 0; i < n; ++i) value += kappa * (norms[i] - mean) * (norms[i] - mean);
    return value;
}

// Relativistic solve: the free action is maximized along world lines and is
// flat along reparameterizations, so the gauge-fixed problem minimizes
// G = -S + penalty (or -S restricted to the complement of the sliding
// directions). Newton with an objective line search; cone-violating steps
// are rejected, not fatal.
inline bool solve_rel_gauged(const LagrangianSpec& lag, WorldPath& path, const SolveOptions& opts,
                             int& iterations) {
    const int n = path.segments();
    const int m = n - 1;
    const double ds = 1.0 / n;
    const bool projection = opts.gauge == GaugeOption::ReparamProjection;
    const double kappa = opts.penalty_kappa;

    auto nodes_valid = [&](const std::vector<Vec4>& nodes) {
        for (int i = 0; i < n; ++i)
            if (!chord_ok(path.model, nodes[i + 1] - nodes[i])) return false;
        return true;
    };
    auto g_value = [&](const std::vector<Vec4>& nodes) {
        double g = -action_value_raw(lag, nodes, ds);
        if (!projection) g += penalty_value(path.model, nodes, kappa);
        return g;
    };

    double lambda = 0.0;
    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        iterations = iter + 1;
        QuadraticModel qm = assemble_action(lag, path.nodes, ds);
        const double s_tol = 1e-9 * (1.0 + std::abs(qm.value));

        BlockTridiag hess(m);
        Eigen::VectorXd grad(4 * m);
        Eigen::VectorXd rank1 = Eigen::VectorXd::Zero(4 * m);
        for (int i = 0; i < m; ++i) {
            hess.diag[i] = -qm.hess.diag[i];
            if (i + 1 < m) hess.upper[i] = -qm.hess.upper[i];
        }
        grad = -qm.grad;
        if (projection) {
            std::vector<Vec4> dirs(m);
            for (int i = 1; i < n; ++i) {
                const Vec4 t = path.nodes[i + 1] - path.nodes[i - 1];
                dirs[i - 1] = t / t.norm();
            }
            double diag_scale = 1.0;
            for (int i = 0; i < m; ++i)
                diag_scale = std::max(diag_scale, hess.diag[i].cwiseAbs().maxCoeff());
            for (int i = 0; i < m; ++i) {
                hess.diag[i] += diag_scale * dirs[i] * dirs[i].transpose();
                auto seg = grad.segment<4>(4 * i);
                seg -= dirs[i].dot(seg) * dirs[i];
            }
        } else {
            const PenaltyModel pm = assemble_penalty(path.model, path.nodes, kappa);
            for (int i = 0; i < m; ++i) {
                hess.diag[i] += pm.hess.diag[i];
                if (i + 1 < m) hess.upper[i] += pm.hess.upper[i];
            }
            grad += pm.grad;
            rank1 = pm.rank1;
        }

        if (qm.grad.norm() < 0.25 * s_tol && grad.norm() < 0.25 * s_tol) return true;

        double diag_scale = 1.0;
        for (int i = 0; i < m; ++i)
            diag_scale = std::max(diag_scale, hess.diag[i].cwiseAbs().maxCoeff());

        const double value0 = g_value(path.nodes);
        bool accepted = false;
        for (int attempt = 0; attempt < 30 && !accepted; ++attempt) {
            Eigen::VectorXd step;
            bool usable = false;
            TridiagSolver ts;
            if (ts.factor(hess, lambda * diag_scale)) {
                if (rank1.squaredNorm() > 0.0) {
                    const Eigen::VectorXd hb = ts.solve(grad);
                    const Eigen::VectorXd hu = ts.solve(rank1);
                    const double denom = 1.0 - rank1.dot(hu);
                    if (std::abs(denom) > 1e-14) {
                        step = -(hb + hu * (rank1.dot(hb) / denom));
                        usable = step.allFinite();
                    }
                } else {
                    step = -ts.solve(grad);
                    usable = step.allFinite();
                }
            }
            // Newton direction must descend on G; otherwise damp harder
            if (usable && grad.dot(step) < -1e-14 * grad.norm() * step.norm()) {
                double t = 1.0;
                for (int back = 0; back < 30 && !accepted; ++back, t *= 0.5) {
                    std::vector<Vec4> trial = path.nodes;
                    for (int i = 0; i < m; ++i) trial[i + 1] += t * Vec4(step.segment<4>(4 * i));
                    if (!nodes_valid(trial)) continue;
                    if (g_value(trial) <= value0 + 1e-4 * t * grad.dot(step)) {
                        path.nodes = trial;
                        accepted = true;
                    }
                }
            }
            if (!accepted) lambda = std::max(30.0 * lambda, 1e-8);
        }
        if (!accepted) return false;
        lambda *= 0.25;
        if (lambda < 1e-14) lambda = 0.0;
    }
    return false;
}

// Generic fallback: Levenberg-Marquardt on the raw stationarity system.
inline bool solve_lm_gradient(const LagrangianSpec& lag, WorldPath& path,
                              const SolveOptions& opts, int& iterations) {
    const int n = path.segments();
    const int m = n - 1;
    const double ds = 1.0 / n;
    auto nodes_valid = [&](const std::vector<Vec4>& nodes) {
        for (int i = 0; i < n; ++i)
            if (!chord_ok(path.model, nodes[i + 1] - nodes[i])) return false;
        return true;
    };

    double action_value = 0.0;
    Eigen::VectorXd grad = action_grad_interior(lag, path.nodes, ds, &action_value);
    const auto tol = [](double a) { return 1e-9 * (1.0 + std::abs(a)); };

    double lambda = 0.0;
    for (int iter = 0; iter < opts.max_iterations; ++iter) {
        if (grad.norm() < 0.25 * tol(action_value)) return true;
        iterations = iter + 1;

        const QuadraticModel qm = assemble_action(lag, path.nodes, ds);
        double diag_scale = 1.0;
        for (int i = 0; i < m; ++i)
            diag_scale = std::max(diag_scale, qm.hess.diag[i].cwiseAbs().maxCoeff());

        const double merit0 = grad.squaredNorm();
        bool accepted = false;
        for (int attempt = 0; attempt < 40 && !accepted; ++attempt) {
            TridiagSolver ts;
            if (ts.factor(qm.hess, lambda * diag_scale)) {
                const Eigen::VectorXd step = -ts.solve(grad);
                if (step.allFinite()) {
                    std::vector<Vec4> trial = path.nodes;
                    for (int i = 0; i < m; ++i) trial[i + 1] += Vec4(step.segment<4>(4 * i));
                    if (nodes_valid(trial)) {
                        double trial_action = 0.0;
                        const Eigen::VectorXd tg =
                            action_grad_interior(lag, trial, ds, &trial_action);
                        if (tg.squaredNorm() < 0.999 * merit0 ||
                            tg.norm() < 0.25 * tol(trial_action)) {
                            path.nodes = trial;
                            action_value = trial_action;
                            grad = tg;
                            accepted = true;
                        }
                    }
                }
            }
            if (!accepted) lambda = std::max(30.0 * lambda, 1e-8);
        }
        if (!accepted) return false;
        lambda *= 0.25;
        if (lambda < 1e-14) lambda = 0.0;
    }
    return grad.norm() < tol(action_value);
}

}  // namespace detail

// Damped Newton on the stationarity system DS = 0, straight-chord initial
// guess, line search rejecting steps whose chords leave the future cone.
// The relativistic reparameterization degeneracy is fixed either by the
// uniform-chord penalty (default) or by projecting out the discrete sliding
// directions.
inline SolveResult solve_stationary(const LagrangianSpec& lag, const Event& x0, const Event& x1,
                                    int n, const SolveOptions& opts = {}) {
    if (n < 8) throw Error("solve_stationary needs N >= 8");
    if (lag.model != x0.model() || lag.model != x1.model())
        throw WrongModel("Lagrangian/endpoint model mismatch");
    if (!chord_ok(lag.model, x1.chart() - x0.chart()))
        throw NotFutureLike("endpoint separation is not future-like");

    WorldPath path = opts.initial ? *opts.initial : WorldPath::straight(x0, x1, n);
    if (opts.initial) {
        if (path.segments() != n || path.model != lag.model)
            throw Error("initial path has wrong size or model");
        require_chords_future(path);
    }
    const double ds = 1.0 / n;

    if (opts.perturb_scale > 0.0) {
        RngStream rng(opts.seed);
        const double scale = opts.perturb_scale * (x1.chart() - x0.chart()).norm() / n;
        std::vector<Vec4> jitter(n - 1);
        for (auto& j : jitter)
            for (int k = 0; k < 4; ++k) j[k] = scale * rng.uniform(-0.5, 0.5);
        for (double damp = 1.0; damp > 1e-6; damp *= 0.5) {
            WorldPath trial = path;
            for (int i = 1; i < n; ++i) trial.nodes[i] += damp * jitter[i - 1];
            bool ok = true;
            for (int i = 0; i < n && ok; ++i) ok = chord_ok(lag.model, trial.chord(i));
            if (ok) {
                path = trial;
                break;
            }
        }
    }

    const auto stationarity_tol = [](double a) { return 1e-9 * (1.0 + std::abs(a)); };

    double action_value = 0.0;
    Eigen::VectorXd grad_s = detail::action_grad_interior(lag, path.nodes, ds, &action_value);

    int iterations = 0;
    if (grad_s.norm() >= 0.25 * stationarity_tol(action_value)) {
        bool converged = false;
        if (lag.model == ModelKind::NonRelativistic && detail::reducible_nonrel(lag)) {
            converged = detail::solve_nonrel_reduced(lag, path, opts.max_iterations);
        } else if (lag.model == ModelKind::Relativistic) {
            converged = detail::solve_rel_gauged(lag, path, opts, iterations);
        }
        if (!converged) converged = detail::solve_lm_gradient(lag, path, opts, iterations);
        grad_s = detail::action_grad_interior(lag, path.nodes, ds, &action_value);
        if (!converged && grad_s.norm() >= stationarity_tol(action_value))
            throw NoConvergence(iterations, grad_s.norm());
    }

    if (grad_s.norm() >= stationarity_tol(action_value))
        throw NoConvergence(iterations, grad_s.norm());

    ActionReport report;
    report.gauge = opts.gauge;
    report.iterations = iterations;
    report.action = action(lag, path);
    report.gradient_norm = action_gradient(lag, path).norm();
    report.el_residuals = el_residual(lag, path);
    report.momentum = momentum_series(lag, path);
    report.momentum_deviation = momentum_deviation(report.momentum);
    report.momentum_mean_norm = momentum_mean_norm(report.momentum);
    return SolveResult{std::move(path), std::move(report)};
}

// ---------------------------------------------------------------------------
// Path CSV dump/load
// ---------------------------------------------------------------------------

inline void dump_path_csv(std::ostream& os, const LagrangianSpec& lag, const WorldPath& p) {
    const std::vector<double> el = el_residual(lag, p);
    const std::vector<Vec4> mom = momentum_series(lag, p);
    os << "s,t,x,y,z,chord_norm,el_residual,mom_t,mom_x,mom_y,mom_z\n";
    const int n = p.segments();
    for (int i = 0; i <= n; ++i) {
        os << format17(p.grid[i]);
        for (int k = 0; k < 4; ++k) os << "," << format17(p.nodes[i][k]);
        const double cn = i < n ? chord_norm(p.model, p.chord(i)) : 0.0;
        const double elr = (i >= 1 && i <= n - 1) ? el[i - 1] : 0.0;
        os << "," << format17(cn) << "," << format17(elr);
        const Vec4 mv = i < n ? mom[i] : Vec4::Zero();
        for (int k = 0; k < 4; ++k) os << "," << format17(mv[k]);
        os << "\n";
    }
}

inline WorldPath load_path_csv(std::istream& is, ModelKind model) {
    WorldPath p;
    p.model = model;
    std::string line;
    if (!std::getline(is, line)) throw ParseError("empty path CSV");
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ss, cell, ',') && row.size() < 5) row.push_back(std::stod(cell));
        if (row.size() < 5) throw ParseError("path CSV row needs s,t,x,y,z");
        p.grid.push_back(row[0]);
        p.nodes.push_back(Vec4{row[1], row[2], row[3], row[4]});
    }
    if (p.nodes.size() < 2) throw ParseError("path CSV has fewer than two nodes");
    return p;
}

}  // namespace noelab
