// scratch: rel penalty-gauge trace
#include <cstdio>

#include "noelab/variational.hpp"

using namespace noelab;

int main() {
    const auto lag = LagrangianSpec::free_rel(Quantity{1.0, dims::per_second});
    const Event x0(ModelKind::Relativistic, Vec4::Zero());
    const Event x1(ModelKind::Relativistic, Vec4{7.0, 2.0, 1.0, -0.5});
    const int n = 32;
    const double ds = 1.0 / n;
    const int m = n - 1;
    const double kappa = 1e3;

    WorldPath path = WorldPath::straight(x0, x1, n);
    {  // same perturbation as the test
        RngStream rng(0x5EED);
        const double scale = 0.2 * (x1.chart() - x0.chart()).norm() / n;
        for (int i = 1; i < n; ++i)
            for (int k = 0; k < 4; ++k) path.nodes[i][k] += scale * rng.uniform(-0.5, 0.5);
        require_chords_future(path);
    }

    auto total_grad = [&](const std::vector<Vec4>& nodes) {
        Eigen::VectorXd g = detail::action_grad_interior(lag, nodes, ds);
        g += detail::assemble_penalty(lag.model, nodes, kappa).grad;
        return g;
    };

    double lambda = 0.0;
    for (int iter = 0; iter < 40; ++iter) {
        const Eigen::VectorXd gs = detail::action_grad_interior(lag, path.nodes, ds);
        const Eigen::VectorXd gt = total_grad(path.nodes);
        std::printf("iter %2d: |gS| = %.3e  |gtot| = %.3e  lambda=%.1e\n", iter, gs.norm(),
                    gt.norm(), lambda);
        if (gt.norm() < 1e-10) break;

        detail::QuadraticModel qm = detail::assemble_action(lag, path.nodes, ds);
        const detail::PenaltyModel pm = detail::assemble_penalty(lag.model, path.nodes, kappa);
        for (int i = 0; i < m; ++i) {
            qm.hess.diag[i] += pm.hess.diag[i];
            if (i + 1 < m) qm.hess.upper[i] += pm.hess.upper[i];
        }
        Eigen::VectorXd rhs = qm.grad + pm.grad;
        const Eigen::VectorXd u = pm.rank1;

        double diag_scale = 1.0;
        for (int i = 0; i < m; ++i)
            diag_scale = std::max(diag_scale, qm.hess.diag[i].cwiseAbs().maxCoeff());

        bool accepted = false;
        for (int attempt = 0; attempt < 30 && !accepted; ++attempt) {
            TridiagSolver ts;
            if (!ts.factor(qm.hess, lambda * diag_scale)) {
                std::printf("   factor fail at lambda=%.1e\n", lambda);
                lambda = std::max(30.0 * lambda, 1e-8);
                continue;
            }
            const Eigen::VectorXd hb = ts.solve(rhs);
            const Eigen::VectorXd hu = ts.solve(u);
            const double denom = 1.0 - u.dot(hu);
            Eigen::VectorXd step = -(hb + hu * (u.dot(hb) / denom));
            // check linear-system residual including rank-1 part
            Eigen::VectorXd hs = qm.hess.multiply(step);
            for (int i = 0; i < m; ++i) hs.segment<4>(4 * i) += lambda * diag_scale * step.segment<4>(4 * i);
            hs -= u * u.dot(step);
            std::printf("   lambda=%.1e |step|=%.2e sm_denom=%.2e linres=%.2e\n", lambda,
                        step.norm(), denom, (hs + rhs).norm());

            std::vector<Vec4> trial = path.nodes;
            for (int i = 0; i < m; ++i) trial[i + 1] += Vec4(step.segment<4>(4 * i));
            bool ok = true;
            for (int i = 0; i < n && ok; ++i) ok = chord_ok(lag.model, trial[i + 1] - trial[i]);
            if (ok) {
                const Eigen::VectorXd tg = total_grad(trial);
                std::printf("      -> |gtot| %.3e\n", tg.norm());
                if (tg.squaredNorm() < 0.999 * gt.squaredNorm()) {
                    path.nodes = trial;
                    accepted = true;
                    break;
                }
            } else {
                std::printf("      -> cone reject\n");
            }
            lambda = std::max(30.0 * lambda, 1e-8);
        }
        if (!accepted) {
            std::printf("   STUCK\n");
            return 1;
        }
        lambda *= 0.25;
        if (lambda < 1e-14) lambda = 0.0;
    }
    return 0;
}
