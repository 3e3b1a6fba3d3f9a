// scratch: LM trace on the counterexample solve
#include <cstdio>

#include "noelab/variational.hpp"

using namespace noelab;

int main() {
    Mat4 b = Mat4::Zero();
    b(1, 2) = 0.25;
    b(2, 1) = -0.25;
    const auto lag = LagrangianSpec::counterexample_b(
        Event(ModelKind::NonRelativistic, Vec4::Zero()), b, PhiKind::Free,
        Quantity{1.0, dims::mass});
    const Event x0(ModelKind::NonRelativistic, Vec4{0.0, 1.0, 0.0, 0.5});
    const Event x1(ModelKind::NonRelativistic, Vec4{5.0, 2.0, 1.5, 0.0});
    const int n = 200;
    const double ds = 1.0 / n;
    const int m = n - 1;

    WorldPath path = WorldPath::straight(x0, x1, n);

    double lambda = 0.0;
    for (int iter = 0; iter < 60; ++iter) {
        double s_val = 0.0;
        Eigen::VectorXd g = detail::action_grad_interior(lag, path.nodes, ds, &s_val);
        std::printf("iter %2d: |g| = %.3e  lambda = %.1e\n", iter, g.norm(), lambda);
        if (g.norm() < 1e-9 * (1 + std::abs(s_val))) {
            std::printf("converged\n");
            return 0;
        }

        detail::QuadraticModel qm = detail::assemble_action(lag, path.nodes, ds);
        double diag_scale = 1.0;
        for (int i = 0; i < m; ++i)
            diag_scale = std::max(diag_scale, qm.hess.diag[i].cwiseAbs().maxCoeff());

        bool accepted = false;
        for (int attempt = 0; attempt < 40 && !accepted; ++attempt) {
            TridiagSolver ts;
            if (!ts.factor(qm.hess, lambda * diag_scale)) {
                lambda = std::max(30.0 * lambda, 1e-8);
                continue;
            }
            Eigen::VectorXd step = -ts.solve(qm.grad);
            std::vector<Vec4> trial = path.nodes;
            for (int i = 0; i < m; ++i) trial[i + 1] += Vec4(step.segment<4>(4 * i));
            bool ok = true;
            for (int i = 0; i < n && ok; ++i) ok = chord_ok(lag.model, trial[i + 1] - trial[i]);
            if (ok) {
                const Eigen::VectorXd gt = detail::action_grad_interior(lag, trial, ds);
                if (gt.squaredNorm() < 0.999 * g.squaredNorm()) {
                    std::printf("   accept |step|=%.2e -> |g|=%.3e (lambda %.1e)\n", step.norm(),
                                gt.norm(), lambda);
                    path.nodes = trial;
                    accepted = true;
                    break;
                }
                std::printf("   reject |step|=%.2e -> |g|=%.3e (lambda %.1e)\n", step.norm(),
                            gt.norm(), lambda);
            } else {
                std::printf("   cone-reject |step|=%.2e (lambda %.1e)\n", step.norm(), lambda);
            }
            lambda = std::max(30.0 * lambda, 1e-8);
        }
        if (!accepted) {
            std::printf("   stuck\n");
            return 1;
        }
        lambda *= 0.25;
        if (lambda < 1e-14) lambda = 0.0;
    }
    return 0;
}
