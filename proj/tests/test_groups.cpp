#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "noelab/groups.hpp"
#include "noelab/sampling.hpp"

using namespace noelab;

namespace {

Generator random_generator(RngStream& rng, ModelKind model, bool with_translation = true) {
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
    if (with_translation)
        for (int i = 0; i < 4; ++i) g.translation[i] = rng.uniform(-2.0, 2.0);
    return g;
}

// Closed-form oracles, built independently of the series code.
Mat4 closed_form_rotation(int axis, double angle) {
    Mat4 m = Mat4::Identity();
    const int b = axis % 3 + 1, c = (axis + 1) % 3 + 1;
    m(b, b) = std::cos(angle);
    m(c, c) = std::cos(angle);
    m(b, c) = -std::sin(angle);
    m(c, b) = std::sin(angle);
    return m;
}

Mat4 closed_form_boost(int axis, double rapidity) {
    Mat4 m = Mat4::Identity();
    m(0, 0) = std::cosh(rapidity);
    m(axis, axis) = std::cosh(rapidity);
    m(0, axis) = std::sinh(rapidity);
    m(axis, 0) = std::sinh(rapidity);
    return m;
}

}  // namespace

TEST_CASE("exponential of a pure translation truncates") {
    Generator h = translation_generator(ModelKind::NonRelativistic, Vec4{1.0, 2.0, 0.0, 0.0});
    const AffineMap l = exp_generator(h, 1.0);
    CHECK((l.linear - Mat4::Identity()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((l.translation - Vec4{1.0, 2.0, 0.0, 0.0}).norm() == 0.0);

    const AffineMap l2 = exp_generator(h, 2.0);
    CHECK((l2.translation - Vec4{2.0, 4.0, 0.0, 0.0}).norm() == 0.0);
}

TEST_CASE("series exponential matches closed-form rotations and boosts") {
    SECTION("z-rotation by pi/2") {
        const AffineMap l =
            exp_generator(rotation_generator(ModelKind::NonRelativistic, 3), M_PI / 2);
        const Mat4 expected = closed_form_rotation(3, M_PI / 2);
        CHECK((l.linear - expected).cwiseAbs().maxCoeff() < 1e-15);
        CHECK(l.linear(0, 0) == 1.0);  // time column untouched
        CHECK(l.translation.norm() == 0.0);
    }
    SECTION("all axes, random angles") {
        RngStream rng(0x40);
        for (int i = 0; i < 30; ++i) {
            const int axis = 1 + rng.uniform_int(3);
            const double s = rng.uniform(-3.0, 3.0);
            for (ModelKind model : {ModelKind::NonRelativistic, ModelKind::Relativistic}) {
                const AffineMap l = exp_generator(rotation_generator(model, axis), s);
                CHECK((l.linear - closed_form_rotation(axis, s)).cwiseAbs().maxCoeff() < 1e-13);
            }
        }
    }
    SECTION("relativistic boost, rapidity 0.5") {
        const AffineMap l = exp_generator(boost_generator(ModelKind::Relativistic, 1), 0.5);
        CHECK((l.linear - closed_form_boost(1, 0.5)).cwiseAbs().maxCoeff() < 1e-15);
    }
    SECTION("random rapidities") {
        RngStream rng(0x41);
        for (int i = 0; i < 30; ++i) {
            const int axis = 1 + rng.uniform_int(3);
            const double s = rng.uniform(-2.0, 2.0);
            const AffineMap l = exp_generator(boost_generator(ModelKind::Relativistic, axis), s);
            CHECK((l.linear - closed_form_boost(axis, s)).cwiseAbs().maxCoeff() < 1e-13);
        }
    }
    SECTION("nonrel boost is a shear") {
        const AffineMap l = exp_generator(boost_generator(ModelKind::NonRelativistic, 2), 0.7);
        Mat4 expected = Mat4::Identity();
        expected(2, 0) = 0.7;
        CHECK((l.linear - expected).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("membership in the proper groups") {
    CHECK(is_member(AffineMap::identity(ModelKind::NonRelativistic)));
    CHECK(is_member(AffineMap::identity(ModelKind::Relativistic)));

    // proper groups exclude space inversion
    AffineMap reflect = AffineMap::identity(ModelKind::NonRelativistic);
    reflect.linear = Mat4::Identity();
    reflect.linear(1, 1) = -1.0;
    CHECK_FALSE(is_member(reflect));
    reflect.model = ModelKind::Relativistic;
    CHECK_FALSE(is_member(reflect));

    // time reversal has det +1 but flips the future cone
    AffineMap timerev = AffineMap::identity(ModelKind::Relativistic);
    timerev.linear = Mat4::Identity();
    timerev.linear(0, 0) = -1.0;
    timerev.linear(1, 1) = -1.0;
    CHECK_FALSE(is_member(timerev));
}

TEST_CASE("exponentials of valid generators are group members") {
    RngStream rng(0x42);
    for (ModelKind model : {ModelKind::NonRelativistic, ModelKind::Relativistic}) {
        for (int i = 0; i < 100; ++i) {
            const Generator h = random_generator(rng, model);
            const AffineMap l = exp_generator(h, rng.uniform(-1.5, 1.5));
            CHECK(is_member(l));
            CHECK(std::abs(l.linear.determinant() - 1.0) < 1e-10);
        }
    }
}

TEST_CASE("one-parameter subgroup law") {
    RngStream rng(0x43);
    for (ModelKind model : {ModelKind::NonRelativistic, ModelKind::Relativistic}) {
        for (int i = 0; i < 40; ++i) {
            const Generator h = random_generator(rng, model);
            const double s = rng.uniform(-1.0, 1.0), t = rng.uniform(-1.0, 1.0);
            const AffineMap whole = exp_generator(h, s + t);
            const AffineMap split = compose(exp_generator(h, s), exp_generator(h, t));
            CHECK((whole.linear - split.linear).cwiseAbs().maxCoeff() < 1e-10);
            CHECK((whole.translation - split.translation).norm() < 1e-10);
        }
    }
}

TEST_CASE("exp_generator rejects algebra violations") {
    Generator bad;
    bad.model = ModelKind::NonRelativistic;
    bad.linear(1, 2) = 1.0;
    bad.linear(2, 1) = 1.0;  // symmetric spatial block
    CHECK_THROWS_AS(exp_generator(bad, 1.0), AlgebraViolation);

    Generator bad_tau;
    bad_tau.model = ModelKind::NonRelativistic;
    bad_tau.linear(0, 1) = 1.0;  // tau . H != 0
    CHECK_THROWS_AS(exp_generator(bad_tau, 1.0), AlgebraViolation);

    Generator bad_rel;
    bad_rel.model = ModelKind::Relativistic;
    bad_rel.linear(0, 1) = 1.0;
    bad_rel.linear(1, 0) = -1.0;  // g-symmetric, not g-antisymmetric
    CHECK_THROWS_AS(exp_generator(bad_rel, 1.0), AlgebraViolation);
}

TEST_CASE("standard basis spans the ten-dimensional algebra") {
    for (ModelKind model : {ModelKind::NonRelativistic, ModelKind::Relativistic}) {
        const auto basis = standard_basis(model);
        REQUIRE(basis.size() == 10);
        for (const Generator& g : basis) CHECK(algebra_violation(g) == 0.0);

        Eigen::MatrixXd stacked(10, 20);
        for (int i = 0; i < 10; ++i) stacked.row(i) = vectorize_generator(basis[i]).transpose();
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(stacked);
        const double sigma_max = svd.singularValues()[0];
        int rank = 0;
        for (int i = 0; i < svd.singularValues().size(); ++i)
            if (svd.singularValues()[i] > 1e-8 * sigma_max) ++rank;
        CHECK(rank == 10);
    }
}

TEST_CASE("commutators of basis linear parts re-expand in the basis") {
    // structure constants fitted numerically; closure residual < 1e-10
    for (ModelKind model : {ModelKind::NonRelativistic, ModelKind::Relativistic}) {
        const auto basis = standard_basis(model);
        Eigen::MatrixXd lin_parts(16, 10);
        for (int k = 0; k < 10; ++k) {
            const Generator& g = basis[k];
            for (int i = 0; i < 4; ++i)
                for (int j = 0; j < 4; ++j) lin_parts(4 * i + j, k) = g.linear(i, j);
        }
        const auto lstsq = lin_parts.colPivHouseholderQr();
        for (int a = 0; a < 10; ++a) {
            for (int b = a + 1; b < 10; ++b) {
                const Mat4 comm = commutator(basis[a].linear, basis[b].linear);
                Eigen::VectorXd target(16);
                for (int i = 0; i < 4; ++i)
                    for (int j = 0; j < 4; ++j) target[4 * i + j] = comm(i, j);
                const Eigen::VectorXd coeffs = lstsq.solve(target);
                const double residual = (lin_parts * coeffs - target).norm();
                CHECK(residual < 1e-10);
            }
        }
    }
}

TEST_CASE("affine and linear actions") {
    const Event x(ModelKind::NonRelativistic, Vec4{1.0, 2.0, 3.0, 4.0});
    const FourVector w = displacement(ModelKind::NonRelativistic, Vec4{1.0, 1.0, 0.0, 0.0});

    SECTION("identity acts trivially") {
        const AffineMap id = AffineMap::identity(ModelKind::NonRelativistic);
        CHECK((apply_affine(id, x).chart() - x.chart()).norm() == 0.0);
        CHECK((apply_linear(id, w).values - w.values).norm() == 0.0);
    }
    SECTION("translations move events, not vectors") {
        AffineMap tr = AffineMap::identity(ModelKind::NonRelativistic);
        tr.translation = Vec4{1.0, -1.0, 0.0, 2.0};
        CHECK((apply_affine(tr, x).chart() - (x.chart() + tr.translation)).norm() == 0.0);
        CHECK((apply_linear(tr, w).values - w.values).norm() == 0.0);
    }
    SECTION("the linear action is the difference of the affine action") {
        RngStream rng(0x44);
        const AffineMap l =
            exp_generator(random_generator(rng, ModelKind::NonRelativistic), 0.8);
        const Event a(ModelKind::NonRelativistic, Vec4{0.3, -1.0, 2.0, 0.5});
        const Event b(ModelKind::NonRelativistic, Vec4{1.1, 0.4, -0.6, 2.5});
        const Vec4 lhs = apply_linear(l, a - b).values;
        const Vec4 rhs = apply_affine(l, a).chart() - apply_affine(l, b).chart();
        CHECK((lhs - rhs).norm() < 1e-12);
    }
    SECTION("boosts keep relativistic velocities on V(1)") {
        RngStream rng(0x45);
        for (int i = 0; i < 20; ++i) {
            const Velocity u = normalize_to_V1(
                displacement(ModelKind::Relativistic, sample_future_direction(rng, ModelKind::Relativistic)));
            const AffineMap boost = exp_generator(
                boost_generator(ModelKind::Relativistic, 1 + rng.uniform_int(3)), rng.uniform(-1, 1));
            const FourVector moved = apply_linear(boost, u.v);
            CHECK(std::abs(chart_g(moved.values, moved.values) + 1.0) < 1e-12);
            CHECK_NOTHROW(Velocity::checked(moved));
        }
    }
    SECTION("model mismatch is an error") {
        const AffineMap id = AffineMap::identity(ModelKind::Relativistic);
        CHECK_THROWS_AS(apply_affine(id, x), WrongModel);
        CHECK_THROWS_AS(apply_linear(id, w), WrongModel);
    }
}
