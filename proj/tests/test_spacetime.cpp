#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "noelab/groups.hpp"
#include "noelab/sampling.hpp"
#include "noelab/spacetime.hpp"

using namespace noelab;

namespace {

Generator random_generator(RngStream& rng, ModelKind model) {
    Generator g;
    g.model = model;
    Eigen::Matrix3d spatial;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) spatial(a, b) = rng.uniform(-1.0, 1.0);
    const Eigen::Matrix3d antisym = 0.5 * (spatial - spatial.transpose());
    g.linear.block<3, 3>(1, 1) = antisym;
    for (int a = 1; a < 4; ++a) {
        g.linear(a, 0) = rng.uniform(-1.0, 1.0);
        if (model == ModelKind::Relativistic) g.linear(0, a) = g.linear(a, 0);
    }
    for (int i = 0; i < 4; ++i) g.translation[i] = rng.uniform(-2.0, 2.0);
    return g;
}

}  // namespace

TEST_CASE("tau projects onto the time slot") {
    const FourVector w = displacement(ModelKind::NonRelativistic, Vec4{3.0, 1.0, 0.0, 0.0});
    CHECK(tau_of(w).value == 3.0);
    CHECK(tau_of(w).dim == dims::second);

    const FourVector spacelike =
        displacement(ModelKind::NonRelativistic, Vec4{0.0, 0.4, -2.0, 1.0});
    CHECK(tau_of(spacelike).value == 0.0);

    const FourVector rel = displacement(ModelKind::Relativistic, Vec4{1.0, 0.0, 0.0, 0.0});
    CHECK_THROWS_AS(tau_of(rel), WrongModel);
}

TEST_CASE("tau is linear") {
    RngStream rng(0xAB);
    for (int i = 0; i < 100; ++i) {
        Vec4 w1, w2;
        for (int k = 0; k < 4; ++k) {
            w1[k] = rng.uniform(-5.0, 5.0);
            w2[k] = rng.uniform(-5.0, 5.0);
        }
        const double a = rng.uniform(-2.0, 2.0), b = rng.uniform(-2.0, 2.0);
        const auto mk = [](const Vec4& v) {
            return displacement(ModelKind::NonRelativistic, v);
        };
        const double lhs = tau_of(mk(a * w1 + b * w2)).value;
        const double rhs = a * tau_of(mk(w1)).value + b * tau_of(mk(w2)).value;
        CHECK(lhs == Catch::Approx(rhs).margin(1e-12));
    }
}

TEST_CASE("b is the Euclidean structure on spacelike vectors") {
    const auto sp = [](double x, double y, double z) {
        return displacement(ModelKind::NonRelativistic, Vec4{0.0, x, y, z});
    };
    CHECK(b_inner(sp(1, 0, 0), sp(1, 0, 0)).value == 1.0);
    CHECK(b_inner(sp(3, 4, 0), sp(3, 4, 0)).value == 25.0);
    CHECK(b_inner(sp(1, 0, 0), sp(1, 0, 0)).dim == dims::meter * dims::meter);

    CHECK_THROWS_AS(
        b_inner(displacement(ModelKind::NonRelativistic, Vec4{1.0, 0, 0, 0}), sp(1, 0, 0)),
        NotSpacelike);

    RngStream rng(0xB0);
    for (int i = 0; i < 100; ++i) {
        const auto e1 = sp(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3));
        const auto e2 = sp(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3));
        CHECK(b_inner(e1, e2).value == b_inner(e2, e1).value);
        if (e1.values.norm() > 0) CHECK(b_inner(e1, e1).value > 0.0);
    }
}

TEST_CASE("g has signature (-,+,+,+)") {
    const auto rel = [](double t, double x, double y, double z) {
        return displacement(ModelKind::Relativistic, Vec4{t, x, y, z});
    };
    CHECK(g_inner(rel(1, 0, 0, 0), rel(1, 0, 0, 0)).value == -1.0);
    // -25 + 9 = -16, reused by the proper-time acceptance test
    CHECK(g_inner(rel(5, 3, 0, 0), rel(5, 3, 0, 0)).value == -16.0);
    CHECK(g_inner(rel(1, 1, 0, 0), rel(1, 1, 0, 0)).value == 0.0);
    CHECK(g_inner(rel(1, 0, 0, 0), rel(1, 0, 0, 0)).dim == dims::second * dims::second);

    CHECK_THROWS_AS(g_inner(displacement(ModelKind::NonRelativistic, Vec4{1, 0, 0, 0}),
                            displacement(ModelKind::NonRelativistic, Vec4{1, 0, 0, 0})),
                    WrongModel);
}

TEST_CASE("normalize_to_V1 lands on V(1)") {
    SECTION("nonrel: divide by tau") {
        const FourVector w = displacement(ModelKind::NonRelativistic, Vec4{2.0, 4.0, 0.0, 0.0});
        const Velocity u = normalize_to_V1(w);
        CHECK(u.chart()[0] == 1.0);
        CHECK(u.chart()[1] == 2.0);
        CHECK(u.v.space_dim == dims::meter_per_second);
        CHECK(u.v.time_dim.is_dimensionless());
    }
    SECTION("rel: divide by the g-norm") {
        // norm of (5,3,0,0) is sqrt(25 - 9) = 4
        const FourVector w = displacement(ModelKind::Relativistic, Vec4{5.0, 3.0, 0.0, 0.0});
        const Velocity u = normalize_to_V1(w);
        CHECK(u.chart()[0] == Catch::Approx(1.25).epsilon(1e-15));
        CHECK(u.chart()[1] == Catch::Approx(0.75).epsilon(1e-15));
        CHECK(chart_g(u.chart(), u.chart()) == Catch::Approx(-1.0).margin(1e-14));
    }
    SECTION("idempotence") {
        RngStream rng(0xC1);
        for (int i = 0; i < 50; ++i) {
            for (ModelKind model : {ModelKind::NonRelativistic, ModelKind::Relativistic}) {
                const Vec4 w = sample_future_direction(rng, model);
                const Velocity u = normalize_to_V1(displacement(model, w));
                const Velocity u2 = normalize_to_V1(u.v);
                CHECK((u2.chart() - u.chart()).norm() < 1e-14);
            }
        }
    }
    SECTION("rejects non-future vectors") {
        CHECK_THROWS_AS(
            normalize_to_V1(displacement(ModelKind::NonRelativistic, Vec4{-1.0, 0, 0, 0})),
            NotFutureLike);
        CHECK_THROWS_AS(
            normalize_to_V1(displacement(ModelKind::Relativistic, Vec4{1.0, 2.0, 0, 0})),
            NotFutureLike);
        // inside the margin band
        CHECK_THROWS_AS(
            normalize_to_V1(displacement(ModelKind::NonRelativistic, Vec4{1e-14, 1.0, 0, 0})),
            NotFutureLike);
    }
}

TEST_CASE("velocity invariants are enforced") {
    CHECK_THROWS_AS(Velocity::from_chart(ModelKind::NonRelativistic, Vec4{0.9, 1.0, 0, 0}),
                    NotFutureLike);
    CHECK_THROWS_AS(Velocity::from_chart(ModelKind::Relativistic, Vec4{1.0, 0.5, 0, 0}),
                    NotFutureLike);
    CHECK_NOTHROW(Velocity::rest(ModelKind::Relativistic));
    CHECK_NOTHROW(FutureVector::checked(displacement(ModelKind::Relativistic, Vec4{2, 1, 0, 0})));
    CHECK_THROWS_AS(FutureVector::checked(displacement(ModelKind::Relativistic, Vec4{1, 2, 0, 0})),
                    NotFutureLike);
}

TEST_CASE("events subtract to four-vectors of the same model") {
    const Event a(ModelKind::NonRelativistic, Vec4{1.0, 2.0, 3.0, 4.0});
    const Event b(ModelKind::NonRelativistic, Vec4{0.5, 1.0, 1.0, 1.0});
    const FourVector d = a - b;
    CHECK((d.values - Vec4{0.5, 1.0, 2.0, 3.0}).norm() == 0.0);
    CHECK(d.time_dim == dims::second);
    CHECK(d.space_dim == dims::meter);
    const Event c = b + d;
    CHECK((c.chart() - a.chart()).norm() == 0.0);
}

TEST_CASE("covariance: Galilean maps preserve tau, Lorentz maps preserve g") {
    RngStream rng(0xC0FFEE);
    for (int trial = 0; trial < 40; ++trial) {
        const AffineMap gal =
            exp_generator(random_generator(rng, ModelKind::NonRelativistic), rng.uniform(-1, 1));
        const AffineMap lor =
            exp_generator(random_generator(rng, ModelKind::Relativistic), rng.uniform(-1, 1));

        Vec4 w1, w2;
        for (int k = 0; k < 4; ++k) {
            w1[k] = rng.uniform(-3.0, 3.0);
            w2[k] = rng.uniform(-3.0, 3.0);
        }
        CHECK(std::abs(chart_tau(gal.linear * w1) - chart_tau(w1)) < 1e-12 * (1 + w1.norm()));

        const double before = chart_g(w1, w2);
        const double after = chart_g(lor.linear * w1, lor.linear * w2);
        CHECK(std::abs(after - before) < 1e-12 * (1.0 + std::abs(before)));
    }
}
