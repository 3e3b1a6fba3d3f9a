#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <sstream>

#include "noelab/symmetry.hpp"

using namespace noelab;

namespace {

Mat4 spatial_coupling(double bx, double by, double bz) {
    Mat4 b = Mat4::Zero();
    b(1, 2) = bz;
    b(2, 1) = -bz;
    b(2, 3) = bx;
    b(3, 2) = -bx;
    b(3, 1) = by;
    b(1, 3) = -by;
    return b;
}

LagrangianSpec counterexample(double bx, double by, double bz) {
    return LagrangianSpec::counterexample_b(Event(ModelKind::NonRelativistic, Vec4::Zero()),
                                            spatial_coupling(bx, by, bz));
}

AffineMap noether_boost(const Vec4& v) {
    Generator g;
    g.model = ModelKind::NonRelativistic;
    for (int a = 1; a < 4; ++a) g.linear(a, 0) = v[a];
    return exp_generator(g, 1.0);
}

AffineMap pure_translation(ModelKind model, const Vec4& a) {
    AffineMap map = AffineMap::identity(model);
    map.translation = a;
    return map;
}

}  // namespace

TEST_CASE("boost acting on the free Lagrangian shifts the center velocity") {
    const Quantity m{0.8, dims::mass};
    const Velocity c = Velocity::from_chart(ModelKind::NonRelativistic, Vec4{1, 0.2, -0.1, 0.4});
    const auto lag = LagrangianSpec::free_nonrel(m, c);
    const Vec4 v{0.0, 0.5, -0.3, 0.2};
    const AffineMap boost = noether_boost(v);

    const SymmetryVerdict verdict = check_finite_symmetry(lag, boost);
    CHECK(verdict.status == SymmetryStatus::UpToFullTimeDerivative);

    // Delta on V(1) is m (u - c) . v + m |v|^2 / 2
    RngStream rng(0x90);
    for (int i = 0; i < 25; ++i) {
        const Velocity u = normalize_to_V1(displacement(
            ModelKind::NonRelativistic, sample_future_direction(rng, ModelKind::NonRelativistic)));
        Vec4 x;
        for (int k = 0; k < 4; ++k) x[k] = rng.uniform(-5, 5);
        const Event ev(ModelKind::NonRelativistic, x);
        const double delta = eval(lag, apply_affine(boost, ev), apply_linear(boost, u.v)).value -
                             eval(lag, ev, u).value;
        double expected = 0.0;
        for (int a = 1; a < 4; ++a)
            expected += m.value * ((u.chart()[a] - c.chart()[a]) * v[a] + 0.5 * v[a] * v[a]);
        CHECK(delta == Catch::Approx(expected).margin(1e-12));
    }

    // and the two Lagrangians are equivalent
    const Velocity c_shift =
        Velocity::from_chart(ModelKind::NonRelativistic, Vec4(c.chart() - v));
    CHECK(are_equivalent(lag, LagrangianSpec::free_nonrel(m, c_shift)));
}

TEST_CASE("counterexample is translation symmetric with constant witness") {
    const auto lag = counterexample(0.2, -0.4, 0.3);
    const Vec4 a{1.5, -2.0, 0.7, 0.4};
    const SymmetryVerdict verdict =
        check_finite_symmetry(lag, pure_translation(ModelKind::NonRelativistic, a));
    REQUIRE(verdict.status == SymmetryStatus::UpToFullTimeDerivative);

    // witness is the constant covector a . B
    const Vec4 expected = lag.b.transpose() * a;
    for (const Vec4& probe : {Vec4{0, 0, 0, 0}, Vec4{3, -1, 2, 5}, Vec4{-4, 2, 0, 1}}) {
        CHECK((verdict.witness(probe) - expected).norm() < 1e-10);
    }
}

TEST_CASE("free relativistic Lagrangian is exactly Poincare invariant") {
    const auto lag = LagrangianSpec::free_rel(Quantity{1.1, dims::per_second});
    RngStream rng(0x91);
    for (int i = 0; i < 10; ++i) {
        const Generator h = random_algebra_element(rng, ModelKind::Relativistic);
        const SymmetryVerdict verdict =
            check_finite_symmetry(lag, exp_generator(h, rng.uniform(-1, 1)));
        CHECK(verdict.status == SymmetryStatus::ExactInvariance);
        // exact invariance is the zero-witness case of a full time-derivative
        CHECK(verdict.witness_norm < 1e-10);
    }
}

TEST_CASE("infinitesimal statuses for the free non-relativistic Lagrangian") {
    const Quantity m{1.0, dims::mass};
    const Velocity c = Velocity::from_chart(ModelKind::NonRelativistic, Vec4{1, 0.3, 0.1, -0.2});
    const auto lag = LagrangianSpec::free_nonrel(m, c);
    const auto basis = standard_basis(ModelKind::NonRelativistic);

    for (int k = 0; k < 4; ++k) {
        const SymmetryVerdict v = check_infinitesimal_symmetry(lag, basis[k]);
        CHECK(v.status == SymmetryStatus::ExactInvariance);  // no x dependence
    }
    for (int k = 7; k < 10; ++k) {
        const SymmetryVerdict v = check_infinitesimal_symmetry(lag, basis[k]);
        CHECK(v.status == SymmetryStatus::UpToFullTimeDerivative);
        CHECK(v.witness_norm > 1e-3);  // boosts pick up a nonzero witness
    }
}

TEST_CASE("zero generator is an exact symmetry of anything") {
    Generator zero;
    zero.model = ModelKind::NonRelativistic;
    const SymmetryVerdict v = check_infinitesimal_symmetry(counterexample(0.1, 0.2, 0.3), zero);
    CHECK(v.status == SymmetryStatus::ExactInvariance);
}

TEST_CASE("non-commuting rotation breaks the counterexample") {
    // B along z: rotations about x do not commute with it and must fail
    const auto lag = counterexample(0.0, 0.0, 0.35);
    const SymmetryVerdict bad =
        check_infinitesimal_symmetry(lag, rotation_generator(ModelKind::NonRelativistic, 1));
    CHECK(bad.status == SymmetryStatus::NotASymmetry);

    // the rotation about the coupling axis commutes and stays a symmetry
    const SymmetryVerdict good =
        check_infinitesimal_symmetry(lag, rotation_generator(ModelKind::NonRelativistic, 3));
    CHECK(good.is_symmetry());
}

TEST_CASE("finite and infinitesimal verdicts agree on the built-ins") {
    std::vector<LagrangianSpec> family;
    family.push_back(LagrangianSpec::free_nonrel(
        Quantity{0.8, dims::mass},
        Velocity::from_chart(ModelKind::NonRelativistic, Vec4{1, 0.3, -0.2, 0.5})));
    family.push_back(counterexample(0.0, 0.0, 0.35));
    family.push_back(LagrangianSpec::free_rel(Quantity{1.2, dims::per_second}));

    for (const auto& lag : family) {
        const auto basis = standard_basis(lag.model);
        for (std::size_t k = 0; k < basis.size(); ++k) {
            const SymmetryStatus inf_status = check_infinitesimal_symmetry(lag, basis[k]).status;
            for (double s : {1e-3, 1e-2}) {
                const SymmetryStatus fin_status =
                    check_finite_symmetry(lag, exp_generator(basis[k], s)).status;
                CHECK(fin_status == inf_status);
            }
        }
    }
}

TEST_CASE("equivalent Lagrangians share symmetry verdicts") {
    const Quantity m{0.9, dims::mass};
    const auto l1 = LagrangianSpec::free_nonrel(
        m, Velocity::from_chart(ModelKind::NonRelativistic, Vec4{1, 0.4, 0.0, -0.1}));
    const auto l2 = LagrangianSpec::free_nonrel(
        m, Velocity::from_chart(ModelKind::NonRelativistic, Vec4{1, -0.2, 0.3, 0.2}));
    REQUIRE(are_equivalent(l1, l2));
    const auto basis = standard_basis(ModelKind::NonRelativistic);
    for (const auto& h : basis) {
        CHECK(check_infinitesimal_symmetry(l1, h).status ==
              check_infinitesimal_symmetry(l2, h).status);
    }
}

TEST_CASE("certification reports") {
    CertifyOptions opts;
    opts.random_finite = 6;  // keep the unit test quick

    SECTION("free nonrel passes every direction") {
        const auto report = certify_free(
            LagrangianSpec::free_nonrel(Quantity{1.0, dims::mass},
                                        Velocity::rest(ModelKind::NonRelativistic)),
            opts);
        REQUIRE(report.records.size() == 16);
        CHECK(report.all_symmetric());
    }
    SECTION("counterexample passes translations, fails a rotation") {
        const auto report = certify_free(counterexample(0.2, -0.4, 0.3), opts);
        for (int k = 0; k < 4; ++k)
            CHECK(report.records[k].status != SymmetryStatus::NotASymmetry);
        bool rotation_fails = false;
        for (int k = 4; k < 7; ++k)
            rotation_fails |= report.records[k].status == SymmetryStatus::NotASymmetry;
        CHECK(rotation_fails);
        CHECK_FALSE(report.all_symmetric());
    }
    SECTION("free rel is exactly invariant in every direction") {
        const auto report =
            certify_free(LagrangianSpec::free_rel(Quantity{1.0, dims::per_second}), opts);
        CHECK(report.all_exact());
    }
    SECTION("reports serialize with seeds") {
        const auto report = certify_free(
            LagrangianSpec::free_nonrel(Quantity{1.0, dims::mass},
                                        Velocity::rest(ModelKind::NonRelativistic)),
            opts);
        std::ostringstream text, csv;
        report.write_text(text);
        report.write_csv(csv);
        CHECK(text.str().find("t0: exact") != std::string::npos);
        CHECK(csv.str().find("generator,status,lin_residual,curl_residual,witness_norm,seed") == 0);
        CHECK(csv.str().find("boost1,ftd") != std::string::npos);
    }
}

TEST_CASE("symmetry argument validation") {
    const auto lag = LagrangianSpec::free_nonrel(Quantity{1.0, dims::mass},
                                                 Velocity::rest(ModelKind::NonRelativistic));
    AffineMap scaling = AffineMap::identity(ModelKind::NonRelativistic);
    scaling.linear(1, 1) = 2.0;
    CHECK_THROWS_AS(check_finite_symmetry(lag, scaling), NotAGroupElement);

    CHECK_THROWS_AS(check_finite_symmetry(lag, AffineMap::identity(ModelKind::Relativistic)),
                    WrongModel);

    Generator bad;
    bad.model = ModelKind::NonRelativistic;
    bad.linear(1, 2) = 0.3;
    bad.linear(2, 1) = 0.3;
    CHECK_THROWS_AS(check_infinitesimal_symmetry(lag, bad), AlgebraViolation);
}
