#include <doctest.h>

#include <cmath>

#include "scapre/error.hpp"
#include "scapre/stabilizer.hpp"
#include "test_support.hpp"

using namespace scapre;
using scapre::testing::Gen;
using scapre::testing::min_eigenvalue;

namespace {

// 1 - 1/(1+e^-x), written the long way round on purpose
double gate_ref(double x) { return (1.0 - 1.0 / (1.0 + std::exp(-x))) * x; }

ContextFeatureSet random_context(Gen& g, int concepts, int tokens, Eigen::Index d) {
    std::vector<std::vector<Vector>> groups(static_cast<std::size_t>(concepts));
    for (auto& grp : groups)
        for (int t = 0; t < tokens; ++t) grp.push_back(g.vector(d));
    return ContextFeatureSet(std::move(groups));
}

}  // namespace

TEST_CASE("ContextFeatureSet and ConceptMatrix validation") {
    CHECK_THROWS_AS(ContextFeatureSet(std::vector<std::vector<Vector>>{}), ConfigError);
    CHECK_THROWS_AS(ContextFeatureSet(std::vector<std::vector<Vector>>(1)), ConfigError);
    CHECK_THROWS_AS(ContextFeatureSet({{Vector::Ones(2), Vector::Ones(3)}}), ConfigError);
    CHECK_THROWS_AS(ConceptMatrix(Matrix::Zero(3, 1)), ConfigError);
    CHECK(ConceptMatrix::empty(4).count() == 0);
}

TEST_CASE("build_s") {
    SUBCASE("single token") {
        const Matrix s = build_s(ContextFeatureSet({{Vector{{1.0, 0.0}}}}));
        CHECK(s == Matrix{{1.0, 0.0}, {0.0, 0.0}});
    }
    SUBCASE("orthonormal pair") {
        const Matrix s = build_s(ContextFeatureSet({{Vector{{1.0, 0.0}}}, {Vector{{0.0, 1.0}}}}));
        CHECK(s == Matrix::Identity(2, 2));
    }
    SUBCASE("matches naive accumulation") {
        Gen g(21);
        const auto ctx = random_context(g, 5, 3, 16);
        Matrix naive = Matrix::Zero(16, 16);
        for (const auto& grp : ctx.groups())
            for (const auto& c : grp)
                for (Eigen::Index i = 0; i < 16; ++i)
                    for (Eigen::Index j = 0; j < 16; ++j) naive(i, j) += c[i] * c[j];
        CHECK((build_s(ctx) - naive).cwiseAbs().maxCoeff() <= 1e-12 * naive.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("gate_singular") {
    const Vector out = gate_singular(Vector{{0.0, 2.0, 10.0}});
    CHECK(out[0] == 0.0);
    CHECK(out[1] == doctest::Approx(0.238406).epsilon(1e-6));
    CHECK(out[2] == doctest::Approx(4.54e-4).epsilon(1e-3));
    CHECK(out[1] == doctest::Approx(gate_ref(2.0)).epsilon(1e-14));
    CHECK_THROWS_AS(gate_singular(Vector{{-1e-3}}), ConfigError);

    Gen g(22);
    for (int i = 0; i < 200; ++i) {
        const double x = g.uniform(0.0, 40.0);
        const double y = gate_singular(Vector::Constant(1, x))[0];
        CHECK(y >= 0.0);
        CHECK(y <= x);
        if (x >= 10.0) CHECK(y < 1e-3);
    }
}

TEST_CASE("build_r") {
    SUBCASE("single concept of norm 2") {
        Gen g(23);
        const Vector c = 2.0 * g.vector(6).normalized();
        const Matrix expect = gate_ref(2.0) * (c / 2.0) * (c / 2.0).transpose();
        CHECK((build_r(ConceptMatrix(c)) - expect).norm() < 1e-12);
    }
    SUBCASE("two orthogonal unit concepts") {
        Gen g(24);
        const Matrix u = g.orthonormal(5, 2);
        const Matrix expect = gate_ref(1.0) * u * u.transpose();
        CHECK(gate_ref(1.0) == doctest::Approx(0.268941).epsilon(1e-6));
        CHECK((build_r(ConceptMatrix(u)) - expect).norm() < 1e-12);
    }
    SUBCASE("rank is at most m") {
        Gen g(25);
        const Matrix r = build_r(ConceptMatrix(g.matrix(10, 3)));
        Eigen::SelfAdjointEigenSolver<Matrix> es(r);
        int nonzero = 0;
        for (Eigen::Index i = 0; i < 10; ++i)
            if (std::abs(es.eigenvalues()[i]) > 1e-12 * es.eigenvalues().cwiseAbs().maxCoeff()) ++nonzero;
        CHECK(nonzero <= 3);
    }
}

TEST_CASE("assemble_a") {
    const Matrix z = Matrix::Zero(3, 3);
    CHECK(assemble_a(1.0, z, z).a == Matrix::Identity(3, 3));
    const Matrix s = Vector{{1.0, 0.0}}.asDiagonal();
    CHECK(assemble_a(0.1, s, Matrix::Zero(2, 2)).a.isApprox(Matrix(Vector{{1.1, 0.1}}.asDiagonal())));
    CHECK_THROWS_AS(assemble_a(0.0, z, z), ConfigError);
    CHECK_THROWS_AS(assemble_a(-1.0, z, z), ConfigError);
    CHECK_THROWS_AS(assemble_a(1.0, z, Matrix::Zero(2, 2)), ConfigError);
}

TEST_CASE("S, R PSD and A >= lambda on random draws") {
    Gen g(26);
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Index d = g.integer(2, 24);
        const int m = g.integer(1, 6);
        const auto ctx = random_context(g, m, g.integer(1, 4), d);
        const ConceptMatrix ce(g.matrix(d, m) * g.uniform(0.1, 5.0));
        const Matrix s = build_s(ctx);
        const Matrix r = build_r(ce);
        CHECK(min_eigenvalue(s) >= -1e-10 * std::max(1.0, s.norm()));
        CHECK(min_eigenvalue(r) >= -1e-10 * std::max(1.0, r.norm()));
        const double lambda = LambdaRule{}.resolve(s);
        const auto a = assemble_a(lambda, s, r);
        CHECK(min_eigenvalue(a.a) >= lambda - 1e-8);
    }
}

TEST_CASE("LambdaRule") {
    const Matrix s = Vector{{2.0, 4.0}}.asDiagonal();
    CHECK(LambdaRule{}.resolve(s) == doctest::Approx(0.3));
    const LambdaRule fixed{LambdaRule::Kind::absolute, 0.7};
    CHECK(fixed.resolve(s) == 0.7);
    CHECK(LambdaRule{}.resolve(Matrix::Zero(2, 2)) == 0.1);
    const LambdaRule zero{LambdaRule::Kind::absolute, 0.0};
    CHECK_THROWS_AS(zero.resolve(s), ConfigError);
}
