#include "deepc/errors.hpp"
#include "deepc/qp.hpp"
#include "support.hpp"

#include <doctest.h>

#include <sstream>

using namespace deepc;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

QuadraticProgram scalar_qp(double lo, double hi) {
    // (z - 1)^2 = z^2 - 2z + 1
    QuadraticProgram qp;
    qp.P = Matrix::Constant(1, 1, 2.0);
    qp.q = Vector::Constant(1, -2.0);
    qp.constant = 1.0;
    qp.Aeq = Matrix::Zero(0, 1);
    qp.beq = Vector::Zero(0);
    if (std::isfinite(lo) || std::isfinite(hi)) {
        qp.G = Matrix::Identity(1, 1);
        qp.lower = Vector::Constant(1, lo);
        qp.upper = Vector::Constant(1, hi);
    } else {
        qp.G = Matrix::Zero(0, 1);
        qp.lower = qp.upper = Vector::Zero(0);
    }
    return qp;
}

QuadraticProgram random_qp(std::mt19937_64& rng) {
    const Index d = testing::uniform_int(rng, 2, 7);
    const Index e = testing::uniform_int(rng, 0, std::min<int>(2, static_cast<int>(d) - 1));
    const Index c = testing::uniform_int(rng, 1, 6);
    QuadraticProgram qp;
    const Matrix M = testing::randn(rng, d, d);
    qp.P = M * M.transpose() + 0.1 * Matrix::Identity(d, d);
    qp.q = testing::randn(rng, d, 1) * 3.0;
    qp.Aeq = testing::randn(rng, e, d);
    // equalities consistent with a point that also sits inside the box
    const Vector z0 = testing::randn(rng, d, 1) * 0.3;
    qp.beq = qp.Aeq * z0;
    qp.G = testing::randn(rng, c, d);
    const Vector g0 = qp.G * z0;
    qp.lower.resize(c);
    qp.upper.resize(c);
    for (Index i = 0; i < c; ++i) {
        const int kind = testing::uniform_int(rng, 0, 3);
        const double lo = g0(i) - testing::uniform(rng, 0.05, 1.0);
        const double hi = g0(i) + testing::uniform(rng, 0.05, 1.0);
        qp.lower(i) = kind == 1 ? -kInf : lo;
        qp.upper(i) = kind == 2 ? kInf : hi;
    }
    return qp;
}

}  // namespace

TEST_CASE("scalar examples") {
    auto s = solve_qp(scalar_qp(-kInf, kInf));
    REQUIRE(s.status == QpStatus::solved);
    CHECK(s.z(0) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(s.objective == doctest::Approx(0.0).epsilon(1e-9));

    s = solve_qp(scalar_qp(0.0, 0.5));
    REQUIRE(s.status == QpStatus::solved);
    CHECK(s.z(0) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(s.objective == doctest::Approx(0.25).epsilon(1e-6));
}

TEST_CASE("equality projection example") {
    QuadraticProgram qp;
    qp.P = 2.0 * Matrix::Identity(2, 2);
    qp.q = Vector::Zero(2);
    qp.Aeq = Matrix::Ones(1, 2);
    qp.beq = Vector::Ones(1);
    qp.G = Matrix::Zero(0, 2);
    qp.lower = qp.upper = Vector::Zero(0);
    const auto s = solve_qp(qp);
    REQUIRE(s.status == QpStatus::solved);
    CHECK(s.z(0) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(s.z(1) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(s.objective == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("validation") {
    QuadraticProgram qp = scalar_qp(0, 1);
    qp.P = Matrix::Identity(2, 2);
    CHECK_THROWS_AS(qp.validate(), DimensionError);
    qp = scalar_qp(0, 1);
    qp.q(0) = std::nan("");
    CHECK_THROWS_AS(qp.validate(), InvalidArgument);
    qp = scalar_qp(0, 1);
    qp.P = Matrix::Identity(2, 2);
    qp.P(0, 1) = 1.0;
    qp.q = Vector::Zero(2);
    qp.Aeq = Matrix::Zero(0, 2);
    qp.G = Matrix::Zero(0, 2);
    qp.lower = qp.upper = Vector::Zero(0);
    CHECK_THROWS_AS(qp.validate(), InvalidArgument);
}

TEST_CASE("infeasible problems are reported") {
    auto qp = scalar_qp(1.0, 0.0);  // empty box
    CHECK(solve_qp(qp).status == QpStatus::infeasible);

    QuadraticProgram eq;
    eq.P = Matrix::Identity(2, 2);
    eq.q = Vector::Zero(2);
    eq.Aeq.resize(2, 2);
    eq.Aeq << 1, 1, 1, 1;
    eq.beq.resize(2);
    eq.beq << 0, 1;
    eq.G = Matrix::Zero(0, 2);
    eq.lower = eq.upper = Vector::Zero(0);
    CHECK(solve_qp(eq).status == QpStatus::infeasible);

    // box incompatible with an equality
    QuadraticProgram mix;
    mix.P = Matrix::Identity(2, 2);
    mix.q = Vector::Zero(2);
    mix.Aeq = Matrix::Ones(1, 2);
    mix.beq = Vector::Constant(1, 5.0);
    mix.G = Matrix::Identity(2, 2);
    mix.lower = Vector::Constant(2, -1.0);
    mix.upper = Vector::Constant(2, 1.0);
    CHECK(solve_qp(mix).status == QpStatus::infeasible);
}

TEST_CASE("max_iterations returns the best iterate") {
    std::mt19937_64 rng(21);
    const auto qp = random_qp(rng);
    QpSettings st;
    st.max_iter = 3;
    st.polish = false;
    const auto s = solve_qp(qp, st);
    CHECK(s.status == QpStatus::max_iterations);
    CHECK(s.z.size() == qp.num_variables());
    CHECK(s.z.allFinite());
}

TEST_CASE("matches the active-set KKT oracle (randomized)") {
    std::mt19937_64 rng(22);
    int compared = 0;
    for (int trial = 0; trial < 130; ++trial) {
        const auto qp = random_qp(rng);
        const auto ref = testing::kkt_oracle(qp);
        REQUIRE(ref.has_value());
        const auto s = solve_qp(qp);
        REQUIRE(s.status == QpStatus::solved);
        const double tol = 1e-6 * std::max(1.0, ref->cwiseAbs().maxCoeff());
        CHECK((s.z - *ref).cwiseAbs().maxCoeff() <= tol);
        CHECK(s.objective == doctest::Approx(0.5 * ref->dot(qp.P * *ref) + qp.q.dot(*ref)).epsilon(1e-6));
        ++compared;
    }
    CHECK(compared >= 100);
}

TEST_CASE("loosening bounds never raises the optimum (randomized)") {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 60; ++trial) {
        auto qp = random_qp(rng);
        const auto tight = solve_qp(qp);
        REQUIRE(tight.status == QpStatus::solved);
        for (Index i = 0; i < qp.lower.size(); ++i) {
            qp.lower(i) -= testing::uniform(rng, 0.0, 0.5);
            qp.upper(i) += testing::uniform(rng, 0.0, 0.5);
        }
        const auto loose = solve_qp(qp);
        REQUIRE(loose.status == QpStatus::solved);
        CHECK(loose.objective <= tight.objective + 1e-6 * (1.0 + std::abs(tight.objective)));
    }
}

TEST_CASE("minimizer is invariant to cost scaling (randomized)") {
    std::mt19937_64 rng(24);
    for (int trial = 0; trial < 40; ++trial) {
        auto qp = random_qp(rng);
        const auto base = solve_qp(qp);
        for (double alpha : {1e-3, 7.0, 1e4}) {
            auto scaled = qp;
            scaled.P *= alpha;
            scaled.q *= alpha;
            const auto s = solve_qp(scaled);
            REQUIRE(s.status == QpStatus::solved);
            CHECK((s.z - base.z).cwiseAbs().maxCoeff() <=
                  1e-8 * std::max(1.0, base.z.cwiseAbs().maxCoeff()));
        }
    }
}

TEST_CASE("solves are deterministic and warm starts keep the optimum") {
    std::mt19937_64 rng(25);
    for (int trial = 0; trial < 10; ++trial) {
        const auto qp = random_qp(rng);
        const auto a = solve_qp(qp);
        const auto b = solve_qp(qp);
        CHECK(a.iterations == b.iterations);
        CHECK(a.z == b.z);
        CHECK(a.objective == b.objective);

        QpSolver solver;
        const auto first = solver.solve(qp);
        QpWarmStart warm{first.z, first.dual};
        const auto again = solver.solve(qp, &warm);
        REQUIRE(again.status == QpStatus::solved);
        CHECK(again.iterations <= first.iterations);
        CHECK((again.z - first.z).cwiseAbs().maxCoeff() < 1e-6);
    }
}

TEST_CASE("objective includes the constant term") {
    auto qp = scalar_qp(-kInf, kInf);
    qp.constant = 10.0;
    CHECK(solve_qp(qp).objective == doctest::Approx(9.0).epsilon(1e-9));
}

TEST_CASE("dump and read round trip") {
    std::mt19937_64 rng(26);
    auto qp = random_qp(rng);
    qp.constant = 1.25;
    std::stringstream ss;
    dump_qp(qp, ss);
    CHECK(ss.str().rfind("%%QuadraticProgram", 0) == 0);
    const auto back = read_qp(ss);
    CHECK(back.P == qp.P);
    CHECK(back.q == qp.q);
    CHECK(back.Aeq == qp.Aeq);
    CHECK(back.G == qp.G);
    CHECK(back.lower == qp.lower);
    CHECK(back.upper == qp.upper);
    CHECK(back.constant == qp.constant);

    std::stringstream bad("not a dump\n");
    CHECK_THROWS_AS(read_qp(bad), InvalidArgument);
}
