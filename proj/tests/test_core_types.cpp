#include "doctest.h"

#include "msfm/core_types.hpp"

#include <cmath>
#include <limits>

using namespace msfm;

TEST_CASE("validate_panel accepts a well-formed matrix") {
    const Panel p = validate_panel(Matrix::Ones(3, 3));
    CHECK(p.t_len() == 3);
    CHECK(p.n_len() == 3);
}

TEST_CASE("validate_panel reports the non-finite cell") {
    Matrix m = Matrix::Ones(3, 3);
    m(1, 2) = std::numeric_limits<double>::quiet_NaN();
    try {
        validate_panel(m);
        FAIL("expected NonFinite");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::NonFinite);
        CHECK(err.row() == 1);
        CHECK(err.col() == 2);
    }
}

TEST_CASE("validate_panel rejects a single period") {
    try {
        validate_panel(Matrix::Ones(1, 5));
        FAIL("expected TooSmall");
    } catch (const Error& err) {
        CHECK(err.code() == ErrorCode::TooSmall);
    }
}

TEST_CASE("unconditional probabilities") {
    const StateProbabilities a = unconditional_probs(TransitionMatrix(0.9, 0.7));
    CHECK(a[0] == doctest::Approx(0.75).epsilon(1e-14));
    CHECK(a[1] == doctest::Approx(0.25).epsilon(1e-14));

    const StateProbabilities b = unconditional_probs(TransitionMatrix(0.5, 0.5));
    CHECK(b[0] == doctest::Approx(0.5));

    CHECK_THROWS_AS(unconditional_probs(TransitionMatrix(1.0, 1.0)), Error);
}

TEST_CASE("unconditional probabilities are a fixed point of P'") {
    Rng rng({7, 0});
    for (int i = 0; i < 100; ++i) {
        const TransitionMatrix p(rng.uniform(0.01, 0.99), rng.uniform(0.01, 0.99));
        const Eigen::Vector2d xi = unconditional_probs(p).values();
        CHECK((p.matrix().transpose() * xi - xi).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("transition matrix rejects rows that do not sum to one") {
    Eigen::Matrix2d m;
    m << 0.9, 0.2, 0.3, 0.7;
    CHECK_THROWS_AS(TransitionMatrix{m}, Error);
    m << 1.1, -0.1, 0.3, 0.7;
    CHECK_THROWS_AS(TransitionMatrix{m}, Error);
}

TEST_CASE("transition matrix swap exchanges labels") {
    const TransitionMatrix p(0.9, 0.7);
    const TransitionMatrix q = p.swapped();
    CHECK(q(0, 0) == 0.7);
    CHECK(q(1, 1) == 0.9);
    CHECK(q(0, 1) == doctest::Approx(0.3));
    CHECK(q(1, 0) == doctest::Approx(0.1));
}

TEST_CASE("state probabilities must be a distribution") {
    CHECK_THROWS_AS(StateProbabilities(0.6, 0.6), Error);
    CHECK_THROWS_AS(StateProbabilities(-0.1, 1.1), Error);
    CHECK(StateProbabilities::unit(1)[1] == 1.0);
}

TEST_CASE("rng streams are reproducible and distinct") {
    Rng a({42, 3}), b({42, 3}), c({42, 4});
    bool differs = false;
    for (int i = 0; i < 50; ++i) {
        const double x = a.normal();
        CHECK(x == b.normal());
        if (x != c.normal()) differs = true;
    }
    CHECK(differs);
}

TEST_CASE("model params validation") {
    ModelParams p;
    p.b1 = Matrix::Ones(3, 2);
    p.b2 = Matrix::Ones(3, 2);
    p.sigma_e1_diag = Vector::Ones(3);
    p.sigma_e2_diag = Vector::Ones(3);
    CHECK_NOTHROW(p.validate(1e-10));
    p.sigma_e2_diag(1) = 1e-12;
    CHECK_THROWS_AS(p.validate(1e-10), Error);
    p.sigma_e2_diag(1) = 1.0;
    p.b2 = Matrix::Ones(2, 2);
    CHECK_THROWS_AS(p.validate(1e-10), Error);
}
