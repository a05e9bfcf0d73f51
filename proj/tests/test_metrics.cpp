#include "doctest.h"

#include "msfm/em.hpp"
#include "msfm/metrics.hpp"
#include "msfm/pca.hpp"
#include "msfm/simulate.hpp"
#include "oracles.hpp"

using namespace msfm;

namespace {

Matrix random_matrix(Index rows, Index cols, Rng& rng) {
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) m(i, j) = rng.normal();
    return m;
}

} // namespace

TEST_CASE("rotation matrix on a noiseless panel") {
    Rng rng({51, 0});
    const Index t_len = 200, n = 300, k = 2;
    const Matrix g = random_matrix(t_len, k, rng);
    const Matrix a = random_matrix(n, k, rng);
    const Panel panel = validate_panel(g * a.transpose());
    const FactorSpace fs = estimate_factor_space(panel, k);
    const Matrix h = hat_H(g, a, fs.a_hat, fs.eigvals);
    const Matrix h_inv = h.inverse();
    double worst = 0.0;
    for (Index t = 0; t < t_len; ++t)
        worst = std::max(worst, (fs.g_hat.row(t).transpose() - h_inv * g.row(t).transpose()).norm());
    CHECK(worst < 1e-6);
}

TEST_CASE("rotation matrix is a positive scalar for one positive-loading factor") {
    Rng rng({51, 1});
    const Matrix g = random_matrix(100, 1, rng);
    Matrix a(50, 1);
    for (Index i = 0; i < 50; ++i) a(i, 0) = rng.uniform(0.5, 1.5);
    Matrix x = g * a.transpose();
    for (Index t = 0; t < 100; ++t)
        for (Index i = 0; i < 50; ++i) x(t, i) += 0.1 * rng.normal();
    const FactorSpace fs = estimate_factor_space(validate_panel(x), 1);
    const Matrix h = hat_H(g, a, fs.a_hat, fs.eigvals);
    CHECK(h(0, 0) > 0.0);

    Vector zero = fs.eigvals;
    zero(0) = 0.0;
    CHECK_THROWS_AS(hat_H(g, a, fs.a_hat, zero), Error);
}

TEST_CASE("bias matrix limits") {
    Rng rng({52, 0});
    const Index t_len = 300;
    const Matrix g = random_matrix(t_len, 2, rng);
    std::vector<int> states(t_len);
    Vector ind(t_len), any(t_len);
    for (Index t = 0; t < t_len; ++t) {
        states[t] = rng.uniform() < 0.7 ? 0 : 1;
        ind(t) = states[t] == 0 ? 1.0 : 0.0;
        any(t) = rng.uniform(0.1, 0.9);
    }
    // perfect recovery: indicator weights (Gram restricted to regime-1 periods)
    CHECK((hat_I_xi(ind, states, 0, g) - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);

    const std::vector<int> all_one(t_len, 0);
    CHECK((hat_I_xi(any, all_one, 0, g) - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);

    const Vector half = Vector::Constant(t_len, 0.5);
    Matrix num = Matrix::Zero(2, 2), den = Matrix::Zero(2, 2);
    for (Index t = 0; t < t_len; ++t) {
        const Matrix gg = g.row(t).transpose() * g.row(t);
        den += 0.5 * gg;
        if (states[t] == 0) num += 0.5 * gg;
    }
    CHECK((hat_I_xi(half, states, 0, g) - num * den.inverse()).cwiseAbs().maxCoeff() < 1e-12);

    CHECK_THROWS_AS(hat_I_xi(Vector::Zero(t_len), states, 0, g), Error);
}

TEST_CASE("bias-adjusted target limits") {
    Rng rng({52, 1});
    const Matrix b1 = random_matrix(10, 2, rng);
    const Matrix b2 = random_matrix(10, 2, rng);
    const Matrix id = Matrix::Identity(2, 2);
    CHECK(bias_adjusted_target(b1, b2, id) == b1);
    CHECK(bias_adjusted_target(b1, b2, Matrix::Zero(2, 2)) == b2);
    CHECK((bias_adjusted_target(b1, b2, 0.5 * id) - 0.5 * (b1 + b2)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("trace R2 cases") {
    Rng rng({53, 0});
    const Matrix b = random_matrix(30, 2, rng);
    CHECK(r2_bstar(b, b) == doctest::Approx(1.0).epsilon(1e-12));

    Matrix e1 = Matrix::Zero(4, 1), e2 = Matrix::Zero(4, 1);
    e1(0, 0) = 1.0;
    e2(1, 0) = 3.0;
    CHECK(std::abs(r2_bstar(e1, e2)) < 1e-15);

    for (int rep = 0; rep < 20; ++rep) {
        const Matrix b_hat = random_matrix(30, 2, rng);
        const Matrix b_star = random_matrix(30, 2, rng);
        Matrix m = random_matrix(2, 2, rng);
        m += 3.0 * Matrix::Identity(2, 2);
        const double r2 = r2_bstar(b_hat, b_star);
        CHECK(std::abs(r2 - oracle::trace_r2(b_hat, b_star)) < 1e-12);
        CHECK(std::abs(r2_bstar(b_hat * m, b_star) - r2) < 1e-10);
        CHECK(std::abs(r2_bstar(b_star * m, b_star) - 1.0) < 1e-10);
        CHECK(r2 >= -1e-12);
        CHECK(r2 <= 1.0 + 1e-12);
    }

    Matrix collinear(5, 2);
    collinear.col(0) = Vector::Ones(5);
    collinear.col(1) = 2.0 * Vector::Ones(5);
    CHECK_THROWS_AS(r2_bstar(collinear, collinear), Error);
}

TEST_CASE("common component error") {
    Rng rng({54, 0});
    const Matrix chi = random_matrix(20, 5, rng);
    CHECK(mse_common(chi, chi) == 0.0);
    CHECK(mse_common(Matrix::Zero(20, 5), chi) == doctest::Approx(1.0));
    CHECK(mse_common(2.0 * chi, chi) == doctest::Approx(1.0));
    const Matrix err = random_matrix(20, 5, rng);
    CHECK(mse_common(chi + 3.0 * err, chi) == doctest::Approx(9.0 * mse_common(chi + err, chi)));
    CHECK_THROWS_AS(mse_common(chi, Matrix::Zero(20, 5)), Error);

    const Matrix g = random_matrix(20, 2, rng);
    const Matrix b1 = random_matrix(5, 2, rng);
    const Matrix b2 = random_matrix(5, 2, rng);
    Matrix xi(20, 2);
    xi.col(0).setOnes();
    xi.col(1).setZero();
    CHECK((common_component(b1, b2, g, xi) - g * b1.transpose()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("regime factor projections") {
    SimConfig sim;
    Rng rng({55, 0});
    const SimTruth truth = simulate_panel(sim, rng);
    const FactorSpace fs = estimate_factor_space(truth.panel, 2);
    const Matrix& x = truth.panel.data();

    const Vector ones = Vector::Ones(x.rows());
    CHECK((regime_factors(x, fs.a_hat, ones) - fs.g_hat).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(regime_factors(x, fs.a_hat, Vector::Zero(x.rows())).cwiseAbs().maxCoeff() == 0.0);

    const EmResult em = run_em(truth.panel, fs, EmConfig{});
    const Matrix f1 = regime_factors(x, em.params.b1.leftCols(1), em.path.smoothed.col(0));
    std::vector<double> est, tru;
    for (Index t = 0; t < x.rows(); ++t) {
        if (truth.states[t] != 0) continue;
        est.push_back(f1(t, 0));
        tru.push_back(truth.f(t, 0));
    }
    const Vector a = Eigen::Map<const Vector>(est.data(), static_cast<Index>(est.size()));
    const Vector b = Eigen::Map<const Vector>(tru.data(), static_cast<Index>(tru.size()));
    // the sign of the estimated loading column is not identified
    CHECK(std::abs(oracle::correlation(a, b)) >= 0.9);
}
