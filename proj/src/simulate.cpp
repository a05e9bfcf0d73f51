#include "msfm/simulate.hpp"

#include <cmath>
#include <sstream>

namespace msfm {

void SimConfig::validate() const {
    auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, what); };
    if (n < 2 || t < 2) fail("simulation needs n >= 2 and t >= 2");
    if (r < 1) fail("r must be >= 1");
    if (n < r) fail("n must be >= r");
    if (!(p11 > 0.0 && p11 < 1.0) || !(p22 > 0.0 && p22 < 1.0)) fail("p11, p22 must lie in (0, 1)");
    if (!(rho_f >= 0.0 && rho_f < 1.0)) fail("rho_f must lie in [0, 1)");
    if (!(tau >= 0.0 && tau < 1.0)) fail("tau must lie in [0, 1)");
    if (!(rho_idio_max >= 0.0 && rho_idio_max < 1.0)) fail("rho_idio_max must lie in [0, 1)");
    if (!(noise_to_signal > 0.0)) fail("noise_to_signal must be positive");
}

// ----------------------------------------------------------------------------

Matrix SimTruth::g() const {
    const Index t_len = f.rows();
    const Index r = f.cols();
    Matrix out = Matrix::Zero(t_len, 2 * r);
    for (Index t = 0; t < t_len; ++t) {
        out.row(t).segment(states[t] * r, r) = f.row(t);
    }
    return out;
}

Matrix SimTruth::a() const {
    Matrix out(lambda1.rows(), lambda1.cols() + lambda2.cols());
    out << lambda1, lambda2;
    return out;
}

Matrix SimTruth::b1() const {
    Matrix out = Matrix::Zero(lambda1.rows(), lambda1.cols() + lambda2.cols());
    out.leftCols(lambda1.cols()) = lambda1;
    return out;
}

Matrix SimTruth::b2() const {
    Matrix out = Matrix::Zero(lambda2.rows(), lambda1.cols() + lambda2.cols());
    out.rightCols(lambda2.cols()) = lambda2;
    return out;
}

// ----------------------------------------------------------------------------

Chain simulate_chain(double p11, double p22, Index t, Rng& rng) {
    if (t < 1) throw Error(ErrorCode::InvalidArgument, "chain length must be >= 1");
    const TransitionMatrix trans(p11, p22);
    const StateProbabilities stationary = unconditional_probs(trans);

    Chain chain;
    chain.states.resize(static_cast<std::size_t>(t));
    chain.xi = Matrix::Zero(t, 2);

    chain.states[0] = rng.uniform() < stationary[0] ? 0 : 1;
    for (Index s = 1; s < t; ++s) {
        const double u = rng.uniform();
        const int prev = chain.states[s - 1];
        // u <= p_{prev,1} lands in regime 1, otherwise regime 2
        chain.states[s] = u <= trans(prev, 0) ? 0 : 1;
    }
    for (Index s = 0; s < t; ++s) chain.xi(s, chain.states[s]) = 1.0;
    return chain;
}

Matrix symmetric_sqrt(const Matrix& sym) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
    const Vector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

Matrix simulate_factors(Index t, int r, double rho_f, Rng& rng) {
    if (!(rho_f >= 0.0 && rho_f < 1.0))
        throw Error(ErrorCode::InvalidArgument, "rho_f must lie in [0, 1)");
    if (t < r) throw Error(ErrorCode::RankDeficient, "need t >= r to whiten the factors");

    Matrix f(t, r);
    const double sd0 = 1.0 / std::sqrt(1.0 - rho_f * rho_f);
    for (int j = 0; j < r; ++j) {
        f(0, j) = sd0 * rng.normal();
        for (Index s = 1; s < t; ++s) f(s, j) = rho_f * f(s - 1, j) + rng.normal();
    }

    const Matrix second = f.transpose() * f / static_cast<double>(t);
    Eigen::SelfAdjointEigenSolver<Matrix> es(second);
    if (es.eigenvalues().minCoeff() <= 1e-12 * es.eigenvalues().maxCoeff())
        throw Error(ErrorCode::RankDeficient, "factor second-moment matrix is singular");
    const Matrix inv_sqrt = es.eigenvectors() *
                            es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                            es.eigenvectors().transpose();
    return f * inv_sqrt;
}

std::pair<Matrix, Matrix> simulate_loadings(Index n, int r, Rng& rng) {
    if (r < 1 || n < r) throw Error(ErrorCode::InvalidArgument, "need n >= r >= 1");
    auto draw = [&]() {
        Matrix lam(n, r);
        for (Index i = 0; i < n; ++i)
            for (int j = 0; j < r; ++j) lam(i, j) = rng.normal(1.0, 1.0);
        Eigen::SelfAdjointEigenSolver<Matrix> es(lam.transpose() * lam);
        return Matrix(lam * es.eigenvectors());
    };
    Matrix lambda1 = draw();
    Matrix lambda2 = draw();
    return {std::move(lambda1), std::move(lambda2)};
}

namespace {

void add_band(Matrix& m, Index offset, double value) {
    const Index n = m.rows();
    for (Index i = 0; i + offset < n; ++i) {
        m(i, i + offset) += value;
        if (offset != 0) m(i + offset, i) += value;
    }
}

void require_pd(const Matrix& m, const char* which) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    if (!(lo > 0.0)) {
        std::ostringstream msg;
        msg << which << " is not positive definite (smallest eigenvalue " << lo << ")";
        throw Error(ErrorCode::NotPD, msg.str());
    }
}

} // namespace

std::pair<Matrix, Matrix> build_idio_covariances(Index n, double tau, Rng& rng) {
    if (!(tau >= 0.0 && tau < 1.0)) throw Error(ErrorCode::InvalidArgument, "tau must lie in [0, 1)");
    Matrix s1 = Matrix::Zero(n, n);
    Matrix s2 = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i) s1(i, i) = rng.uniform(0.25, 1.25);
    for (Index i = 0; i < n; ++i) s2(i, i) = rng.uniform(0.75, 1.75);

    // Banded Toeplitz parts, diagonals counted from the main one (k = 1).
    // Regime 1: tau^k for k = 1, 2. Regime 2: tau^{k-1} for k = 1, 2, 3.
    if (tau > 0.0) {
        add_band(s1, 0, tau);
        add_band(s1, 1, tau * tau);
        add_band(s2, 0, 1.0);
        add_band(s2, 1, tau);
        add_band(s2, 2, tau * tau);
    }
    require_pd(s1, "Sigma_e1");
    require_pd(s2, "Sigma_e2");
    return {std::move(s1), std::move(s2)};
}

Matrix simulate_idiosyncratic(const Matrix& sigma_e1, const Matrix& sigma_e2,
                              const std::vector<int>& states, double rho_idio_max, Rng& rng) {
    const Index n = sigma_e1.rows();
    const Index t_len = static_cast<Index>(states.size());
    if (sigma_e1.cols() != n || sigma_e2.rows() != n || sigma_e2.cols() != n)
        throw Error(ErrorCode::DimensionMismatch, "covariance matrices must be N x N");
    if (!(rho_idio_max >= 0.0 && rho_idio_max < 1.0))
        throw Error(ErrorCode::InvalidArgument, "rho_idio_max must lie in [0, 1)");
    require_pd(sigma_e1, "Sigma_e1");
    require_pd(sigma_e2, "Sigma_e2");

    Vector rho(n);
    for (Index i = 0; i < n; ++i) rho(i) = rho_idio_max > 0.0 ? rng.uniform(0.0, rho_idio_max) : 0.0;

    Matrix nu(t_len, n);
    for (Index i = 0; i < n; ++i) {
        nu(0, i) = rng.normal() / std::sqrt(1.0 - rho(i) * rho(i));
        for (Index s = 1; s < t_len; ++s) nu(s, i) = rho(i) * nu(s - 1, i) + rng.normal();
        // unit sample variance
        const double mean = nu.col(i).mean();
        const double var = (nu.col(i).array() - mean).square().sum() / static_cast<double>(t_len);
        if (var > 0.0) nu.col(i) /= std::sqrt(var);
    }

    const Matrix root1 = symmetric_sqrt(sigma_e1);
    const Matrix root2 = symmetric_sqrt(sigma_e2);
    Matrix e(t_len, n);
    for (Index s = 0; s < t_len; ++s) {
        const Matrix& root = states[static_cast<std::size_t>(s)] == 0 ? root1 : root2;
        e.row(s).noalias() = nu.row(s) * root;  // root is symmetric
    }
    return e;
}

double noise_to_signal_ratio(const Matrix& e, const Matrix& chi) {
    const Vector num = e.array().square().colwise().sum();
    const Vector den = chi.array().square().colwise().sum();
    return (num.array() / den.array()).mean();
}

SimTruth simulate_panel(const SimConfig& cfg, Rng& rng) {
    cfg.validate();
    Chain chain = simulate_chain(cfg.p11, cfg.p22, cfg.t, rng);
    Matrix f = simulate_factors(cfg.t, cfg.r, cfg.rho_f, rng);
    auto [lambda1, lambda2] = simulate_loadings(cfg.n, cfg.r, rng);
    auto [sigma1, sigma2] = build_idio_covariances(cfg.n, cfg.tau, rng);
    Matrix e = simulate_idiosyncratic(sigma1, sigma2, chain.states, cfg.rho_idio_max, rng);

    Matrix chi(cfg.t, cfg.n);
    for (Index s = 0; s < cfg.t; ++s) {
        const Matrix& lam = chain.states[static_cast<std::size_t>(s)] == 0 ? lambda1 : lambda2;
        chi.row(s).noalias() = f.row(s) * lam.transpose();
    }

    const double raw = noise_to_signal_ratio(e, chi);
    if (!(raw > 0.0) || !std::isfinite(raw))
        throw Error(ErrorCode::ZeroSignal, "cannot calibrate noise-to-signal ratio");
    e *= std::sqrt(cfg.noise_to_signal / raw);

    Matrix x = chi + e;
    SimTruth truth{validate_panel(std::move(x)), std::move(chain.states), std::move(chain.xi),
                   std::move(f), std::move(lambda1), std::move(lambda2), std::move(chi), std::move(e)};
    return truth;
}

} // namespace msfm
