#include "msfm/metrics.hpp"

#include <sstream>

namespace msfm {

namespace {

// Inverse of a symmetric positive definite Gram matrix, SingularGram on a
// reciprocal condition below 1e-12.
Matrix checked_gram_inverse(const Matrix& gram, const char* what) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
    const double hi = es.eigenvalues().maxCoeff();
    const double lo = es.eigenvalues().minCoeff();
    if (!(hi > 0.0) || !(lo > 1e-12 * hi)) {
        std::ostringstream msg;
        msg << what << " is singular";
        throw Error(ErrorCode::SingularGram, msg.str());
    }
    return es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
}

} // namespace

Matrix hat_H(const Matrix& g_true, const Matrix& a_true, const Matrix& a_hat, const Vector& eigvals) {
    const Index k = a_hat.cols();
    if (g_true.cols() != k || a_true.cols() != k || a_true.rows() != a_hat.rows() || eigvals.size() < k)
        throw Error(ErrorCode::DimensionMismatch, "true and estimated factor spaces disagree in shape");
    const double t_len = static_cast<double>(g_true.rows());
    const double n = static_cast<double>(a_hat.rows());
    const Vector v = eigvals.head(k) / n;
    if (!(v.minCoeff() > 0.0)) throw Error(ErrorCode::SingularV, "leading eigenvalues must be positive");
    return (g_true.transpose() * g_true / t_len) * (a_true.transpose() * a_hat / n) *
           v.cwiseInverse().asDiagonal();
}

Matrix hat_I_xi(const Vector& smoothed_col, const std::vector<int>& states, int regime, const Matrix& g_hat) {
    const Index t_len = g_hat.rows();
    if (smoothed_col.size() != t_len || static_cast<Index>(states.size()) != t_len)
        throw Error(ErrorCode::DimensionMismatch, "probabilities, states and factors disagree in length");
    Vector hit(t_len);
    for (Index t = 0; t < t_len; ++t) hit(t) = states[t] == regime ? smoothed_col(t) : 0.0;
    const Matrix num = g_hat.transpose() * hit.asDiagonal() * g_hat;
    const Matrix den = g_hat.transpose() * smoothed_col.asDiagonal() * g_hat;
    return num * checked_gram_inverse(den, "weighted factor Gram matrix");
}

Matrix bias_adjusted_target(const Matrix& b1_true, const Matrix& b2_true, const Matrix& i_xi) {
    const Index k = i_xi.rows();
    if (i_xi.cols() != k || b1_true.cols() != k || b2_true.cols() != k || b1_true.rows() != b2_true.rows())
        throw Error(ErrorCode::DimensionMismatch, "loadings and bias matrix disagree in shape");
    return b1_true * i_xi + b2_true * (Matrix::Identity(k, k) - i_xi);
}

double r2_bstar(const Matrix& b1_hat, const Matrix& b1_star) {
    if (b1_hat.rows() != b1_star.rows())
        throw Error(ErrorCode::DimensionMismatch, "loading matrices disagree in N");
    const Matrix gram = b1_hat.transpose() * b1_hat;
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram);
    const double hi = es.eigenvalues().maxCoeff();
    if (!(hi > 0.0) || !(es.eigenvalues().minCoeff() > 1e-12 * hi))
        throw Error(ErrorCode::SingularGram, "estimated loadings are rank deficient");
    // thin Q of b1_hat is an orthonormal basis of its span
    Eigen::HouseholderQR<Matrix> qr(b1_hat);
    const Matrix q = qr.householderQ() * Matrix::Identity(b1_hat.rows(), b1_hat.cols());
    const Matrix proj = q.transpose() * b1_star;
    const double den = b1_star.squaredNorm();
    if (!(den > 0.0)) throw Error(ErrorCode::ZeroSignal, "target loadings are identically zero");
    return proj.squaredNorm() / den;
}

Matrix common_component(const Matrix& b1_hat, const Matrix& b2_hat, const Matrix& g_hat, const Matrix& smoothed) {
    if (smoothed.rows() != g_hat.rows() || smoothed.cols() != 2 || b1_hat.cols() != g_hat.cols() ||
        b2_hat.cols() != g_hat.cols() || b1_hat.rows() != b2_hat.rows())
        throw Error(ErrorCode::DimensionMismatch, "loadings, factors and probabilities disagree in shape");
    return smoothed.col(0).asDiagonal() * (g_hat * b1_hat.transpose()) +
           smoothed.col(1).asDiagonal() * (g_hat * b2_hat.transpose());
}

double mse_common(const Matrix& chi_hat, const Matrix& chi_true) {
    if (chi_hat.rows() != chi_true.rows() || chi_hat.cols() != chi_true.cols())
        throw Error(ErrorCode::DimensionMismatch, "common components disagree in shape");
    const double den = chi_true.squaredNorm();
    if (!(den > 0.0)) throw Error(ErrorCode::ZeroSignal, "true common component is identically zero");
    return (chi_hat - chi_true).squaredNorm() / den;
}

Matrix regime_factors(const Matrix& x, const Matrix& lambda_hat, const Vector& smoothed_col) {
    if (lambda_hat.rows() != x.cols() || smoothed_col.size() != x.rows())
        throw Error(ErrorCode::DimensionMismatch, "panel, loadings and probabilities disagree in shape");
    return smoothed_col.asDiagonal() * (x * lambda_hat) / static_cast<double>(x.cols());
}

} // namespace msfm
