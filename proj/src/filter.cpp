#include "msfm/filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace msfm {

namespace {

constexpr double kMinPredicted = 1e-300;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double safe_log(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

} // namespace

double log_sum_exp(double a, double b) {
    const double m = std::max(a, b);
    if (m == kNegInf) return kNegInf;
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

LogDensitySeries::LogDensitySeries(Matrix values) : values_(std::move(values)) {
    if (values_.cols() != 2) throw Error(ErrorCode::DimensionMismatch, "log densities must be T x 2");
    if (!values_.allFinite()) throw Error(ErrorCode::NonFinite, "log densities must be finite");
}

LogDensitySeries LogDensitySeries::swapped() const {
    Matrix out(values_.rows(), 2);
    out.col(0) = values_.col(1);
    out.col(1) = values_.col(0);
    return LogDensitySeries(std::move(out));
}

// ----------------------------------------------------------------------------

LogDensitySeries log_eta(const Panel& panel, const Matrix& g_hat, const ModelParams& params) {
    return log_eta(panel.data(), g_hat, params);
}

LogDensitySeries log_eta(const Matrix& x, const Matrix& g_hat, const ModelParams& params) {
    const Index n = x.cols();
    if (g_hat.rows() != x.rows() || g_hat.cols() != params.k() || params.n() != n ||
        params.b2.rows() != n || params.b2.cols() != params.k() || params.sigma_e1_diag.size() != n ||
        params.sigma_e2_diag.size() != n) {
        throw Error(ErrorCode::DimensionMismatch, "panel, factors and parameters disagree in shape");
    }

    const double constant = -0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
    Matrix out(x.rows(), 2);
    for (int j = 0; j < 2; ++j) {
        const Matrix& b = j == 0 ? params.b1 : params.b2;
        const Vector& var = j == 0 ? params.sigma_e1_diag : params.sigma_e2_diag;
        const double log_det = var.array().log().sum();
        const Matrix resid = x - g_hat * b.transpose();
        const Vector inv_var = var.cwiseInverse();
        out.col(j) = (constant - 0.5 * log_det) -
                     0.5 * (resid.array().square().matrix() * inv_var).array();
    }
    return LogDensitySeries(std::move(out));
}

FilterResult hamilton_filter(const LogDensitySeries& log_eta, const TransitionMatrix& trans,
                             const StateProbabilities& xi0) {
    const Index t_len = log_eta.t_len();
    const Eigen::Matrix2d pt = trans.matrix().transpose();

    FilterResult out;
    out.predicted.resize(t_len, 2);
    out.filtered.resize(t_len, 2);

    Eigen::Vector2d prev = xi0.values();
    for (Index t = 0; t < t_len; ++t) {
        const Eigen::Vector2d pred = pt * prev;
        const double a = log_eta(t, 0) + safe_log(pred(0));
        const double b = log_eta(t, 1) + safe_log(pred(1));
        const double norm = log_sum_exp(a, b);
        if (norm == kNegInf) {
            std::ostringstream msg;
            msg << "both predicted probabilities vanish at t = " << t;
            throw Error(ErrorCode::DegeneratePrediction, msg.str(), t);
        }
        Eigen::Vector2d filt(std::exp(a - norm), std::exp(b - norm));
        // exp of the two log-weights sums to 1 up to rounding; pin it exactly
        filt /= filt.sum();

        out.predicted.row(t) = pred.transpose();
        out.filtered.row(t) = filt.transpose();
        out.loglik += norm;
        prev = filt;
    }
    return out;
}

Matrix kim_smoother(const Matrix& predicted, const Matrix& filtered, const TransitionMatrix& trans) {
    const Index t_len = filtered.rows();
    if (predicted.rows() != t_len || predicted.cols() != 2 || filtered.cols() != 2)
        throw Error(ErrorCode::DimensionMismatch, "predicted and filtered must both be T x 2");
    Matrix smoothed(t_len, 2);
    if (t_len == 0) return smoothed;

    const Eigen::Matrix2d& p = trans.matrix();
    smoothed.row(t_len - 1) = filtered.row(t_len - 1);
    for (Index t = t_len - 2; t >= 0; --t) {
        Eigen::Vector2d ratio;
        for (int j = 0; j < 2; ++j) {
            const double pred = predicted(t + 1, j);
            if (pred >= kMinPredicted) {
                ratio(j) = smoothed(t + 1, j) / pred;
            } else if (smoothed(t + 1, j) == 0.0) {
                ratio(j) = 0.0;  // unreachable state carries no mass backwards
            } else {
                std::ostringstream msg;
                msg << "predicted probability below 1e-300 at t = " << t + 1;
                throw Error(ErrorCode::ZeroPredicted, msg.str(), t + 1);
            }
        }
        smoothed.row(t) = (p * ratio).cwiseProduct(filtered.row(t).transpose()).transpose();
    }
    return smoothed;
}

Matrix smoothed_cross_probs(const Matrix& predicted, const Matrix& filtered, const Matrix& smoothed,
                            const TransitionMatrix& trans, const StateProbabilities& xi0) {
    const Index t_len = smoothed.rows();
    if (predicted.rows() != t_len || filtered.rows() != t_len)
        throw Error(ErrorCode::DimensionMismatch, "probability series lengths disagree");

    Matrix cross(t_len, 4);
    for (Index t = 0; t < t_len; ++t) {
        const Eigen::Vector2d prev = t == 0 ? xi0.values() : Eigen::Vector2d(filtered.row(t - 1).transpose());
        for (int j = 0; j < 2; ++j) {
            const double pred = predicted(t, j);
            if (pred < kMinPredicted) {
                // P(s_t = j | X_{t-1}) = 0 forces every joint term with s_t = j to 0
                if (smoothed(t, j) > 0.0) {
                    std::ostringstream msg;
                    msg << "predicted probability below 1e-300 at t = " << t;
                    throw Error(ErrorCode::ZeroPredicted, msg.str(), t);
                }
                for (int i = 0; i < 2; ++i) cross(t, cross_index(j, i)) = 0.0;
                continue;
            }
            const double ratio = smoothed(t, j) / pred;
            for (int i = 0; i < 2; ++i) cross(t, cross_index(j, i)) = trans(i, j) * ratio * prev(i);
        }
    }
    return cross;
}

ProbabilityPath filter_smooth(const LogDensitySeries& log_eta, const TransitionMatrix& trans,
                              const StateProbabilities& xi0) {
    FilterResult fr = hamilton_filter(log_eta, trans, xi0);
    ProbabilityPath path;
    path.smoothed = kim_smoother(fr.predicted, fr.filtered, trans);
    path.cross = smoothed_cross_probs(fr.predicted, fr.filtered, path.smoothed, trans, xi0);
    path.predicted = std::move(fr.predicted);
    path.filtered = std::move(fr.filtered);
    path.loglik = fr.loglik;
    return path;
}

} // namespace msfm
