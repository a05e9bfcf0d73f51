#ifndef MSFM_FILTER_HPP
#define MSFM_FILTER_HPP

#include "msfm/core_types.hpp"

namespace msfm {

/// T x 2 regime-conditional Gaussian log densities log eta_{jt}.
class LogDensitySeries {
public:
    explicit LogDensitySeries(Matrix values);

    const Matrix& values() const noexcept { return values_; }
    Index t_len() const noexcept { return values_.rows(); }
    double operator()(Index t, int j) const { return values_(t, j); }

    /// Columns exchanged.
    LogDensitySeries swapped() const;

private:
    Matrix values_;
};

/// Diagonal-covariance Gaussian log densities of x_t given g_t in each regime,
/// including the -(N/2) log(2 pi) constant.
LogDensitySeries log_eta(const Panel& panel, const Matrix& g_hat, const ModelParams& params);

/// Same, on a raw T x N observation matrix (N = 1 allowed).
LogDensitySeries log_eta(const Matrix& x, const Matrix& g_hat, const ModelParams& params);

struct FilterResult {
    Matrix predicted;  ///< T x 2, xi_{t|t-1}
    Matrix filtered;   ///< T x 2, xi_{t|t}
    double loglik = 0.0;
};

/// Hamilton forward recursion started from xi_{0|0} = xi0. The update is done
/// on log eta + log xi_{t|t-1} with log-sum-exp normalisation; loglik is the
/// sum of the log normalisers.
FilterResult hamilton_filter(const LogDensitySeries& log_eta, const TransitionMatrix& trans,
                             const StateProbabilities& xi0);

/// Kim backward recursion, xi_{T|T} = filtered[T]. A predicted probability
/// below 1e-300 is fine for a state with no smoothed mass; otherwise throws
/// ZeroPredicted.
Matrix kim_smoother(const Matrix& predicted, const Matrix& filtered, const TransitionMatrix& trans);

/// Joint smoothed probabilities of (s_t, s_{t-1}), T x 4 (see ProbabilityPath).
/// Row 0 uses xi0 in place of the filtered probabilities at t = 0.
Matrix smoothed_cross_probs(const Matrix& predicted, const Matrix& filtered, const Matrix& smoothed,
                            const TransitionMatrix& trans, const StateProbabilities& xi0);

/// Filter, smoother and cross-probabilities in one pass.
ProbabilityPath filter_smooth(const LogDensitySeries& log_eta, const TransitionMatrix& trans,
                              const StateProbabilities& xi0);

/// log(exp(a) + exp(b)) without overflow; -inf if both are -inf.
double log_sum_exp(double a, double b);

} // namespace msfm

#endif
