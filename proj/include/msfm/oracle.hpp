#ifndef MSFM_ORACLE_HPP
#define MSFM_ORACLE_HPP

#include "msfm/core_types.hpp"
#include "msfm/filter.hpp"

namespace msfm {

/// Exact posterior by summing over every regime path (s_0, s_1, ..., s_T),
/// s_0 ~ xi0. Desk-scale reference for the filter and smoother.
struct EnumeratedPosterior {
    double loglik = 0.0;
    Matrix smoothed;  ///< T x 2
    Matrix cross;     ///< T x 4, same layout as ProbabilityPath::cross
    Eigen::Vector2d initial = Eigen::Vector2d::Zero();  ///< posterior of s_0
};

inline constexpr Index kMaxEnumerationLength = 16;

/// Throws TooLong when T > 16.
EnumeratedPosterior enumerate_posterior(const LogDensitySeries& log_eta, const TransitionMatrix& trans,
                                        const StateProbabilities& xi0);

/// Expected complete-data log-likelihood E[log p(X, s_0..s_T; eval) | X; post],
/// by enumeration. The posterior comes from (post_eta, post_trans, xi0) and the
/// evaluated densities/transitions from (eval_eta, eval_trans). Zero-weight
/// paths contribute nothing even where the log-probability is -inf.
double enumerate_expected_loglik(const LogDensitySeries& post_eta, const TransitionMatrix& post_trans,
                                 const StateProbabilities& xi0, const LogDensitySeries& eval_eta,
                                 const TransitionMatrix& eval_trans);

/// Largest absolute deviations between filter_smooth and the enumeration.
struct OracleDeviation {
    double loglik = 0.0;
    double smoothed = 0.0;
    double cross = 0.0;
    double expected_loglik = 0.0;

    double max() const;
};

struct OracleSuiteReport {
    int instances = 0;
    OracleDeviation worst;
};

/// Random instances with N in [1, max_n], T in [2, max_t], random valid
/// parameters; compares filter, smoother, cross-probabilities and the
/// expected log-likelihood against enumeration.
OracleSuiteReport run_oracle_suite(int instances, Index max_n, Index max_t, std::uint64_t seed);

} // namespace msfm

#endif
