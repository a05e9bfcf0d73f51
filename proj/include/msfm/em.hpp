#ifndef MSFM_EM_HPP
#define MSFM_EM_HPP

#include "msfm/core_types.hpp"
#include "msfm/filter.hpp"

#include <utility>
#include <vector>

namespace msfm {

/// Numerator of the idiosyncratic variance update. Weighted is the
/// quasi-likelihood maximiser; Unweighted sums squared residuals over every
/// period and divides by the regime's expected number of periods.
enum class VarianceUpdate { Weighted, Unweighted };

struct EmConfig {
    int max_iter = 100;
    double epsilon = 1e-6;  ///< relative change of the log-likelihood
    double omega1 = 0.2;    ///< P^(0)_11 = 0.5 + omega1
    double omega2 = 0.1;    ///< P^(0)_22 = 0.5 + omega2
    StateProbabilities xi0 = StateProbabilities::unit(0);
    VarianceUpdate variance_update = VarianceUpdate::Weighted;

    /// 0 < omega2 < omega1 < 0.5, max_iter >= 1, epsilon > 0.
    void validate() const;
};

struct EmResult {
    ModelParams params;    ///< q^(k*+1)
    ProbabilityPath path;  ///< E-step under params
    /// Entry k is the filter log-likelihood at q^(k+1), the parameters produced
    /// by iteration k.
    std::vector<double> loglik_trace;
    /// Entry k is the maximised expected complete-data log-likelihood
    /// Q(q^(k+1) | q^(k)).
    std::vector<double> expected_loglik_trace;
    double initial_loglik = 0.0;  ///< filter log-likelihood at q^(0)
    int iterations = 0;           ///< k* + 1, or max_iter
    bool converged = false;
    StateProbabilities xi0 = StateProbabilities::unit(0);  ///< filter start, follows relabeling
};

/// B1 = B2 = a_hat, both variance vectors from the PCA residuals, and
/// P = [[0.5 + omega1, 0.5 - omega1], [0.5 - omega2, 0.5 + omega2]].
ModelParams init_params(const Panel& panel, const FactorSpace& fs, const EmConfig& cfg);

/// (sum_t w_t x_t g_t')(sum_t w_t g_t g_t')^{-1}. Throws SingularGram when
/// the weighted Gram matrix has reciprocal condition below 1e-12.
Matrix weighted_loadings(const Matrix& x, const Matrix& g_hat, const Vector& weights);

/// Both regimes' loadings, weights = smoothed columns.
std::pair<Matrix, Matrix> m_step_loadings(const Panel& panel, const Matrix& g_hat, const Matrix& smoothed);

/// Weighted per-series residual variances, floored. Throws EmptyRegime when a
/// regime's total weight is below 1e-8 T.
std::pair<Vector, Vector> m_step_variances(const Panel& panel, const Matrix& g_hat, const Matrix& b1,
                                           const Matrix& b2, const Matrix& smoothed, double floor,
                                           VarianceUpdate update = VarianceUpdate::Weighted);

enum class StartTerm {
    /// Sum over t = 1..T including the (s_1, s_0) pair; the s_0 weight is the
    /// marginal of that first cross row.
    IncludeKnownStart,
    /// Sum over t = 2..T only, denominators from smoothed rows 1..T-1.
    SampleOnly,
};

/// p_ij = sum_t P(s_t = j, s_{t-1} = i) / sum_t P(s_{t-1} = i).
TransitionMatrix m_step_transition(const Matrix& cross, const Matrix& smoothed,
                                   StartTerm start = StartTerm::IncludeKnownStart);

/// One full M-step from a smoothed path.
ModelParams m_step(const Panel& panel, const Matrix& g_hat, const ProbabilityPath& path, double floor,
                   VarianceUpdate update = VarianceUpdate::Weighted);

/// Expected complete-data log-likelihood under the path's posterior:
///   sum_t sum_j xi_{j,t|T} log eta_jt + sum_t sum_ij xi_{(j,i),t|T} log p_ij
///   + sum_i xi_{i,0|T} log xi0_i
/// with 0 log 0 = 0.
double expected_loglik(const LogDensitySeries& log_eta, const ProbabilityPath& path,
                       const TransitionMatrix& trans, const StateProbabilities& xi0);

/// True when regime 2 has the larger stationary probability.
bool needs_relabel(const ModelParams& params);

/// Swaps regime labels everywhere when needs_relabel; identity otherwise.
std::pair<ModelParams, ProbabilityPath> relabel_states(ModelParams params, ProbabilityPath path);

/// Unconditional swap of every regime-indexed quantity.
ModelParams swap_regimes(const ModelParams& params);
ProbabilityPath swap_regimes(const ProbabilityPath& path);

/// EM from the PCA initialisation.
EmResult run_em(const Panel& panel, const FactorSpace& fs, const EmConfig& cfg);

/// EM from explicit starting parameters.
EmResult run_em_from(const Panel& panel, const Matrix& g_hat, ModelParams initial, const EmConfig& cfg);

/// |a - b| / (|a + b| / 2).
double relative_change(double current, double previous);

} // namespace msfm

#endif
