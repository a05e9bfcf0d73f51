#include "msfm/oracle.hpp"

#include "msfm/em.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace msfm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double safe_log(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

// Path bits: bit 0 is s_0, bit t is s_t for t = 1..T.
int state_at(std::uint32_t path, Index t) { return static_cast<int>((path >> t) & 1u); }

double path_log_weight(std::uint32_t path, const LogDensitySeries& eta, const TransitionMatrix& trans,
                       const StateProbabilities& xi0) {
    double w = safe_log(xi0[state_at(path, 0)]);
    if (w == kNegInf) return w;
    for (Index t = 1; t <= eta.t_len(); ++t) {
        const double lp = safe_log(trans(state_at(path, t - 1), state_at(path, t)));
        if (lp == kNegInf) return kNegInf;
        w += lp + eta(t - 1, state_at(path, t));
    }
    return w;
}

// Normalised path weights; zero-probability paths get weight 0.
std::vector<double> posterior_weights(const LogDensitySeries& eta, const TransitionMatrix& trans,
                                      const StateProbabilities& xi0, double& log_total) {
    if (eta.t_len() > kMaxEnumerationLength)
        throw Error(ErrorCode::TooLong, "path enumeration limited to T <= 16");
    const std::uint32_t n_paths = 1u << (eta.t_len() + 1);
    std::vector<double> logw(n_paths);
    double m = kNegInf;
    for (std::uint32_t p = 0; p < n_paths; ++p) {
        logw[p] = path_log_weight(p, eta, trans, xi0);
        m = std::max(m, logw[p]);
    }
    if (m == kNegInf) throw Error(ErrorCode::Degenerate, "every regime path has zero probability");

    // sorted accumulation keeps the reduction independent of path order
    std::vector<double> terms(n_paths);
    for (std::uint32_t p = 0; p < n_paths; ++p) terms[p] = std::exp(logw[p] - m);
    std::vector<double> sorted = terms;
    std::sort(sorted.begin(), sorted.end());
    double total = 0.0;
    for (double v : sorted) total += v;
    log_total = m + std::log(total);
    for (double& v : terms) v /= total;
    return terms;
}

} // namespace

EnumeratedPosterior enumerate_posterior(const LogDensitySeries& log_eta, const TransitionMatrix& trans,
                                        const StateProbabilities& xi0) {
    const Index t_len = log_eta.t_len();
    EnumeratedPosterior out;
    const std::vector<double> w = posterior_weights(log_eta, trans, xi0, out.loglik);
    out.smoothed = Matrix::Zero(t_len, 2);
    out.cross = Matrix::Zero(t_len, 4);
    for (std::uint32_t p = 0; p < w.size(); ++p) {
        if (w[p] == 0.0) continue;
        out.initial(state_at(p, 0)) += w[p];
        for (Index t = 1; t <= t_len; ++t) {
            out.smoothed(t - 1, state_at(p, t)) += w[p];
            out.cross(t - 1, cross_index(state_at(p, t), state_at(p, t - 1))) += w[p];
        }
    }
    return out;
}

double enumerate_expected_loglik(const LogDensitySeries& post_eta, const TransitionMatrix& post_trans,
                                 const StateProbabilities& xi0, const LogDensitySeries& eval_eta,
                                 const TransitionMatrix& eval_trans) {
    if (post_eta.t_len() != eval_eta.t_len())
        throw Error(ErrorCode::DimensionMismatch, "density series lengths disagree");
    double log_total = 0.0;
    const std::vector<double> w = posterior_weights(post_eta, post_trans, xi0, log_total);
    double q = 0.0;
    for (std::uint32_t p = 0; p < w.size(); ++p) {
        if (w[p] == 0.0) continue;
        q += w[p] * path_log_weight(p, eval_eta, eval_trans, xi0);
    }
    return q;
}

// ----------------------------------------------------------------------------

double OracleDeviation::max() const {
    return std::max({loglik, smoothed, cross, expected_loglik});
}

namespace {

ModelParams random_params(Index n, Index k, Rng& rng) {
    ModelParams p;
    p.b1 = Matrix(n, k);
    p.b2 = Matrix(n, k);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < k; ++j) {
            p.b1(i, j) = rng.normal();
            p.b2(i, j) = rng.normal();
        }
    p.sigma_e1_diag = Vector(n);
    p.sigma_e2_diag = Vector(n);
    for (Index i = 0; i < n; ++i) {
        p.sigma_e1_diag(i) = rng.uniform(0.3, 2.0);
        p.sigma_e2_diag(i) = rng.uniform(0.3, 2.0);
    }
    p.trans = TransitionMatrix(rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95));
    return p;
}

} // namespace

OracleSuiteReport run_oracle_suite(int instances, Index max_n, Index max_t, std::uint64_t seed) {
    OracleSuiteReport report;
    for (int inst = 0; inst < instances; ++inst) {
        Rng rng({seed, static_cast<std::uint64_t>(inst)});
        const Index n = 1 + static_cast<Index>(rng.uniform() * static_cast<double>(max_n));
        const Index t_len = 2 + static_cast<Index>(rng.uniform() * static_cast<double>(max_t - 1));
        const Index k = 1 + static_cast<Index>(rng.uniform() * 2.0);

        Matrix x(t_len, n);
        Matrix g(t_len, k);
        for (Index t = 0; t < t_len; ++t) {
            for (Index i = 0; i < n; ++i) x(t, i) = 1.5 * rng.normal();
            for (Index j = 0; j < k; ++j) g(t, j) = rng.normal();
        }
        const ModelParams old_params = random_params(n, k, rng);
        const ModelParams new_params = random_params(n, k, rng);
        const double u = rng.uniform();
        const StateProbabilities xi0 = u < 0.25 ? StateProbabilities::unit(0)
                                     : u < 0.5  ? StateProbabilities::unit(1)
                                                : StateProbabilities(u, 1.0 - u);

        const LogDensitySeries eta_old = log_eta(x, g, old_params);
        const LogDensitySeries eta_new = log_eta(x, g, new_params);
        const ProbabilityPath path = filter_smooth(eta_old, old_params.trans, xi0);
        const EnumeratedPosterior exact = enumerate_posterior(eta_old, old_params.trans, xi0);

        const double q_fast = expected_loglik(eta_new, path, new_params.trans, xi0);
        const double q_exact = enumerate_expected_loglik(eta_old, old_params.trans, xi0, eta_new, new_params.trans);

        OracleDeviation& w = report.worst;
        w.loglik = std::max(w.loglik, std::abs(path.loglik - exact.loglik));
        w.smoothed = std::max(w.smoothed, (path.smoothed - exact.smoothed).cwiseAbs().maxCoeff());
        w.cross = std::max(w.cross, (path.cross - exact.cross).cwiseAbs().maxCoeff());
        w.expected_loglik = std::max(w.expected_loglik, std::abs(q_fast - q_exact));
        ++report.instances;
    }
    return report;
}

} // namespace msfm
