#include "msfm/em.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <tuple>

namespace msfm {

void EmConfig::validate() const {
    if (max_iter < 1) throw Error(ErrorCode::InvalidArgument, "max_iter must be >= 1");
    if (!(epsilon > 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be positive");
    if (!(omega2 > 0.0 && omega2 < omega1 && omega1 < 0.5))
        throw Error(ErrorCode::InvalidArgument, "need 0 < omega2 < omega1 < 0.5");
}

ModelParams init_params(const Panel& panel, const FactorSpace& fs, const EmConfig& cfg) {
    cfg.validate();
    if (fs.a_hat.rows() != panel.n_len() || fs.g_hat.rows() != panel.t_len())
        throw Error(ErrorCode::DimensionMismatch, "factor space was not computed on this panel");
    const double floor = variance_floor(panel);
    const Matrix resid = panel.data() - fs.g_hat * fs.a_hat.transpose();
    const Vector var = (resid.array().square().colwise().sum() / static_cast<double>(panel.t_len()))
                           .matrix()
                           .transpose()
                           .cwiseMax(floor);

    ModelParams p;
    p.b1 = fs.a_hat;
    p.b2 = fs.a_hat;
    p.sigma_e1_diag = var;
    p.sigma_e2_diag = var;
    p.trans = TransitionMatrix(0.5 + cfg.omega1, 0.5 + cfg.omega2);
    return p;
}

// ----------------------------------------------------------------------------

namespace {

Matrix regime_loadings(const Matrix& x, const Matrix& g_hat, const Vector& weights, const std::string& label) {
    if (g_hat.rows() != x.rows() || weights.size() != x.rows())
        throw Error(ErrorCode::DimensionMismatch, "weights, panel and factors disagree in length");
    const Matrix wg = weights.asDiagonal() * g_hat;
    const Matrix gram = g_hat.transpose() * wg;
    const Matrix xg = x.transpose() * wg;  // N x k

    Eigen::SelfAdjointEigenSolver<Matrix> es(gram, Eigen::EigenvaluesOnly);
    const double hi = es.eigenvalues().maxCoeff();
    const double lo = es.eigenvalues().minCoeff();
    if (!(hi > 0.0) || !(lo > 1e-12 * hi)) {
        std::ostringstream msg;
        msg << label << "weighted factor Gram matrix is singular (condition number "
            << (lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity()) << ")";
        throw Error(ErrorCode::SingularGram, msg.str());
    }
    return gram.ldlt().solve(xg.transpose()).transpose();
}

} // namespace

Matrix weighted_loadings(const Matrix& x, const Matrix& g_hat, const Vector& weights) {
    return regime_loadings(x, g_hat, weights, "");
}

std::pair<Matrix, Matrix> m_step_loadings(const Panel& panel, const Matrix& g_hat, const Matrix& smoothed) {
    if (smoothed.rows() != panel.t_len() || smoothed.cols() != 2)
        throw Error(ErrorCode::DimensionMismatch, "smoothed probabilities must be T x 2");
    Matrix b[2];
    for (int j = 0; j < 2; ++j)
        b[j] = regime_loadings(panel.data(), g_hat, smoothed.col(j), "regime " + std::to_string(j + 1) + ": ");
    return {std::move(b[0]), std::move(b[1])};
}

std::pair<Vector, Vector> m_step_variances(const Panel& panel, const Matrix& g_hat, const Matrix& b1,
                                           const Matrix& b2, const Matrix& smoothed, double floor,
                                           VarianceUpdate update) {
    const Index t_len = panel.t_len();
    Vector out[2];
    for (int j = 0; j < 2; ++j) {
        const Vector w = smoothed.col(j);
        const double total = w.sum();
        if (!(total >= 1e-8 * static_cast<double>(t_len))) {
            std::ostringstream msg;
            msg << "regime " << j + 1 << " carries total weight " << total;
            throw Error(ErrorCode::EmptyRegime, msg.str());
        }
        const Matrix& b = j == 0 ? b1 : b2;
        const Matrix resid = panel.data() - g_hat * b.transpose();
        const Vector ssr = update == VarianceUpdate::Weighted
                               ? Vector((w.transpose() * resid.array().square().matrix()).transpose())
                               : Vector(resid.array().square().colwise().sum().transpose());
        out[j] = (ssr / total).cwiseMax(floor);
    }
    return {std::move(out[0]), std::move(out[1])};
}

TransitionMatrix m_step_transition(const Matrix& cross, const Matrix& smoothed, StartTerm start) {
    const Index t_len = cross.rows();
    if (cross.cols() != 4 || smoothed.rows() != t_len || smoothed.cols() != 2)
        throw Error(ErrorCode::DimensionMismatch, "cross must be T x 4 and smoothed T x 2");

    Eigen::Matrix2d num = Eigen::Matrix2d::Zero();
    Eigen::Vector2d den = Eigen::Vector2d::Zero();
    const Index first = start == StartTerm::IncludeKnownStart ? 0 : 1;
    for (Index t = first; t < t_len; ++t)
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) num(i, j) += cross(t, cross_index(j, i));

    if (start == StartTerm::IncludeKnownStart) {
        // sum_{t=0}^{T-1} xi_{t|T}: s_0 weight from the first cross row, the
        // rest from the cross rows' s_{t-1} marginals
        den = num.rowwise().sum();
    } else {
        for (Index t = 0; t + 1 < t_len; ++t) den += smoothed.row(t).transpose();
    }
    for (int i = 0; i < 2; ++i) {
        if (!(den(i) > 0.0)) {
            std::ostringstream msg;
            msg << "regime " << i + 1 << " has no expected visits before T";
            throw Error(ErrorCode::EmptyRegime, msg.str());
        }
    }
    return TransitionMatrix(num(0, 0) / den(0), num(1, 1) / den(1));
}

ModelParams m_step(const Panel& panel, const Matrix& g_hat, const ProbabilityPath& path, double floor,
                   VarianceUpdate update) {
    ModelParams next;
    std::tie(next.b1, next.b2) = m_step_loadings(panel, g_hat, path.smoothed);
    std::tie(next.sigma_e1_diag, next.sigma_e2_diag) =
        m_step_variances(panel, g_hat, next.b1, next.b2, path.smoothed, floor, update);
    next.trans = m_step_transition(path.cross, path.smoothed, StartTerm::IncludeKnownStart);
    return next;
}

// ----------------------------------------------------------------------------

namespace {

double weighted_log(double weight, double prob) {
    if (weight == 0.0) return 0.0;
    return weight * std::log(prob);  // -inf if a positive weight meets p = 0
}

} // namespace

double expected_loglik(const LogDensitySeries& log_eta, const ProbabilityPath& path,
                       const TransitionMatrix& trans, const StateProbabilities& xi0) {
    const Index t_len = log_eta.t_len();
    if (path.smoothed.rows() != t_len || path.cross.rows() != t_len)
        throw Error(ErrorCode::DimensionMismatch, "path and densities disagree in length");
    double q = 0.0;
    for (Index t = 0; t < t_len; ++t) {
        for (int j = 0; j < 2; ++j) q += path.smoothed(t, j) * log_eta(t, j);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) q += weighted_log(path.cross(t, cross_index(j, i)), trans(i, j));
    }
    if (t_len > 0) {
        for (int i = 0; i < 2; ++i) {
            const double w0 = path.cross(0, cross_index(0, i)) + path.cross(0, cross_index(1, i));
            q += weighted_log(w0, xi0[i]);
        }
    }
    return q;
}

// ----------------------------------------------------------------------------

bool needs_relabel(const ModelParams& params) {
    const StateProbabilities bar = unconditional_probs(params.trans);
    return bar[0] < bar[1];
}

ModelParams swap_regimes(const ModelParams& params) {
    ModelParams out;
    out.b1 = params.b2;
    out.b2 = params.b1;
    out.sigma_e1_diag = params.sigma_e2_diag;
    out.sigma_e2_diag = params.sigma_e1_diag;
    out.trans = params.trans.swapped();
    return out;
}

ProbabilityPath swap_regimes(const ProbabilityPath& path) {
    ProbabilityPath out;
    out.predicted = path.predicted.rowwise().reverse();
    out.filtered = path.filtered.rowwise().reverse();
    out.smoothed = path.smoothed.rowwise().reverse();
    // index j + 2i maps to (1-j) + 2(1-i) = 3 - (j + 2i)
    out.cross = path.cross.rowwise().reverse();
    out.loglik = path.loglik;
    return out;
}

std::pair<ModelParams, ProbabilityPath> relabel_states(ModelParams params, ProbabilityPath path) {
    if (!needs_relabel(params)) return {std::move(params), std::move(path)};
    return {swap_regimes(params), swap_regimes(path)};
}

// ----------------------------------------------------------------------------

double relative_change(double current, double previous) {
    const double diff = std::abs(current - previous);
    const double scale = 0.5 * std::abs(current + previous);
    if (scale == 0.0) return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return diff / scale;
}

EmResult run_em_from(const Panel& panel, const Matrix& g_hat, ModelParams initial, const EmConfig& cfg) {
    if (cfg.max_iter < 1) throw Error(ErrorCode::InvalidArgument, "max_iter must be >= 1");
    if (!(cfg.epsilon > 0.0)) throw Error(ErrorCode::InvalidArgument, "epsilon must be positive");
    const double floor = variance_floor(panel);
    initial.validate(floor);
    if (!initial.trans.irreducible())
        throw Error(ErrorCode::InvalidArgument, "initial transition matrix must be irreducible");

    EmResult res;
    res.xi0 = cfg.xi0;
    res.params = std::move(initial);
    res.path = filter_smooth(log_eta(panel, g_hat, res.params), res.params.trans, res.xi0);
    res.initial_loglik = res.path.loglik;

    for (int k = 0; k < cfg.max_iter; ++k) {
        // q^(k) -> q^(k+1), relabel, then the E-step under q^(k+1)
        ModelParams next = m_step(panel, g_hat, res.path, floor, cfg.variance_update);
        LogDensitySeries eta = log_eta(panel, g_hat, next);
        res.expected_loglik_trace.push_back(expected_loglik(eta, res.path, next.trans, res.xi0));
        if (needs_relabel(next)) {
            next = swap_regimes(next);
            eta = eta.swapped();
            res.xi0 = res.xi0.swapped();
        }
        res.params = std::move(next);
        res.path = filter_smooth(eta, res.params.trans, res.xi0);
        res.loglik_trace.push_back(res.path.loglik);

        if (k >= 1 && relative_change(res.loglik_trace[k], res.loglik_trace[k - 1]) < cfg.epsilon) {
            res.converged = true;
            break;
        }
    }
    res.iterations = static_cast<int>(res.loglik_trace.size());
    return res;
}

EmResult run_em(const Panel& panel, const FactorSpace& fs, const EmConfig& cfg) {
    return run_em_from(panel, fs.g_hat, init_params(panel, fs, cfg), cfg);
}

} // namespace msfm
