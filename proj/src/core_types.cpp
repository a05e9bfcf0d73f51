#include "msfm/core_types.hpp"

#include <cmath>
#include <sstream>

namespace msfm {

const char* to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::TooSmall: return "TooSmall";
    case ErrorCode::Degenerate: return "Degenerate";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::NotPD: return "NotPD";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DegeneratePrediction: return "DegeneratePrediction";
    case ErrorCode::ZeroPredicted: return "ZeroPredicted";
    case ErrorCode::SingularGram: return "SingularGram";
    case ErrorCode::EmptyRegime: return "EmptyRegime";
    case ErrorCode::SingularV: return "SingularV";
    case ErrorCode::ZeroSignal: return "ZeroSignal";
    case ErrorCode::TooLong: return "TooLong";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message,
             std::optional<Index> row, std::optional<Index> col)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code), row_(row), col_(col) {}

// ----------------------------------------------------------------------------

Panel validate_panel(Matrix data) {
    if (data.rows() < 2 || data.cols() < 2) {
        std::ostringstream msg;
        msg << "panel must have T >= 2 and N >= 2, got " << data.rows() << "x" << data.cols();
        throw Error(ErrorCode::TooSmall, msg.str());
    }
    for (Index j = 0; j < data.cols(); ++j) {
        for (Index i = 0; i < data.rows(); ++i) {
            if (!std::isfinite(data(i, j))) {
                std::ostringstream msg;
                msg << "non-finite value at row " << i << ", col " << j;
                throw Error(ErrorCode::NonFinite, msg.str(), i, j);
            }
        }
    }
    return Panel(std::move(data));
}

double variance_floor(const Panel& panel) {
    const Matrix& x = panel.data();
    const double mean = x.mean();
    const double var = (x.array() - mean).square().sum() / static_cast<double>(x.size());
    // an exactly constant panel still needs a positive floor
    return 1e-10 * (var > 0.0 ? var : 1.0);
}

// ----------------------------------------------------------------------------

namespace {

void check_probability(double p, const char* what) {
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
        std::ostringstream msg;
        msg << what << " must lie in [0, 1], got " << p;
        throw Error(ErrorCode::InvalidArgument, msg.str());
    }
}

} // namespace

TransitionMatrix::TransitionMatrix(const Eigen::Matrix2d& p) : p_(p) {
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) check_probability(p_(i, j), "transition probability");
        if (std::abs(p_.row(i).sum() - 1.0) > 1e-12)
            throw Error(ErrorCode::InvalidArgument, "transition matrix rows must sum to 1");
    }
}

TransitionMatrix::TransitionMatrix(double p11, double p22) {
    check_probability(p11, "p11");
    check_probability(p22, "p22");
    p_ << p11, 1.0 - p11, 1.0 - p22, p22;
}

TransitionMatrix TransitionMatrix::swapped() const {
    Eigen::Matrix2d q;
    q << p_(1, 1), p_(1, 0), p_(0, 1), p_(0, 0);
    return TransitionMatrix(q);
}

StateProbabilities::StateProbabilities(double first, double second)
    : StateProbabilities(Eigen::Vector2d(first, second)) {}

StateProbabilities::StateProbabilities(const Eigen::Vector2d& values) : v_(values) {
    check_probability(v_(0), "state probability");
    check_probability(v_(1), "state probability");
    if (std::abs(v_.sum() - 1.0) > 1e-12)
        throw Error(ErrorCode::InvalidArgument, "state probabilities must sum to 1");
}

StateProbabilities StateProbabilities::unit(int regime) {
    if (regime != 0 && regime != 1)
        throw Error(ErrorCode::InvalidArgument, "regime index must be 0 or 1");
    return regime == 0 ? StateProbabilities(1.0, 0.0) : StateProbabilities(0.0, 1.0);
}

StateProbabilities unconditional_probs(const TransitionMatrix& trans) {
    const double p11 = trans(0, 0);
    const double p22 = trans(1, 1);
    const double denom = 2.0 - p11 - p22;
    if (denom <= 0.0)
        throw Error(ErrorCode::Degenerate, "p11 = p22 = 1 has no unique stationary distribution");
    const double first = (1.0 - p22) / denom;
    return {first, 1.0 - first};
}

// ----------------------------------------------------------------------------

void ModelParams::validate(double floor) const {
    const Index n_len = b1.rows();
    if (b2.rows() != n_len || b2.cols() != b1.cols() || sigma_e1_diag.size() != n_len ||
        sigma_e2_diag.size() != n_len)
        throw Error(ErrorCode::DimensionMismatch, "model parameter shapes disagree");
    if (!b1.allFinite() || !b2.allFinite())
        throw Error(ErrorCode::NonFinite, "loadings contain non-finite values");
    if (!(sigma_e1_diag.array() >= floor).all() || !(sigma_e2_diag.array() >= floor).all())
        throw Error(ErrorCode::InvalidArgument, "idiosyncratic variance below floor");
}

// ----------------------------------------------------------------------------

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

Rng::Rng(RngHandle handle)
    : handle_(handle),
      engine_(splitmix64(handle.seed ^ splitmix64(handle.stream + 0x632be59bd9b4e019ULL))) {}

double Rng::uniform() { return unif_(engine_); }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() { return norm_(engine_); }

double Rng::normal(double mean, double sd) { return mean + sd * normal(); }

} // namespace msfm
