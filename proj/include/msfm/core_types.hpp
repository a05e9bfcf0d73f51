#ifndef MSFM_CORE_TYPES_HPP
#define MSFM_CORE_TYPES_HPP

#include <Eigen/Dense>

#include <boost/random/mersenne_twister.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_01.hpp>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace msfm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// ============================================================================
// Errors
// ============================================================================

enum class ErrorCode {
    NonFinite,
    TooSmall,
    Degenerate,
    RankDeficient,
    NotPD,
    KTooLarge,
    DimensionMismatch,
    DegeneratePrediction,
    ZeroPredicted,
    SingularGram,
    EmptyRegime,
    SingularV,
    ZeroSignal,
    TooLong,
    ParseError,
    InvalidArgument,
    Io,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message,
          std::optional<Index> row = std::nullopt,
          std::optional<Index> col = std::nullopt);

    ErrorCode code() const noexcept { return code_; }
    std::optional<Index> row() const noexcept { return row_; }
    std::optional<Index> col() const noexcept { return col_; }

private:
    ErrorCode code_;
    std::optional<Index> row_;
    std::optional<Index> col_;
};

// ============================================================================
// Panel
// ============================================================================

/// T x N observations, one row per period. Construct through validate_panel.
class Panel {
public:
    const Matrix& data() const noexcept { return data_; }
    Index t_len() const noexcept { return data_.rows(); }
    Index n_len() const noexcept { return data_.cols(); }

    friend Panel validate_panel(Matrix data);

private:
    explicit Panel(Matrix data) : data_(std::move(data)) {}
    Matrix data_;
};

/// Rejects NaN/Inf (reporting the 0-based cell) and panels with T < 2 or N < 2.
Panel validate_panel(Matrix data);

/// 1e-10 times the pooled sample variance of every entry of the panel.
double variance_floor(const Panel& panel);

// ============================================================================
// Probabilities
// ============================================================================

/// Row-stochastic 2x2 matrix, p(i, j) = P(s_{t+1} = j | s_t = i), 0-based.
class TransitionMatrix {
public:
    explicit TransitionMatrix(const Eigen::Matrix2d& p);
    TransitionMatrix(double p11, double p22);

    double operator()(int i, int j) const { return p_(i, j); }
    const Eigen::Matrix2d& matrix() const noexcept { return p_; }

    /// p11 < 1 and p22 < 1.
    bool irreducible() const noexcept { return p_(0, 0) < 1.0 && p_(1, 1) < 1.0; }

    /// Regime labels exchanged: p11 <-> p22, p12 <-> p21.
    TransitionMatrix swapped() const;

private:
    Eigen::Matrix2d p_;
};

class StateProbabilities {
public:
    StateProbabilities(double first, double second);
    explicit StateProbabilities(const Eigen::Vector2d& values);

    /// Unit vector e_1 (regime 0) or e_2 (regime 1).
    static StateProbabilities unit(int regime);

    double operator[](int j) const { return v_(j); }
    const Eigen::Vector2d& values() const noexcept { return v_; }
    StateProbabilities swapped() const { return {v_(1), v_(0)}; }

private:
    Eigen::Vector2d v_;
};

/// Stationary distribution ((1-p22), (1-p11)) / (2 - p11 - p22).
StateProbabilities unconditional_probs(const TransitionMatrix& trans);

// ============================================================================
// Model containers
// ============================================================================

struct ModelParams {
    Matrix b1;  ///< N x k loadings, regime 1
    Matrix b2;  ///< N x k loadings, regime 2
    Vector sigma_e1_diag;
    Vector sigma_e2_diag;
    TransitionMatrix trans{0.5, 0.5};

    Index n() const { return b1.rows(); }
    Index k() const { return b1.cols(); }

    /// Shapes agree, loadings finite, variances >= floor.
    void validate(double floor) const;
};

struct FactorSpace {
    Matrix a_hat;   ///< N x k, a_hat' a_hat = N I
    Matrix g_hat;   ///< T x k
    Vector eigvals; ///< descending eigenvalues of T^{-1} sum x_t x_t'

    Index k() const { return a_hat.cols(); }
};

/// Regime probability series. Column j is regime j (0-based). Cross columns
/// hold P(s_t = j, s_{t-1} = i | X) at index j + 2 i, i.e. the ordering
/// (1,1), (2,1), (1,2), (2,2) in 1-based (s_t, s_{t-1}) notation. Row 0 of
/// cross pairs s_1 with the filter start s_0.
struct ProbabilityPath {
    Matrix predicted; ///< T x 2
    Matrix filtered;  ///< T x 2
    Matrix smoothed;  ///< T x 2
    Matrix cross;     ///< T x 4
    double loglik = 0.0;

    Index t_len() const { return smoothed.rows(); }
};

constexpr int cross_index(int s_t, int s_prev) { return s_t + 2 * s_prev; }

// ============================================================================
// Randomness
// ============================================================================

struct RngHandle {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
};

/// Seeded generator. Identical (seed, stream) gives identical draws; streams
/// are decorrelated by hashing both words into the engine seed.
class Rng {
public:
    explicit Rng(RngHandle handle);

    double uniform();                      ///< U[0, 1)
    double uniform(double lo, double hi);  ///< U[lo, hi)
    double normal();                       ///< N(0, 1)
    double normal(double mean, double sd);

    const RngHandle& handle() const noexcept { return handle_; }

private:
    RngHandle handle_;
    boost::random::mt19937_64 engine_;
    boost::random::uniform_01<double> unif_;
    boost::random::normal_distribution<double> norm_;
};

std::uint64_t splitmix64(std::uint64_t x);

} // namespace msfm

#endif
