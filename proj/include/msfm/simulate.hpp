#ifndef MSFM_SIMULATE_HPP
#define MSFM_SIMULATE_HPP

#include "msfm/core_types.hpp"

#include <utility>
#include <vector>

namespace msfm {

/// Monte Carlo design: two regimes, r factors each, shared factor path.
struct SimConfig {
    Index n = 100;
    Index t = 500;
    int r = 1;
    double p11 = 0.9;
    double p22 = 0.7;
    double rho_f = 0.0;          ///< factor AR(1) coefficient
    double tau = 0.0;            ///< banded idiosyncratic covariance decay
    double rho_idio_max = 0.0;   ///< idiosyncratic AR coefficients ~ U[0, rho_idio_max]
    double noise_to_signal = 0.5;
    std::uint64_t seed = 1;

    void validate() const;
};

struct SimTruth {
    Panel panel;
    std::vector<int> states;  ///< regime per period, 0 or 1
    Matrix xi;                ///< T x 2 one-hot
    Matrix f;                 ///< T x r
    Matrix lambda1;           ///< N x r
    Matrix lambda2;           ///< N x r
    Matrix chi;               ///< T x N common component
    Matrix e;                 ///< T x N idiosyncratic component

    /// Linear-representation factors g_t = [f_t I(s_t=1); f_t I(s_t=2)], T x 2r.
    Matrix g() const;
    /// A = [Lambda_1 Lambda_2].
    Matrix a() const;
    /// B_1 = [Lambda_1 0].
    Matrix b1() const;
    /// B_2 = [0 Lambda_2].
    Matrix b2() const;
};

struct Chain {
    std::vector<int> states;
    Matrix xi;
};

/// First state from the stationary distribution, then u_t ~ U[0,1] against
/// the row of P for the previous state.
Chain simulate_chain(double p11, double p22, Index t, Rng& rng);

/// AR(1) columns with N(0,1) innovations, whitened so that F'F/T = I_r.
Matrix simulate_factors(Index t, int r, double rho_f, Rng& rng);

/// N(1,1) loadings rotated by the eigenvectors of their own Gram matrix.
std::pair<Matrix, Matrix> simulate_loadings(Index n, int r, Rng& rng);

/// Diagonal U[0.25,1.25] / U[0.75,1.75] parts plus banded Toeplitz parts.
/// Throws NotPD if either assembled matrix is not positive definite.
std::pair<Matrix, Matrix> build_idio_covariances(Index n, double tau, Rng& rng);

/// e_t = Sigma_{s_t}^{1/2} nu_t with unit-variance AR(1) nu columns.
Matrix simulate_idiosyncratic(const Matrix& sigma_e1, const Matrix& sigma_e2,
                              const std::vector<int>& states, double rho_idio_max, Rng& rng);

/// Full design, idiosyncratic part rescaled to hit cfg.noise_to_signal.
SimTruth simulate_panel(const SimConfig& cfg, Rng& rng);

/// Symmetric PSD square root through the eigendecomposition.
Matrix symmetric_sqrt(const Matrix& sym);

/// N^{-1} sum_i (sum_t e_it^2 / sum_t chi_it^2).
double noise_to_signal_ratio(const Matrix& e, const Matrix& chi);

} // namespace msfm

#endif
