#ifndef MSFM_PCA_HPP
#define MSFM_PCA_HPP

#include "msfm/core_types.hpp"

namespace msfm {

/// Subtracts each column's sample mean.
Panel demean_panel(const Panel& panel);

/// Uncentered second-moment matrix T^{-1} sum_t x_t x_t' (N x N).
Matrix sample_covariance(const Panel& panel);

/// All eigenvalues of sample_covariance, descending.
Vector covariance_eigenvalues(const Panel& panel);

/// Principal components of the linear representation: a_hat = sqrt(N) times
/// the top-k eigenvectors, g_hat_t = a_hat' x_t / N. Each eigenvector is
/// signed so that its largest-magnitude entry is positive.
FactorSpace estimate_factor_space(const Panel& panel, Index k);

/// Eigenvalue-ratio choice of the number of factors, k in 1..k_max.
Index select_num_factors_er(const Panel& panel, Index k_max);

/// Same criterion on a precomputed descending spectrum.
Index select_num_factors_er(const Vector& eigvals_desc, Index k_max);

} // namespace msfm

#endif
