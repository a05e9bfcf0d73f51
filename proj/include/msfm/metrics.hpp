#ifndef MSFM_METRICS_HPP
#define MSFM_METRICS_HPP

#include "msfm/core_types.hpp"

#include <vector>

namespace msfm {

/// Rotation linking estimated and true factors:
/// (G'G/T)(A'A_hat/N) V^{-1}, V = diag(eigvals)/N.
Matrix hat_H(const Matrix& g_true, const Matrix& a_true, const Matrix& a_hat, const Vector& eigvals);

/// (sum_t w_t I(s_t = regime) g_t g_t')(sum_t w_t g_t g_t')^{-1}.
Matrix hat_I_xi(const Vector& smoothed_col, const std::vector<int>& states, int regime, const Matrix& g_hat);

/// B_1 I + B_2 (I - I).
Matrix bias_adjusted_target(const Matrix& b1_true, const Matrix& b2_true, const Matrix& i_xi);

/// tr(B*' P B*) / tr(B*' B*) with P the projection on span(b1_hat).
double r2_bstar(const Matrix& b1_hat, const Matrix& b1_star);

/// chi_hat_it = xi_1t b_1i' g_t + xi_2t b_2i' g_t.
Matrix common_component(const Matrix& b1_hat, const Matrix& b2_hat, const Matrix& g_hat, const Matrix& smoothed);

/// sum (chi_hat - chi)^2 / sum chi^2.
double mse_common(const Matrix& chi_hat, const Matrix& chi_true);

/// f_jt = xi_jt Lambda_j' x_t / N.
Matrix regime_factors(const Matrix& x, const Matrix& lambda_hat, const Vector& smoothed_col);

/// Per-replication Monte Carlo summary.
struct MetricsReport {
    double p11_hat = 0.0;
    double p22_hat = 0.0;
    double xi1_bar = 0.0;  ///< T^{-1} sum_t xi_{1,t|T}
    double xi2_bar = 0.0;
    double r2_bstar = 0.0;
    double mse_chi = 0.0;
    int iterations = 0;
    bool converged = false;
};

} // namespace msfm

#endif
