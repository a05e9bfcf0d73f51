#include "msfm/pca.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <sstream>
#include <vector>

namespace msfm {

Panel demean_panel(const Panel& panel) {
    Matrix x = panel.data();
    x.rowwise() -= x.colwise().mean();
    return validate_panel(std::move(x));
}

Matrix sample_covariance(const Panel& panel) {
    const Matrix& x = panel.data();
    Matrix s = Matrix::Zero(x.cols(), x.cols());
    s.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose(), 1.0 / static_cast<double>(x.rows()));
    // mirror the lower triangle so the result is exactly symmetric
    s.triangularView<Eigen::StrictlyUpper>() = s.transpose();
    return s;
}

namespace {

struct SortedEigen {
    Vector values;   // descending
    Matrix vectors;  // matching columns
};

// Eigen returns ascending eigenvalues; reorder descending with a stable sort so
// exact ties keep the solver's original index order.
SortedEigen sorted_eigen(const Matrix& sym, bool want_vectors) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(
        sym, want_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    const Index n = sym.rows();
    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    const Vector& ev = es.eigenvalues();
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return ev(a) > ev(b); });

    SortedEigen out;
    out.values.resize(n);
    if (want_vectors) out.vectors.resize(n, n);
    for (Index j = 0; j < n; ++j) {
        out.values(j) = ev(order[static_cast<std::size_t>(j)]);
        if (want_vectors) out.vectors.col(j) = es.eigenvectors().col(order[static_cast<std::size_t>(j)]);
    }
    return out;
}

} // namespace

Vector covariance_eigenvalues(const Panel& panel) {
    return sorted_eigen(sample_covariance(panel), false).values;
}

FactorSpace estimate_factor_space(const Panel& panel, Index k) {
    const Index n = panel.n_len();
    if (k < 1 || k > std::min(n, panel.t_len())) {
        std::ostringstream msg;
        msg << "factor count " << k << " outside 1.." << std::min(n, panel.t_len());
        throw Error(ErrorCode::KTooLarge, msg.str());
    }
    const SortedEigen eig = sorted_eigen(sample_covariance(panel), true);

    FactorSpace fs;
    fs.eigvals = eig.values.head(k);
    fs.a_hat = eig.vectors.leftCols(k);
    for (Index j = 0; j < k; ++j) {
        Index arg = 0;
        fs.a_hat.col(j).cwiseAbs().maxCoeff(&arg);
        if (fs.a_hat(arg, j) < 0.0) fs.a_hat.col(j) *= -1.0;
    }
    fs.a_hat *= std::sqrt(static_cast<double>(n));
    fs.g_hat = panel.data() * fs.a_hat / static_cast<double>(n);
    return fs;
}

Index select_num_factors_er(const Vector& mu, Index k_max) {
    if (k_max < 1 || k_max + 1 > mu.size()) {
        std::ostringstream msg;
        msg << "k_max " << k_max << " needs k_max + 1 <= " << mu.size();
        throw Error(ErrorCode::KTooLarge, msg.str());
    }
    const double floor = 1e-12 * mu(0);
    auto positive = [&](Index i) { return mu(i) > floor; };

    Index best = 1;
    double best_ratio = -1.0;
    for (Index k = 1; k <= k_max; ++k) {
        double ratio = 0.0;
        if (positive(k - 1)) {
            ratio = positive(k) ? mu(k - 1) / mu(k) : std::numeric_limits<double>::infinity();
        }
        if (ratio > best_ratio) {  // strict: ties go to the smaller k
            best_ratio = ratio;
            best = k;
        }
    }
    return best;
}

Index select_num_factors_er(const Panel& panel, Index k_max) {
    if (k_max < 1 || k_max + 1 > std::min(panel.n_len(), panel.t_len())) {
        std::ostringstream msg;
        msg << "k_max " << k_max << " needs k_max + 1 <= min(N, T)";
        throw Error(ErrorCode::KTooLarge, msg.str());
    }
    return select_num_factors_er(covariance_eigenvalues(panel), k_max);
}

} // namespace msfm
