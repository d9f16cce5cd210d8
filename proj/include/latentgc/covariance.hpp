#pragma once

// Lagged covariance estimation and the two block structures the causality
// objective is built from:
//
//   block_diag      Sigma_{1:L}  = blockdiag(Sigma(1), ..., Sigma(L))
//   block_toeplitz  Sigma_tilde  with block (i, j) = Sigma(j - i)
//
// where Sigma(tau) = E{ x(t) x(t - tau)^T } and Sigma(-tau) = Sigma(tau)^T.
// Sigma_tilde is the covariance of the stacked past (x(t-1); ...; x(t-L)).

#include "types.hpp"

#include <limits>
#include <span>
#include <vector>

namespace latentgc {

inline constexpr double no_cond_limit = std::numeric_limits<double>::infinity();

/// Summation convention for lagged covariance estimates.
///
/// trimmed      sums over t = L+1..T, divisor T-L. Every lag uses the same
///              target samples, which is what the trimmed regression sees.
/// zero_padded  sums over all available products, divisor T (autocorrelation
///              method). The Toeplitz closed form then equals the normal
///              equations of a regression on the zero-padded record exactly.
enum class EstimationWindow { trimmed, zero_padded };

/// Sigma(tau) estimate from mean-centered rows of `x` (channels x samples).
inline Matrix estimate_lagged_covariance(const Matrix& x, int tau, int max_lag,
                                         EstimationWindow window = EstimationWindow::trimmed)
{
    if (max_lag < 0 || tau < 0 || tau > max_lag)
        throw invalid_argument("lag out of range");
    const Index T = x.cols();
    if (T - max_lag < 2)
        throw invalid_argument("insufficient samples for the requested lag");

    Matrix s;
    if (window == EstimationWindow::trimmed) {
        const Index n = T - max_lag;
        s = x.middleCols(max_lag, n) * x.middleCols(max_lag - tau, n).transpose();
        s /= static_cast<double>(n);
    } else {
        const Index n = T - tau;
        s = x.rightCols(n) * x.leftCols(n).transpose();
        s /= static_cast<double>(T);
    }
    if (tau == 0)
        s = 0.5 * (s + s.transpose()).eval();
    return s;
}

inline Matrix estimate_lagged_covariance(const MultiSeries& x, int tau, int max_lag,
                                         EstimationWindow window = EstimationWindow::trimmed)
{
    return estimate_lagged_covariance(x.data, tau, max_lag, window);
}

/// Sigma(0), ..., Sigma(L).
inline std::vector<Matrix> estimate_lagged_covariances(const Matrix& x, int max_lag,
                                                       EstimationWindow window = EstimationWindow::trimmed)
{
    if (max_lag < 1)
        throw invalid_argument("maximum lag must be >= 1");
    std::vector<Matrix> out;
    out.reserve(static_cast<std::size_t>(max_lag) + 1);
    for (int tau = 0; tau <= max_lag; ++tau)
        out.push_back(estimate_lagged_covariance(x, tau, max_lag, window));
    return out;
}

struct BlockMatrices
{
    Matrix block_diag;     // Sigma_{1:L}
    Matrix block_toeplitz; // Sigma_tilde
};

/// Assembles Sigma_{1:L} and Sigma_tilde from Sigma(0..L).
inline BlockMatrices assemble_block_matrices(std::span<const Matrix> sigmas)
{
    if (sigmas.size() < 2)
        throw invalid_argument("need Sigma(0) and at least one lag");
    const Index D = sigmas[0].rows();
    for (const auto& s : sigmas)
        if (s.rows() != D || s.cols() != D)
            throw invalid_argument("covariance shape mismatch");

    const Index L = static_cast<Index>(sigmas.size()) - 1;
    BlockMatrices b;
    b.block_diag = Matrix::Zero(L * D, L * D);
    b.block_toeplitz.resize(L * D, L * D);
    for (Index l = 0; l < L; ++l)
        b.block_diag.block(l * D, l * D, D, D) = sigmas[static_cast<std::size_t>(l + 1)];
    for (Index i = 0; i < L; ++i) {
        for (Index j = 0; j < L; ++j) {
            const Index k = j - i;
            if (k >= 0)
                b.block_toeplitz.block(i * D, j * D, D, D) = sigmas[static_cast<std::size_t>(k)];
            else
                b.block_toeplitz.block(i * D, j * D, D, D) = sigmas[static_cast<std::size_t>(-k)].transpose();
        }
    }
    return b;
}

inline bool is_symmetric(const Matrix& m, double rel_tol = 1e-12)
{
    if (m.rows() != m.cols())
        return false;
    const double scale = std::max(m.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
    return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

/// Largest and smallest eigenvalue (symmetric input) or singular value (otherwise).
struct SpectrumExtremes
{
    double largest = 0.0;
    double smallest = 0.0;
};

inline SpectrumExtremes spectrum_extremes(const Matrix& m)
{
    if (is_symmetric(m)) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
        return {es.eigenvalues().maxCoeff(), es.eigenvalues().minCoeff()};
    }
    Eigen::JacobiSVD<Matrix> svd(m);
    const auto& s = svd.singularValues();
    return {s.maxCoeff(), s.minCoeff()};
}

inline double condition_number(const Matrix& m)
{
    const auto e = spectrum_extremes(m);
    if (e.smallest <= 0.0)
        return std::numeric_limits<double>::infinity();
    return e.largest / e.smallest;
}

struct Regularized
{
    Matrix matrix;
    double ridge = 0.0; // sigma^2 added to the diagonal
};

/// Adds sigma^2 I so that cond(m + sigma^2 I) = c (symmetric input) or <= c
/// (non-symmetric input, singular values). c = inf disables regularization.
inline Regularized regularize_condition_number(const Matrix& m, double c)
{
    if (m.rows() != m.cols())
        throw invalid_argument("regularization needs a square matrix");
    if (!(c > 1.0))
        throw invalid_argument("condition limit must be > 1");
    if (std::isinf(c))
        return {m, 0.0};

    const auto e = spectrum_extremes(m);
    const double lmin = std::max(e.smallest, 0.0);
    if (lmin > 0.0 && e.largest / lmin <= c)
        return {m, 0.0};

    double ridge = (e.largest - lmin * c) / (c - 1.0);
    if (!(ridge > 0.0))
        return {m, 0.0}; // all-zero matrix: nothing to anchor the ridge to
    const Matrix eye = Matrix::Identity(m.rows(), m.cols());
    Matrix out = m + ridge * eye;
    // The formula is exact for symmetric PSD input. Singular values do not
    // shift by exactly sigma^2 when m is not normal, and a clamped negative
    // eigenvalue undershoots, so grow the ridge until the limit holds.
    const bool indefinite = e.smallest < -1e-12 * std::abs(e.largest); // beyond round-off
    if (!is_symmetric(m) || indefinite) {
        for (int guard = 0; guard < 200 && condition_number(out) > c * (1.0 + 1e-9); ++guard) {
            ridge *= 2.0;
            out = m + ridge * eye;
        }
    }
    return {std::move(out), ridge};
}

/// Estimated lagged covariances plus the (optionally regularized) block
/// structures. Immutable after construction.
class LagCovSet
{
public:
    LagCovSet() = default;

    /// From raw lag matrices Sigma(0..L).
    static LagCovSet from_sigmas(std::vector<Matrix> sigmas, double cond_limit = no_cond_limit)
    {
        LagCovSet c;
        c.sigma_ = std::move(sigmas);
        c.cond_limit_ = cond_limit;
        c.build();
        return c;
    }

    /// Centers `x` and estimates Sigma(0..L).
    static LagCovSet estimate(const Matrix& x, int lags, double cond_limit = no_cond_limit,
                              EstimationWindow window = EstimationWindow::trimmed)
    {
        return from_sigmas(estimate_lagged_covariances(center_rows(x), lags, window), cond_limit);
    }

    static LagCovSet estimate(const MultiSeries& x, int lags, double cond_limit = no_cond_limit,
                              EstimationWindow window = EstimationWindow::trimmed)
    {
        return estimate(x.data, lags, cond_limit, window);
    }

    /// Covariances of x(-t): Sigma_rev(tau) = Sigma(tau)^T, same condition limit.
    LagCovSet time_reversed() const
    {
        std::vector<Matrix> rev;
        rev.reserve(sigma_.size());
        for (const auto& s : sigma_)
            rev.push_back(s.transpose());
        return from_sigmas(std::move(rev), cond_limit_);
    }

    int lags() const { return static_cast<int>(sigma_.size()) - 1; }
    Index dims() const { return sigma_.empty() ? 0 : sigma_[0].rows(); }
    double cond_limit() const { return cond_limit_; }

    /// Raw Sigma(0..L).
    const std::vector<Matrix>& sigma() const { return sigma_; }

    /// Raw Sigma(tau) for tau in [-L, L].
    Matrix lagged(int tau) const
    {
        if (tau >= 0)
            return sigma_.at(static_cast<std::size_t>(tau));
        return sigma_.at(static_cast<std::size_t>(-tau)).transpose();
    }

    const Matrix& sigma_block_diag() const { return block_diag_; }
    const Matrix& sigma_block_toeplitz() const { return block_toeplitz_; }
    double ridge_block_diag() const { return ridge_diag_; }
    double ridge_block_toeplitz() const { return ridge_toeplitz_; }

    /// Block l (0-based) of the regularized Sigma_{1:L}, i.e. Sigma(l+1) + ridge I.
    const Matrix& diag_block(int l) const { return diag_blocks_[static_cast<std::size_t>(l)]; }

    /// Distinct block of the regularized Sigma_tilde at offset k = j - i, |k| < L.
    const Matrix& toeplitz_lag(int k) const { return toeplitz_lags_[static_cast<std::size_t>(k + lags() - 1)]; }

    /// Regularized lag-0 covariance (diagonal block of Sigma_tilde).
    const Matrix& sigma0() const { return toeplitz_lag(0); }

private:
    void build()
    {
        if (sigma_.size() < 2)
            throw invalid_argument("LagCovSet needs L >= 1");
        auto blocks = assemble_block_matrices(sigma_);
        auto d = regularize_condition_number(blocks.block_diag, cond_limit_);
        auto t = regularize_condition_number(blocks.block_toeplitz, cond_limit_);
        block_diag_ = std::move(d.matrix);
        block_toeplitz_ = std::move(t.matrix);
        ridge_diag_ = d.ridge;
        ridge_toeplitz_ = t.ridge;

        const int L = lags();
        const Index D = dims();
        const Matrix eye = Matrix::Identity(D, D);
        diag_blocks_.clear();
        for (int l = 0; l < L; ++l)
            diag_blocks_.push_back(sigma_[static_cast<std::size_t>(l + 1)] + ridge_diag_ * eye);
        toeplitz_lags_.clear();
        for (int k = -(L - 1); k <= L - 1; ++k) {
            Matrix b = lagged(k);
            if (k == 0)
                b += ridge_toeplitz_ * eye;
            toeplitz_lags_.push_back(std::move(b));
        }
    }

    std::vector<Matrix> sigma_;
    double cond_limit_ = no_cond_limit;
    Matrix block_diag_;
    Matrix block_toeplitz_;
    double ridge_diag_ = 0.0;
    double ridge_toeplitz_ = 0.0;
    std::vector<Matrix> diag_blocks_;
    std::vector<Matrix> toeplitz_lags_;
};

} // namespace latentgc
