#pragma once

#include "covariance.hpp"

#include <algorithm>
#include <span>

namespace latentgc {

/// Driving filter w and driven filter v: y = w^T x, z = v^T x.
struct ProjectionPair
{
    Vector w;
    Vector v;

    /// Both filters scaled to unit L2 norm.
    static ProjectionPair normalized(Vector w, Vector v)
    {
        const double nw = w.norm();
        const double nv = v.norm();
        if (nw == 0.0 || nv == 0.0)
            throw invalid_argument("projection filters must be nonzero");
        return {w / nw, v / nv};
    }

    /// The pair with the roles of driver and driven exchanged.
    ProjectionPair swapped() const { return {v, w}; }
};

/// Second-order statistics of the reduced and full predictors of z, the two
/// prediction errors and the strength of causality g = 1 - phi_f / phi_r.
struct CausalityStats
{
    double sigma_z2 = 0.0;
    Vector q; // E{ z(t) z_p(t) }, L
    Matrix Q; // E{ z_p z_p^T }, L x L
    Vector r; // E{ z(t) (z_p; y_p) }, 2L
    Matrix R; // E{ (z_p; y_p)(z_p; y_p)^T }, 2L x 2L
    double phi_f = 0.0;
    double phi_r = 0.0;
    double g = 0.0;     // clamped to [0, 1]
    double g_raw = 0.0; // unclamped, for diagnostics and smooth optimization
    /// Set when Q or R was not positive definite and a pseudo-inverse was used.
    bool pseudo_inverse_used = false;
};

struct WienerFilters
{
    Vector h;  // reduced model, Q^{-1} q
    Vector g1; // full model, weights on the past of z
    Vector g2; // full model, weights on the past of y
};

namespace detail {

struct SpdSolve
{
    Vector x;
    bool pseudo = false;
};

/// Solves m x = b for symmetric m: Cholesky, falling back to a rank-revealing
/// pseudo-inverse when m is not positive definite.
inline SpdSolve spd_solve(const Matrix& m, const Vector& b)
{
    if (!m.allFinite() || !b.allFinite())
        throw numerical_error("non-finite covariance entries");
    Eigen::LLT<Matrix> llt(m);
    if (llt.info() == Eigen::Success) {
        Vector x = llt.solve(b);
        if (x.allFinite())
            return {std::move(x), false};
    }
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(m);
    if (cod.rank() == 0)
        throw singular_matrix_error("predictor covariance is zero");
    return {cod.solve(b), true};
}

inline Matrix spd_inverse_times(const Matrix& m, const Matrix& b)
{
    Eigen::LLT<Matrix> llt(m);
    if (llt.info() == Eigen::Success)
        return llt.solve(b);
    return Eigen::CompleteOrthogonalDecomposition<Matrix>(m).solve(b);
}

inline void check_dims(const Vector& w, const Vector& v, const LagCovSet& cov)
{
    if (cov.lags() < 1)
        throw invalid_argument("covariance set has no lags");
    if (w.size() != cov.dims() || v.size() != cov.dims())
        throw invalid_argument("filter dimension does not match covariance dimension");
}

} // namespace detail

/// q, Q, r, R, sigma_z^2 for driving filter w and driven filter v.
///
/// Entry-wise this is q_l = v^T S_l v, Q_ij = v^T T_{j-i} v and the analogous
/// mixed terms of r and R, where S_l are the blocks of Sigma_{1:L} and T_k the
/// blocks of Sigma_tilde. It equals the Kronecker-factored products
/// (I_L (x) v^T) Sigma_{1:L} (1_L (x) v) etc. without forming them.
inline CausalityStats latent_moments(const Vector& w, const Vector& v, const LagCovSet& cov)
{
    detail::check_dims(w, v, cov);
    const int L = cov.lags();
    const int K = 2 * L - 1;

    // T_k v and T_k w for every distinct Toeplitz offset k = j - i
    Matrix tv(cov.dims(), K), tw(cov.dims(), K);
    for (int k = -(L - 1); k <= L - 1; ++k) {
        tv.col(k + L - 1).noalias() = cov.toeplitz_lag(k) * v;
        tw.col(k + L - 1).noalias() = cov.toeplitz_lag(k) * w;
    }
    const Vector vtv = tv.transpose() * v; // v^T T_k v
    const Vector vtw = tw.transpose() * v; // v^T T_k w
    const Vector wtv = tv.transpose() * w; // w^T T_k v
    const Vector wtw = tw.transpose() * w; // w^T T_k w

    CausalityStats s;
    s.sigma_z2 = vtv(L - 1);
    s.q.resize(L);
    s.r.resize(2 * L);
    for (int l = 0; l < L; ++l) {
        const Matrix& S = cov.diag_block(l);
        s.q(l) = v.dot(S * v);
        s.r(l) = s.q(l);
        s.r(L + l) = v.dot(S * w);
    }
    s.Q.resize(L, L);
    s.R.resize(2 * L, 2 * L);
    for (int i = 0; i < L; ++i) {
        for (int j = 0; j < L; ++j) {
            const int k = j - i + L - 1;
            s.Q(i, j) = vtv(k);
            s.R(i, j) = vtv(k);
            s.R(i, L + j) = vtw(k);
            s.R(L + i, j) = wtv(k);
            s.R(L + i, L + j) = wtw(k);
        }
    }
    return s;
}

/// Fills phi_f, phi_r and g from the moments.
inline void finish_stats(CausalityStats& s)
{
    auto reduced = detail::spd_solve(s.Q, s.q);
    auto full = detail::spd_solve(s.R, s.r);
    s.pseudo_inverse_used = reduced.pseudo || full.pseudo;
    s.phi_r = s.sigma_z2 - s.q.dot(reduced.x);
    s.phi_f = s.sigma_z2 - s.r.dot(full.x);
    if (!std::isfinite(s.phi_r) || !std::isfinite(s.phi_f))
        throw numerical_error("non-finite prediction error");
    if (!(s.phi_r > 0.0))
        throw singular_matrix_error("reduced-model prediction error is not positive");
    s.g_raw = 1.0 - s.phi_f / s.phi_r;
    s.g = std::clamp(s.g_raw, 0.0, 1.0);
}

/// Strength of causality from y = w^T x to z = v^T x under `cov`.
inline CausalityStats latent_stats(const Vector& w, const Vector& v, const LagCovSet& cov)
{
    auto s = latent_moments(w, v, cov);
    finish_stats(s);
    return s;
}

inline CausalityStats latent_stats(const ProjectionPair& p, const LagCovSet& cov)
{
    return latent_stats(p.w, p.v, cov);
}

/// G^tr: z(-t) driving y(-t). `reversed` must be cov.time_reversed().
inline CausalityStats time_reversed_stats(const ProjectionPair& p, const LagCovSet& reversed)
{
    return latent_stats(p.v, p.w, reversed);
}

/// Convenience overload that derives the reversed covariances itself.
inline CausalityStats time_reversed_stats_from_forward(const ProjectionPair& p, const LagCovSet& forward)
{
    return time_reversed_stats(p, forward.time_reversed());
}

inline WienerFilters wiener_filters(const CausalityStats& s)
{
    const Index L = s.q.size();
    WienerFilters f;
    f.h = detail::spd_solve(s.Q, s.q).x;
    const Vector g = detail::spd_solve(s.R, s.r).x;
    f.g1 = g.head(L);
    f.g2 = g.tail(L);
    return f;
}

namespace detail {

/// Residual sum of squares of the least-squares fit target ~ design.
inline double residual_ss(const Matrix& design, const Vector& target)
{
    Eigen::ColPivHouseholderQR<Matrix> qr(design);
    if (qr.rank() < design.cols())
        throw singular_matrix_error("rank-deficient regression design");
    const Vector resid = target - design * qr.solve(target);
    return resid.squaredNorm();
}

} // namespace detail

/// G_{f -> g} by explicitly fitting the reduced (g on its own L-lag past) and
/// full (g on the past of g and f) regressions. Both inputs are centered first.
///
/// trimmed fits over t = L+1..T; zero_padded fits over t = 1..T+L with zeros
/// outside the record, the regression whose normal equations are the
/// zero-padded covariance estimates.
inline double causality_direct(std::span<const double> f, std::span<const double> g, int L,
                               EstimationWindow window = EstimationWindow::trimmed)
{
    if (f.size() != g.size())
        throw invalid_argument("series lengths differ");
    if (L < 1)
        throw invalid_argument("lag must be >= 1");
    const Index T = static_cast<Index>(f.size());
    if (T <= 3 * static_cast<Index>(L))
        throw invalid_argument("need more than 3*L samples");

    const Vector fc = center(Eigen::Map<const Vector>(f.data(), T));
    const Vector gc = center(Eigen::Map<const Vector>(g.data(), T));

    const Index start = window == EstimationWindow::trimmed ? L : 0;
    const Index stop = window == EstimationWindow::trimmed ? T : T + L; // exclusive
    const Index n = stop - start;
    auto at = [T](const Vector& s, Index t) { return (t >= 0 && t < T) ? s(t) : 0.0; };

    Vector target(n);
    Matrix full(n, 2 * L);
    for (Index row = 0; row < n; ++row) {
        const Index t = start + row;
        target(row) = at(gc, t);
        for (int l = 1; l <= L; ++l) {
            full(row, l - 1) = at(gc, t - l);
            full(row, L + l - 1) = at(fc, t - l);
        }
    }
    const double rss_reduced = detail::residual_ss(full.leftCols(L), target);
    const double rss_full = detail::residual_ss(full, target);
    if (!(rss_reduced > 0.0))
        throw singular_matrix_error("reduced model fits the target exactly");
    return std::clamp(1.0 - rss_full / rss_reduced, 0.0, 1.0);
}

inline double causality_direct(const Vector& f, const Vector& g, int L,
                               EstimationWindow window = EstimationWindow::trimmed)
{
    return causality_direct(std::span<const double>(f.data(), static_cast<std::size_t>(f.size())),
                            std::span<const double>(g.data(), static_cast<std::size_t>(g.size())), L, window);
}

/// Entry (i, j) = G_{x_i -> x_j}; the diagonal is 0.
inline Matrix pairwise_causality_matrix(const Matrix& x, int L,
                                        EstimationWindow window = EstimationWindow::trimmed)
{
    const Index D = x.rows();
    Matrix out = Matrix::Zero(D, D);
    for (Index i = 0; i < D; ++i) {
        const Vector xi = x.row(i).transpose();
        for (Index j = 0; j < D; ++j) {
            if (i == j)
                continue;
            const Vector xj = x.row(j).transpose();
            out(i, j) = causality_direct(xi, xj, L, window);
        }
    }
    return out;
}

inline Matrix pairwise_causality_matrix(const MultiSeries& x, int L,
                                        EstimationWindow window = EstimationWindow::trimmed)
{
    validate(x, L);
    return pairwise_causality_matrix(x.data, L, window);
}

} // namespace latentgc
