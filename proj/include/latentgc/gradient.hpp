#pragma once

// Closed-form gradient of G = 1 - phi_f / phi_r with respect to the driven
// filter v and the driving filter w, assembled from the Jacobians of q, Q, r
// and R:
//
//   dq = J_q dv,  vec dQ = J_Q dv,  dr = J_r (dv; dw),  vec dR = J_R (dv; dw)
//
//   grad G = -(2G/phi_r) (Sigma(0) v; 0)
//            - (2 phi_f/phi_r^2) (J_q^T Q^-1 q; 0)
//            + (phi_f/phi_r^2) (J_Q^T vec(Q^-1 q q^T Q^-1); 0)
//            + (2/phi_r) J_r^T R^-1 r
//            - (1/phi_r) J_R^T vec(R^-1 r r^T R^-1)
//
// Two evaluation paths exist. The materialized path builds every Jacobian as
// the literal product of Kronecker, commutation and selector matrices; it is
// exact but its intermediates grow as (L^2 D)^2. The structured path reads
// the same derivatives off the block structure entry by entry.

#include "causality.hpp"
#include "kronecker.hpp"

namespace latentgc {

enum class GradientMethod { analytic, finite_difference };

struct GradientResult
{
    Vector grad_w;
    Vector grad_v;
    GradientMethod method = GradientMethod::analytic;

    /// (grad_v; grad_w), the ordering of the closed-form expression.
    Vector stacked_vw() const
    {
        Vector s(grad_v.size() + grad_w.size());
        s << grad_v, grad_w;
        return s;
    }
};

enum class JacobianPath { automatic, materialized, structured };

namespace detail {

/// automatic resolves to structured: the materialized chain costs orders of
/// magnitude more per call even at L D ~ 10.
inline bool use_materialized(JacobianPath path, const LagCovSet&)
{
    return path == JacobianPath::materialized;
}

// vec(I_L) (x) I_D
inline Matrix vec_identity_kron(Index L, Index D)
{
    return kron::product(kron::vec(kron::identity(L)), kron::identity(D));
}

} // namespace detail

/// Kronecker-factored moments, evaluated literally. Test and cross-check use only.
inline CausalityStats latent_moments_kronecker(const Vector& w, const Vector& v, const LagCovSet& cov)
{
    detail::check_dims(w, v, cov);
    using namespace kron;
    const Index L = cov.lags();
    const Index D = cov.dims();
    const Matrix& S = cov.sigma_block_diag();
    const Matrix& St = cov.sigma_block_toeplitz();
    const Matrix vm = v;
    const Matrix wm = w;

    CausalityStats s;
    s.sigma_z2 = v.dot(cov.sigma0() * v);
    s.q = product(identity(L), vm.transpose()) * S * product(ones(L), vm);
    s.Q = product(identity(L), vm).transpose() * St * product(identity(L), vm);

    Matrix stacked(2 * L * D, 1);
    stacked << product(ones(L), vm), product(ones(L), wm);
    s.r = product(identity(2 * L), vm.transpose()) * product(identity(2), S) * stacked;

    Matrix left(2 * L, 2 * L * D);
    left << product(product(ones(2).transpose(), identity(L)), vm.transpose()),
        product(product(ones(2).transpose(), identity(L)), wm.transpose());
    Matrix right = Matrix::Zero(2 * L * D, 2 * L);
    right.topLeftCorner(L * D, L) = product(identity(L), vm);
    right.bottomRightCorner(L * D, L) = product(identity(L), wm);
    s.R = left * product(identity(2), St) * right;
    return s;
}

/// L x D Jacobian of q with respect to v.
inline Matrix jacobian_q(const ProjectionPair& p, const LagCovSet& cov, JacobianPath path = JacobianPath::automatic)
{
    detail::check_dims(p.w, p.v, cov);
    const Index L = cov.lags();
    const Index D = cov.dims();
    if (detail::use_materialized(path, cov)) {
        using namespace kron;
        const Matrix vm = p.v;
        const Matrix& S = cov.sigma_block_diag();
        const Matrix t1 = product(product(ones(L).transpose(), vm.transpose()) * S.transpose(), identity(L))
                          * product(identity(L), commutation(D, L)) * detail::vec_identity_kron(L, D);
        const Matrix t2 = product(identity(L), vm).transpose() * S * product(ones(L), identity(D));
        return t1 + t2;
    }
    Matrix j(L, D);
    for (Index l = 0; l < L; ++l) {
        const Matrix& Sl = cov.diag_block(static_cast<int>(l));
        j.row(l) = ((Sl + Sl.transpose()) * p.v).transpose();
    }
    return j;
}

/// L^2 x D Jacobian of vec(Q) with respect to v.
inline Matrix jacobian_Q(const ProjectionPair& p, const LagCovSet& cov, JacobianPath path = JacobianPath::automatic)
{
    detail::check_dims(p.w, p.v, cov);
    const Index L = cov.lags();
    const Index D = cov.dims();
    if (detail::use_materialized(path, cov)) {
        using namespace kron;
        const Matrix vm = p.v;
        const Matrix& St = cov.sigma_block_toeplitz();
        const Matrix ilv = product(identity(L), vm.transpose()); // I_L (x) v^T
        const Matrix vid = detail::vec_identity_kron(L, D);
        const Matrix t1 = product(ilv * St.transpose(), identity(L)) * product(identity(L), commutation(D, L)) * vid;
        const Matrix t2 = product(identity(L), ilv * St) * product(product(identity(L), identity(L)), identity(D)) * vid;
        return t1 + t2;
    }
    Matrix j(L * L, D);
    for (Index col = 0; col < L; ++col) {
        for (Index row = 0; row < L; ++row) {
            const Matrix& T = cov.toeplitz_lag(static_cast<int>(col - row));
            j.row(row + col * L) = ((T + T.transpose()) * p.v).transpose();
        }
    }
    return j;
}

/// 2L x 2D Jacobian of r with respect to (v; w).
inline Matrix jacobian_r(const ProjectionPair& p, const LagCovSet& cov, JacobianPath path = JacobianPath::automatic)
{
    detail::check_dims(p.w, p.v, cov);
    const Index L = cov.lags();
    const Index D = cov.dims();
    if (detail::use_materialized(path, cov)) {
        using namespace kron;
        const Matrix vm = p.v;
        const Matrix wm = p.w;
        const Matrix S2 = product(identity(2), cov.sigma_block_diag());
        Matrix stacked(2 * L * D, 1);
        stacked << product(ones(L), vm), product(ones(L), wm);
        const Matrix dv_part = product(stacked.transpose() * S2.transpose(), identity(2 * L))
                               * product(identity(2 * L), commutation(D, 2 * L))
                               * detail::vec_identity_kron(2 * L, D);
        Matrix t1 = Matrix::Zero(2 * L, 2 * D);
        t1.leftCols(D) = dv_part;
        Matrix ones_blk = Matrix::Zero(2 * L * D, 2 * D);
        ones_blk.topLeftCorner(L * D, D) = product(ones(L), identity(D));
        ones_blk.bottomRightCorner(L * D, D) = product(ones(L), identity(D));
        const Matrix t2 = product(identity(2 * L), vm.transpose()) * S2 * ones_blk;
        return t1 + t2;
    }
    Matrix j = Matrix::Zero(2 * L, 2 * D);
    for (Index l = 0; l < L; ++l) {
        const Matrix& Sl = cov.diag_block(static_cast<int>(l));
        j.block(l, 0, 1, D) = ((Sl + Sl.transpose()) * p.v).transpose();
        j.block(L + l, 0, 1, D) = (Sl * p.w).transpose();
        j.block(L + l, D, 1, D) = (Sl.transpose() * p.v).transpose();
    }
    return j;
}

/// (2L)^2 x 2D Jacobian of vec(R) with respect to (v; w).
///
/// The two permutation factors (K_{2,2LD} (x) I_L) and (I_2 (x) K_{2,L} (x) I_{LD})
/// enter through their inverses; both are orthogonal, so the inverse is the transpose.
inline Matrix jacobian_R(const ProjectionPair& p, const LagCovSet& cov, JacobianPath path = JacobianPath::automatic)
{
    detail::check_dims(p.w, p.v, cov);
    const Index L = cov.lags();
    const Index D = cov.dims();
    if (detail::use_materialized(path, cov)) {
        using namespace kron;
        const Matrix vm = p.v;
        const Matrix wm = p.w;
        const Matrix& St = cov.sigma_block_toeplitz();
        const Matrix one2_il = product(ones(2).transpose(), identity(L)); // 1_2^T (x) I_L

        Matrix left(2 * L, 2 * L * D); // stacked 1_2^T (x) I_L (x) v^T / w^T
        left << product(one2_il, vm.transpose()), product(one2_il, wm.transpose());
        Matrix right_t = Matrix::Zero(2 * L, 2 * L * D); // blockdiag(I_L (x) v^T, I_L (x) w^T)
        right_t.topLeftCorner(L, L * D) = product(identity(L), vm.transpose());
        right_t.bottomRightCorner(L, L * D) = product(identity(L), wm.transpose());

        const Matrix perm_left = product(commutation(2, 2 * L * D), identity(L)).transpose();
        const Matrix inner_left = product(identity(2 * L), commutation(D, L))
                                  * product(vec(one2_il), identity(D));
        const Matrix t1 = product(right_t * product(identity(2), St.transpose()), identity(2 * L))
                          * perm_left * product(identity(2), inner_left);

        const Matrix perm_right = product(product(identity(2), commutation(2, L)), identity(L * D)).transpose();
        const Matrix inner_right = product(product(identity(L), identity(L)), identity(D))
                                   * detail::vec_identity_kron(L, D);
        const Matrix t2 = product(identity(2 * L), left * product(identity(2), St))
                          * perm_right * product(selector_4_2(), inner_right);
        return t1 + t2;
    }

    const Index n = 2 * L;
    Matrix j = Matrix::Zero(n * n, 2 * D);
    for (Index b = 0; b < n; ++b) {
        for (Index a = 0; a < n; ++a) {
            // R(a, b) = u_a^T T_{jb - ia} u_b
            const Index ia = a % L, jb = b % L;
            const Index ca = a < L ? 0 : D; // column block of u_a in (v; w)
            const Index cb = b < L ? 0 : D;
            const Vector& ua = a < L ? p.v : p.w;
            const Vector& ub = b < L ? p.v : p.w;
            const Matrix& T = cov.toeplitz_lag(static_cast<int>(jb - ia));
            const Index row = a + b * n;
            j.block(row, ca, 1, D) += (T * ub).transpose();
            j.block(row, cb, 1, D) += (T.transpose() * ua).transpose();
        }
    }
    return j;
}

/// Closed-form gradient of G(w, v) (forward direction only).
inline GradientResult analytic_gradient(const ProjectionPair& p, const LagCovSet& cov,
                                        JacobianPath path = JacobianPath::automatic)
{
    const CausalityStats s = latent_stats(p, cov);
    const Index D = cov.dims();
    const Index L = cov.lags();
    const double pf = s.phi_f, pr = s.phi_r;

    const Vector alpha = detail::spd_solve(s.Q, s.q).x; // Q^-1 q
    const Vector beta = detail::spd_solve(s.R, s.r).x;  // R^-1 r

    Vector grad_v = -(2.0 * s.g_raw / pr) * (cov.sigma0() * p.v);
    Vector grad_vw;

    if (detail::use_materialized(path, cov)) {
        const Matrix jq = jacobian_q(p, cov, JacobianPath::materialized);
        const Matrix jQ = jacobian_Q(p, cov, JacobianPath::materialized);
        const Matrix jr = jacobian_r(p, cov, JacobianPath::materialized);
        const Matrix jR = jacobian_R(p, cov, JacobianPath::materialized);
        const Matrix mq = alpha * alpha.transpose();
        const Matrix mr = beta * beta.transpose();
        grad_v += -(2.0 * pf / (pr * pr)) * (jq.transpose() * alpha);
        grad_v += (pf / (pr * pr)) * (jQ.transpose() * kron::vec(mq));
        grad_vw = (2.0 / pr) * (jr.transpose() * beta) - (1.0 / pr) * (jR.transpose() * kron::vec(mr));
    } else {
        // Same contractions without forming the Jacobians.
        Vector jq_alpha = Vector::Zero(D);
        for (Index l = 0; l < L; ++l) {
            const Matrix& Sl = cov.diag_block(static_cast<int>(l));
            jq_alpha += alpha(l) * ((Sl + Sl.transpose()) * p.v);
        }
        Vector jQ_m = Vector::Zero(D);
        for (Index j = 0; j < L; ++j)
            for (Index i = 0; i < L; ++i) {
                const Matrix& T = cov.toeplitz_lag(static_cast<int>(j - i));
                jQ_m += alpha(i) * alpha(j) * ((T + T.transpose()) * p.v);
            }
        grad_v += -(2.0 * pf / (pr * pr)) * jq_alpha + (pf / (pr * pr)) * jQ_m;

        Vector jr_beta = Vector::Zero(2 * D);
        for (Index l = 0; l < L; ++l) {
            const Matrix& Sl = cov.diag_block(static_cast<int>(l));
            jr_beta.head(D) += beta(l) * ((Sl + Sl.transpose()) * p.v) + beta(L + l) * (Sl * p.w);
            jr_beta.tail(D) += beta(L + l) * (Sl.transpose() * p.v);
        }
        Vector jR_m = Vector::Zero(2 * D);
        const Index n = 2 * L;
        for (Index b = 0; b < n; ++b)
            for (Index a = 0; a < n; ++a) {
                const double m = beta(a) * beta(b);
                const Index ia = a % L, jb = b % L;
                const Matrix& T = cov.toeplitz_lag(static_cast<int>(jb - ia));
                const Vector& ua = a < L ? p.v : p.w;
                const Vector& ub = b < L ? p.v : p.w;
                jR_m.segment(a < L ? 0 : D, D) += m * (T * ub);
                jR_m.segment(b < L ? 0 : D, D) += m * (T.transpose() * ua);
            }
        grad_vw = (2.0 / pr) * jr_beta - (1.0 / pr) * jR_m;
    }

    GradientResult out;
    out.method = GradientMethod::analytic;
    out.grad_v = grad_v + grad_vw.head(D);
    out.grad_w = grad_vw.tail(D);
    return out;
}

/// Central-difference gradient of G(w, v), step h * max(1, |coordinate|).
inline GradientResult finite_diff_gradient(const ProjectionPair& p, const LagCovSet& cov, double h = 1e-6)
{
    if (!(h > 0.0))
        throw invalid_argument("finite-difference step must be positive");
    detail::check_dims(p.w, p.v, cov);
    const Index D = cov.dims();
    auto g = [&](const Vector& w, const Vector& v) { return latent_stats(w, v, cov).g_raw; };

    GradientResult out;
    out.method = GradientMethod::finite_difference;
    out.grad_w.resize(D);
    out.grad_v.resize(D);
    Vector w = p.w, v = p.v;
    for (Index k = 0; k < D; ++k) {
        const double step = h * std::max(1.0, std::abs(p.w(k)));
        w(k) = p.w(k) + step;
        const double up = g(w, v);
        w(k) = p.w(k) - step;
        const double down = g(w, v);
        w(k) = p.w(k);
        out.grad_w(k) = (up - down) / (2.0 * step);
    }
    for (Index k = 0; k < D; ++k) {
        const double step = h * std::max(1.0, std::abs(p.v(k)));
        v(k) = p.v(k) + step;
        const double up = g(w, v);
        v(k) = p.v(k) - step;
        const double down = g(w, v);
        v(k) = p.v(k);
        out.grad_v(k) = (up - down) / (2.0 * step);
    }
    return out;
}

/// Gradient of the combined objective G(w, v) + G^tr(v, w): the forward
/// gradient plus the role-swapped gradient on the reversed covariances.
inline GradientResult combined_analytic_gradient(const ProjectionPair& p, const LagCovSet& forward,
                                                 const LagCovSet& reversed,
                                                 JacobianPath path = JacobianPath::automatic)
{
    auto fwd = analytic_gradient(p, forward, path);
    auto rev = analytic_gradient(p.swapped(), reversed, path);
    fwd.grad_w += rev.grad_v;
    fwd.grad_v += rev.grad_w;
    return fwd;
}

} // namespace latentgc
