#pragma once

#include "types.hpp"

namespace latentgc {

/// L x T matrix whose row l-1 holds y(t - l), zero before the record starts.
inline Matrix build_lag_matrix(const Vector& y, int lags)
{
    const Index T = y.size();
    if (lags < 1)
        throw invalid_argument("lag matrix needs L >= 1");
    if (lags >= T)
        throw invalid_argument("lag matrix needs L < T");
    Matrix m = Matrix::Zero(lags, T);
    for (int l = 1; l <= lags; ++l)
        m.row(l - 1).tail(T - l) = y.head(T - l).transpose();
    return m;
}

struct DeflationOptions
{
    bool include_lag0 = true; // also remove y(t) itself
    bool intercept = false;   // add a constant row (removes channel means in the same projection)
};

struct DeflationResult
{
    Matrix data;
    Index rank = 0; // rank of the removal basis
};

/// X_r = X (I - B^# B), B the removal basis built from y.
inline DeflationResult deflate(const Matrix& x, const Vector& y, int lags, DeflationOptions opts = {})
{
    const Index T = x.cols();
    if (y.size() != T)
        throw invalid_argument("driving series length does not match the data");
    const Matrix lagged = build_lag_matrix(y, lags);

    const Index rows = lags + (opts.include_lag0 ? 1 : 0) + (opts.intercept ? 1 : 0);
    Matrix basis(rows, T);
    Index r = 0;
    if (opts.include_lag0)
        basis.row(r++) = y.transpose();
    basis.middleRows(r, lags) = lagged;
    r += lags;
    if (opts.intercept)
        basis.row(r) = Vector::Ones(T).transpose();

    // Orthonormal basis of the row space, then X - (X U) U^T.
    Eigen::ColPivHouseholderQR<Matrix> qr(basis.transpose());
    qr.setThreshold(1e-12);
    DeflationResult out;
    out.rank = qr.rank();
    if (out.rank == 0) {
        out.data = x;
        return out;
    }
    const Matrix u = qr.householderQ() * Matrix::Identity(T, out.rank);
    out.data = x - (x * u) * u.transpose();
    return out;
}

inline DeflationResult deflate(const MultiSeries& x, const Vector& y, int lags, DeflationOptions opts = {})
{
    return deflate(x.data, y, lags, opts);
}

} // namespace latentgc
