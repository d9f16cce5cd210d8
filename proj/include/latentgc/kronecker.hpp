#pragma once

#include "types.hpp"

#include <unsupported/Eigen/KroneckerProduct>

namespace latentgc::kron {

inline Matrix product(const Matrix& a, const Matrix& b)
{
    return Eigen::kroneckerProduct(a, b).eval();
}

inline Matrix identity(Index n)
{
    return Matrix::Identity(n, n);
}

inline Matrix ones(Index n)
{
    return Matrix::Ones(n, 1);
}

/// Column-stacking vec operator, returned as a column.
inline Matrix vec(const Matrix& m)
{
    return Eigen::Map<const Vector>(m.data(), m.size());
}

/// Commutation matrix K_{mn}: K_{mn} vec(A) = vec(A^T) for every m x n matrix A.
inline Matrix commutation(Index m, Index n)
{
    Matrix k = Matrix::Zero(m * n, m * n);
    for (Index i = 0; i < m; ++i)
        for (Index j = 0; j < n; ++j)
            k(j + i * n, i + j * m) = 1.0;
    return k;
}

/// The 4 x 2 selector with ones at (1,1) and (4,2) (1-based).
inline Matrix selector_4_2()
{
    Matrix s = Matrix::Zero(4, 2);
    s(0, 0) = 1.0;
    s(3, 1) = 1.0;
    return s;
}

} // namespace latentgc::kron
