#include <latentgc/deflation.hpp>
#include <latentgc/random.hpp>

#include <gtest/gtest.h>

using namespace latentgc;

namespace {

Matrix noise(Index r, Index c, std::uint64_t seed)
{
    Engine rng(seed);
    return standard_normal(r, c, rng);
}

Matrix removal_basis(const Vector& y, int L, bool lag0, bool intercept)
{
    const Matrix lagged = build_lag_matrix(y, L);
    Matrix b(L + (lag0 ? 1 : 0) + (intercept ? 1 : 0), y.size());
    Index r = 0;
    if (lag0)
        b.row(r++) = y.transpose();
    b.middleRows(r, L) = lagged;
    if (intercept)
        b.bottomRows(1).setOnes();
    return b;
}

} // namespace

TEST(BuildLagMatrix, Definition)
{
    Vector y(4);
    y << 1, 2, 3, 4;
    Matrix expected(2, 4);
    expected << 0, 1, 2, 3, 0, 0, 1, 2;
    EXPECT_TRUE(build_lag_matrix(y, 2) == expected);
}

TEST(BuildLagMatrix, ShapeAndErrors)
{
    const Vector y = noise(37, 1, 1);
    const Matrix m = build_lag_matrix(y, 5);
    EXPECT_EQ(m.rows(), 5);
    EXPECT_EQ(m.cols(), 37);
    EXPECT_THROW(build_lag_matrix(y, 0), invalid_argument);
    EXPECT_THROW(build_lag_matrix(y, 37), invalid_argument);
}

TEST(Deflate, ResidualIsOrthogonalToBasis)
{
    const Matrix x = noise(4, 500, 2);
    const Vector y = noise(500, 1, 3);
    for (bool lag0 : {true, false}) {
        const auto d = deflate(x, y, 3, {lag0, false});
        const Matrix basis = removal_basis(y, 3, lag0, false);
        EXPECT_EQ(d.rank, basis.rows());
        for (Index c = 0; c < 4; ++c)
            for (Index r = 0; r < basis.rows(); ++r) {
                const double cos = d.data.row(c).dot(basis.row(r)) / (d.data.row(c).norm() * basis.row(r).norm());
                EXPECT_LT(std::abs(cos), 1e-8);
            }
    }
}

TEST(Deflate, InterceptMakesCorrelationsVanish)
{
    const Matrix x = noise(3, 400, 4);
    const Vector y = noise(400, 1, 5);
    const auto d = deflate(x, y, 3, {true, true});
    const Matrix basis = removal_basis(y, 3, true, false);
    for (Index c = 0; c < 3; ++c) {
        EXPECT_LT(std::abs(d.data.row(c).mean()), 1e-12);
        for (Index r = 0; r < basis.rows(); ++r)
            EXPECT_LT(std::abs(pearson(d.data.row(c).transpose(), basis.row(r).transpose())), 1e-8);
    }
}

TEST(Deflate, OrthogonalDataUnchanged)
{
    const Vector y = noise(300, 1, 6);
    const Matrix basis = removal_basis(y, 2, true, false);
    const Matrix z = noise(3, 300, 7);
    const Matrix pinv = basis.completeOrthogonalDecomposition().pseudoInverse();
    const Matrix x = z - z * pinv * basis; // already in the complement
    const auto d = deflate(x, y, 2);
    EXPECT_LT((d.data - x).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Deflate, Idempotent)
{
    const Matrix x = noise(4, 300, 8);
    const Vector y = noise(300, 1, 9);
    const auto once = deflate(x, y, 3);
    const auto twice = deflate(once.data, y, 3);
    EXPECT_LT((once.data - twice.data).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Deflate, ContainedChannelIsRemoved)
{
    const Index T = 300;
    const Vector y = noise(T, 1, 10);
    Matrix x = noise(3, T, 11);
    x.row(0).setZero();
    x.row(0).tail(T - 1) = y.head(T - 1).transpose(); // x1(t) = y(t-1)
    const auto d = deflate(x, y, 3);
    EXPECT_LT(d.data.row(0).tail(T - 3).norm(), 1e-8);
}

TEST(Deflate, NormDoesNotGrow)
{
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Matrix x = noise(4, 200, 20 + seed);
        const auto d = deflate(x, noise(200, 1, 30 + seed), 4);
        EXPECT_LE(d.data.norm(), x.norm() * (1.0 + 1e-14));
    }
}

TEST(Deflate, ProjectorSymmetricAndIdempotent)
{
    // apply the deflation to the identity to recover (I - B^# B)
    const Index T = 40;
    const Vector y = noise(T, 1, 40);
    const Matrix p = deflate(Matrix::Identity(T, T), y, 3).data;
    EXPECT_LT((p - p.transpose()).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((p * p - p).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Deflate, RankDeficientBasis)
{
    const Vector y = Vector::Zero(50);
    const Matrix x = noise(2, 50, 41);
    const auto d = deflate(x, y, 2);
    EXPECT_EQ(d.rank, 0);
    EXPECT_TRUE(d.data == x);
    EXPECT_THROW(deflate(x, Vector::Zero(49), 2), invalid_argument);
}
