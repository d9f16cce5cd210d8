#include <latentgc/gradient.hpp>
#include <latentgc/simulator.hpp>

#include <gtest/gtest.h>

#include <functional>

using namespace latentgc;

namespace {

LagCovSet random_cov(Index d, int L, std::uint64_t seed, double c = no_cond_limit)
{
    Engine rng(seed);
    const VarSystem sys = random_var_system(d, 2, 0.8, rng);
    return LagCovSet::estimate(simulate_var(sys, 400, derive_seed(seed, {1})), L, c);
}

ProjectionPair random_pair(Index d, std::uint64_t seed)
{
    Engine rng(seed);
    Vector w = random_unit_vector(d, rng);
    Vector v = random_unit_vector(d, rng);
    return {w, v};
}

// Central differences of a vector-valued function of the stacked (v; w).
Matrix numeric_jacobian(const std::function<Vector(const Vector&, const Vector&)>& f, const ProjectionPair& p,
                        bool include_w, double h = 1e-6)
{
    const Index D = p.v.size();
    const Index n = include_w ? 2 * D : D;
    const Vector f0 = f(p.w, p.v);
    Matrix j(f0.size(), n);
    for (Index k = 0; k < n; ++k) {
        Vector w = p.w, v = p.v;
        Vector& u = k < D ? v : w;
        const Index i = k % D;
        u(i) += h;
        const Vector up = f(w, v);
        u(i) -= 2.0 * h;
        const Vector down = f(w, v);
        j.col(k) = (up - down) / (2.0 * h);
    }
    return j;
}

Vector vec_of(const Matrix& m)
{
    return Eigen::Map<const Vector>(m.data(), m.size());
}

double scaled_error(const Matrix& a, const Matrix& b)
{
    const double scale = std::max(b.cwiseAbs().maxCoeff(), 1e-300);
    return (a - b).cwiseAbs().maxCoeff() / scale;
}

} // namespace

TEST(Kronecker, CommutationTransposesVec)
{
    Engine rng(1);
    for (Index m = 1; m <= 4; ++m)
        for (Index n = 1; n <= 5; ++n) {
            const Matrix a = standard_normal(m, n, rng);
            const Matrix at = a.transpose();
            EXPECT_TRUE(kron::commutation(m, n) * kron::vec(a) == kron::vec(at));
        }
}

TEST(Kronecker, VecRule)
{
    Engine rng(2);
    const Matrix a = standard_normal(3, 4, rng), b = standard_normal(4, 2, rng), c = standard_normal(2, 5, rng);
    const Matrix lhs = kron::vec(a * b * c);
    const Matrix rhs = kron::product(c.transpose(), a) * kron::vec(b);
    EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Kronecker, Selector)
{
    const Matrix s = kron::selector_4_2();
    EXPECT_EQ(s.sum(), 2.0);
    EXPECT_EQ(s(0, 0), 1.0);
    EXPECT_EQ(s(3, 1), 1.0);
}

class JacobianTest : public ::testing::TestWithParam<JacobianPath>
{
};

TEST_P(JacobianTest, MatchFiniteDifferences)
{
    const JacobianPath path = GetParam();
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Index D = 2 + static_cast<Index>(seed % 5);
        const int L = 1 + static_cast<int>(seed % 4);
        const auto cov = random_cov(D, L, seed, seed % 2 ? 1e4 : no_cond_limit);
        const auto p = random_pair(D, 1000 + seed);
        auto mom = [&](const Vector& w, const Vector& v) { return latent_moments(w, v, cov); };

        const Matrix jq = numeric_jacobian([&](const Vector& w, const Vector& v) { return mom(w, v).q; }, p, false);
        const Matrix jQ =
            numeric_jacobian([&](const Vector& w, const Vector& v) { return vec_of(mom(w, v).Q); }, p, false);
        const Matrix jr = numeric_jacobian([&](const Vector& w, const Vector& v) { return mom(w, v).r; }, p, true);
        const Matrix jR =
            numeric_jacobian([&](const Vector& w, const Vector& v) { return vec_of(mom(w, v).R); }, p, true);

        EXPECT_LT(scaled_error(jacobian_q(p, cov, path), jq), 1e-6) << "seed " << seed;
        EXPECT_LT(scaled_error(jacobian_Q(p, cov, path), jQ), 1e-6) << "seed " << seed;
        EXPECT_LT(scaled_error(jacobian_r(p, cov, path), jr), 1e-6) << "seed " << seed;
        EXPECT_LT(scaled_error(jacobian_R(p, cov, path), jR), 1e-6) << "seed " << seed;
    }
}

INSTANTIATE_TEST_SUITE_P(Paths, JacobianTest,
                         ::testing::Values(JacobianPath::materialized, JacobianPath::structured));

TEST(Jacobians, MaterializedEqualsStructured)
{
    const auto cov = random_cov(4, 3, 50);
    const auto p = random_pair(4, 51);
    using JP = JacobianPath;
    EXPECT_LT((jacobian_q(p, cov, JP::materialized) - jacobian_q(p, cov, JP::structured)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((jacobian_Q(p, cov, JP::materialized) - jacobian_Q(p, cov, JP::structured)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((jacobian_r(p, cov, JP::materialized) - jacobian_r(p, cov, JP::structured)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((jacobian_R(p, cov, JP::materialized) - jacobian_R(p, cov, JP::structured)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Jacobians, ScalarCase)
{
    const std::vector<Matrix> s{Matrix::Constant(1, 1, 2.0), Matrix::Constant(1, 1, 0.7)};
    const auto cov = LagCovSet::from_sigmas(s);
    const ProjectionPair p{Vector::Constant(1, 1.0), Vector::Constant(1, 0.3)};
    for (auto path : {JacobianPath::materialized, JacobianPath::structured})
        EXPECT_NEAR(jacobian_q(p, cov, path)(0, 0), 2.0 * 0.3 * 0.7, 1e-15);
}

TEST(Jacobians, ZeroCovariancesGiveZero)
{
    const std::vector<Matrix> s(4, Matrix::Zero(3, 3));
    const auto cov = LagCovSet::from_sigmas(s);
    const auto p = random_pair(3, 52);
    for (auto path : {JacobianPath::materialized, JacobianPath::structured}) {
        EXPECT_EQ(jacobian_q(p, cov, path).cwiseAbs().maxCoeff(), 0.0);
        EXPECT_EQ(jacobian_Q(p, cov, path).cwiseAbs().maxCoeff(), 0.0);
        EXPECT_EQ(jacobian_r(p, cov, path).cwiseAbs().maxCoeff(), 0.0);
        EXPECT_EQ(jacobian_R(p, cov, path).cwiseAbs().maxCoeff(), 0.0);
    }
}

TEST(Jacobians, QDifferentialIsSymmetric)
{
    const auto cov = random_cov(3, 4, 53);
    const auto p = random_pair(3, 54);
    Engine rng(55);
    const Vector dv = standard_normal(3, 1, rng);
    const Vector dq = jacobian_Q(p, cov) * dv;
    const Eigen::Map<const Matrix> dQ(dq.data(), 4, 4);
    EXPECT_LT((dQ - dQ.transpose()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(AnalyticGradient, MatchesFiniteDifferences)
{
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const Index D = 2 + static_cast<Index>(seed % 5);
        const int L = 1 + static_cast<int>((seed / 5) % 4);
        const auto cov = random_cov(D, L, 200 + seed);
        const auto p = random_pair(D, 400 + seed);
        const Vector fd = finite_diff_gradient(p, cov).stacked_vw();
        for (auto path : {JacobianPath::materialized, JacobianPath::structured}) {
            const Vector an = analytic_gradient(p, cov, path).stacked_vw();
            EXPECT_LT((an - fd).norm() / fd.norm(), 1e-5) << "seed " << seed;
        }
    }
}

TEST(AnalyticGradient, RadialComponentsVanish)
{
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto cov = random_cov(4, 3, 600 + seed);
        const auto p = random_pair(4, 700 + seed);
        const auto g = analytic_gradient(p, cov);
        EXPECT_NEAR(p.w.dot(g.grad_w), 0.0, 1e-8);
        EXPECT_NEAR(p.v.dot(g.grad_v), 0.0, 1e-8);
        EXPECT_TRUE(g.grad_w.allFinite() && g.grad_v.allFinite());
    }
}

TEST(AnalyticGradient, CombinedObjective)
{
    const auto cov = random_cov(3, 3, 800);
    const auto rev = cov.time_reversed();
    const auto p = random_pair(3, 801);
    const auto combined = combined_analytic_gradient(p, cov, rev);
    const auto fwd = analytic_gradient(p, cov);
    const auto bwd = analytic_gradient(p.swapped(), rev);
    EXPECT_LT((combined.grad_w - (fwd.grad_w + bwd.grad_v)).norm(), 1e-15);

    // against differences of F(w, v) = G(w, v) + G^tr(v, w)
    auto F = [&](const Vector& w, const Vector& v) {
        return latent_stats(w, v, cov).g_raw + latent_stats(v, w, rev).g_raw;
    };
    const double h = 1e-6;
    for (Index k = 0; k < 3; ++k) {
        Vector w1 = p.w, w2 = p.w;
        w1(k) += h;
        w2(k) -= h;
        EXPECT_NEAR(combined.grad_w(k), (F(w1, p.v) - F(w2, p.v)) / (2 * h), 1e-7);
    }
}

TEST(FiniteDiffGradient, SigmaZSquaredHandDerivative)
{
    const auto cov = random_cov(3, 2, 900);
    const auto p = random_pair(3, 901);
    const Matrix j = numeric_jacobian(
        [&](const Vector& w, const Vector& v) { return Vector::Constant(1, latent_moments(w, v, cov).sigma_z2); }, p,
        false);
    EXPECT_LT((j.transpose() - 2.0 * cov.sigma0() * p.v).norm(), 1e-8);
}

TEST(FiniteDiffGradient, ErrorShrinksWithStep)
{
    const auto cov = random_cov(4, 3, 902);
    const auto p = random_pair(4, 903);
    const Vector an = analytic_gradient(p, cov).stacked_vw();
    const double e1 = (finite_diff_gradient(p, cov, 1e-2).stacked_vw() - an).norm();
    const double e2 = (finite_diff_gradient(p, cov, 1e-3).stacked_vw() - an).norm();
    EXPECT_LT(e2, e1 / 20.0); // roughly h^2
    EXPECT_THROW(finite_diff_gradient(p, cov, 0.0), invalid_argument);
}
