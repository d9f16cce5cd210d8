#include <latentgc/benchmark.hpp>

#include <gtest/gtest.h>

using namespace latentgc;

TEST(VarSystem, ThreeSourceSystemIsStationary)
{
    const VarSystem sys = three_source_var3_system();
    EXPECT_LT(sys.spectral_radius(), 1.0);
    EXPECT_EQ(sys.sources(), 3);
    EXPECT_EQ(sys.order(), 3);
}

TEST(VarSystem, RejectsNonStationaryAndBadShapes)
{
    EXPECT_THROW(VarSystem({Matrix::Identity(2, 2)}, 1.0), invalid_argument);
    EXPECT_THROW(VarSystem({Matrix::Zero(2, 2), Matrix::Zero(3, 3)}, 1.0), invalid_argument);
    EXPECT_THROW(VarSystem({Matrix::Zero(2, 2)}, Vector::Ones(3)), invalid_argument);
    EXPECT_THROW(VarSystem(std::vector<Matrix>{}, Vector::Ones(2)), invalid_argument);
}

TEST(VarSystem, RandomSystemHasRequestedRadius)
{
    Engine rng(1);
    const VarSystem sys = random_var_system(4, 3, 0.7, rng);
    EXPECT_NEAR(sys.spectral_radius(), 0.7, 1e-10);
}

TEST(SimulateVar, DeterministicShapeAndStableVariance)
{
    const VarSystem sys = three_source_var3_system();
    const MultiSeries a = simulate_var(sys, 6000, 2);
    const MultiSeries b = simulate_var(sys, 6000, 2);
    EXPECT_TRUE(a.data == b.data);
    EXPECT_EQ(a.channels(), 3);
    EXPECT_EQ(a.samples(), 6000);
    EXPECT_TRUE(a.data.allFinite());
    for (Index k = 0; k < 3; ++k) {
        const double v1 = center(a.data.row(k).head(3000).transpose()).squaredNorm();
        const double v2 = center(a.data.row(k).tail(3000).transpose()).squaredNorm();
        EXPECT_LT(std::max(v1, v2) / std::min(v1, v2), 3.0);
    }
    EXPECT_THROW(simulate_var(sys, 0, 1), invalid_argument);
}

TEST(SimulateVar, FollowsTheRecursion)
{
    // with burn-in 0 the first sample is the scaled innovation
    Matrix a(1, 1);
    a << 0.5;
    const VarSystem sys({a}, Vector::Constant(1, 2.0));
    const MultiSeries s = simulate_var(sys, 10, 3, 0);
    Engine rng(3);
    const Matrix e = standard_normal(1, 10, rng);
    EXPECT_DOUBLE_EQ(s.data(0, 0), 2.0 * e(0, 0));
    EXPECT_DOUBLE_EQ(s.data(0, 1), 0.5 * s.data(0, 0) + 2.0 * e(0, 1));
}

TEST(SimulateVar, ZeroCoefficientsGiveWhiteNoise)
{
    const VarSystem sys({Matrix::Zero(3, 3)}, 1.0);
    const MultiSeries s = simulate_var(sys, 5000, 4);
    const Matrix g = pairwise_causality_matrix(s, 3);
    EXPECT_LT(g.maxCoeff(), 0.01);
}

TEST(SimulateVar, IndirectLinkWeakerThanDirectLinks)
{
    const MultiSeries s = simulate_var(three_source_var3_system(), 5000, 5);
    const Matrix g = pairwise_causality_matrix(s, 3);
    EXPECT_LT(g(0, 2), g(0, 1));
    EXPECT_LT(g(0, 2), g(1, 2));
}

TEST(Mix, IdentityLinearityAndNoise)
{
    const MultiSeries s = simulate_var(three_source_var3_system(), 2000, 6);
    MixingModel id{Matrix::Identity(3, 3), 0.0};
    EXPECT_TRUE(mix(s, id, 0).data == s.data);

    Engine rng(7);
    const MixingModel mm = MixingModel::uniform(4, 3, rng);
    EXPECT_EQ(mm.A.rows(), 4);
    EXPECT_GE(mm.A.minCoeff(), 0.0);
    EXPECT_LE(mm.A.maxCoeff(), 1.0);
    const MultiSeries s2 = simulate_var(three_source_var3_system(), 2000, 8);
    MultiSeries combo = s;
    combo.data = 2.0 * s.data - 0.5 * s2.data;
    const Matrix lhs = mix(combo, mm, 0).data;
    const Matrix rhs = 2.0 * mix(s, mm, 0).data - 0.5 * mix(s2, mm, 0).data;
    EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-10);

    MixingModel bad{Matrix::Ones(4, 2), 0.0};
    EXPECT_THROW(mix(s, bad, 0), invalid_argument);

    MixingModel noisy = mm;
    noisy.noise_std = 1e4;
    EXPECT_LT(pairwise_causality_matrix(mix(s, noisy, 9), 3).maxCoeff(), 0.01);
}

TEST(RunBenchmark, SingleRealizationAndDeterminism)
{
    BenchmarkOptions opt;
    opt.realizations = 1;
    opt.samples = 1500;
    opt.seed = 3;
    const auto cfg = benchmark_config(3);
    const auto a = run_benchmark(opt, cfg);
    const auto b = run_benchmark(opt, cfg);
    ASSERT_EQ(a.rows.size(), 1u);
    EXPECT_TRUE(a.rows[0].ok) << a.rows[0].error;
    EXPECT_EQ(a.rows[0].g_y1z1, b.rows[0].g_y1z1);
    EXPECT_EQ(a.rows[0].mixing_r2, b.rows[0].mixing_r2);
    const auto agg = a.aggregate();
    EXPECT_EQ(agg.at("g_y1_z1").n, 1);
    EXPECT_GT(a.rows[0].max_observed_g, 0.0);
}

TEST(Summary, MeanAndStandardError)
{
    const auto s = summarize({1.0, 2.0, 3.0, 4.0});
    EXPECT_DOUBLE_EQ(s.mean, 2.5);
    EXPECT_NEAR(s.sem, std::sqrt(5.0 / 3.0) / 2.0, 1e-15);
    EXPECT_EQ(summarize({}).n, 0);
}
