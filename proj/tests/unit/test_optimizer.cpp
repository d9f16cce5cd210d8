#include <latentgc/matching.hpp>
#include <latentgc/optimizer.hpp>
#include <latentgc/simulator.hpp>
#include <latentgc/surrogate.hpp>

#include <gtest/gtest.h>

using namespace latentgc;

namespace {

// s1 autoregressive, s2 driven by the past of s1.
MultiSeries two_source_system(Index T, std::uint64_t seed)
{
    Matrix a1(2, 2), a2(2, 2);
    a1 << 0.5, 0.0, 0.6, 0.3;
    a2 << -0.3, 0.0, 0.3, 0.0;
    return simulate_var(VarSystem({a1, a2}, 1.0), T, seed);
}

OptimizerConfig small_config(int pairs = 1, std::uint64_t seed = 3)
{
    OptimizerConfig c;
    c.lags = 2;
    c.pairs = pairs;
    c.seed = seed;
    return c;
}

} // namespace

TEST(ForwardModel, IdentityCovarianceReturnsFilter)
{
    Vector w(3);
    w << 0.6, 0.0, 0.8;
    EXPECT_LT((compute_forward_model(w, Matrix::Identity(3, 3)) - w).norm(), 1e-15);
}

TEST(ForwardModel, InverseScaling)
{
    Engine rng(1);
    const Matrix a = standard_normal(4, 4, rng);
    const Matrix s0 = a * a.transpose();
    const Vector w = random_unit_vector(4, rng);
    EXPECT_LT((compute_forward_model(2.5 * w, s0) - compute_forward_model(w, s0) / 2.5).norm(), 1e-12);
    EXPECT_THROW(compute_forward_model(Vector::Zero(4), s0), invalid_argument);
    EXPECT_THROW(compute_forward_model(w, Matrix::Identity(3, 3)), invalid_argument);
}

TEST(OptimizerConfig, Validation)
{
    OptimizerConfig c;
    EXPECT_NO_THROW(c.check());
    c.lags = 0;
    EXPECT_THROW(c.check(), invalid_argument);
    c = {};
    c.cond_limit = 1.0;
    EXPECT_THROW(c.check(), invalid_argument);
    c = {};
    c.restarts = 0;
    EXPECT_THROW(c.check(), invalid_argument);
}

TEST(OptimizePair, RecoversIdentityMixedAxes)
{
    const MultiSeries s = two_source_system(5000, 10);
    const auto cov = LagCovSet::estimate(s, 2);
    const auto r = optimize_pair(cov, small_config());
    EXPECT_GT(std::abs(r.pair.w(0)), 0.95);
    EXPECT_GT(std::abs(r.pair.v(1)), 0.95);
    EXPECT_NEAR(r.pair.w.norm(), 1.0, 1e-10);
    EXPECT_NEAR(r.pair.v.norm(), 1.0, 1e-10);
    EXPECT_TRUE(r.trace.converged);
}

TEST(OptimizePair, MonotoneAscentAndStationarity)
{
    const MultiSeries s = two_source_system(4000, 11);
    Engine rng(12);
    const Matrix a = standard_normal(3, 2, rng);
    const auto cov = LagCovSet::estimate(Matrix(a * s.data), 2);
    for (auto method : {GradientMethod::finite_difference, GradientMethod::analytic}) {
        auto cfg = small_config();
        cfg.gradient = method;
        const auto r = optimize_pair(cov, cfg);
        double prev = r.trace.initial_g + r.trace.initial_g_tr;
        for (const auto& rec : r.trace.records) {
            EXPECT_GE(rec.objective, prev - 1e-12);
            prev = rec.objective;
        }
        ASSERT_TRUE(r.trace.converged);
        const auto& last = r.trace.records.back();
        EXPECT_LT(last.grad_norm_w, 1e-3);
        EXPECT_LT(last.grad_norm_v, 1e-3);
    }
}

TEST(OptimizePair, AnalyticGradientStationaryAtOptimum)
{
    const MultiSeries s = two_source_system(4000, 13);
    const auto cov = LagCovSet::estimate(s, 2);
    const auto rev = cov.time_reversed();
    const auto r = optimize_pair(cov, small_config());
    const auto g = combined_analytic_gradient(r.pair, cov, rev);
    EXPECT_LT(project_tangent(r.pair.w, g.grad_w).norm(), 1e-3);
    EXPECT_LT(project_tangent(r.pair.v, g.grad_v).norm(), 1e-3);
}

TEST(OptimizePair, SignConvention)
{
    const auto cov = LagCovSet::estimate(two_source_system(2000, 14), 2);
    const auto r = optimize_pair(cov, small_config());
    for (const Vector* f : {&r.pair.w, &r.pair.v}) {
        Index k = 0;
        f->cwiseAbs().maxCoeff(&k);
        EXPECT_GT((*f)(k), 0.0);
    }
}

TEST(OptimizePair, RestartsPickBestObjective)
{
    Engine rng(15);
    const Matrix a = standard_normal(4, 2, rng);
    const auto cov = LagCovSet::estimate(Matrix(a * two_source_system(2000, 16).data), 2);
    auto cfg = small_config();
    cfg.restarts = 4;
    const auto best = optimize_pair(cov, cfg);
    for (int r = 0; r < 4; ++r) {
        Engine start(derive_seed(cfg.seed, {0, static_cast<std::uint64_t>(r)}));
        ProjectionPair p;
        p.w = standard_normal(4, 1, start);
        p.v = standard_normal(4, 1, start);
        const auto single = optimize_pair_from(cov, cov.time_reversed(), cfg, p);
        EXPECT_GE(best.objective, single.objective);
    }
}

TEST(Decompose, DeterministicAndPrefixProperty)
{
    Engine rng(20);
    const VarSystem sys = three_source_var3_system();
    const MultiSeries x = mix(simulate_var(sys, 1500, 21), MixingModel::uniform(4, 3, rng), 0);
    auto cfg = small_config(2, 5);
    cfg.lags = 3;
    const auto a = decompose(x, cfg);
    const auto b = decompose(x, cfg);
    ASSERT_EQ(a.pairs.size(), 2u);
    for (std::size_t i = 0; i < 2; ++i) {
        EXPECT_TRUE(a.pairs[i].pair.w == b.pairs[i].pair.w);
        EXPECT_TRUE(a.pairs[i].pair.v == b.pairs[i].pair.v);
        EXPECT_EQ(a.pairs[i].g_forward, b.pairs[i].g_forward);
    }
    cfg.pairs = 1;
    const auto one = decompose(x, cfg);
    ASSERT_EQ(one.pairs.size(), 1u);
    EXPECT_TRUE(one.pairs[0].pair.w == a.pairs[0].pair.w);
    EXPECT_TRUE(one.pairs[0].y == a.pairs[0].y);
}

TEST(Decompose, StageTwoIsUncorrelatedWithStageOneDriverLags)
{
    Engine rng(22);
    const MultiSeries x = mix(simulate_var(three_source_var3_system(), 2000, 23), MixingModel::uniform(4, 3, rng), 0);
    auto cfg = small_config(2, 6);
    cfg.lags = 3;
    const auto d = decompose(x, cfg);
    ASSERT_EQ(d.pairs.size(), 2u);
    EXPECT_EQ(d.deflation_ranks.size(), 1u);
    EXPECT_EQ(d.deflation_ranks[0], 5); // y, three lags, constant
    const Vector& y1 = d.pairs[0].y;
    const Index T = y1.size();
    for (int l = 0; l <= 3; ++l) {
        Vector lagged = Vector::Zero(T);
        lagged.tail(T - l) = y1.head(T - l);
        EXPECT_LT(std::abs(pearson(d.pairs[1].y, lagged)), 1e-6) << "lag " << l;
        EXPECT_LT(std::abs(pearson(d.pairs[1].z, lagged)), 1e-6) << "lag " << l;
    }
}

TEST(Decompose, ReportAgainstOriginalData)
{
    Engine rng(24);
    const MultiSeries x = mix(two_source_system(1500, 24), MixingModel::uniform(3, 2, rng, 0.3), 25);
    auto cfg = small_config(2, 7);
    cfg.report_original = true;
    const auto d = decompose(x, cfg);
    ASSERT_EQ(d.pairs.size(), 2u);
    const Matrix xc = center_rows(x.data);
    EXPECT_LT((d.pairs[1].y - (d.pairs[1].pair.w.transpose() * xc).transpose()).norm(), 1e-10);
}

TEST(Decompose, DegenerateDataStopsEarly)
{
    Engine rng(25);
    Matrix x(3, 500);
    x.row(0) = standard_normal(1, 500, rng);
    x.row(1) = 2.0 * x.row(0);
    x.row(2) = -x.row(0);
    const auto d = decompose(MultiSeries::from_matrix(x), small_config(2));
    EXPECT_TRUE(d.pairs.empty());
    EXPECT_FALSE(d.warnings.empty());
}

TEST(Decompose, WhiteNoiseBelowSurrogateNull)
{
    Engine rng(26);
    const MultiSeries x = MultiSeries::from_matrix(standard_normal(3, 1000, rng));
    auto cfg = small_config(1, 8);
    const auto res = surrogate_test(x, cfg, 39, 9);
    auto null = res.null_samples[0];
    std::sort(null.begin(), null.end());
    EXPECT_LT(res.observed_g[0], null[static_cast<std::size_t>(0.95 * null.size())]);
    EXPECT_LT(res.observed_g[0], 0.02);
}

TEST(MatchComponents, SelfMatchAndReordering)
{
    Engine rng(30);
    const MultiSeries s = MultiSeries::from_matrix(standard_normal(3, 20000, rng));
    const MixingModel mm = MixingModel::uniform(4, 3, rng);
    const Matrix x = mm.A * s.data;
    Decomposition d;
    PairResult p1, p2;
    p1.y = s.data.row(0).transpose();
    p1.z = s.data.row(1).transpose();
    p2.y = -2.0 * s.data.row(1).transpose();
    p2.z = s.data.row(2).transpose();
    d.pairs = {p1, p2};
    const auto rep = match_components(d, s, mm.A, x, {{0, 1}, {1, 2}});
    EXPECT_FALSE(rep.reordered);
    for (const auto& l : rep.links) {
        EXPECT_NEAR(l.r2_driver, 1.0, 1e-12);
        EXPECT_NEAR(l.r2_driven, 1.0, 1e-12);
    }
    EXPECT_GT(rep.mixing_r2, 0.99);

    d.pairs = {p2, p1};
    const auto swapped = match_components(d, s, mm.A, x, {{0, 1}, {1, 2}});
    EXPECT_TRUE(swapped.reordered);
    EXPECT_EQ(swapped.links[0].pair, 1);
    EXPECT_EQ(swapped.links[1].pair, 0);
    EXPECT_NEAR(swapped.links[0].r2_driver, 1.0, 1e-12);
}
