#pragma once

// Synthetic VAR(3) benchmark: simulate sources, mix to four channels,
// decompose into two pairs and score them against the ground truth.

#include "matching.hpp"
#include "simulator.hpp"

#include <cmath>
#include <map>
#include <string>

namespace latentgc {

struct BenchmarkOptions
{
    int realizations = 100;
    Index samples = 5000;
    Index observed_dims = 4;
    std::uint64_t seed = 7;
    int burn_in = default_burn_in;
    double sensor_noise = 0.0;
    unsigned threads = 0;
};

struct RealizationResult
{
    int index = 0;
    bool ok = false;
    std::string error;

    double g_y1z1 = 0.0; // recovered pair matched to s1 -> s2
    double g_y2z2 = 0.0; // recovered pair matched to s2 -> s3
    double g_s1s2 = 0.0; // source level
    double g_s2s3 = 0.0;
    double g_s1s3 = 0.0;
    double max_observed_g = 0.0;
    double r2_s1_y1 = 0.0, r2_s2_z1 = 0.0, r2_s2_y2 = 0.0, r2_s3_z2 = 0.0;
    double mixing_r2 = 0.0;
    bool reordered = false;
    int outer_iters_pair1 = 0; // extraction order
    int outer_iters_pair2 = 0;
    bool converged_pair1 = false;
    bool converged_pair2 = false;
};

struct Summary
{
    double mean = 0.0;
    double sem = 0.0;
    int n = 0;
};

inline Summary summarize(const std::vector<double>& v)
{
    Summary s;
    s.n = static_cast<int>(v.size());
    if (v.empty())
        return s;
    double sum = 0.0;
    for (double x : v)
        sum += x;
    s.mean = sum / s.n;
    if (s.n > 1) {
        double ss = 0.0;
        for (double x : v)
            ss += (x - s.mean) * (x - s.mean);
        s.sem = std::sqrt(ss / (s.n - 1)) / std::sqrt(static_cast<double>(s.n));
    }
    return s;
}

struct BenchmarkReport
{
    BenchmarkOptions options;
    OptimizerConfig config;
    std::vector<RealizationResult> rows;
    int failures = 0;

    /// Mean +- sem of a per-realization field over successful rows.
    template <class Field>
    Summary summary(Field field) const
    {
        std::vector<double> v;
        for (const auto& r : rows)
            if (r.ok)
                v.push_back(static_cast<double>(field(r)));
        return summarize(v);
    }

    std::map<std::string, Summary> aggregate() const
    {
        std::map<std::string, Summary> a;
        a["g_y1_z1"] = summary([](const auto& r) { return r.g_y1z1; });
        a["g_y2_z2"] = summary([](const auto& r) { return r.g_y2z2; });
        a["g_s1_s2"] = summary([](const auto& r) { return r.g_s1s2; });
        a["g_s2_s3"] = summary([](const auto& r) { return r.g_s2s3; });
        a["g_s1_s3"] = summary([](const auto& r) { return r.g_s1s3; });
        a["max_observed_g"] = summary([](const auto& r) { return r.max_observed_g; });
        a["r2_s1_y1"] = summary([](const auto& r) { return r.r2_s1_y1; });
        a["r2_s2_z1"] = summary([](const auto& r) { return r.r2_s2_z1; });
        a["r2_s2_y2"] = summary([](const auto& r) { return r.r2_s2_y2; });
        a["r2_s3_z2"] = summary([](const auto& r) { return r.r2_s3_z2; });
        a["mixing_r2"] = summary([](const auto& r) { return r.mixing_r2; });
        a["outer_iters_pair1"] = summary([](const auto& r) { return r.outer_iters_pair1; });
        a["outer_iters_pair2"] = summary([](const auto& r) { return r.outer_iters_pair2; });
        return a;
    }
};

/// Configuration used by the benchmark: L = 3, P = 2, c = inf.
inline OptimizerConfig benchmark_config(std::uint64_t seed = 7)
{
    OptimizerConfig c;
    c.lags = 3;
    c.pairs = 2;
    c.cond_limit = no_cond_limit;
    c.seed = seed;
    return c;
}

struct RealizationData
{
    MultiSeries sources;
    MixingModel mixing;
    MultiSeries observations;
};

/// Sources, mixing and observations of realization m.
inline RealizationData realization_data(int m, const BenchmarkOptions& opt)
{
    const auto um = static_cast<std::uint64_t>(m);
    const VarSystem sys = three_source_var3_system();
    RealizationData r;
    r.sources = simulate_var(sys, opt.samples, derive_seed(opt.seed, {um, 1}), opt.burn_in);
    Engine mix_rng(derive_seed(opt.seed, {um, 2}));
    r.mixing = MixingModel::uniform(opt.observed_dims, sys.sources(), mix_rng, opt.sensor_noise);
    r.observations = mix(r.sources, r.mixing, derive_seed(opt.seed, {um, 3}));
    return r;
}

inline RealizationResult run_realization(int m, const BenchmarkOptions& opt, OptimizerConfig cfg)
{
    RealizationResult row;
    row.index = m;
    try {
        const auto um = static_cast<std::uint64_t>(m);
        const RealizationData data = realization_data(m, opt);
        const MultiSeries& s = data.sources;
        const MixingModel& mm = data.mixing;
        const MultiSeries& x = data.observations;

        const int L = cfg.lags;
        row.g_s1s2 = causality_direct(Vector(s.data.row(0)), Vector(s.data.row(1)), L);
        row.g_s2s3 = causality_direct(Vector(s.data.row(1)), Vector(s.data.row(2)), L);
        row.g_s1s3 = causality_direct(Vector(s.data.row(0)), Vector(s.data.row(2)), L);
        row.max_observed_g = pairwise_causality_matrix(x, L).maxCoeff();

        cfg.seed = derive_seed(opt.seed, {um, 4});
        cfg.threads = 1;
        const Decomposition d = decompose(x, cfg);
        if (d.error)
            throw error(*d.error);
        if (d.pairs.size() < 2)
            throw error("fewer than two pairs recovered");

        const auto rep = match_components(d, s, mm.A, x.data, {{0, 1}, {1, 2}});
        const auto& l1 = rep.links[0];
        const auto& l2 = rep.links[1];
        row.g_y1z1 = d.pairs[static_cast<std::size_t>(l1.pair)].g_forward;
        row.g_y2z2 = d.pairs[static_cast<std::size_t>(l2.pair)].g_forward;
        row.r2_s1_y1 = l1.r2_driver;
        row.r2_s2_z1 = l1.r2_driven;
        row.r2_s2_y2 = l2.r2_driver;
        row.r2_s3_z2 = l2.r2_driven;
        row.mixing_r2 = rep.mixing_r2;
        row.reordered = rep.reordered;
        row.outer_iters_pair1 = d.pairs[0].trace.outer_iterations;
        row.outer_iters_pair2 = d.pairs[1].trace.outer_iterations;
        row.converged_pair1 = d.pairs[0].trace.converged;
        row.converged_pair2 = d.pairs[1].trace.converged;
        row.ok = true;
    } catch (const std::exception& e) {
        row.ok = false;
        row.error = e.what();
    }
    return row;
}

inline BenchmarkReport run_benchmark(const BenchmarkOptions& opt, const OptimizerConfig& cfg)
{
    if (opt.realizations < 1)
        throw invalid_argument("realizations must be >= 1");
    cfg.check();
    BenchmarkReport rep;
    rep.options = opt;
    rep.config = cfg;
    rep.rows.resize(static_cast<std::size_t>(opt.realizations));
    parallel_for(
        rep.rows.size(), [&](std::size_t m) { rep.rows[m] = run_realization(static_cast<int>(m), opt, cfg); },
        opt.threads);
    for (const auto& r : rep.rows)
        if (!r.ok)
            ++rep.failures;
    return rep;
}

} // namespace latentgc
