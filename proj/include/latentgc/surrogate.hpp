#pragma once

#include "optimizer.hpp"

#include <unsupported/Eigen/FFT>

#include <complex>
#include <numbers>

namespace latentgc {

/// Per-channel phase-randomized surrogate. Fourier moduli, DC and Nyquist bins
/// are kept; each channel gets its own phase stream, so lagged cross-channel
/// dependence is destroyed.
inline Matrix phase_randomize(const Matrix& x, std::uint64_t seed)
{
    const Index T = x.cols();
    if (T < 4)
        throw invalid_argument("phase randomization needs at least 4 samples");
    Eigen::FFT<double> fft;
    Matrix out(x.rows(), T);
    std::vector<double> in(static_cast<std::size_t>(T)), back;
    std::vector<std::complex<double>> spec;
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    for (Index c = 0; c < x.rows(); ++c) {
        Engine rng(derive_seed(seed, {static_cast<std::uint64_t>(c)}));
        for (Index t = 0; t < T; ++t)
            in[static_cast<std::size_t>(t)] = x(c, t);
        fft.fwd(spec, in);
        for (Index k = 1; 2 * k < T; ++k) {
            const auto uk = static_cast<std::size_t>(k);
            const auto rot = std::polar(1.0, phase(rng));
            spec[uk] *= rot;
            spec[static_cast<std::size_t>(T - k)] = std::conj(spec[uk]);
        }
        fft.inv(back, spec);
        for (Index t = 0; t < T; ++t)
            out(c, t) = back[static_cast<std::size_t>(t)];
    }
    return out;
}

inline MultiSeries phase_randomize(const MultiSeries& x, std::uint64_t seed)
{
    MultiSeries s = x;
    s.data = phase_randomize(x.data, seed);
    return s;
}

/// |DFT|^2 of one series.
inline Vector periodogram(const Vector& x)
{
    Eigen::FFT<double> fft;
    std::vector<double> in(x.data(), x.data() + x.size());
    std::vector<std::complex<double>> spec;
    fft.fwd(spec, in);
    Vector p(x.size());
    for (Index k = 0; k < x.size(); ++k)
        p(k) = std::norm(spec[static_cast<std::size_t>(k)]);
    return p;
}

/// (#{null >= observed} + 1) / (n + 1).
inline double surrogate_p_value(double observed, const std::vector<double>& null)
{
    std::size_t count = 0;
    for (double g : null)
        if (g >= observed)
            ++count;
    return static_cast<double>(count + 1) / static_cast<double>(null.size() + 1);
}

struct SurrogateTestResult
{
    std::vector<double> observed_g;                // per recovered pair
    std::vector<std::vector<double>> null_samples; // per pair, ordered by surrogate index
    std::vector<double> p_value;
    int n_surrogates = 0;
    std::vector<int> failed; // surrogate indices whose decomposition failed
    Decomposition observed;
};

/// Runs the full decomposition on x and on n_surrogates phase-randomized copies.
inline SurrogateTestResult surrogate_test(const MultiSeries& x, const OptimizerConfig& cfg, int n_surrogates,
                                          std::uint64_t seed)
{
    if (n_surrogates < 1)
        throw invalid_argument("need at least one surrogate");
    SurrogateTestResult res;
    res.n_surrogates = n_surrogates;
    res.observed = decompose(x, cfg);
    if (res.observed.error)
        throw error("decomposition of the observed data failed: " + *res.observed.error);
    const std::size_t P = res.observed.pairs.size();
    for (const auto& p : res.observed.pairs)
        res.observed_g.push_back(p.g_forward);

    OptimizerConfig inner = cfg;
    inner.threads = 1;
    const auto n = static_cast<std::size_t>(n_surrogates);
    std::vector<std::vector<double>> per_surrogate(n);
    std::vector<char> ok(n, 0);
    parallel_for(
        n,
        [&](std::size_t s) {
            try {
                const MultiSeries xs = phase_randomize(x, derive_seed(seed, {static_cast<std::uint64_t>(s)}));
                const Decomposition d = decompose(xs, inner);
                for (const auto& p : d.pairs)
                    per_surrogate[s].push_back(p.g_forward);
                ok[s] = d.error ? 0 : 1;
            } catch (const error&) {
                ok[s] = 0;
            }
        },
        cfg.threads);

    res.null_samples.assign(P, {});
    for (std::size_t s = 0; s < n; ++s) {
        if (!ok[s])
            res.failed.push_back(static_cast<int>(s));
        for (std::size_t p = 0; p < P && p < per_surrogate[s].size(); ++p)
            res.null_samples[p].push_back(per_surrogate[s][p]);
    }
    for (std::size_t p = 0; p < P; ++p)
        res.p_value.push_back(surrogate_p_value(res.observed_g[p], res.null_samples[p]));
    return res;
}

} // namespace latentgc
