#pragma once

#include "types.hpp"

#include <cstdint>
#include <initializer_list>
#include <random>

namespace latentgc {

using Engine = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Independent seed for a labelled sub-stream (realization, stage, restart, ...).
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> stream)
{
    std::uint64_t h = splitmix64(base);
    for (auto s : stream)
        h = splitmix64(h ^ splitmix64(s + 0x632BE59BD9B4E019ULL));
    return h;
}

inline Matrix standard_normal(Index rows, Index cols, Engine& rng)
{
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix m(rows, cols);
    // column-major fill keeps draws ordered by time for series
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i)
            m(i, j) = n(rng);
    return m;
}

inline Vector random_unit_vector(Index dims, Engine& rng)
{
    Vector v = standard_normal(dims, 1, rng);
    const double n = v.norm();
    if (n == 0.0)
        v(0) = 1.0;
    else
        v /= n;
    return v;
}

} // namespace latentgc
