#pragma once

#include "csv.hpp"

namespace latentgc::io {

/// Steps run in this order: interpolate, standardize, global trend, downsample, center.
struct PreprocessSpec
{
    bool interpolate_gaps = true;
    bool standardize = false;
    bool remove_global_trend = false;
    int downsample_factor = 1;
    bool center = true;
};

/// Each channel to mean 0 and sample standard deviation 1.
inline Matrix standardize_rows(const Matrix& x)
{
    if (x.cols() < 2)
        throw invalid_argument("standardization needs at least 2 samples");
    Matrix out = center_rows(x);
    for (Index c = 0; c < out.rows(); ++c) {
        const double sd = std::sqrt(out.row(c).squaredNorm() / static_cast<double>(out.cols() - 1));
        if (!(sd > 0.0))
            throw invalid_argument("channel " + std::to_string(c + 1) + " has zero variance");
        out.row(c) /= sd;
    }
    return out;
}

/// Residuals of each channel after OLS on [1, cross-channel mean].
inline Matrix remove_global_trend(const Matrix& x)
{
    const Index T = x.cols();
    Matrix design(T, 2);
    design.col(0).setOnes();
    design.col(1) = x.colwise().mean().transpose();
    Eigen::ColPivHouseholderQR<Matrix> qr(design);
    if (qr.rank() < 2) // constant trend: only the intercept
        return center_rows(x);
    const Matrix coef = qr.solve(x.transpose()); // 2 x D
    return (x.transpose() - design * coef).transpose();
}

/// First sample of every block of `factor` samples.
inline Matrix downsample(const Matrix& x, int factor)
{
    if (factor < 1)
        throw invalid_argument("downsample factor must be >= 1");
    if (factor == 1)
        return x;
    const Index n = (x.cols() + factor - 1) / factor;
    Matrix out(x.rows(), n);
    for (Index j = 0; j < n; ++j)
        out.col(j) = x.col(j * factor);
    return out;
}

inline MultiSeries preprocess(const MultiSeries& x, const PreprocessSpec& spec)
{
    if (spec.downsample_factor < 1)
        throw invalid_argument("downsample factor must be >= 1");
    MultiSeries out = x;
    if (spec.interpolate_gaps && out.data.hasNaN())
        out.data = interpolate_gaps(out.data);
    if (spec.standardize)
        out.data = standardize_rows(out.data);
    if (spec.remove_global_trend)
        out.data = remove_global_trend(out.data);
    if (spec.downsample_factor > 1) {
        out.data = downsample(out.data, spec.downsample_factor);
        if (out.sample_step)
            *out.sample_step *= spec.downsample_factor;
    }
    if (spec.center)
        out.data = center_rows(out.data);
    return out;
}

} // namespace latentgc::io
