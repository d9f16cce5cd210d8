#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace latentgc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

class error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Bad shapes, out-of-range parameters and other caller mistakes.
class invalid_argument : public error
{
public:
    using error::error;
};

/// Q or R (or a regression design) could not be inverted.
class singular_matrix_error : public error
{
public:
    using error::error;
};

/// NaN/Inf reached a place where the math needs finite values.
class numerical_error : public error
{
public:
    using error::error;
};

/// D-channel x T-sample record. Channels are rows, time runs along columns.
struct MultiSeries
{
    Matrix data;
    std::vector<std::string> labels;
    std::optional<double> sample_step;

    Index channels() const { return data.rows(); }
    Index samples() const { return data.cols(); }

    static MultiSeries from_matrix(Matrix m, std::vector<std::string> labels = {})
    {
        MultiSeries s;
        s.data = std::move(m);
        if (labels.empty()) {
            for (Index i = 0; i < s.data.rows(); ++i)
                labels.push_back("x" + std::to_string(i + 1));
        }
        if (static_cast<Index>(labels.size()) != s.data.rows())
            throw invalid_argument("label count does not match channel count");
        s.labels = std::move(labels);
        return s;
    }
};

inline bool all_finite(const Matrix& m)
{
    return m.allFinite();
}

/// Throws unless the record has >= 2 channels, finite values and T > 3L.
inline void validate(const MultiSeries& x, int lags = 0)
{
    if (x.channels() < 2)
        throw invalid_argument("fewer than 2 channels");
    if (!all_finite(x.data))
        throw numerical_error("series contains non-finite values");
    if (lags > 0 && x.samples() <= 3 * static_cast<Index>(lags))
        throw invalid_argument("need more than 3*L samples (T=" + std::to_string(x.samples())
                               + ", L=" + std::to_string(lags) + ")");
}

inline Matrix center_rows(const Matrix& m)
{
    return m.colwise() - m.rowwise().mean();
}

inline MultiSeries centered(MultiSeries x)
{
    x.data = center_rows(x.data);
    return x;
}

inline Vector center(const Vector& v)
{
    return v.array() - v.mean();
}

/// Squared Pearson correlation.
inline double r_squared(const Vector& a, const Vector& b)
{
    const Vector ac = center(a);
    const Vector bc = center(b);
    const double den = ac.squaredNorm() * bc.squaredNorm();
    if (den <= 0.0)
        return 0.0;
    const double c = ac.dot(bc);
    return c * c / den;
}

inline double pearson(const Vector& a, const Vector& b)
{
    const Vector ac = center(a);
    const Vector bc = center(b);
    const double den = std::sqrt(ac.squaredNorm() * bc.squaredNorm());
    return den > 0.0 ? ac.dot(bc) / den : 0.0;
}

} // namespace latentgc
