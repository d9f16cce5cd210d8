#pragma once

#include "causality.hpp"
#include "random.hpp"

#include <Eigen/Eigenvalues>

#include <vector>

namespace latentgc {

/// s(t) = sum_k A_k s(t-k) + e(t), e ~ N(0, diag(innovation_std^2)).
class VarSystem
{
public:
    VarSystem(std::vector<Matrix> coefficients, Vector innovation_std)
        : coeffs_(std::move(coefficients)), noise_(std::move(innovation_std))
    {
        if (coeffs_.empty())
            throw invalid_argument("VAR system needs at least one lag");
        const Index k = coeffs_[0].rows();
        for (const auto& a : coeffs_)
            if (a.rows() != k || a.cols() != k)
                throw invalid_argument("VAR coefficient shape mismatch");
        if (noise_.size() != k || (noise_.array() < 0.0).any())
            throw invalid_argument("innovation std must have one non-negative entry per source");
        radius_ = spectral_radius_of(coeffs_);
        if (!(radius_ < 1.0))
            throw invalid_argument("VAR system is not stationary (companion spectral radius "
                                   + std::to_string(radius_) + ")");
    }

    VarSystem(std::vector<Matrix> coefficients, double innovation_std = 1.0)
        : VarSystem(coefficients, Vector::Constant(coefficients.empty() ? 0 : coefficients[0].rows(), innovation_std))
    {
    }

    Index sources() const { return coeffs_[0].rows(); }
    int order() const { return static_cast<int>(coeffs_.size()); }
    const std::vector<Matrix>& coefficients() const { return coeffs_; }
    const Vector& innovation_std() const { return noise_; }
    double spectral_radius() const { return radius_; }

    static Matrix companion(const std::vector<Matrix>& coeffs)
    {
        const Index k = coeffs[0].rows();
        const Index p = static_cast<Index>(coeffs.size());
        Matrix c = Matrix::Zero(k * p, k * p);
        for (Index l = 0; l < p; ++l)
            c.block(0, l * k, k, k) = coeffs[static_cast<std::size_t>(l)];
        if (p > 1)
            c.bottomLeftCorner(k * (p - 1), k * (p - 1)).setIdentity();
        return c;
    }

private:
    static double spectral_radius_of(const std::vector<Matrix>& coeffs)
    {
        Eigen::EigenSolver<Matrix> es(companion(coeffs), false);
        return es.eigenvalues().cwiseAbs().maxCoeff();
    }

    std::vector<Matrix> coeffs_;
    Vector noise_;
    double radius_ = 0.0;
};

/// Three-source VAR(3) with links s1 -> s2 -> s3, unit innovations.
inline VarSystem three_source_var3_system()
{
    Matrix a1(3, 3), a2(3, 3), a3(3, 3);
    a1 << -0.9, 0, 0,
        -0.356, 1.212, 0,
        0, -0.3098, -1.3856;
    a2 << -0.81, 0, 0,
        0.7136, -0.49, 0,
        0, 0.50, -0.64;
    a3 << 0, 0, 0,
        -0.356, 0, 0,
        0, -0.3098, 0;
    return VarSystem({a1, a2, a3}, 1.0);
}

/// Random dense VAR(order) scaled so the companion spectral radius equals `radius`.
inline VarSystem random_var_system(Index k, int order, double radius, Engine& rng)
{
    if (!(radius > 0.0 && radius < 1.0))
        throw invalid_argument("radius must lie in (0, 1)");
    std::vector<Matrix> coeffs;
    for (int l = 0; l < order; ++l)
        coeffs.push_back(standard_normal(k, k, rng) / std::sqrt(static_cast<double>(k * order)));
    Eigen::EigenSolver<Matrix> es(VarSystem::companion(coeffs), false);
    const double rho = es.eigenvalues().cwiseAbs().maxCoeff();
    // scaling A_l by s^l scales every companion eigenvalue by s
    const double s = radius / rho;
    double f = 1.0;
    for (auto& a : coeffs) {
        f *= s;
        a *= f;
    }
    return VarSystem(std::move(coeffs), 1.0);
}

inline constexpr int default_burn_in = 500;

/// K x N sources after discarding `burn_in` samples; the process starts at zero.
inline MultiSeries simulate_var(const VarSystem& sys, Index n, std::uint64_t seed, int burn_in = default_burn_in)
{
    if (n < 1)
        throw invalid_argument("sample count must be positive");
    if (burn_in < 0)
        throw invalid_argument("burn-in must be non-negative");
    const Index k = sys.sources();
    const int p = sys.order();
    const Index total = n + burn_in;
    Engine rng(seed);
    const Matrix e = standard_normal(k, total, rng);

    Matrix s = Matrix::Zero(k, total);
    for (Index t = 0; t < total; ++t) {
        Vector st = sys.innovation_std().cwiseProduct(e.col(t));
        for (int l = 1; l <= p && l <= t; ++l)
            st.noalias() += sys.coefficients()[static_cast<std::size_t>(l - 1)] * s.col(t - l);
        s.col(t) = st;
    }
    std::vector<std::string> labels;
    for (Index i = 0; i < k; ++i)
        labels.push_back("s" + std::to_string(i + 1));
    return MultiSeries::from_matrix(s.rightCols(n), labels);
}

struct MixingModel
{
    Matrix A; // D x K
    double noise_std = 0.0;

    /// Entries drawn from U[0, 1].
    static MixingModel uniform(Index d, Index k, Engine& rng, double noise_std = 0.0)
    {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        MixingModel m;
        m.A.resize(d, k);
        for (Index j = 0; j < k; ++j)
            for (Index i = 0; i < d; ++i)
                m.A(i, j) = u(rng);
        m.noise_std = noise_std;
        return m;
    }
};

/// X = A S + noise_std * N(0, I).
inline MultiSeries mix(const MultiSeries& sources, const MixingModel& m, std::uint64_t seed)
{
    if (m.A.cols() != sources.channels())
        throw invalid_argument("mixing matrix columns do not match source count");
    if (m.noise_std < 0.0)
        throw invalid_argument("noise std must be non-negative");
    Matrix x = m.A * sources.data;
    if (m.noise_std > 0.0) {
        Engine rng(seed);
        x += m.noise_std * standard_normal(x.rows(), x.cols(), rng);
    }
    auto out = MultiSeries::from_matrix(std::move(x));
    out.sample_step = sources.sample_step;
    return out;
}

} // namespace latentgc
