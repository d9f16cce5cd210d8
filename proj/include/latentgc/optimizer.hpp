#pragma once

// Grouped coordinate ascent on F(w, v) = G(w, v) + G^tr(v, w) over the product
// of two unit spheres, and sequential extraction of P pairs with deflation.

#include "deflation.hpp"
#include "gradient.hpp"
#include "parallel.hpp"
#include "random.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace latentgc {

struct OptimizerConfig
{
    int lags = 3;
    int pairs = 1;
    double cond_limit = no_cond_limit;
    int outer_max_iters = 50;
    int inner_max_evals = 10000;
    int inner_max_iters = 4000;
    double tol = 1e-6;
    std::uint64_t seed = 0;
    double init_scale = 1.0;
    int restarts = 1;

    GradientMethod gradient = GradientMethod::finite_difference;
    double fd_step = 1e-6;
    /// Inner solve stops when one accepted step gains less than this, or when
    /// the tangent gradient norm falls below inner_gtol.
    double inner_ftol = 1e-10;
    double inner_gtol = 1e-7;
    double armijo_c1 = 1e-4;
    double backtrack = 0.5;
    double initial_step = 1.0;

    EstimationWindow window = EstimationWindow::trimmed;
    /// Lag 0 of the driving signal is part of the deflation basis.
    bool deflate_lag0 = true;
    /// Components and forward models against the original data instead of the stage data.
    bool report_original = false;
    unsigned threads = 0; // 0: hardware concurrency

    void check() const
    {
        if (lags < 1)
            throw invalid_argument("lags must be >= 1");
        if (pairs < 1)
            throw invalid_argument("pairs must be >= 1");
        if (!(cond_limit > 1.0))
            throw invalid_argument("condition limit must be > 1");
        if (outer_max_iters < 1 || inner_max_iters < 1 || inner_max_evals < 1)
            throw invalid_argument("iteration limits must be positive");
        if (!(tol > 0.0))
            throw invalid_argument("tolerance must be positive");
        if (restarts < 1)
            throw invalid_argument("restarts must be >= 1");
        if (!(init_scale > 0.0))
            throw invalid_argument("init_scale must be positive");
        if (!(backtrack > 0.0 && backtrack < 1.0) || !(initial_step > 0.0))
            throw invalid_argument("invalid line-search parameters");
    }
};

enum class Block { v, w };

inline const char* to_string(Block b)
{
    return b == Block::v ? "v" : "w";
}

struct TraceRecord
{
    int outer = 0; // 1-based outer iteration
    Block block = Block::v;
    double g = 0.0;
    double g_tr = 0.0;
    double objective = 0.0;
    double grad_norm_w = 0.0; // sphere-projected
    double grad_norm_v = 0.0;
    int inner_iters = 0;
    int evals = 0;
};

struct ConvergenceTrace
{
    double initial_g = 0.0;
    double initial_g_tr = 0.0;
    std::vector<TraceRecord> records;
    int outer_iterations = 0;
    bool converged = false;
    std::string stop_reason;
};

struct PairResult
{
    ProjectionPair pair;
    Vector y;
    Vector z;
    double g_forward = 0.0;
    double g_reversed = 0.0;
    double objective = 0.0;
    Vector forward_model_w;
    Vector forward_model_v;
    ConvergenceTrace trace;
    int restart = 0; // index of the winning restart
};

struct Decomposition
{
    std::vector<PairResult> pairs;
    std::vector<Index> deflation_ranks;
    OptimizerConfig config;
    std::vector<std::string> warnings;
    std::optional<std::string> error; // set when a stage failed; pairs holds the earlier stages
};

/// a_f = Sigma(0) f / (f^T Sigma(0) f).
inline Vector compute_forward_model(const Vector& f, const Matrix& sigma0)
{
    if (sigma0.rows() != f.size() || sigma0.cols() != f.size())
        throw invalid_argument("forward model dimension mismatch");
    const Vector sf = sigma0 * f;
    const double power = f.dot(sf);
    if (!(power > 0.0))
        throw invalid_argument("filter has zero power");
    return sf / power;
}

/// Flips f so that its largest-magnitude entry is positive.
inline void apply_sign_convention(Vector& f)
{
    Index k = 0;
    f.cwiseAbs().maxCoeff(&k);
    if (f(k) < 0.0)
        f = -f;
}

/// Tangent-space component of g at the unit vector u.
inline Vector project_tangent(const Vector& u, const Vector& g)
{
    return g - u.dot(g) * u;
}

namespace detail {

struct Objective
{
    const LagCovSet& fwd;
    const LagCovSet& rev;
    const OptimizerConfig& cfg;
    int evals = 0;

    struct Value
    {
        double g = 0.0;
        double g_tr = 0.0;
        double f = 0.0;
    };

    Value operator()(const Vector& w, const Vector& v)
    {
        ++evals;
        Value out;
        out.g = latent_stats(w, v, fwd).g_raw;
        out.g_tr = latent_stats(v, w, rev).g_raw;
        out.f = out.g + out.g_tr;
        if (!std::isfinite(out.f))
            throw numerical_error("objective is not finite");
        return out;
    }

    /// dF/du for one block with the other held fixed.
    Vector gradient(const Vector& w, const Vector& v, Block b)
    {
        if (cfg.gradient == GradientMethod::analytic) {
            const auto gr = combined_analytic_gradient({w, v}, fwd, rev);
            ++evals;
            return b == Block::v ? gr.grad_v : gr.grad_w;
        }
        const Vector& u0 = b == Block::v ? v : w;
        Vector u = u0;
        Vector g(u.size());
        for (Index k = 0; k < u.size(); ++k) {
            const double step = cfg.fd_step * std::max(1.0, std::abs(u0(k)));
            u(k) = u0(k) + step;
            const double up = b == Block::v ? (*this)(w, u).f : (*this)(u, v).f;
            u(k) = u0(k) - step;
            const double down = b == Block::v ? (*this)(w, u).f : (*this)(u, v).f;
            u(k) = u0(k);
            g(k) = (up - down) / (2.0 * step);
        }
        return g;
    }
};

struct InnerResult
{
    int iters = 0;
};

/// Projected gradient ascent on the unit sphere for one block, Armijo backtracking.
inline InnerResult inner_ascent(Objective& obj, Vector& w, Vector& v, Block b, Objective::Value& current)
{
    const OptimizerConfig& cfg = obj.cfg;
    const int eval_budget_end = obj.evals + cfg.inner_max_evals;
    InnerResult res;
    Vector& u = b == Block::v ? v : w;
    for (; res.iters < cfg.inner_max_iters && obj.evals < eval_budget_end; ++res.iters) {
        const Vector gt = project_tangent(u, obj.gradient(w, v, b));
        const double gn2 = gt.squaredNorm();
        if (std::sqrt(gn2) < cfg.inner_gtol)
            break;
        const Vector u0 = u;
        double step = cfg.initial_step;
        bool accepted = false;
        Objective::Value trial;
        while (step > 1e-14 && obj.evals < eval_budget_end) {
            u = (u0 + step * gt).normalized();
            trial = b == Block::v ? obj(w, u) : obj(u, v);
            if (trial.f >= current.f + cfg.armijo_c1 * step * gn2) {
                accepted = true;
                break;
            }
            step *= cfg.backtrack;
        }
        if (!accepted) {
            u = u0;
            break;
        }
        const double gain = trial.f - current.f;
        current = trial;
        if (gain < cfg.inner_ftol) {
            ++res.iters;
            break;
        }
    }
    return res;
}

inline double projected_norm(const Vector& u, const Vector& g)
{
    return project_tangent(u, g).norm();
}

} // namespace detail

struct OptimizeOutcome
{
    ProjectionPair pair;
    ConvergenceTrace trace;
    double g = 0.0; // clamped
    double g_tr = 0.0;
    double objective = 0.0; // raw G + G^tr
    int restart = 0;
};

/// One restart from a given unit-norm starting pair.
inline OptimizeOutcome optimize_pair_from(const LagCovSet& fwd, const LagCovSet& rev, const OptimizerConfig& cfg,
                                          ProjectionPair init)
{
    if (init.w.size() != fwd.dims() || init.v.size() != fwd.dims())
        throw invalid_argument("initial filters do not match the data dimension");
    ProjectionPair p = ProjectionPair::normalized(init.w, init.v);
    detail::Objective obj{fwd, rev, cfg};
    auto current = obj(p.w, p.v);

    OptimizeOutcome out;
    out.trace.initial_g = current.g;
    out.trace.initial_g_tr = current.g_tr;
    double prev_g = current.g, prev_gtr = current.g_tr;

    auto record = [&](int outer, Block b, int iters, int evals) {
        TraceRecord r;
        r.outer = outer;
        r.block = b;
        r.g = current.g;
        r.g_tr = current.g_tr;
        r.objective = current.f;
        const int saved = obj.evals;
        r.grad_norm_v = detail::projected_norm(p.v, obj.gradient(p.w, p.v, Block::v));
        r.grad_norm_w = detail::projected_norm(p.w, obj.gradient(p.w, p.v, Block::w));
        obj.evals = saved; // diagnostics do not count against the budget
        r.inner_iters = iters;
        r.evals = evals;
        out.trace.records.push_back(r);
    };

    out.trace.stop_reason = "outer iteration limit";
    for (int k = 1; k <= cfg.outer_max_iters; ++k) {
        for (Block b : {Block::v, Block::w}) {
            const int e0 = obj.evals;
            const auto inner = detail::inner_ascent(obj, p.w, p.v, b, current);
            record(k, b, inner.iters, obj.evals - e0);
        }
        out.trace.outer_iterations = k;
        const bool small_change = std::abs(current.g - prev_g) < cfg.tol && std::abs(current.g_tr - prev_gtr) < cfg.tol;
        prev_g = current.g;
        prev_gtr = current.g_tr;
        if (small_change) {
            out.trace.converged = true;
            out.trace.stop_reason = "tolerance";
            break;
        }
    }

    apply_sign_convention(p.w);
    apply_sign_convention(p.v);
    out.pair = p;
    out.objective = current.f;
    out.g = std::clamp(current.g, 0.0, 1.0);
    out.g_tr = std::clamp(current.g_tr, 0.0, 1.0);
    return out;
}

/// Best of cfg.restarts random starts (or `init` for restart 0 when given).
/// Restart r draws its start from derive_seed(cfg.seed, {stream, r}).
inline OptimizeOutcome optimize_pair(const LagCovSet& fwd, const OptimizerConfig& cfg,
                                     const std::optional<ProjectionPair>& init = std::nullopt,
                                     std::uint64_t stream = 0)
{
    cfg.check();
    const LagCovSet rev = fwd.time_reversed();
    const auto n = static_cast<std::size_t>(cfg.restarts);
    std::vector<std::optional<OptimizeOutcome>> runs(n);
    std::vector<std::string> errors(n);
    parallel_for(
        n,
        [&](std::size_t r) {
            ProjectionPair start;
            if (r == 0 && init) {
                start = *init;
            } else {
                Engine rng(derive_seed(cfg.seed, {stream, static_cast<std::uint64_t>(r)}));
                start.w = cfg.init_scale * standard_normal(fwd.dims(), 1, rng);
                start.v = cfg.init_scale * standard_normal(fwd.dims(), 1, rng);
            }
            try {
                runs[r] = optimize_pair_from(fwd, rev, cfg, start);
                runs[r]->restart = static_cast<int>(r);
            } catch (const error& e) {
                errors[r] = e.what();
            }
        },
        cfg.threads);

    std::optional<OptimizeOutcome> best;
    for (auto& run : runs)
        if (run && (!best || run->objective > best->objective))
            best = std::move(run);
    if (!best)
        throw numerical_error("optimization failed for every restart: " + errors.front());
    return *best;
}

namespace detail {

inline Index effective_rank(const Matrix& x)
{
    Eigen::JacobiSVD<Matrix> svd(x * x.transpose());
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s(0) <= 0.0)
        return 0;
    Index r = 0;
    for (Index i = 0; i < s.size(); ++i)
        if (s(i) > 1e-12 * s(0))
            ++r;
    return r;
}

} // namespace detail

/// Extracts up to cfg.pairs pairs. Each stage estimates covariances of the
/// current (deflated, re-centered) data, optimizes a pair, then removes the
/// driving signal and its lags before the next stage.
inline Decomposition decompose(const MultiSeries& x, const OptimizerConfig& cfg)
{
    cfg.check();
    validate(x, cfg.lags);
    Decomposition out;
    out.config = cfg;

    const Matrix original = center_rows(x.data);
    const Matrix sigma0_original = original * original.transpose() / static_cast<double>(original.cols());
    Matrix current = original;

    for (int p = 0; p < cfg.pairs; ++p) {
        if (detail::effective_rank(current) < 2) {
            out.warnings.push_back("stage " + std::to_string(p + 1)
                                   + ": fewer than 2 effective dimensions left, stopping early");
            break;
        }
        try {
            const LagCovSet cov = LagCovSet::estimate(current, cfg.lags, cfg.cond_limit, cfg.window);
            const auto opt = optimize_pair(cov, cfg, std::nullopt, static_cast<std::uint64_t>(p));

            PairResult pr;
            pr.pair = opt.pair;
            pr.g_forward = opt.g;
            pr.g_reversed = opt.g_tr;
            pr.objective = opt.objective;
            pr.trace = opt.trace;
            pr.restart = opt.restart;
            const Matrix& basis = cfg.report_original ? original : current;
            pr.y = (opt.pair.w.transpose() * basis).transpose();
            pr.z = (opt.pair.v.transpose() * basis).transpose();
            const Matrix sigma0 = cfg.report_original
                                      ? sigma0_original
                                      : Matrix(current * current.transpose() / static_cast<double>(current.cols()));
            pr.forward_model_w = compute_forward_model(opt.pair.w, sigma0);
            pr.forward_model_v = compute_forward_model(opt.pair.v, sigma0);
            if (!opt.trace.converged)
                out.warnings.push_back("stage " + std::to_string(p + 1) + ": stopped at the outer iteration limit");

            if (p + 1 < cfg.pairs) {
                const Vector y_stage = (opt.pair.w.transpose() * current).transpose();
                auto d = deflate(current, y_stage, cfg.lags, {cfg.deflate_lag0, true});
                current = std::move(d.data);
                out.deflation_ranks.push_back(d.rank);
            }
            out.pairs.push_back(std::move(pr));
        } catch (const error& e) {
            out.error = "stage " + std::to_string(p + 1) + ": " + e.what();
            break;
        }
    }
    return out;
}

} // namespace latentgc
