#pragma once

#include "optimizer.hpp"

#include <algorithm>
#include <numeric>

namespace latentgc {

/// Ground-truth causal link between source indices.
struct Link
{
    Index driver = 0;
    Index driven = 0;
};

struct LinkMatch
{
    Link link;
    int pair = -1; // recovered pair assigned to this link, -1 if none
    double r2_driver = 0.0; // r^2(source driver, y)
    double r2_driven = 0.0; // r^2(source driven, z)
};

struct FidelityReport
{
    std::vector<LinkMatch> links;
    bool reordered = false; // assignment differs from pair i -> link i
    /// Per source: forward model of the best-matching component, sign and
    /// scale aligned to the true column. Zero column when nothing matched.
    Matrix estimated_mixing;
    std::vector<bool> source_matched;
    double mixing_r2 = 0.0;
};

/// Regression of the observations on a component: X c / (c^T c), both centered.
inline Vector regress_forward_model(const Matrix& observations, const Vector& component)
{
    const Vector c = center(component);
    const double power = c.squaredNorm();
    if (!(power > 0.0))
        throw invalid_argument("component has zero power");
    return center_rows(observations) * c / power;
}

/// Assigns recovered pairs to true links by maximal total r^2, then compares
/// forward models with the true mixing columns.
inline FidelityReport match_components(const Decomposition& d, const MultiSeries& sources, const Matrix& mixing,
                                       const Matrix& observations, const std::vector<Link>& links)
{
    const Index n_links = static_cast<Index>(links.size());
    const Index n_pairs = static_cast<Index>(d.pairs.size());
    const Index K = sources.channels();
    for (const auto& l : links)
        if (l.driver < 0 || l.driver >= K || l.driven < 0 || l.driven >= K)
            throw invalid_argument("link refers to a missing source");

    auto r2 = [&](Index source, const Vector& comp) { return r_squared(sources.data.row(source).transpose(), comp); };

    // Every injective link -> pair map (index >= n_pairs means unassigned).
    const Index slots = std::max(n_links, n_pairs);
    std::vector<Index> perm(static_cast<std::size_t>(slots));
    std::iota(perm.begin(), perm.end(), 0);
    double best_score = -1.0;
    std::vector<Index> best;
    do {
        double score = 0.0;
        for (Index i = 0; i < n_links; ++i) {
            const Index p = perm[static_cast<std::size_t>(i)];
            if (p < n_pairs) {
                const auto& pr = d.pairs[static_cast<std::size_t>(p)];
                score += r2(links[static_cast<std::size_t>(i)].driver, pr.y)
                         + r2(links[static_cast<std::size_t>(i)].driven, pr.z);
            }
        }
        if (score > best_score) {
            best_score = score;
            best.assign(perm.begin(), perm.begin() + n_links);
        }
    } while (std::next_permutation(perm.begin(), perm.end()));

    FidelityReport rep;
    // candidate components per source: (r^2, series)
    std::vector<std::pair<double, const Vector*>> best_comp(static_cast<std::size_t>(K), {-1.0, nullptr});
    for (Index i = 0; i < n_links; ++i) {
        LinkMatch m;
        m.link = links[static_cast<std::size_t>(i)];
        const Index p = best[static_cast<std::size_t>(i)];
        if (p < n_pairs) {
            m.pair = static_cast<int>(p);
            if (p != i)
                rep.reordered = true;
            const auto& pr = d.pairs[static_cast<std::size_t>(p)];
            m.r2_driver = r2(m.link.driver, pr.y);
            m.r2_driven = r2(m.link.driven, pr.z);
            auto& bd = best_comp[static_cast<std::size_t>(m.link.driver)];
            if (m.r2_driver > bd.first)
                bd = {m.r2_driver, &pr.y};
            auto& bz = best_comp[static_cast<std::size_t>(m.link.driven)];
            if (m.r2_driven > bz.first)
                bz = {m.r2_driven, &pr.z};
        }
        rep.links.push_back(m);
    }

    rep.estimated_mixing = Matrix::Zero(mixing.rows(), K);
    rep.source_matched.assign(static_cast<std::size_t>(K), false);
    std::vector<double> est, truth;
    for (Index k = 0; k < K; ++k) {
        const auto& [score, comp] = best_comp[static_cast<std::size_t>(k)];
        if (!comp)
            continue;
        Vector a = regress_forward_model(observations, *comp);
        const Vector col = mixing.col(k);
        const double aa = a.squaredNorm();
        if (aa > 0.0)
            a *= a.dot(col) / aa; // least-squares sign and scale
        rep.estimated_mixing.col(k) = a;
        rep.source_matched[static_cast<std::size_t>(k)] = true;
        for (Index i = 0; i < a.size(); ++i) {
            est.push_back(a(i));
            truth.push_back(col(i));
        }
    }
    if (!est.empty())
        rep.mixing_r2 = r_squared(Eigen::Map<Vector>(est.data(), static_cast<Index>(est.size())),
                                  Eigen::Map<Vector>(truth.data(), static_cast<Index>(truth.size())));
    return rep;
}

} // namespace latentgc
