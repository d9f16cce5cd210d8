#pragma once

// Result bundle: one JSON document plus flat CSV sidecars. Field layout is
// documented in docs/FORMATS.md.

#include "../benchmark.hpp"
#include "../surrogate.hpp"
#include "../version.hpp"
#include "csv.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

namespace latentgc::io {

using json = nlohmann::ordered_json;

inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL)
{
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline std::string hash_file(const std::string& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return hex64(fnv1a64(ss.str()));
}

/// Hash of the numeric content (exact bit patterns) of a matrix.
inline std::string hash_matrix(const Matrix& m)
{
    std::uint64_t h = fnv1a64(std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    h = fnv1a64(std::string_view(reinterpret_cast<const char*>(m.data()), static_cast<std::size_t>(m.size()) * sizeof(double)), h);
    return hex64(h);
}

struct Provenance
{
    std::string command;
    std::string input;
    std::string input_hash;
    std::uint64_t seed = 0;
    std::string version = version_string;
};

inline json to_json(const Vector& v)
{
    json a = json::array();
    for (Index i = 0; i < v.size(); ++i)
        a.push_back(v(i));
    return a;
}

inline json to_json(const Matrix& m)
{
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        json r = json::array();
        for (Index j = 0; j < m.cols(); ++j)
            r.push_back(m(i, j));
        rows.push_back(std::move(r));
    }
    return rows;
}

/// Infinity is not representable in JSON; written as the string "inf".
inline json real_or_inf(double v)
{
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    return v;
}

inline json to_json(const Provenance& p)
{
    return {{"command", p.command},
            {"input", p.input},
            {"input_hash", p.input_hash},
            {"seed", p.seed},
            {"version", p.version}};
}

inline json to_json(const OptimizerConfig& c)
{
    return {{"lags", c.lags},
            {"pairs", c.pairs},
            {"cond_limit", real_or_inf(c.cond_limit)},
            {"outer_max_iters", c.outer_max_iters},
            {"inner_max_evals", c.inner_max_evals},
            {"inner_max_iters", c.inner_max_iters},
            {"tol", c.tol},
            {"seed", c.seed},
            {"init_scale", c.init_scale},
            {"restarts", c.restarts},
            {"gradient", c.gradient == GradientMethod::analytic ? "analytic" : "finite_difference"},
            {"fd_step", c.fd_step},
            {"window", c.window == EstimationWindow::trimmed ? "trimmed" : "zero_padded"},
            {"deflate_lag0", c.deflate_lag0},
            {"report_original", c.report_original}};
}

inline json to_json(const ConvergenceTrace& t)
{
    json recs = json::array();
    for (const auto& r : t.records)
        recs.push_back({{"outer", r.outer},
                        {"block", to_string(r.block)},
                        {"g", r.g},
                        {"g_tr", r.g_tr},
                        {"objective", r.objective},
                        {"grad_norm_w", r.grad_norm_w},
                        {"grad_norm_v", r.grad_norm_v},
                        {"inner_iters", r.inner_iters},
                        {"evals", r.evals}});
    return {{"initial_g", t.initial_g},
            {"initial_g_tr", t.initial_g_tr},
            {"outer_iterations", t.outer_iterations},
            {"converged", t.converged},
            {"stop_reason", t.stop_reason},
            {"records", std::move(recs)}};
}

inline json to_json(const Decomposition& d, const std::vector<std::string>& labels)
{
    json pairs = json::array();
    for (std::size_t i = 0; i < d.pairs.size(); ++i) {
        const auto& p = d.pairs[i];
        pairs.push_back({{"index", i + 1},
                         {"g", p.g_forward},
                         {"g_tr", p.g_reversed},
                         {"objective", p.objective},
                         {"w", to_json(p.pair.w)},
                         {"v", to_json(p.pair.v)},
                         {"forward_model_w", to_json(p.forward_model_w)},
                         {"forward_model_v", to_json(p.forward_model_v)},
                         {"restart", p.restart},
                         {"trace", to_json(p.trace)}});
    }
    json ranks = json::array();
    for (auto r : d.deflation_ranks)
        ranks.push_back(r);
    return {{"channels", labels},
            {"pairs", std::move(pairs)},
            {"deflation_ranks", std::move(ranks)},
            {"warnings", d.warnings},
            {"error", d.error ? json(*d.error) : json(nullptr)}};
}

inline json to_json(const Summary& s)
{
    return {{"mean", s.mean}, {"sem", s.sem}, {"n", s.n}};
}

inline json to_json(const BenchmarkReport& r)
{
    json agg = json::object();
    for (const auto& [k, s] : r.aggregate())
        agg[k] = to_json(s);
    json failures = json::array();
    for (const auto& row : r.rows)
        if (!row.ok)
            failures.push_back({{"realization", row.index}, {"error", row.error}});
    return {{"realizations", r.options.realizations},
            {"samples", r.options.samples},
            {"observed_dims", r.options.observed_dims},
            {"burn_in", r.options.burn_in},
            {"failures", std::move(failures)},
            {"aggregate", std::move(agg)}};
}

inline json to_json(const SurrogateTestResult& s)
{
    return {{"n_surrogates", s.n_surrogates},
            {"observed_g", s.observed_g},
            {"p_value", s.p_value},
            {"failed_surrogates", s.failed}};
}

inline void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw error("cannot write '" + path.string() + "'");
    f << text;
    if (!f)
        throw error("write failed for '" + path.string() + "'");
}

inline void write_json(const std::filesystem::path& path, const json& j)
{
    write_text(path, j.dump(2) + "\n");
}

template <class Body>
void write_csv_file(const std::filesystem::path& path, Body&& body)
{
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw error("cannot write '" + path.string() + "'");
    body(f);
    if (!f)
        throw error("write failed for '" + path.string() + "'");
}

/// components.csv (y1, z1, y2, z2, ...), filters.csv and trace.csv.
inline void write_decomposition_sidecars(const std::filesystem::path& dir, const Decomposition& d,
                                         const std::vector<std::string>& labels)
{
    const auto P = static_cast<Index>(d.pairs.size());
    if (P == 0)
        return;
    const Index T = d.pairs[0].y.size();
    Matrix comp(2 * P, T);
    std::vector<std::string> names;
    for (Index p = 0; p < P; ++p) {
        comp.row(2 * p) = d.pairs[static_cast<std::size_t>(p)].y.transpose();
        comp.row(2 * p + 1) = d.pairs[static_cast<std::size_t>(p)].z.transpose();
        names.push_back("y" + std::to_string(p + 1));
        names.push_back("z" + std::to_string(p + 1));
    }
    write_csv_file(dir / "components.csv", [&](std::ostream& o) { write_columns(o, names, comp); });

    write_csv_file(dir / "filters.csv", [&](std::ostream& o) {
        o << "channel";
        for (Index p = 1; p <= P; ++p)
            o << ",w" << p << ",v" << p << ",a_w" << p << ",a_v" << p;
        o << '\n';
        for (std::size_t c = 0; c < labels.size(); ++c) {
            o << labels[c];
            for (const auto& pr : d.pairs) {
                const auto i = static_cast<Index>(c);
                o << ',' << format_double(pr.pair.w(i)) << ',' << format_double(pr.pair.v(i)) << ','
                  << format_double(pr.forward_model_w(i)) << ',' << format_double(pr.forward_model_v(i));
            }
            o << '\n';
        }
    });

    write_csv_file(dir / "trace.csv", [&](std::ostream& o) {
        o << "pair,outer,block,g,g_tr,objective,grad_norm_w,grad_norm_v,inner_iters,evals\n";
        for (std::size_t p = 0; p < d.pairs.size(); ++p)
            for (const auto& r : d.pairs[p].trace.records)
                o << p + 1 << ',' << r.outer << ',' << to_string(r.block) << ',' << format_double(r.g) << ','
                  << format_double(r.g_tr) << ',' << format_double(r.objective) << ','
                  << format_double(r.grad_norm_w) << ',' << format_double(r.grad_norm_v) << ',' << r.inner_iters
                  << ',' << r.evals << '\n';
    });
}

inline void write_causality_matrix(const std::filesystem::path& path, const Matrix& g,
                                   const std::vector<std::string>& labels)
{
    write_csv_file(path, [&](std::ostream& o) {
        o << "driver";
        for (const auto& l : labels)
            o << ',' << l;
        o << '\n';
        for (Index i = 0; i < g.rows(); ++i) {
            o << labels[static_cast<std::size_t>(i)];
            for (Index j = 0; j < g.cols(); ++j)
                o << ',' << format_double(g(i, j));
            o << '\n';
        }
    });
}

inline void write_benchmark_rows(const std::filesystem::path& path, const BenchmarkReport& r)
{
    write_csv_file(path, [&](std::ostream& o) {
        o << "realization,ok,g_y1_z1,g_y2_z2,g_s1_s2,g_s2_s3,g_s1_s3,max_observed_g,r2_s1_y1,r2_s2_z1,r2_s2_y2,"
             "r2_s3_z2,mixing_r2,reordered,outer_iters_pair1,outer_iters_pair2,converged_pair1,converged_pair2\n";
        for (const auto& x : r.rows) {
            o << x.index << ',' << x.ok;
            for (double v : {x.g_y1z1, x.g_y2z2, x.g_s1s2, x.g_s2s3, x.g_s1s3, x.max_observed_g, x.r2_s1_y1,
                             x.r2_s2_z1, x.r2_s2_y2, x.r2_s3_z2, x.mixing_r2})
                o << ',' << format_double(v);
            o << ',' << x.reordered << ',' << x.outer_iters_pair1 << ',' << x.outer_iters_pair2 << ','
              << x.converged_pair1 << ',' << x.converged_pair2 << '\n';
        }
    });
}

inline void write_surrogate_null(const std::filesystem::path& path, const SurrogateTestResult& s)
{
    write_csv_file(path, [&](std::ostream& o) {
        o << "sample";
        for (std::size_t p = 0; p < s.null_samples.size(); ++p)
            o << ",g_pair" << p + 1;
        o << '\n';
        std::size_t n = 0;
        for (const auto& col : s.null_samples)
            n = std::max(n, col.size());
        for (std::size_t i = 0; i < n; ++i) {
            o << i;
            for (const auto& col : s.null_samples)
                o << ',' << (i < col.size() ? format_double(col[i]) : std::string());
            o << '\n';
        }
    });
}

} // namespace latentgc::io
