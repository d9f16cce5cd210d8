// latentgc command-line interface.
//
// Exit status: 0 success, 1 runtime failure, 2 usage error.

#include <latentgc/io/bundle.hpp>
#include <latentgc/io/preprocess.hpp>
#include <latentgc/latentgc.hpp>

#include <CLI11.hpp>

#include <filesystem>
#include <iomanip>
#include <iostream>

namespace fs = std::filesystem;
using namespace latentgc;

namespace {

struct DataFlags
{
    std::string input;
    bool standardize = false;
    bool remove_trend = false;
    int downsample = 1;
};

struct DecomposeFlags
{
    int lags = 3;
    int pairs = 1;
    std::string cond_limit = "inf";
    int restarts = 1;
    std::uint64_t seed = 0;
    std::string gradient = "fd";
    std::string window = "trimmed";
    bool report_original = false;
    int outer_max_iters = 50;
};

double parse_cond_limit(const std::string& s)
{
    if (s == "inf" || s == "Inf" || s == "INF")
        return no_cond_limit;
    std::size_t used = 0;
    double c = 0.0;
    try {
        c = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != s.size() || !(c > 1.0))
        throw CLI::ValidationError("--cond-limit", "expected a number > 1 or 'inf', got '" + s + "'");
    return c;
}

void add_data_flags(CLI::App* cmd, DataFlags& f)
{
    cmd->add_option("--input", f.input, "wide CSV, one column per channel")->required()->check(CLI::ExistingFile);
    cmd->add_flag("--standardize", f.standardize, "z-score every channel");
    cmd->add_flag("--remove-global-trend", f.remove_trend, "regress out the cross-channel mean");
    cmd->add_option("--downsample", f.downsample, "keep the first sample of every block")
        ->check(CLI::PositiveNumber);
}

void add_decompose_flags(CLI::App* cmd, DecomposeFlags& f)
{
    cmd->add_option("--lags", f.lags, "maximum lag L")->check(CLI::PositiveNumber);
    cmd->add_option("--pairs", f.pairs, "component pairs P")->check(CLI::PositiveNumber);
    cmd->add_option("--cond-limit", f.cond_limit, "condition-number limit, or inf");
    cmd->add_option("--restarts", f.restarts, "random restarts per pair")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", f.seed, "random seed");
    cmd->add_option("--gradient", f.gradient, "fd or analytic")->check(CLI::IsMember({"fd", "analytic"}));
    cmd->add_option("--window", f.window, "covariance window")->check(CLI::IsMember({"trimmed", "zero-padded"}));
    cmd->add_flag("--report-original", f.report_original, "components and forward models on the original data");
    cmd->add_option("--max-outer", f.outer_max_iters, "outer iteration limit")->check(CLI::PositiveNumber);
}

OptimizerConfig make_config(const DecomposeFlags& f)
{
    OptimizerConfig c;
    c.lags = f.lags;
    c.pairs = f.pairs;
    c.cond_limit = parse_cond_limit(f.cond_limit);
    c.restarts = f.restarts;
    c.seed = f.seed;
    c.gradient = f.gradient == "analytic" ? GradientMethod::analytic : GradientMethod::finite_difference;
    c.window = f.window == "zero-padded" ? EstimationWindow::zero_padded : EstimationWindow::trimmed;
    c.report_original = f.report_original;
    c.outer_max_iters = f.outer_max_iters;
    return c;
}

MultiSeries load_input(const DataFlags& f)
{
    io::CsvOptions opts;
    opts.interpolate_gaps = false;
    MultiSeries x = io::load_csv(f.input, opts);
    io::PreprocessSpec spec;
    spec.standardize = f.standardize;
    spec.remove_global_trend = f.remove_trend;
    spec.downsample_factor = f.downsample;
    return io::preprocess(x, spec);
}

io::json preprocess_echo(const DataFlags& f)
{
    return {{"interpolate_gaps", true},
            {"standardize", f.standardize},
            {"remove_global_trend", f.remove_trend},
            {"downsample_factor", f.downsample},
            {"center", true}};
}

io::Provenance provenance(const std::string& command, const DataFlags* data, std::uint64_t seed)
{
    io::Provenance p;
    p.command = command;
    if (data) {
        p.input = data->input;
        p.input_hash = io::hash_file(data->input);
    }
    p.seed = seed;
    return p;
}

fs::path prepare_out(const std::string& out)
{
    fs::path dir(out);
    fs::create_directories(dir);
    return dir;
}

int run_simulate(int realizations, Index samples, std::uint64_t seed, const std::string& out,
                 const std::string& export_data, int restarts)
{
    BenchmarkOptions opt;
    opt.realizations = realizations;
    opt.samples = samples;
    opt.seed = seed;
    OptimizerConfig cfg = benchmark_config(seed);
    cfg.restarts = restarts;
    const auto report = run_benchmark(opt, cfg);

    const fs::path dir = prepare_out(out);
    io::json doc = {{"kind", "benchmark"},
                    {"provenance", io::to_json(provenance("simulate", nullptr, seed))},
                    {"config", io::to_json(cfg)},
                    {"benchmark", io::to_json(report)}};
    io::write_json(dir / "bundle.json", doc);
    io::write_benchmark_rows(dir / "benchmark_rows.csv", report);

    if (!export_data.empty())
        io::write_csv(export_data, realization_data(0, opt).observations);

    std::cout << "realizations " << realizations << " (failed " << report.failures << ")\n";
    for (const auto& [k, s] : report.aggregate())
        std::cout << std::left << std::setw(20) << k << std::setprecision(4) << s.mean << " +- " << s.sem << '\n';
    return report.failures == realizations ? 1 : 0;
}

int run_decompose(const DataFlags& data, const DecomposeFlags& flags, const std::string& out)
{
    const MultiSeries x = load_input(data);
    const OptimizerConfig cfg = make_config(flags);
    const Decomposition d = decompose(x, cfg);

    const fs::path dir = prepare_out(out);
    io::json doc = {{"kind", "decomposition"},
                    {"provenance", io::to_json(provenance("decompose", &data, cfg.seed))},
                    {"preprocess", preprocess_echo(data)},
                    {"config", io::to_json(cfg)},
                    {"samples", x.samples()},
                    {"decomposition", io::to_json(d, x.labels)}};
    io::write_json(dir / "bundle.json", doc);
    io::write_decomposition_sidecars(dir, d, x.labels);

    for (std::size_t i = 0; i < d.pairs.size(); ++i)
        std::cout << "pair " << i + 1 << ": G = " << d.pairs[i].g_forward << ", G_tr = " << d.pairs[i].g_reversed
                  << ", outer iterations " << d.pairs[i].trace.outer_iterations << '\n';
    for (const auto& w : d.warnings)
        std::cerr << "warning: " << w << '\n';
    if (d.error) {
        std::cerr << "error: " << *d.error << '\n';
        return 1;
    }
    return 0;
}

int run_matrix(const DataFlags& data, int lags, const std::string& window, const std::string& out)
{
    const MultiSeries x = load_input(data);
    const auto win = window == "zero-padded" ? EstimationWindow::zero_padded : EstimationWindow::trimmed;
    const Matrix g = pairwise_causality_matrix(x, lags, win);

    const fs::path dir = prepare_out(out);
    io::json doc = {{"kind", "causality_matrix"},
                    {"provenance", io::to_json(provenance("causality-matrix", &data, 0))},
                    {"preprocess", preprocess_echo(data)},
                    {"lags", lags},
                    {"window", window},
                    {"channels", x.labels},
                    {"matrix", io::to_json(g)}};
    io::write_json(dir / "bundle.json", doc);
    io::write_causality_matrix(dir / "causality_matrix.csv", g, x.labels);

    Index i = 0, j = 0;
    const double mx = g.maxCoeff(&i, &j);
    std::cout << "max G = " << mx << " (" << x.labels[static_cast<std::size_t>(i)] << " -> "
              << x.labels[static_cast<std::size_t>(j)] << ")\n";
    return 0;
}

int run_surrogate(const DataFlags& data, const DecomposeFlags& flags, int n, std::uint64_t surrogate_seed,
                  const std::string& out)
{
    const MultiSeries x = load_input(data);
    const OptimizerConfig cfg = make_config(flags);
    const auto res = surrogate_test(x, cfg, n, surrogate_seed);

    const fs::path dir = prepare_out(out);
    io::json doc = {{"kind", "surrogate_test"},
                    {"provenance", io::to_json(provenance("surrogate-test", &data, cfg.seed))},
                    {"surrogate_seed", surrogate_seed},
                    {"preprocess", preprocess_echo(data)},
                    {"config", io::to_json(cfg)},
                    {"decomposition", io::to_json(res.observed, x.labels)},
                    {"surrogates", io::to_json(res)}};
    io::write_json(dir / "bundle.json", doc);
    io::write_decomposition_sidecars(dir, res.observed, x.labels);
    io::write_surrogate_null(dir / "surrogate_null.csv", res);

    for (std::size_t p = 0; p < res.observed_g.size(); ++p)
        std::cout << "pair " << p + 1 << ": G = " << res.observed_g[p] << ", p = " << res.p_value[p] << " ("
                  << res.null_samples[p].size() << " surrogates)\n";
    if (!res.failed.empty())
        std::cerr << "warning: " << res.failed.size() << " surrogate decompositions failed\n";
    return 0;
}

int run_gradcheck(int dims, int lags, int trials, double tolerance, std::uint64_t seed, const std::string& out)
{
    double worst = 0.0;
    double worst_radial = 0.0;
    io::json rows = io::json::array();
    for (int t = 0; t < trials; ++t) {
        Engine rng(derive_seed(seed, {static_cast<std::uint64_t>(t)}));
        const VarSystem sys = random_var_system(dims, 2, 0.8, rng);
        const MultiSeries x = simulate_var(sys, 400, derive_seed(seed, {static_cast<std::uint64_t>(t), 1}));
        const LagCovSet cov = LagCovSet::estimate(x, lags);
        const ProjectionPair p{random_unit_vector(dims, rng), random_unit_vector(dims, rng)};
        const auto ga = analytic_gradient(p, cov, JacobianPath::materialized);
        const Vector f = finite_diff_gradient(p, cov).stacked_vw();
        const double rel = (ga.stacked_vw() - f).norm() / std::max(f.norm(), 1e-12);
        const double radial = std::max(std::abs(p.w.dot(ga.grad_w)), std::abs(p.v.dot(ga.grad_v)));
        worst = std::max(worst, rel);
        worst_radial = std::max(worst_radial, radial);
        rows.push_back({{"trial", t}, {"relative_error", rel}, {"radial", radial}});
    }
    const bool pass = worst < tolerance;
    if (!out.empty()) {
        const fs::path dir = prepare_out(out);
        io::json doc = {{"kind", "gradcheck"},
                        {"provenance", io::to_json(provenance("gradcheck", nullptr, seed))},
                        {"dims", dims},
                        {"lags", lags},
                        {"trials", trials},
                        {"tolerance", tolerance},
                        {"max_relative_error", worst},
                        {"max_radial_component", worst_radial},
                        {"pass", pass},
                        {"trials_detail", std::move(rows)}};
        io::write_json(dir / "bundle.json", doc);
    }
    std::cout << "max relative error " << worst << " over " << trials << " trials (tolerance " << tolerance << "): "
              << (pass ? "ok" : "FAILED") << '\n';
    return pass ? 0 : 1;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Latent Granger-causal component analysis"};
    app.set_version_flag("--version", std::string(version_string));
    app.require_subcommand(1);

    int realizations = 100;
    Index samples = 5000;
    std::uint64_t sim_seed = 7;
    std::string out;
    std::string export_data;
    int sim_restarts = 1;
    auto* sim = app.add_subcommand("simulate", "run the synthetic VAR(3) benchmark");
    sim->add_option("--realizations", realizations)->check(CLI::PositiveNumber);
    sim->add_option("--samples", samples)->check(CLI::Range(Index{10}, Index{100000000}));
    sim->add_option("--seed", sim_seed);
    sim->add_option("--restarts", sim_restarts)->check(CLI::PositiveNumber);
    sim->add_option("--export-data", export_data, "also write realization 0's observations as CSV");
    sim->add_option("--out", out, "output directory")->required();

    DataFlags dec_data;
    DecomposeFlags dec_flags;
    auto* dec = app.add_subcommand("decompose", "extract causal component pairs");
    add_data_flags(dec, dec_data);
    add_decompose_flags(dec, dec_flags);
    dec->add_option("--out", out, "output directory")->required();

    DataFlags mat_data;
    int mat_lags = 3;
    std::string mat_window = "trimmed";
    auto* mat = app.add_subcommand("causality-matrix", "pairwise G between observed channels");
    add_data_flags(mat, mat_data);
    mat->add_option("--lags", mat_lags)->check(CLI::PositiveNumber);
    mat->add_option("--window", mat_window)->check(CLI::IsMember({"trimmed", "zero-padded"}));
    mat->add_option("--out", out, "output directory")->required();

    DataFlags sur_data;
    DecomposeFlags sur_flags;
    int n_surrogates = 99;
    std::uint64_t surrogate_seed = 1;
    auto* sur = app.add_subcommand("surrogate-test", "phase-randomization significance test");
    add_data_flags(sur, sur_data);
    add_decompose_flags(sur, sur_flags);
    sur->add_option("--n-surrogates", n_surrogates)->check(CLI::PositiveNumber);
    sur->add_option("--surrogate-seed", surrogate_seed, "seed of the phase streams");
    sur->add_option("--out", out, "output directory")->required();

    int gc_dims = 4, gc_lags = 3, gc_trials = 100;
    double gc_tol = 1e-5;
    std::uint64_t gc_seed = 1;
    auto* gc = app.add_subcommand("gradcheck", "compare the closed-form gradient with finite differences");
    gc->add_option("--dims", gc_dims)->check(CLI::Range(2, 64));
    gc->add_option("--lags", gc_lags)->check(CLI::Range(1, 32));
    gc->add_option("--trials", gc_trials)->check(CLI::PositiveNumber);
    gc->add_option("--tolerance", gc_tol)->check(CLI::PositiveNumber);
    gc->add_option("--seed", gc_seed);
    gc->add_option("--out", out, "optional output directory");

    try {
        app.parse(argc, argv);
        // validate --cond-limit during parsing so a bad value is a usage error
        if (dec->parsed())
            parse_cond_limit(dec_flags.cond_limit);
        if (sur->parsed())
            parse_cond_limit(sur_flags.cond_limit);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (sim->parsed())
            return run_simulate(realizations, samples, sim_seed, out, export_data, sim_restarts);
        if (dec->parsed())
            return run_decompose(dec_data, dec_flags, out);
        if (mat->parsed())
            return run_matrix(mat_data, mat_lags, mat_window, out);
        if (sur->parsed())
            return run_surrogate(sur_data, sur_flags, n_surrogates, surrogate_seed, out);
        if (gc->parsed())
            return run_gradcheck(gc_dims, gc_lags, gc_trials, gc_tol, gc_seed, out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
