// Command-line front end: dataset simulation, estimation, bandwidth sweeps,
// the phase-transition study, and the acceptance verifier.
//
// Exit codes: 0 success, 1 usage/config error, 2 runtime or numerical failure.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "fdsmooth/evaluation.hpp"
#include "fdsmooth/experiment.hpp"
#include "fdsmooth/io.hpp"
#include "fdsmooth/simulation.hpp"
#include "fdsmooth/verify.hpp"

namespace {

namespace fs = std::filesystem;
using namespace fdsmooth;

std::ofstream open_out(const fs::path& dir, const std::string& name) {
    std::ofstream f(dir / name, std::ios::binary);  // binary keeps LF endings everywhere
    if (!f) throw ParseError("cannot write '" + (dir / name).string() + "'");
    return f;
}

ExperimentConfig load_config(const std::string& path) {
    if (path.empty()) return ExperimentConfig{};
    return ExperimentConfig::from_kv(KeyValueConfig::parse_file(path));
}

SimulationConfig single_cell_sim(const ExperimentConfig& cfg) {
    if (cfg.p_list.size() != 1 || cfg.t_list.size() != 1)
        throw ParseError("this subcommand needs single values for p and t "
                         "(set p = ... and t = ... in the config)");
    SimulationConfig sim;
    sim.n = cfg.n;
    sim.p = cfg.p_list[0];
    sim.T = cfg.t_list[0];
    sim.rho = cfg.rho;
    sim.noise_sd = cfg.noise_sd;
    sim.seed = cfg.seed;
    sim.shared_times = cfg.shared_times;
    sim.zero_scores = cfg.zero_scores;
    return sim;
}

std::vector<std::string> stamp(const ExperimentConfig& cfg) {
    return {"config_hash = " + cfg.hash(), "seed = " + std::to_string(cfg.seed)};
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size();
    return m % 2 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

int cmd_simulate(const ExperimentConfig& cfg, const fs::path& out_dir) {
    const SimulationConfig sim = single_cell_sim(cfg);
    const auto out = generate_dataset(sim);
    fs::create_directories(out_dir);
    auto data_file = open_out(out_dir, "dataset.csv");
    write_long_format(data_file, out.data, IndexBase::Zero, stamp(cfg));
    auto manifest = open_out(out_dir, "manifest.txt");
    write_manifest(manifest, cfg);
    std::cout << "wrote " << (out_dir / "dataset.csv").string() << " ("
              << out.data.n_subjects() << " subjects, " << out.data.n_vars() << " variables)\n";
    return 0;
}

struct EstimateSettings {
    std::string data_path;
    double h_mean = 0.1;
    double h_cov = 0.0;  // 0 = skip covariance surfaces
    std::size_t grid_points = 100;
    bool binned = false;
    WeightScheme scheme = WeightScheme::PerObservation;
    Kernel kernel = Kernel::Epanechnikov;
    int threads = 1;

    std::string canonical_text(const std::string& data_hash) const {
        std::ostringstream os;
        os << "data_hash = " << data_hash << "\n";
        os << "h_mean = " << format_double(h_mean) << "\n";
        if (h_cov > 0.0) os << "h_cov = " << format_double(h_cov) << "\n";
        os << "grid_points = " << grid_points << "\n";
        os << "scheme = " << scheme_name(scheme) << "\n";
        os << "path = " << (binned ? "binned" : "exact") << "\n";
        os << "kernel = " << kernel_name(kernel) << "\n";
        return os.str();
    }
};

int cmd_estimate(const EstimateSettings& set, const fs::path& out_dir) {
    const std::string raw = read_file(set.data_path);
    std::istringstream in(raw);
    const FunctionalDataset data = read_long_format(in, IndexBase::Zero);
    const std::string canon = set.canonical_text(hash_hex(fnv1a64(raw)));
    const std::string hash = hash_hex(fnv1a64(canon));
    const std::vector<std::string> comments = {"config_hash = " + hash};
    const auto grid = unit_grid(set.grid_points);
    const std::size_t p = data.n_vars();
    fs::create_directories(out_dir);

    std::size_t total_points = 0, failed_points = 0;
    std::ostringstream failures;

    SmootherSpec mspec{set.kernel, set.h_mean, set.scheme};
    std::vector<CurveEstimate> curves(p);
    for (std::size_t j = 0; j < p; ++j) {
        const auto weights = mean_weights(data, j, set.scheme);
        curves[j] = set.binned
                        ? estimate_mean_binned(bin_marginal(data, j, set.grid_points), weights,
                                               grid, mspec)
                        : estimate_mean_curve(data, j, grid, mspec, weights);
        const std::string name = "mean_" + std::to_string(j) + ".csv";
        auto f = open_out(out_dir, name);
        write_curve(f, curves[j], comments);
        total_points += curves[j].values.size();
        failed_points += curves[j].failures.size();
        failures << name << ": " << curves[j].failures.size() << " singular points\n";
    }

    if (set.h_cov > 0.0) {
        SmootherSpec cspec{set.kernel, set.h_cov, set.scheme};
        std::vector<ScalarFn> means(p);
        for (std::size_t j = 0; j < p; ++j)
            if (curves[j].complete()) means[j] = make_interpolant(curves[j]);
        for (std::size_t j = 0; j < p; ++j)
            for (std::size_t k = j; k < p; ++k) {
                const std::string name =
                    "cov_" + std::to_string(j) + "_" + std::to_string(k) + ".csv";
                if (!means[j] || !means[k]) {
                    failures << name << ": skipped, mean estimate incomplete\n";
                    continue;
                }
                const auto weights = cov_weights(data, j, k, set.scheme);
                const SurfaceEstimate surf =
                    set.binned
                        ? estimate_cov_binned(
                              bin_pairs(data, j, k, set.grid_points, means[j], means[k]),
                              weights, grid, grid, cspec, set.threads)
                        : estimate_cov_surface(data, j, k, grid, grid, cspec, means[j],
                                               means[k], weights, set.threads);
                auto f = open_out(out_dir, name);
                write_surface(f, surf, comments);
                total_points += surf.values.size();
                failed_points += surf.failures.size();
                failures << name << ": " << surf.failures.size() << " singular cells\n";
            }
    }

    auto fail_file = open_out(out_dir, "failures.txt");
    fail_file << "# config_hash = " << hash << "\n" << failures.str();
    fail_file << "total: " << failed_points << " of " << total_points << " points failed\n";
    auto manifest = open_out(out_dir, "manifest.txt");
    manifest << "# config_hash = " << hash << "\n" << canon;

    std::cout << "wrote estimates for " << p << " variables to " << out_dir.string() << "\n";
    if (total_points > 0 && failed_points == total_points)
        throw IncompleteEstimateError("every evaluation point was singular");
    return 0;
}

int cmd_sweep(const ExperimentConfig& cfg, const fs::path& out_dir) {
    const SimulationConfig sim = single_cell_sim(cfg);
    const auto out = generate_dataset(sim);
    const auto grid = unit_grid(cfg.grid_points);
    const std::size_t p = sim.p;

    MiseReport report = bandwidth_sweep_mean(
        out.data, [](std::size_t, double u) { return true_mean(u); }, cfg.h_mean, grid,
        cfg.scheme, cfg.path, cfg.kernel);

    std::vector<ScalarFn> means(p);
    for (std::size_t j = 0; j < p; ++j) {
        if (std::isnan(report.best_h_mean[j]))
            throw IncompleteEstimateError("variable " + std::to_string(j) +
                                          " has no usable mean bandwidth");
        SmootherSpec spec{cfg.kernel, report.best_h_mean[j], cfg.scheme};
        const auto weights = mean_weights(out.data, j, cfg.scheme);
        const CurveEstimate best =
            cfg.path == SmoothPath::Binned
                ? estimate_mean_binned(bin_marginal(out.data, j, cfg.grid_points), weights,
                                       grid, spec)
                : estimate_mean_curve(out.data, j, grid, spec, weights);
        means[j] = make_interpolant(best);
    }

    const double rho = cfg.rho;
    bandwidth_sweep_cov(
        report, out.data,
        [rho](std::size_t j, std::size_t k, double u, double v) {
            return true_cov(j, k, u, v, rho);
        },
        cfg.h_cov, grid, cfg.scheme, cfg.path, means, cfg.kernel, cfg.threads);

    const Aggregates agg = aggregate_mises(report);
    const double h_star_mean = median(report.best_h_mean);
    const double h_star_cov = median(report.best_h_cov);
    const auto diag = rate_diagnostics(out.data, h_star_mean, h_star_cov,
                                       static_cast<double>(p));

    fs::create_directories(out_dir);
    const auto comments = stamp(cfg);
    auto rep_file = open_out(out_dir, "mise_report.csv");
    write_mise_report(rep_file, report, comments);
    auto agg_file = open_out(out_dir, "aggregates.txt");
    write_aggregates(agg_file, agg, comments);

    auto diag_file = open_out(out_dir, "diagnostics.txt");
    for (const auto& c : comments) diag_file << "# " << c << "\n";
    diag_file << "regime = " << regime_name(diag.regime) << "\n";
    diag_file << "h_star_mean = " << format_double(h_star_mean) << "\n";
    diag_file << "h_star_cov = " << format_double(h_star_cov) << "\n";
    for (std::size_t j = 0; j < p; ++j)
        diag_file << "var " << j << ": t_bar = " << format_double(diag.t_bar_mean[j])
                  << ", gamma = " << format_double(diag.gamma[j])
                  << ", best_h = " << format_double(report.best_h_mean[j]) << "\n";
    for (std::size_t j = 0; j < p; ++j)
        for (std::size_t k = j; k < p; ++k)
            diag_file << "pair (" << j << "," << k
                      << "): t_bar = " << format_double(diag.t_bar_cov[j * p + k])
                      << ", nu = " << format_double(diag.nu[j * p + k])
                      << ", best_h = " << format_double(report.best_h_cov[j * p + k]) << "\n";
    if (p >= 2) {
        double t_bar = 0.0;
        for (std::size_t j = 0; j < p; ++j) t_bar += diag.t_bar_mean[j];
        t_bar /= static_cast<double>(p);
        diag_file << "suggested_h_mean = "
                  << format_double(optimal_bandwidth(static_cast<double>(sim.n), t_bar,
                                                     static_cast<double>(p), diag.regime,
                                                     Target::Mean))
                  << "\n";
        diag_file << "suggested_h_cov = "
                  << format_double(optimal_bandwidth(static_cast<double>(sim.n), t_bar,
                                                     static_cast<double>(p), diag.regime,
                                                     Target::Cov))
                  << "\n";
    }

    auto manifest = open_out(out_dir, "manifest.txt");
    write_manifest(manifest, cfg);
    std::cout << "swept " << report.h_mean.size() << " mean and " << report.h_cov.size()
              << " covariance bandwidths; AveMISE_mu = " << format_double(agg.ave_mise_mean)
              << ", AveMISE_sigma = " << format_double(agg.ave_mise_cov) << "\n";
    return 0;
}

int cmd_phase(const ExperimentConfig& cfg, const fs::path& out_dir) {
    const PhaseResult result = run_phase_experiment(cfg);
    fs::create_directories(out_dir);
    const auto comments = stamp(cfg);

    auto csv = open_out(out_dir, "phase.csv");
    write_phase_csv(csv, result, comments);
    write_phase_plots(out_dir.string(), result, cfg, comments);
    auto manifest = open_out(out_dir, "manifest.txt");
    write_manifest(manifest, cfg);

    std::size_t failed = 0;
    for (const auto& cell : result.cells)
        if (!cell.ok) ++failed;
    std::cout << "phase study: " << result.cells.size() - failed << "/" << result.cells.size()
              << " cells ok, outputs in " << out_dir.string() << "\n";
    if (failed == result.cells.size())
        throw IncompleteEstimateError("every phase cell failed: " + result.cells[0].error);
    return 0;
}

int cmd_verify(std::string cli_path, std::string scratch, const std::string& only,
               int threads) {
    if (cli_path.empty()) {
        std::error_code ec;
        const auto self = fs::read_symlink("/proc/self/exe", ec);
        if (!ec) cli_path = self.string();
    }
    if (scratch.empty())
        scratch = (fs::temp_directory_path() / "fdsmooth_verify").string();
    fs::create_directories(scratch);

    std::vector<int> ids = all_criteria();
    if (!only.empty()) {
        ids.clear();
        for (const auto& tok : detail::split(only, ','))
            ids.push_back(static_cast<int>(detail::parse_int(tok)));
    }

    VerifyOptions opt;
    opt.cli_path = cli_path;
    opt.scratch_dir = scratch;
    opt.threads = threads;

    std::vector<CriterionResult> results;
    for (int id : ids) {
        results.push_back(run_criterion(id, opt));
        const auto& r = results.back();
        std::cout << (r.pass ? "PASS" : "FAIL") << "  " << r.id << "  " << r.name << " ("
                  << format_double(r.seconds) << " s)\n"
                  << std::flush;
    }
    std::cout << "\n";
    const bool all = report_criteria(std::cout, results);
    return all ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"local linear smoothing for high-dimensional functional data"};
    app.require_subcommand(1);

    std::string config_path, out_dir, scheme = "per-obs", kernel = "epanechnikov";
    std::string data_path, cli_path, only;
    int threads = 1;
    bool binned = false;
    std::size_t grid_points = 0;
    EstimateSettings est;

    auto add_common = [&](CLI::App* sub, bool with_config) {
        if (with_config)
            sub->add_option("--config", config_path, "key = value configuration file")
                ->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "output directory")->required();
        sub->add_option("--threads", threads, "worker threads (never changes results)")
            ->check(CLI::PositiveNumber);
    };

    CLI::App* sim = app.add_subcommand("simulate", "draw a synthetic dataset");
    add_common(sim, true);

    CLI::App* estimate = app.add_subcommand("estimate", "smooth a dataset file");
    estimate->add_option("--data", data_path, "long-format dataset csv")
        ->required()
        ->check(CLI::ExistingFile);
    estimate->add_option("--h-mean", est.h_mean, "mean bandwidth")->required();
    estimate->add_option("--h-cov", est.h_cov, "covariance bandwidth (omit to skip surfaces)");
    estimate->add_option("--grid", est.grid_points, "evaluation/bin grid size");
    estimate->add_flag("--binned", binned, "use the linear-binning fast path");
    estimate->add_option("--scheme", scheme, "per-obs or per-subject");
    estimate->add_option("--kernel", kernel, "epanechnikov, uniform, or triangular");
    add_common(estimate, false);

    CLI::App* sweep = app.add_subcommand("sweep", "bandwidth sweep on one simulated cell");
    add_common(sweep, true);
    sweep->add_flag("--binned", binned, "force the linear-binning fast path");
    sweep->add_option("--grid", grid_points, "override grid_points");
    sweep->add_option("--scheme", scheme, "override weighting scheme");

    CLI::App* phase = app.add_subcommand("phase-experiment",
                                         "replicated (p, T) grid study with csv + svg output");
    add_common(phase, true);
    phase->add_flag("--binned", binned, "force the linear-binning fast path");
    phase->add_option("--grid", grid_points, "override grid_points");
    phase->add_option("--scheme", scheme, "override weighting scheme");

    CLI::App* verify = app.add_subcommand("verify", "run the acceptance criteria");
    verify->add_option("--cli", cli_path, "binary to drive for the determinism check")
        ->check(CLI::ExistingFile);
    verify->add_option("--out", out_dir, "scratch directory");
    verify->add_option("--only", only, "comma-separated criterion ids");
    verify->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (app.got_subcommand(verify)) return cmd_verify(cli_path, out_dir, only, threads);

        if (app.got_subcommand(estimate)) {
            est.data_path = data_path;
            est.binned = binned;
            est.scheme = scheme_from_name(scheme);
            est.kernel = kernel_from_name(kernel);
            est.threads = threads;
            if (est.grid_points < 2) throw ParseError("--grid must be at least 2");
            if (!(est.h_mean > 0.0) || est.h_cov < 0.0)
                throw ParseError("bandwidths must be positive");
            return cmd_estimate(est, out_dir);
        }

        ExperimentConfig cfg = load_config(config_path);
        const CLI::App* active = app.got_subcommand(sim)     ? sim
                                 : app.got_subcommand(sweep) ? sweep
                                                             : phase;
        auto counted = [](const CLI::App* sub, const std::string& name) {
            const CLI::Option* o = sub->get_option_no_throw(name);
            return o != nullptr && o->count() > 0;
        };
        if (counted(active, "--threads")) cfg.threads = threads;
        if (counted(active, "--binned")) cfg.path = SmoothPath::Binned;
        if (counted(active, "--grid")) cfg.grid_points = grid_points;
        if (counted(active, "--scheme")) cfg.scheme = scheme_from_name(scheme);
        cfg.validate();

        if (app.got_subcommand(sim)) return cmd_simulate(cfg, out_dir);
        if (app.got_subcommand(sweep)) return cmd_sweep(cfg, out_dir);
        return cmd_phase(cfg, out_dir);
    } catch (const fdsmooth::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
