#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fdsmooth/evaluation.hpp"
#include "fdsmooth/io.hpp"
#include "fdsmooth/simulation.hpp"
#include "fdsmooth/svg.hpp"
#include "fdsmooth/threading.hpp"

namespace fdsmooth {

inline WeightScheme scheme_from_name(const std::string& s) {
    if (s == "per-obs") return WeightScheme::PerObservation;
    if (s == "per-subject") return WeightScheme::PerSubject;
    throw ParseError("unknown scheme: '" + s + "' (expected per-obs or per-subject)");
}

inline std::string scheme_name(WeightScheme s) {
    return s == WeightScheme::PerObservation ? "per-obs" : "per-subject";
}

// Settings for the full simulation-and-sweep pipeline. The canonical text
// below intentionally excludes runtime knobs (threads, output paths): those
// must never change numerical results, so they stay out of the config hash.
struct ExperimentConfig {
    std::size_t n = 100;
    std::vector<std::size_t> p_list = {5, 10, 20};
    std::vector<std::size_t> t_list = {5, 10, 20, 40, 80, 160};
    double rho = 0.5;
    double noise_sd = 0.5;
    std::uint64_t seed = 1;
    std::size_t reps = 20;
    bool shared_times = false;
    bool zero_scores = false;

    WeightScheme scheme = WeightScheme::PerObservation;
    SmoothPath path = SmoothPath::Binned;
    Kernel kernel = Kernel::Epanechnikov;
    std::size_t grid_points = 75;
    std::vector<double> h_mean = geometric_grid(0.03, 0.4, 12);
    std::vector<double> h_cov = geometric_grid(0.05, 0.5, 8);

    int threads = 1;  // runtime knob, excluded from the hash

    std::string canonical_text() const {
        std::ostringstream os;
        auto list_u = [&os](const char* key, const std::vector<std::size_t>& v) {
            os << key << " = ";
            for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
            os << "\n";
        };
        auto list_d = [&os](const char* key, const std::vector<double>& v) {
            os << key << " = ";
            for (std::size_t i = 0; i < v.size(); ++i)
                os << (i ? "," : "") << format_double(v[i]);
            os << "\n";
        };
        os << "n = " << n << "\n";
        list_u("p_list", p_list);
        list_u("t_list", t_list);
        os << "rho = " << format_double(rho) << "\n";
        os << "noise_sd = " << format_double(noise_sd) << "\n";
        os << "seed = " << seed << "\n";
        os << "reps = " << reps << "\n";
        os << "shared_times = " << (shared_times ? "true" : "false") << "\n";
        os << "zero_scores = " << (zero_scores ? "true" : "false") << "\n";
        os << "scheme = " << scheme_name(scheme) << "\n";
        os << "path = " << (path == SmoothPath::Binned ? "binned" : "exact") << "\n";
        os << "kernel = " << kernel_name(kernel) << "\n";
        os << "grid_points = " << grid_points << "\n";
        list_d("h_mean", h_mean);
        list_d("h_cov", h_cov);
        return os.str();
    }

    std::string hash() const { return hash_hex(fnv1a64(canonical_text())); }

    void validate() const {
        if (n < 1 || reps < 1) throw ParseError("config: n and reps must be positive");
        if (p_list.empty() || t_list.empty())
            throw ParseError("config: p_list and t_list must be nonempty");
        if (grid_points < 2) throw ParseError("config: grid_points must be >= 2");
        if (h_mean.empty() || h_cov.empty())
            throw ParseError("config: bandwidth lists must be nonempty");
        if (!(std::fabs(rho) < 1.0)) throw ParseError("config: |rho| < 1 required");
    }

    static ExperimentConfig from_kv(const KeyValueConfig& kv) {
        static const std::set<std::string> allowed = {
            "n",       "p",          "t",          "p_list",      "t_list",
            "rho",     "noise_sd",   "seed",       "reps",        "shared_times",
            "zero_scores", "scheme", "path",       "kernel",      "grid_points",
            "h_mean",  "h_cov",      "threads"};
        kv.reject_unknown(allowed);
        ExperimentConfig cfg;
        cfg.n = static_cast<std::size_t>(kv.get_int("n", static_cast<long long>(cfg.n)));
        // p and t are singleton aliases for the sweep lists.
        if (kv.has("p")) cfg.p_list = {static_cast<std::size_t>(kv.get_int("p", 1))};
        if (kv.has("t")) cfg.t_list = {static_cast<std::size_t>(kv.get_int("t", 5))};
        if (kv.has("p_list")) {
            cfg.p_list.clear();
            for (long long v : kv.get_int_list("p_list", {}))
                cfg.p_list.push_back(static_cast<std::size_t>(v));
        }
        if (kv.has("t_list")) {
            cfg.t_list.clear();
            for (long long v : kv.get_int_list("t_list", {}))
                cfg.t_list.push_back(static_cast<std::size_t>(v));
        }
        cfg.rho = kv.get_double("rho", cfg.rho);
        cfg.noise_sd = kv.get_double("noise_sd", cfg.noise_sd);
        cfg.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<long long>(cfg.seed)));
        cfg.reps = static_cast<std::size_t>(kv.get_int("reps", static_cast<long long>(cfg.reps)));
        cfg.shared_times = kv.get_bool("shared_times", cfg.shared_times);
        cfg.zero_scores = kv.get_bool("zero_scores", cfg.zero_scores);
        cfg.scheme = scheme_from_name(kv.get_string("scheme", scheme_name(cfg.scheme)));
        const std::string path = kv.get_string("path", "binned");
        if (path == "binned")
            cfg.path = SmoothPath::Binned;
        else if (path == "exact")
            cfg.path = SmoothPath::Exact;
        else
            throw ParseError("config: path must be 'exact' or 'binned'");
        cfg.kernel = kernel_from_name(kv.get_string("kernel", kernel_name(cfg.kernel)));
        cfg.grid_points = static_cast<std::size_t>(
            kv.get_int("grid_points", static_cast<long long>(cfg.grid_points)));
        cfg.h_mean = kv.get_double_list("h_mean", cfg.h_mean);
        cfg.h_cov = kv.get_double_list("h_cov", cfg.h_cov);
        cfg.threads = static_cast<int>(kv.get_int("threads", cfg.threads));
        cfg.validate();
        return cfg;
    }
};

// Deterministic per-cell seed, independent of scheduling order.
inline std::uint64_t cell_seed(std::uint64_t base, std::size_t rep, std::size_t p,
                               std::size_t T) {
    std::uint64_t s = detail::splitmix64(base ^ 0x9d2c5680cafef00dULL);
    s = detail::splitmix64(s ^ rep);
    s = detail::splitmix64(s ^ p);
    s = detail::splitmix64(s ^ T);
    return s;
}

struct PhaseCell {
    std::size_t rep = 0, p = 0, T = 0;
    Aggregates agg;
    bool ok = false;
    std::string error;
};

struct PhaseResult {
    std::vector<PhaseCell> cells;  // ordered by (rep, p, T)
};

// One (rep, p, T) cell: simulate, sweep the mean bandwidths, re-estimate each
// variable's mean at its best bandwidth to center the raw covariances, then
// sweep the covariance bandwidths and aggregate.
inline PhaseCell run_phase_cell(const ExperimentConfig& cfg, std::size_t rep, std::size_t p,
                                std::size_t T) {
    PhaseCell cell;
    cell.rep = rep;
    cell.p = p;
    cell.T = T;
    try {
        SimulationConfig sim;
        sim.n = cfg.n;
        sim.p = p;
        sim.T = T;
        sim.rho = cfg.rho;
        sim.noise_sd = cfg.noise_sd;
        sim.seed = cell_seed(cfg.seed, rep, p, T);
        sim.shared_times = cfg.shared_times;
        sim.zero_scores = cfg.zero_scores;
        const SimulationOutput out = generate_dataset(sim);
        const std::vector<double> grid = unit_grid(cfg.grid_points);

        MiseReport report = bandwidth_sweep_mean(
            out.data, [](std::size_t, double u) { return true_mean(u); }, cfg.h_mean, grid,
            cfg.scheme, cfg.path, cfg.kernel);

        std::vector<ScalarFn> means(p);
        for (std::size_t j = 0; j < p; ++j) {
            if (std::isnan(report.best_h_mean[j]))
                throw IncompleteEstimateError("no usable mean bandwidth for variable " +
                                              std::to_string(j));
            SmootherSpec spec{cfg.kernel, report.best_h_mean[j], cfg.scheme};
            const auto weights = mean_weights(out.data, j, cfg.scheme);
            const CurveEstimate best =
                cfg.path == SmoothPath::Binned
                    ? estimate_mean_binned(bin_marginal(out.data, j, grid.size()), weights,
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
            cfg.h_cov, grid, cfg.scheme, cfg.path, means, cfg.kernel, 1);

        cell.agg = aggregate_mises(report);
        cell.ok = true;
    } catch (const std::exception& e) {
        cell.ok = false;
        cell.error = e.what();
    }
    return cell;
}

// Full grid of cells. Cells are independent and statically partitioned over
// the worker budget; output order is fixed by (rep, p, T).
inline PhaseResult run_phase_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    struct Task {
        std::size_t rep, p, T;
    };
    std::vector<Task> tasks;
    for (std::size_t rep = 0; rep < cfg.reps; ++rep)
        for (std::size_t p : cfg.p_list)
            for (std::size_t T : cfg.t_list) tasks.push_back({rep, p, T});

    PhaseResult result;
    result.cells.resize(tasks.size());
    parallel_for(tasks.size(), cfg.threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t c = begin; c < end; ++c)
            result.cells[c] = run_phase_cell(cfg, tasks[c].rep, tasks[c].p, tasks[c].T);
    });
    return result;
}

inline const char* phase_metric_names[4] = {"AveMISE_mu", "MaxMISE_mu", "AveMISE_sigma",
                                            "MaxMISE_sigma"};

inline double phase_metric_value(const PhaseCell& cell, std::size_t metric) {
    switch (metric) {
        case 0: return cell.agg.ave_mise_mean;
        case 1: return cell.agg.max_mise_mean;
        case 2: return cell.agg.ave_mise_cov;
        default: return cell.agg.max_mise_cov;
    }
}

// Tidy CSV: rep,p,T,metric,value with nan for failed cells.
inline void write_phase_csv(std::ostream& os, const PhaseResult& result,
                            const std::vector<std::string>& comments = {}) {
    for (const auto& c : comments) os << "# " << c << "\n";
    os << "rep,p,T,metric,value\n";
    for (const PhaseCell& cell : result.cells)
        for (std::size_t m = 0; m < 4; ++m) {
            const double v =
                cell.ok ? phase_metric_value(cell, m) : std::numeric_limits<double>::quiet_NaN();
            os << cell.rep << ',' << cell.p << ',' << cell.T << ',' << phase_metric_names[m]
               << ',' << format_double(v) << "\n";
        }
}

// Mean over replications of one metric for every (p, T); NaN when every
// replication of a cell failed.
inline std::map<std::pair<std::size_t, std::size_t>, double> phase_metric_means(
    const PhaseResult& result, std::size_t metric) {
    std::map<std::pair<std::size_t, std::size_t>, std::pair<double, std::size_t>> acc;
    for (const PhaseCell& cell : result.cells) {
        if (!cell.ok) continue;
        auto& slot = acc[{cell.p, cell.T}];
        slot.first += phase_metric_value(cell, metric);
        slot.second += 1;
    }
    std::map<std::pair<std::size_t, std::size_t>, double> out;
    for (const auto& [key, slot] : acc)
        out[key] = slot.first / static_cast<double>(slot.second);
    return out;
}

// One plot per metric: metric against T (log-log), one series per p.
inline void write_phase_plots(const std::string& dir, const PhaseResult& result,
                              const ExperimentConfig& cfg,
                              const std::vector<std::string>& comments = {}) {
    for (std::size_t m = 0; m < 4; ++m) {
        const auto means = phase_metric_means(result, m);
        std::vector<PlotSeries> series;
        for (std::size_t p : cfg.p_list) {
            PlotSeries s;
            s.label = "p = " + std::to_string(p);
            for (std::size_t T : cfg.t_list) {
                s.x.push_back(static_cast<double>(T));
                const auto it = means.find({p, T});
                s.y.push_back(it == means.end() ? std::numeric_limits<double>::quiet_NaN()
                                                : it->second);
            }
            series.push_back(std::move(s));
        }
        PlotSpec spec;
        spec.title = std::string(phase_metric_names[m]) + " vs T";
        spec.x_label = "T (observations per curve)";
        spec.y_label = phase_metric_names[m];
        spec.log_x = true;
        spec.log_y = true;
        spec.comments = comments;
        std::ofstream f(std::filesystem::path(dir) /
                        (std::string(phase_metric_names[m]) + ".svg"));
        if (!f) throw ParseError("cannot write plot in '" + dir + "'");
        write_svg_plot(f, spec, series);
    }
}

inline void write_manifest(std::ostream& os, const ExperimentConfig& cfg) {
    os << "# config_hash = " << cfg.hash() << "\n";
    os << cfg.canonical_text();
}

}  // namespace fdsmooth
