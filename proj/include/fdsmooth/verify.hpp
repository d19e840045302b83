#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fdsmooth/evaluation.hpp"
#include "fdsmooth/experiment.hpp"
#include "fdsmooth/io.hpp"
#include "fdsmooth/simulation.hpp"
#include "fdsmooth/smoothing.hpp"

// Release acceptance checks. Each criterion is a self-contained scenario with
// pinned tolerances and a wall-clock budget; `verify` runs them in-process,
// except the determinism criterion which drives the CLI binary end to end.

namespace fdsmooth {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    double seconds = 0.0;
    double budget_seconds = 0.0;
    std::string detail;
};

struct VerifyOptions {
    std::string cli_path;     // binary for the determinism criterion
    std::string scratch_dir;  // working space for subprocess output trees
    int threads = 1;          // worker budget for the heavy criteria
};

namespace verify_detail {

inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

// Generic dense solve by Gaussian elimination with partial pivoting. Shares
// nothing with the closed-form 2x2/3x3 solvers it cross-checks.
inline std::optional<std::vector<double>> gauss_solve(std::vector<double> a,
                                                      std::vector<double> rhs,
                                                      std::size_t dim) {
    for (std::size_t col = 0; col < dim; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < dim; ++r)
            if (std::fabs(a[r * dim + col]) > std::fabs(a[piv * dim + col])) piv = r;
        if (std::fabs(a[piv * dim + col]) < 1e-13) return std::nullopt;
        if (piv != col) {
            for (std::size_t c = 0; c < dim; ++c) std::swap(a[piv * dim + c], a[col * dim + c]);
            std::swap(rhs[piv], rhs[col]);
        }
        for (std::size_t r = col + 1; r < dim; ++r) {
            const double f = a[r * dim + col] / a[col * dim + col];
            for (std::size_t c = col; c < dim; ++c) a[r * dim + c] -= f * a[col * dim + c];
            rhs[r] -= f * rhs[col];
        }
    }
    std::vector<double> x(dim);
    for (std::size_t r = dim; r-- > 0;) {
        double s = rhs[r];
        for (std::size_t c = r + 1; c < dim; ++c) s -= a[r * dim + c] * x[c];
        x[r] = s / a[r * dim + r];
    }
    return x;
}

// The oracle's own Epanechnikov formula. Kept separate from kernel_eval on
// purpose: a corrupted library kernel must make the oracle comparison fail.
inline double oracle_epanechnikov(double x) {
    return std::fabs(x) > 1.0 ? 0.0 : 0.75 * (1.0 - x * x);
}

// Weighted least squares through the normal equations on an explicit design.
inline std::optional<double> wls_intercept(const std::vector<std::vector<double>>& rows,
                                           const std::vector<double>& w,
                                           const std::vector<double>& z) {
    if (rows.empty()) return std::nullopt;
    const std::size_t dim = rows[0].size();
    std::vector<double> ata(dim * dim, 0.0), atb(dim, 0.0);
    for (std::size_t q = 0; q < rows.size(); ++q) {
        for (std::size_t r = 0; r < dim; ++r) {
            for (std::size_t c = 0; c < dim; ++c) ata[r * dim + c] += w[q] * rows[q][r] * rows[q][c];
            atb[r] += w[q] * rows[q][r] * z[q];
        }
    }
    const auto sol = gauss_solve(std::move(ata), std::move(atb), dim);
    if (!sol) return std::nullopt;
    return (*sol)[0];
}

inline FunctionalDataset ragged_dataset(std::mt19937_64& eng, std::size_t n, std::size_t p,
                                        std::size_t max_t,
                                        const std::function<double(std::size_t, double)>& value,
                                        bool allow_empty = true) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> counts(allow_empty ? 0 : 1, max_t);
    DatasetBuilder b(n, p);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j) {
            const std::size_t t = counts(eng);
            for (std::size_t q = 0; q < t; ++q) {
                const double u = unif(eng);
                b.add(i, j, u, value(j, u));
            }
        }
    return std::move(b).build();
}

inline bool same_tree_bytes(const std::filesystem::path& a, const std::filesystem::path& b,
                            std::string& why) {
    namespace fs = std::filesystem;
    auto names = [](const fs::path& root) {
        std::vector<std::string> out;
        for (const auto& e : fs::recursive_directory_iterator(root))
            if (e.is_regular_file()) out.push_back(fs::relative(e.path(), root).string());
        std::sort(out.begin(), out.end());
        return out;
    };
    const auto na = names(a), nb = names(b);
    if (na != nb) {
        why = "file lists differ under " + a.string() + " and " + b.string();
        return false;
    }
    for (const auto& rel : na) {
        if (read_file((a / rel).string()) != read_file((b / rel).string())) {
            why = "byte mismatch in " + rel;
            return false;
        }
    }
    return true;
}

inline int run_cli(const std::string& cli, const std::string& args,
                   const std::filesystem::path& log) {
    const std::string cmd =
        "\"" + cli + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    return std::system(cmd.c_str());
}

}  // namespace verify_detail

// Criterion 1: local linear fits return affine truth exactly (to 1e-10) when
// the responses are exactly affine, at every solvable evaluation point.
inline CriterionResult criterion_affine_reproduction() {
    CriterionResult res{1, "affine reproduction", false, 0.0, 1.0, ""};
    const double tol = 1e-10;
    std::mt19937_64 eng(101);

    // Mean: y = 0.7 - 1.3 u on a ragged design, both schemes, several h.
    double gap_mean = 0.0;
    const auto data = verify_detail::ragged_dataset(
        eng, 40, 2, 6, [](std::size_t, double u) { return 0.7 - 1.3 * u; }, false);
    for (WeightScheme scheme : {WeightScheme::PerObservation, WeightScheme::PerSubject})
        for (double h : {0.12, 0.3})
            for (std::size_t j = 0; j < 2; ++j) {
                SmootherSpec spec{Kernel::Epanechnikov, h, scheme};
                const auto est = estimate_mean_curve(data, j, unit_grid(21), spec);
                for (std::size_t r = 0; r < est.grid.size(); ++r) {
                    if (std::isnan(est.values[r])) continue;  // unsolvable points are exempt
                    gap_mean = std::max(gap_mean,
                                        std::fabs(est.values[r] - (0.7 - 1.3 * est.grid[r])));
                }
            }

    // Covariance: constant residual kappa on one side, affine residual on the
    // other, so every raw covariance lies on one plane.
    const double kappa = 1.3, alpha = 0.7, beta = -2.1;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    DatasetBuilder cb(25, 2);
    for (std::size_t i = 0; i < 25; ++i)
        for (int t = 0; t < 5; ++t) {
            const double u = unif(eng), v = unif(eng);
            cb.add(i, 0, u, std::sin(2.0 * std::numbers::pi * u) + kappa);
            cb.add(i, 1, v, v * v + alpha + beta * v);
        }
    const auto cdata = std::move(cb).build();
    const ScalarFn mean0 = [](double u) { return std::sin(2.0 * std::numbers::pi * u); };
    const ScalarFn mean1 = [](double v) { return v * v; };
    double gap_cov = 0.0;
    for (WeightScheme scheme : {WeightScheme::PerObservation, WeightScheme::PerSubject}) {
        SmootherSpec spec{Kernel::Epanechnikov, 0.35, scheme};
        for (double u0 : {0.1, 0.45, 0.9})
            for (double v0 : {0.2, 0.7}) {
                const auto cross = estimate_cov_at(cdata, 0, 1, u0, v0, spec, mean0, mean1);
                if (cross)
                    gap_cov = std::max(gap_cov,
                                       std::fabs(*cross - kappa * (alpha + beta * v0)));
                const auto diag = estimate_cov_at(cdata, 0, 0, u0, v0, spec, mean0, mean0);
                if (diag) gap_cov = std::max(gap_cov, std::fabs(*diag - kappa * kappa));
            }
    }

    // Plane smoother on a scattered affine field with arbitrary weights.
    double gap_plane = 0.0;
    std::vector<double> us, vs, vals, ws;
    for (int q = 0; q < 120; ++q) {
        us.push_back(unif(eng));
        vs.push_back(unif(eng));
        vals.push_back(0.4 - 1.7 * us.back() + 2.2 * vs.back());
        ws.push_back(0.1 + unif(eng));
    }
    for (double u0 : {0.15, 0.5, 0.85})
        for (double v0 : {0.3, 0.75}) {
            const auto fit =
                local_plane_smooth_at(us, vs, vals, ws, u0, v0, Kernel::Epanechnikov, 0.4);
            if (fit)
                gap_plane = std::max(gap_plane, std::fabs(*fit - (0.4 - 1.7 * u0 + 2.2 * v0)));
        }

    res.pass = gap_mean <= tol && gap_cov <= tol && gap_plane <= tol;
    res.detail = "max gap: mean " + verify_detail::fmt(gap_mean) + ", cov " +
                 verify_detail::fmt(gap_cov) + ", plane " + verify_detail::fmt(gap_plane) +
                 " (tol 1e-10)";
    return res;
}

// Criterion 2: the point estimators agree with an independent generic WLS
// solve (Gaussian elimination on the explicit design) to 1e-9.
inline CriterionResult criterion_wls_oracle() {
    CriterionResult res{2, "weighted least squares oracle", false, 0.0, 10.0, ""};
    const double tol = 1e-9;
    std::mt19937_64 eng(202);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double worst = 0.0;
    std::size_t compared = 0;

    for (int inst = 0; inst < 30; ++inst) {
        const auto data = verify_detail::ragged_dataset(
            eng, 8, 1, 5,
            [&eng, &unif](std::size_t, double u) { return std::cos(5.0 * u) + unif(eng); },
            false);
        const WeightScheme scheme =
            inst % 2 ? WeightScheme::PerSubject : WeightScheme::PerObservation;
        const double h = 0.3 + 0.3 * unif(eng);
        // Every sixth instance evaluates exactly at an observed time, so the
        // kernel peak K(0) itself is exercised, not only generic interior x.
        const double u0 =
            inst % 6 == 5 ? data.series(0, 0).u.front() : 0.2 + 0.6 * unif(eng);
        SmootherSpec spec{Kernel::Epanechnikov, h, scheme};
        const auto weights = mean_weights(data, 0, scheme);

        std::vector<std::vector<double>> rows;
        std::vector<double> w, z;
        for (std::size_t i = 0; i < data.n_subjects(); ++i) {
            const Series& s = data.series(i, 0);
            for (std::size_t t = 0; t < s.size(); ++t) {
                const double x = (s.u[t] - u0) / h;
                const double c = weights[i] * verify_detail::oracle_epanechnikov(x) / h;
                if (c <= 0.0) continue;
                rows.push_back({1.0, x});
                w.push_back(c);
                z.push_back(s.y[t]);
            }
        }
        const auto oracle = verify_detail::wls_intercept(rows, w, z);
        const auto est = estimate_mean_at(data, 0, u0, spec, weights);
        if (oracle && est) {
            worst = std::max(worst, std::fabs(*oracle - *est));
            ++compared;
        }
    }

    for (int inst = 0; inst < 25; ++inst) {
        const auto data = verify_detail::ragged_dataset(
            eng, 6, 2, 4,
            [&eng, &unif](std::size_t, double u) { return std::sin(4.0 * u) + unif(eng); },
            false);
        const std::size_t j = 0, k = inst % 3 ? 1 : 0;
        const WeightScheme scheme =
            inst % 2 ? WeightScheme::PerSubject : WeightScheme::PerObservation;
        const double h = 0.35 + 0.3 * unif(eng);
        const double u0 = 0.25 + 0.5 * unif(eng), v0 = 0.25 + 0.5 * unif(eng);
        // One centring function per variable; for k == j both sides share it.
        const ScalarFn per_var[2] = {[](double u) { return 0.2 + 0.5 * u; },
                                     [](double u) { return std::cos(3.0 * u); }};
        const ScalarFn& mj = per_var[j];
        const ScalarFn& mk = per_var[k];
        SmootherSpec spec{Kernel::Epanechnikov, h, scheme};
        const auto weights = cov_weights(data, j, k, scheme);

        std::vector<std::vector<double>> rows;
        std::vector<double> w, z;
        for (std::size_t i = 0; i < data.n_subjects(); ++i) {
            const Series& sj = data.series(i, j);
            const Series& sk = data.series(i, k);
            for (std::size_t t = 0; t < sj.size(); ++t)
                for (std::size_t s = 0; s < sk.size(); ++s) {
                    if (j == k && t == s) continue;
                    const double x = (sj.u[t] - u0) / h;
                    const double y = (sk.u[s] - v0) / h;
                    const double c = weights[i] * verify_detail::oracle_epanechnikov(x) *
                                     verify_detail::oracle_epanechnikov(y) / (h * h);
                    if (c <= 0.0) continue;
                    rows.push_back({1.0, x, y});
                    w.push_back(c);
                    z.push_back((sj.y[t] - mj(sj.u[t])) * (sk.y[s] - mk(sk.u[s])));
                }
        }
        const auto oracle = verify_detail::wls_intercept(rows, w, z);
        const auto est = estimate_cov_at(data, j, k, u0, v0, spec, mj, mk, weights);
        if (oracle && est) {
            worst = std::max(worst, std::fabs(*oracle - *est));
            ++compared;
        }
    }

    res.pass = compared == 55 && worst <= tol;
    res.detail = std::to_string(compared) + "/55 instances compared, max gap " +
                 verify_detail::fmt(worst) + " (tol 1e-9)";
    return res;
}

// Criterion 3: both weighting schemes keep the normalization identities
// sum_i T_ij v_ij = 1 and sum_i T_ij (T_ik - 1{j=k}) w_ijk = 1 to 1e-12.
inline CriterionResult criterion_weight_normalization() {
    CriterionResult res{3, "weight normalization", false, 0.0, 1.0, ""};
    const double tol = 1e-12;
    std::mt19937_64 eng(303);
    double worst = 0.0;
    std::size_t checked = 0, skipped = 0;

    for (int design = 0; design < 1000; ++design) {
        std::uniform_int_distribution<std::size_t> pick_n(1, 12), pick_p(1, 4);
        const std::size_t n = pick_n(eng), p = pick_p(eng);
        const auto data = verify_detail::ragged_dataset(
            eng, n, p, 6, [](std::size_t, double u) { return u; }, true);
        for (WeightScheme scheme : {WeightScheme::PerObservation, WeightScheme::PerSubject}) {
            for (std::size_t j = 0; j < p; ++j) {
                try {
                    const auto v = mean_weights(data, j, scheme);
                    double s = 0.0;
                    for (std::size_t i = 0; i < n; ++i)
                        s += static_cast<double>(data.count(i, j)) * v[i];
                    worst = std::max(worst, std::fabs(s - 1.0));
                    ++checked;
                } catch (const AllEmptyError&) {
                    ++skipped;
                }
            }
            for (std::size_t j = 0; j < p; ++j)
                for (std::size_t k = j; k < p; ++k) {
                    try {
                        const auto w = cov_weights(data, j, k, scheme);
                        double s = 0.0;
                        for (std::size_t i = 0; i < n; ++i)
                            s += static_cast<double>(pair_count(data, i, j, k)) * w[i];
                        worst = std::max(worst, std::fabs(s - 1.0));
                        ++checked;
                    } catch (const NoPairsError&) {
                        ++skipped;
                    }
                }
        }
    }

    res.pass = worst <= tol && checked > 0;
    res.detail = std::to_string(checked) + " identities checked (" + std::to_string(skipped) +
                 " empty skipped), max |sum-1| " + verify_detail::fmt(worst) + " (tol 1e-12)";
    return res;
}

// Criterion 4: binned and exact paths agree within 1% of the exact range on a
// seeded instance (n=100, p=2, T=20, R=400), and to 1e-12 when every
// observation time sits on a bin node.
inline CriterionResult criterion_binned_matches_exact(int threads) {
    CriterionResult res{4, "binned path matches exact path", false, 0.0, 30.0, ""};
    const std::size_t R = 400;
    const double h_mean = 0.1, h_cov = 0.15;

    SimulationConfig sim;
    sim.n = 100;
    sim.p = 2;
    sim.T = 20;
    sim.seed = 404;
    const auto out = generate_dataset(sim);
    const auto grid = unit_grid(R);
    SmootherSpec mspec{Kernel::Epanechnikov, h_mean, WeightScheme::PerObservation};
    SmootherSpec cspec{Kernel::Epanechnikov, h_cov, WeightScheme::PerObservation};
    const ScalarFn mu = [](double u) { return true_mean(u); };
    const std::vector<ScalarFn> means = {mu, mu};

    auto range = [](const std::vector<double>& v) {
        double lo = v[0], hi = v[0];
        for (double x : v) {
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
        return hi - lo;
    };
    auto sup_gap = [](const std::vector<double>& a, const std::vector<double>& b) {
        double g = 0.0;
        for (std::size_t q = 0; q < a.size(); ++q) g = std::max(g, std::fabs(a[q] - b[q]));
        return g;
    };

    double worst_rel = 0.0;
    for (std::size_t j = 0; j < 2; ++j) {
        const auto weights = mean_weights(out.data, j, mspec.scheme);
        const auto exact = estimate_mean_curve(out.data, j, grid, mspec, weights);
        const auto binned =
            estimate_mean_binned(bin_marginal(out.data, j, R), weights, grid, mspec);
        if (!exact.complete() || !binned.complete()) {
            res.detail = "mean estimate has unsolvable points";
            return res;
        }
        worst_rel = std::max(worst_rel, sup_gap(exact.values, binned.values) /
                                            range(exact.values));
    }
    for (const auto& [j, k] : {std::pair<std::size_t, std::size_t>{0, 0}, {0, 1}}) {
        const auto weights = cov_weights(out.data, j, k, cspec.scheme);
        const auto exact = estimate_cov_surface(out.data, j, k, grid, grid, cspec, means[j],
                                                means[k], weights, threads);
        const auto binned = estimate_cov_binned(bin_pairs(out.data, j, k, R, means[j], means[k]),
                                                weights, grid, grid, cspec, threads);
        if (!exact.complete() || !binned.complete()) {
            res.detail = "covariance estimate has unsolvable cells";
            return res;
        }
        worst_rel = std::max(worst_rel, sup_gap(exact.values, binned.values) /
                                            range(exact.values));
    }

    // Same instance with times snapped to the bin nodes: binning is lossless,
    // so the two paths must coincide to rounding error.
    DatasetBuilder snap(sim.n, sim.p);
    for (std::size_t i = 0; i < sim.n; ++i)
        for (std::size_t j = 0; j < sim.p; ++j) {
            const Series& s = out.data.series(i, j);
            for (std::size_t t = 0; t < s.size(); ++t) {
                const double u =
                    std::round(s.u[t] * static_cast<double>(R - 1)) / static_cast<double>(R - 1);
                snap.add(i, j, u, s.y[t]);
            }
        }
    const auto node_data = std::move(snap).build();
    const auto eval = unit_grid(100);
    double worst_node = 0.0;
    {
        const auto weights = mean_weights(node_data, 0, mspec.scheme);
        const auto exact = estimate_mean_curve(node_data, 0, grid, mspec, weights);
        const auto binned =
            estimate_mean_binned(bin_marginal(node_data, 0, R), weights, grid, mspec);
        worst_node = std::max(worst_node, sup_gap(exact.values, binned.values));
    }
    for (const auto& [j, k] : {std::pair<std::size_t, std::size_t>{0, 0}, {0, 1}}) {
        const auto weights = cov_weights(node_data, j, k, cspec.scheme);
        const auto exact = estimate_cov_surface(node_data, j, k, eval, eval, cspec, means[j],
                                                means[k], weights, threads);
        const auto binned = estimate_cov_binned(bin_pairs(node_data, j, k, R, means[j], means[k]),
                                                weights, eval, eval, cspec, threads);
        worst_node = std::max(worst_node, sup_gap(exact.values, binned.values));
    }

    res.pass = worst_rel <= 0.01 && worst_node <= 1e-12;
    res.detail = "sup gap / range " + verify_detail::fmt(worst_rel) +
                 " (tol 0.01); on-node gap " + verify_detail::fmt(worst_node) + " (tol 1e-12)";
    return res;
}

// Criterion 5: simulated scores and process values obey the declared law:
// component variances within 3 SE, lag-2 cross-correlation within 3 SE of
// rho^2, and process covariances at spot tuples within 4/sqrt(N).
inline CriterionResult criterion_simulation_law() {
    CriterionResult res{5, "simulation law", false, 0.0, 30.0, ""};
    const std::size_t N = 5000;
    SimulationConfig sim;
    sim.n = N;
    sim.p = 3;
    sim.T = 1;
    sim.rho = 0.5;
    sim.seed = 505;
    const auto out = generate_dataset(sim);
    const auto d = score_variances();

    auto score = [&](std::size_t i, std::size_t j, std::size_t m) {
        return out.coefficients[(i * sim.p + j) * 4 + m];
    };

    double worst_var_z = 0.0;
    for (std::size_t m = 0; m < 4; ++m) {
        double s = 0.0, ss = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            const double v = score(i, 0, m);
            s += v;
            ss += v * v;
        }
        const double var = (ss - s * s / N) / (N - 1);
        const double se = d[m] * std::sqrt(2.0 / (N - 1));
        worst_var_z = std::max(worst_var_z, std::fabs(var - d[m]) / se);
    }

    double worst_corr_z = 0.0;
    for (std::size_t m = 0; m < 4; ++m) {
        double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
        for (std::size_t i = 0; i < N; ++i) {
            const double a = score(i, 0, m), b = score(i, 2, m);
            sa += a;
            sb += b;
            saa += a * a;
            sbb += b * b;
            sab += a * b;
        }
        const double cov = sab / N - (sa / N) * (sb / N);
        const double corr =
            cov / std::sqrt((saa / N - sa / N * (sa / N)) * (sbb / N - sb / N * (sb / N)));
        const double truth = sim.rho * sim.rho;
        const double se = (1.0 - truth * truth) / std::sqrt(static_cast<double>(N));
        worst_corr_z = std::max(worst_corr_z, std::fabs(corr - truth) / se);
    }

    const double cov_tol = 4.0 / std::sqrt(static_cast<double>(N));
    struct Spot {
        std::size_t j, k;
        double u, v;
    };
    const Spot spots[5] = {{0, 0, 0.0, 0.0}, {0, 0, 0.3, 0.8}, {0, 1, 0.5, 0.5},
                           {0, 2, 0.2, 0.9}, {1, 2, 0.7, 0.1}};
    double worst_cov_gap = 0.0;
    for (const Spot& sp : spots) {
        auto x_at = [&](std::size_t i, std::size_t j, double u) {
            const auto phi = basis_eval(u);
            double x = 0.0;
            for (std::size_t m = 0; m < 4; ++m) x += phi[m] * score(i, j, m);
            return x;  // centered process value
        };
        double sa = 0, sb = 0, sab = 0;
        for (std::size_t i = 0; i < N; ++i) {
            const double a = x_at(i, sp.j, sp.u), b = x_at(i, sp.k, sp.v);
            sa += a;
            sb += b;
            sab += a * b;
        }
        const double cov = sab / N - (sa / N) * (sb / N);
        worst_cov_gap =
            std::max(worst_cov_gap, std::fabs(cov - true_cov(sp.j, sp.k, sp.u, sp.v, sim.rho)));
    }

    res.pass = worst_var_z <= 3.0 && worst_corr_z <= 3.0 && worst_cov_gap <= cov_tol;
    res.detail = "var z " + verify_detail::fmt(worst_var_z) + " (tol 3), corr z " +
                 verify_detail::fmt(worst_corr_z) + " (tol 3), cov gap " +
                 verify_detail::fmt(worst_cov_gap) + " (tol " + verify_detail::fmt(cov_tol) + ")";
    return res;
}

// Criterion 6: enumerating all r^p bandwidth assignments and minimizing the
// worst row equals MaxMISE exactly, for 100 random 4x5 tables.
inline CriterionResult criterion_bruteforce_identity() {
    CriterionResult res{6, "bandwidth assignment brute force", false, 0.0, 1.0, ""};
    std::mt19937_64 eng(606);
    std::uniform_real_distribution<double> unif(0.01, 5.0);
    std::size_t matched = 0;
    for (int table = 0; table < 100; ++table) {
        MiseReport rep;
        rep.p = 4;
        rep.h_mean = {0.1, 0.2, 0.3, 0.4, 0.5};
        rep.has_mean = true;
        rep.mean_cells.resize(20);
        for (auto& c : rep.mean_cells) c = unif(eng);
        recompute_minima(rep);
        if (global_opt_bruteforce(rep, Target::Mean) == aggregate_mises(rep).max_mise_mean)
            ++matched;
    }
    res.pass = matched == 100;
    res.detail = std::to_string(matched) + "/100 tables matched exactly (625 assignments each)";
    return res;
}

// Criterion 7: Monte Carlo convergence rates in the sparse design (T=5):
// mean MISE slope against n within [-1.1, -0.5] at h = 0.6 n^{-1/5}; the
// covariance slope within [-0.95, -0.4] at h = 0.6 n^{-1/6}.
inline CriterionResult criterion_rate_slopes(int threads) {
    CriterionResult res{7, "mean and covariance rate slopes", false, 0.0, 600.0, ""};
    const std::vector<double> ns = {100, 200, 400, 800, 1600};
    const std::size_t reps = 30;
    const auto mean_grid = unit_grid(101);
    const auto cov_grid = unit_grid(50);
    const double rho = 0.5;

    std::vector<double> mean_avg(ns.size(), 0.0), cov_avg(ns.size(), 0.0);
    for (std::size_t ni = 0; ni < ns.size(); ++ni) {
        const auto n = static_cast<std::size_t>(ns[ni]);
        const double h_mu = 0.6 * std::pow(ns[ni], -0.2);
        const double h_sig = 0.6 * std::pow(ns[ni], -1.0 / 6.0);
        for (std::size_t rep = 0; rep < reps; ++rep) {
            SimulationConfig sim;
            sim.n = n;
            sim.p = 1;
            sim.T = 5;
            sim.rho = rho;
            sim.seed = detail::splitmix64(detail::splitmix64(707 ^ ni) ^ rep);
            const auto out = generate_dataset(sim);

            SmootherSpec mspec{Kernel::Epanechnikov, h_mu, WeightScheme::PerObservation};
            const auto mw = mean_weights(out.data, 0, mspec.scheme);
            const auto mu_est = estimate_mean_curve(out.data, 0, mean_grid, mspec, mw);
            if (!mu_est.complete()) {
                res.detail = "mean estimate unsolvable at n=" + std::to_string(n);
                return res;
            }
            mean_avg[ni] += mise_mean(mu_est, [](double u) { return true_mean(u); });

            SmootherSpec cspec{Kernel::Epanechnikov, h_sig, WeightScheme::PerObservation};
            const auto cw = cov_weights(out.data, 0, 0, cspec.scheme);
            const ScalarFn mu_fn = make_interpolant(mu_est);
            const auto cov_est = estimate_cov_surface(out.data, 0, 0, cov_grid, cov_grid, cspec,
                                                      mu_fn, mu_fn, cw, threads);
            if (!cov_est.complete()) {
                res.detail = "covariance estimate unsolvable at n=" + std::to_string(n);
                return res;
            }
            cov_avg[ni] += mise_cov(
                cov_est, [rho](double u, double v) { return true_cov(0, 0, u, v, rho); });
        }
        mean_avg[ni] /= static_cast<double>(reps);
        cov_avg[ni] /= static_cast<double>(reps);
    }

    const double mean_slope = fit_rate_slope(ns, mean_avg).first;
    const double cov_slope = fit_rate_slope(ns, cov_avg).first;
    res.pass = mean_slope >= -1.1 && mean_slope <= -0.5 && cov_slope >= -0.95 &&
               cov_slope <= -0.4;
    res.detail = "mean slope " + verify_detail::fmt(mean_slope) +
                 " (band [-1.1,-0.5]), cov slope " + verify_detail::fmt(cov_slope) +
                 " (band [-0.95,-0.4])";
    return res;
}

// Criterion 8: the full phase study (n=100, p in {5,10,20}, T in {5..160},
// 20 replications, binned path) reproduces the qualitative transition shape.
inline CriterionResult criterion_phase_shape(int threads) {
    CriterionResult res{8, "phase transition shape", false, 0.0, 1200.0, ""};
    ExperimentConfig cfg;  // defaults are exactly this design
    cfg.threads = threads;
    const auto result = run_phase_experiment(cfg);

    for (const auto& cell : result.cells)
        if (!cell.ok) {
            res.detail = "cell (rep " + std::to_string(cell.rep) + ", p " +
                         std::to_string(cell.p) + ", T " + std::to_string(cell.T) +
                         ") failed: " + cell.error;
            return res;
        }

    const auto ave_sig = phase_metric_means(result, 2);
    const auto max_sig = phase_metric_means(result, 3);

    double worst_drop = 0.0, worst_plateau = 0.0;
    for (std::size_t p : cfg.p_list) {
        worst_drop = std::max(worst_drop, ave_sig.at({p, 160}) / ave_sig.at({p, 5}));
        worst_plateau = std::max(worst_plateau,
                                 std::fabs(ave_sig.at({p, 160}) - ave_sig.at({p, 80})) /
                                     ave_sig.at({p, 80}));
    }

    bool max_ge_ave = true;
    for (const auto& cell : result.cells)
        max_ge_ave = max_ge_ave && cell.agg.max_mise_mean >= cell.agg.ave_mise_mean &&
                     cell.agg.max_mise_cov >= cell.agg.ave_mise_cov;

    std::size_t monotone_cols = 0;
    for (std::size_t T : cfg.t_list) {
        bool ok = true;
        for (std::size_t q = 1; q < cfg.p_list.size(); ++q)
            ok = ok && max_sig.at({cfg.p_list[q - 1], T}) <= max_sig.at({cfg.p_list[q], T});
        if (ok) ++monotone_cols;
    }

    res.pass = worst_drop <= 0.25 && worst_plateau <= 0.25 && max_ge_ave && monotone_cols >= 5;
    res.detail = "T=160/T=5 ratio " + verify_detail::fmt(worst_drop) +
                 " (tol 0.25); plateau ratio " + verify_detail::fmt(worst_plateau) +
                 " (tol 0.25); max>=ave " + (max_ge_ave ? "yes" : "NO") + "; monotone-in-p " +
                 std::to_string(monotone_cols) + "/6 T columns (need 5)";
    return res;
}

// Criterion 9: rerunning every output-producing subcommand with a different
// --threads value yields byte-identical output trees.
inline CriterionResult criterion_thread_determinism(const VerifyOptions& opt) {
    CriterionResult res{9, "thread-count determinism", false, 0.0, 120.0, ""};
    namespace fs = std::filesystem;
    if (opt.cli_path.empty()) {
        res.detail = "no CLI binary path provided";
        return res;
    }
    const fs::path scratch = fs::path(opt.scratch_dir) / "determinism";
    fs::remove_all(scratch);
    fs::create_directories(scratch);

    const fs::path sim_cfg = scratch / "sim.cfg";
    write_file(sim_cfg.string(), "n = 40\np = 2\nt = 7\nseed = 7\n");
    const fs::path sweep_cfg = scratch / "sweep.cfg";
    write_file(sweep_cfg.string(),
               "n = 25\np = 2\nt = 6\nseed = 11\ngrid_points = 40\n"
               "h_mean = 0.15,0.25,0.4\nh_cov = 0.2,0.35\n");
    const fs::path phase_cfg = scratch / "phase.cfg";
    write_file(phase_cfg.string(),
               "n = 30\np_list = 2,3\nt_list = 5,9\nreps = 2\nseed = 424242\n"
               "grid_points = 40\nh_mean = 0.12,0.2,0.35\nh_cov = 0.15,0.3\n");

    struct Run {
        std::string label, args_a, args_b;
    };
    const std::string q = "\"";
    auto quoted = [&q](const fs::path& p) { return q + p.string() + q; };
    const std::vector<Run> runs = {
        {"simulate",
         "simulate --config " + quoted(sim_cfg) + " --out " + quoted(scratch / "sim_a") +
             " --threads 1",
         "simulate --config " + quoted(sim_cfg) + " --out " + quoted(scratch / "sim_b") +
             " --threads 3"},
        {"estimate",
         "estimate --data " + quoted(scratch / "sim_a" / "dataset.csv") +
             " --h-mean 0.25 --h-cov 0.3 --grid 60 --binned --out " +
             quoted(scratch / "est_a") + " --threads 1",
         "estimate --data " + quoted(scratch / "sim_a" / "dataset.csv") +
             " --h-mean 0.25 --h-cov 0.3 --grid 60 --binned --out " +
             quoted(scratch / "est_b") + " --threads 4"},
        {"sweep",
         "sweep --config " + quoted(sweep_cfg) + " --out " + quoted(scratch / "sweep_a") +
             " --threads 1",
         "sweep --config " + quoted(sweep_cfg) + " --out " + quoted(scratch / "sweep_b") +
             " --threads 2"},
        {"phase-experiment",
         "phase-experiment --config " + quoted(phase_cfg) + " --out " +
             quoted(scratch / "phase_a") + " --threads 1",
         "phase-experiment --config " + quoted(phase_cfg) + " --out " +
             quoted(scratch / "phase_b") + " --threads 4"},
    };

    std::string detail;
    for (const Run& run : runs) {
        const int rc_a = verify_detail::run_cli(opt.cli_path, run.args_a,
                                                scratch / (run.label + "_a.log"));
        const int rc_b = verify_detail::run_cli(opt.cli_path, run.args_b,
                                                scratch / (run.label + "_b.log"));
        if (rc_a != 0 || rc_b != 0) {
            res.detail = run.label + " exited nonzero (see logs in " + scratch.string() + ")";
            return res;
        }
        std::string why;
        const fs::path dir_a = scratch / (run.label == "simulate"        ? "sim_a"
                                          : run.label == "estimate"      ? "est_a"
                                          : run.label == "sweep"         ? "sweep_a"
                                                                         : "phase_a");
        const fs::path dir_b = scratch / (run.label == "simulate"        ? "sim_b"
                                          : run.label == "estimate"      ? "est_b"
                                          : run.label == "sweep"         ? "sweep_b"
                                                                         : "phase_b");
        if (!verify_detail::same_tree_bytes(dir_a, dir_b, why)) {
            res.detail = run.label + ": " + why;
            return res;
        }
        detail += (detail.empty() ? "" : ", ") + run.label;
    }
    res.pass = true;
    res.detail = "byte-identical across threads: " + detail;
    return res;
}

inline CriterionResult run_criterion(int id, const VerifyOptions& opt) {
    const auto start = std::chrono::steady_clock::now();
    CriterionResult res;
    try {
        switch (id) {
            case 1: res = criterion_affine_reproduction(); break;
            case 2: res = criterion_wls_oracle(); break;
            case 3: res = criterion_weight_normalization(); break;
            case 4: res = criterion_binned_matches_exact(opt.threads); break;
            case 5: res = criterion_simulation_law(); break;
            case 6: res = criterion_bruteforce_identity(); break;
            case 7: res = criterion_rate_slopes(opt.threads); break;
            case 8: res = criterion_phase_shape(opt.threads); break;
            case 9: res = criterion_thread_determinism(opt); break;
            default: throw std::invalid_argument("unknown criterion id");
        }
    } catch (const std::exception& e) {
        res.id = id;
        res.pass = false;
        res.detail = std::string("exception: ") + e.what();
    }
    res.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (res.seconds > res.budget_seconds && res.budget_seconds > 0.0) {
        res.pass = false;
        res.detail += " [OVER TIME BUDGET]";
    }
    return res;
}

inline std::vector<int> all_criteria() { return {1, 2, 3, 4, 5, 6, 7, 8, 9}; }

// One line per criterion; returns overall pass.
inline bool report_criteria(std::ostream& os, const std::vector<CriterionResult>& results) {
    bool all = true;
    for (const auto& r : results) {
        char timing[64];
        std::snprintf(timing, sizeof(timing), "%8.2f s / %-6.0f", r.seconds, r.budget_seconds);
        os << (r.pass ? "PASS" : "FAIL") << "  " << r.id << "  " << r.name;
        for (std::size_t pad = r.name.size(); pad < 36; ++pad) os << ' ';
        os << timing << "  " << r.detail << "\n";
        all = all && r.pass;
    }
    os << (all ? "all criteria passed" : "CRITERIA FAILED") << "\n";
    return all;
}

}  // namespace fdsmooth
