#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "fdsmooth/binning.hpp"
#include "fdsmooth/dataset.hpp"
#include "fdsmooth/errors.hpp"
#include "fdsmooth/smoothing.hpp"

namespace fdsmooth {

enum class Quadrature { Trapezoid };

namespace detail {

// Composite trapezoid weights on a sorted (possibly uneven) grid.
inline std::vector<double> trapezoid_weights(const std::vector<double>& grid) {
    const std::size_t r = grid.size();
    std::vector<double> w(r, 0.0);
    if (r < 2) return w;
    w[0] = (grid[1] - grid[0]) / 2.0;
    for (std::size_t i = 1; i + 1 < r; ++i) w[i] = (grid[i + 1] - grid[i - 1]) / 2.0;
    w[r - 1] = (grid[r - 1] - grid[r - 2]) / 2.0;
    return w;
}

}  // namespace detail

// Integrated squared error of a curve estimate against a reference function.
inline double mise_mean(const CurveEstimate& est, const ScalarFn& truth,
                        Quadrature = Quadrature::Trapezoid) {
    if (!est.complete()) throw IncompleteEstimateError("mise_mean: estimate has failed points");
    const auto w = detail::trapezoid_weights(est.grid);
    double s = 0.0;
    for (std::size_t r = 0; r < est.grid.size(); ++r) {
        const double d = est.values[r] - truth(est.grid[r]);
        s += w[r] * d * d;
    }
    return s;
}

inline double mise_cov(const SurfaceEstimate& est,
                       const std::function<double(double, double)>& truth,
                       Quadrature = Quadrature::Trapezoid) {
    if (!est.complete()) throw IncompleteEstimateError("mise_cov: estimate has failed cells");
    const auto wu = detail::trapezoid_weights(est.grid_u);
    const auto wv = detail::trapezoid_weights(est.grid_v);
    double s = 0.0;
    for (std::size_t r = 0; r < est.grid_u.size(); ++r) {
        double row = 0.0;
        for (std::size_t c = 0; c < est.grid_v.size(); ++c) {
            const double d = est.at(r, c) - truth(est.grid_u[r], est.grid_v[c]);
            row += wv[c] * d * d;
        }
        s += wu[r] * row;
    }
    return s;
}

enum class SmoothPath { Exact, Binned };

// MISE of every (variable, bandwidth) and (pair, bandwidth) cell, with failed
// cells carrying NaN, plus the per-variable / per-pair minima.
struct MiseReport {
    std::size_t p = 0;
    std::vector<double> h_mean;  // sorted, deduplicated
    std::vector<double> h_cov;
    bool has_mean = false;
    bool has_cov = false;
    std::vector<double> mean_cells;  // p x |h_mean|, row-major, NaN = failed
    std::vector<double> cov_cells;   // (p*p) x |h_cov|, pair (j,k) at row j*p+k
    std::vector<double> best_h_mean, best_mise_mean;  // per variable
    std::vector<double> best_h_cov, best_mise_cov;    // per pair, row-major
    std::size_t failed_mean_cells = 0;
    std::size_t failed_cov_cells = 0;

    double mean_cell(std::size_t j, std::size_t hi) const {
        return mean_cells[j * h_mean.size() + hi];
    }
    double cov_cell(std::size_t j, std::size_t k, std::size_t hi) const {
        return cov_cells[(j * p + k) * h_cov.size() + hi];
    }
};

namespace detail {

inline std::vector<double> sorted_unique(std::vector<double> h) {
    std::sort(h.begin(), h.end());
    h.erase(std::unique(h.begin(), h.end()), h.end());
    if (h.empty()) throw std::invalid_argument("bandwidth grid is empty");
    return h;
}

// Minimum over non-NaN entries of one row; NaN best marks an all-failed row.
inline void row_minimum(const std::vector<double>& cells, std::size_t row, std::size_t width,
                        const std::vector<double>& h, double& best_h, double& best_val) {
    best_h = std::numeric_limits<double>::quiet_NaN();
    best_val = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t c = 0; c < width; ++c) {
        const double v = cells[row * width + c];
        if (std::isnan(v)) continue;
        if (std::isnan(best_val) || v < best_val) {
            best_val = v;
            best_h = h[c];
        }
    }
}

}  // namespace detail

// Sweeps the mean smoother over a bandwidth grid for every variable. Failed
// cells (singular points in the curve, or a bandwidth below the binned guard)
// are flagged and excluded from the minima.
inline MiseReport bandwidth_sweep_mean(
    const FunctionalDataset& data, const std::function<double(std::size_t, double)>& truth,
    std::vector<double> h_set, const std::vector<double>& grid, WeightScheme scheme,
    SmoothPath path, Kernel kernel = Kernel::Epanechnikov) {
    MiseReport rep;
    rep.p = data.n_vars();
    rep.h_mean = detail::sorted_unique(std::move(h_set));
    rep.has_mean = true;
    const std::size_t nh = rep.h_mean.size();
    rep.mean_cells.assign(rep.p * nh, std::numeric_limits<double>::quiet_NaN());
    rep.best_h_mean.resize(rep.p);
    rep.best_mise_mean.resize(rep.p);

    for (std::size_t j = 0; j < rep.p; ++j) {
        const auto weights = mean_weights(data, j, scheme);
        BinnedMarginal binned;
        if (path == SmoothPath::Binned) binned = bin_marginal(data, j, grid.size());
        const ScalarFn tj = [&truth, j](double u) { return truth(j, u); };
        for (std::size_t hi = 0; hi < nh; ++hi) {
            SmootherSpec spec{kernel, rep.h_mean[hi], scheme};
            try {
                const CurveEstimate est =
                    path == SmoothPath::Binned
                        ? estimate_mean_binned(binned, weights, grid, spec)
                        : estimate_mean_curve(data, j, grid, spec, weights);
                rep.mean_cells[j * nh + hi] = mise_mean(est, tj);
            } catch (const BandwidthTooSmallError&) {
                ++rep.failed_mean_cells;
            } catch (const IncompleteEstimateError&) {
                ++rep.failed_mean_cells;
            }
        }
        detail::row_minimum(rep.mean_cells, j, nh, rep.h_mean, rep.best_h_mean[j],
                            rep.best_mise_mean[j]);
    }
    return rep;
}

// Sweeps the covariance smoother for every pair (j,k), reusing the report
// produced by the mean sweep. Pairs are computed for j <= k and mirrored;
// on the binned path each variable is binned once and shared across pairs.
inline void bandwidth_sweep_cov(
    MiseReport& rep, const FunctionalDataset& data,
    const std::function<double(std::size_t, std::size_t, double, double)>& truth,
    std::vector<double> h_set, const std::vector<double>& grid, WeightScheme scheme,
    SmoothPath path, const std::vector<ScalarFn>& means, Kernel kernel = Kernel::Epanechnikov,
    int threads = 1) {
    const std::size_t p = data.n_vars();
    if (rep.p == 0) rep.p = p;
    rep.h_cov = detail::sorted_unique(std::move(h_set));
    rep.has_cov = true;
    const std::size_t nh = rep.h_cov.size();
    rep.cov_cells.assign(p * p * nh, std::numeric_limits<double>::quiet_NaN());
    rep.best_h_cov.assign(p * p, 0.0);
    rep.best_mise_cov.assign(p * p, 0.0);

    std::vector<BinnedVariable> binned(path == SmoothPath::Binned ? p : 0);
    if (path == SmoothPath::Binned)
        for (std::size_t j = 0; j < p; ++j)
            binned[j] = bin_variable(data, j, grid.size(), means[j]);

    for (std::size_t j = 0; j < p; ++j) {
        for (std::size_t k = j; k < p; ++k) {
            std::vector<double> weights;
            bool no_pairs = false;
            try {
                weights = cov_weights(data, j, k, scheme);
            } catch (const NoPairsError&) {
                no_pairs = true;
            }
            PooledPairs pooled;
            if (!no_pairs && path == SmoothPath::Binned)
                pooled = pool_pairs(binned[j], binned[k], j == k, weights);
            const auto tjk = [&truth, j, k](double u, double v) { return truth(j, k, u, v); };
            for (std::size_t hi = 0; hi < nh && !no_pairs; ++hi) {
                SmootherSpec spec{kernel, rep.h_cov[hi], scheme};
                try {
                    const SurfaceEstimate est =
                        path == SmoothPath::Binned
                            ? estimate_cov_binned(pooled, grid, grid, spec, j == k, threads)
                            : estimate_cov_surface(data, j, k, grid, grid, spec, means[j],
                                                   means[k], weights, threads);
                    rep.cov_cells[(j * p + k) * nh + hi] = mise_cov(est, tjk);
                } catch (const BandwidthTooSmallError&) {
                    ++rep.failed_cov_cells;
                } catch (const IncompleteEstimateError&) {
                    ++rep.failed_cov_cells;
                }
            }
            if (no_pairs) rep.failed_cov_cells += nh;
            // Sigma_kj(v,u) = Sigma_jk(u,v) and the truth is symmetric, so the
            // mirrored pair has identical MISE cells.
            if (k != j)
                for (std::size_t hi = 0; hi < nh; ++hi)
                    rep.cov_cells[(k * p + j) * nh + hi] = rep.cov_cells[(j * p + k) * nh + hi];
        }
    }
    for (std::size_t row = 0; row < p * p; ++row)
        detail::row_minimum(rep.cov_cells, row, nh, rep.h_cov, rep.best_h_cov[row],
                            rep.best_mise_cov[row]);
}

// Refreshes the per-row minima; used after filling cells by hand.
inline void recompute_minima(MiseReport& rep) {
    if (rep.has_mean) {
        rep.best_h_mean.resize(rep.p);
        rep.best_mise_mean.resize(rep.p);
        for (std::size_t j = 0; j < rep.p; ++j)
            detail::row_minimum(rep.mean_cells, j, rep.h_mean.size(), rep.h_mean,
                                rep.best_h_mean[j], rep.best_mise_mean[j]);
    }
    if (rep.has_cov) {
        rep.best_h_cov.resize(rep.p * rep.p);
        rep.best_mise_cov.resize(rep.p * rep.p);
        for (std::size_t row = 0; row < rep.p * rep.p; ++row)
            detail::row_minimum(rep.cov_cells, row, rep.h_cov.size(), rep.h_cov,
                                rep.best_h_cov[row], rep.best_mise_cov[row]);
    }
}

struct Aggregates {
    double ave_mise_mean = std::numeric_limits<double>::quiet_NaN();
    double max_mise_mean = std::numeric_limits<double>::quiet_NaN();
    double ave_mise_cov = std::numeric_limits<double>::quiet_NaN();
    double max_mise_cov = std::numeric_limits<double>::quiet_NaN();
};

// AveMISE = average over variables (pairs) of the per-row minimum over
// bandwidths; MaxMISE = maximum of those minima.
inline Aggregates aggregate_mises(const MiseReport& rep) {
    Aggregates out;
    if (rep.has_mean) {
        double sum = 0.0, mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < rep.p; ++j) {
            const double b = rep.best_mise_mean[j];
            if (std::isnan(b))
                throw IncompleteEstimateError("aggregate: variable " + std::to_string(j) +
                                              " has no successful bandwidth");
            sum += b;
            mx = std::max(mx, b);
        }
        out.ave_mise_mean = sum / static_cast<double>(rep.p);
        out.max_mise_mean = mx;
    }
    if (rep.has_cov) {
        double sum = 0.0, mx = -std::numeric_limits<double>::infinity();
        for (std::size_t row = 0; row < rep.p * rep.p; ++row) {
            const double b = rep.best_mise_cov[row];
            if (std::isnan(b))
                throw IncompleteEstimateError("aggregate: pair row " + std::to_string(row) +
                                              " has no successful bandwidth");
            sum += b;
            mx = std::max(mx, b);
        }
        out.ave_mise_cov = sum / static_cast<double>(rep.p * rep.p);
        out.max_mise_cov = mx;
    }
    return out;
}

enum class Target { Mean, Cov };

// Minimum over every bandwidth assignment (one bandwidth per row) of the
// worst row MISE. Enumerates all |H|^rows assignments; identical to MaxMISE
// because rows are optimized independently inside a max.
inline double global_opt_bruteforce(const MiseReport& rep, Target which,
                                    std::size_t guard = 10'000'000) {
    const bool mean = (which == Target::Mean);
    if (mean ? !rep.has_mean : !rep.has_cov)
        throw IncompleteEstimateError("global_opt: requested table is absent");
    const std::vector<double>& cells = mean ? rep.mean_cells : rep.cov_cells;
    const std::size_t rows = mean ? rep.p : rep.p * rep.p;
    const std::size_t nh = mean ? rep.h_mean.size() : rep.h_cov.size();
    for (std::size_t c = 0; c < cells.size(); ++c)
        if (std::isnan(cells[c]))
            throw IncompleteEstimateError("global_opt: table has failed cells");

    double combos = 1.0;
    for (std::size_t r = 0; r < rows; ++r) {
        combos *= static_cast<double>(nh);
        if (combos > static_cast<double>(guard))
            throw TooLargeError("global_opt: assignment count exceeds guard");
    }

    std::vector<std::size_t> pick(rows, 0);
    double best = std::numeric_limits<double>::infinity();
    while (true) {
        double worst = 0.0;
        for (std::size_t r = 0; r < rows; ++r) worst = std::max(worst, cells[r * nh + pick[r]]);
        best = std::min(best, worst);
        std::size_t r = 0;
        while (r < rows && ++pick[r] == nh) {
            pick[r] = 0;
            ++r;
        }
        if (r == rows) break;
    }
    return best;
}

enum class Regime { Sparse, SemiDense, UltraDense };

inline std::string regime_name(Regime r) {
    switch (r) {
        case Regime::Sparse: return "sparse";
        case Regime::SemiDense: return "semi-dense";
        case Regime::UltraDense: return "ultra-dense";
    }
    return "?";
}

// Effective-sample-size diagnostics: per-variable and per-pair average
// sampling frequencies, the gamma/nu quantities they induce at the given
// bandwidths, and a declared-band regime tag. The semi-dense band is
// [1/2, 2] times n^{1/4} (log p)^{-1/4}; when log p <= 0 the p factor is
// dropped (single-variable data still has a meaningful n^{1/4} boundary).
struct RateDiagnostics {
    std::vector<double> t_bar_mean;  // per variable
    std::vector<double> t_bar_cov;   // per pair, row-major p x p
    std::vector<double> gamma;       // per variable
    std::vector<double> nu;          // per pair
    Regime regime = Regime::Sparse;
};

inline RateDiagnostics rate_diagnostics(const FunctionalDataset& data, double h_mean,
                                        double h_cov, double p_dims) {
    const std::size_t n = data.n_subjects();
    const std::size_t p = data.n_vars();
    RateDiagnostics out;
    out.t_bar_mean.resize(p);
    out.gamma.resize(p);
    out.t_bar_cov.resize(p * p);
    out.nu.resize(p * p);

    for (std::size_t j = 0; j < p; ++j) {
        double tot = 0.0;
        for (std::size_t i = 0; i < n; ++i) tot += static_cast<double>(data.count(i, j));
        out.t_bar_mean[j] = tot / static_cast<double>(n);
        out.gamma[j] =
            static_cast<double>(n) * std::min(1.0, out.t_bar_mean[j] * h_mean);
    }
    for (std::size_t j = 0; j < p; ++j)
        for (std::size_t k = 0; k < p; ++k) {
            double tot = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                tot += static_cast<double>(pair_count(data, i, j, k));
            const double tbar2 = tot / static_cast<double>(n);
            out.t_bar_cov[j * p + k] = std::sqrt(tbar2);
            out.nu[j * p + k] = static_cast<double>(n) * std::min(1.0, tbar2 * h_cov * h_cov);
        }

    double tbar = 0.0;
    for (std::size_t j = 0; j < p; ++j) tbar += out.t_bar_mean[j];
    tbar /= static_cast<double>(p);
    const double logp = std::log(p_dims);
    double threshold = std::pow(static_cast<double>(n), 0.25);
    if (logp > 0.0) threshold *= std::pow(logp, -0.25);
    if (tbar < 0.5 * threshold)
        out.regime = Regime::Sparse;
    else if (tbar <= 2.0 * threshold)
        out.regime = Regime::SemiDense;
    else
        out.regime = Regime::UltraDense;
    return out;
}

// Rate-optimal bandwidth (unit constant) for the given regime and target.
inline double optimal_bandwidth(double n, double t_bar, double p, Regime regime, Target target) {
    if (!(n >= 2.0)) throw std::invalid_argument("optimal_bandwidth: n >= 2 required");
    const double logp = std::log(p);
    if (!(logp > 0.0)) throw std::invalid_argument("optimal_bandwidth: log p must be positive");
    switch (regime) {
        case Regime::Sparse:
            return target == Target::Mean ? std::pow(logp / n, 0.2) : std::pow(logp / n, 1.0 / 6.0);
        case Regime::SemiDense:
            return target == Target::Mean ? std::pow(logp / (n * t_bar), 0.2)
                                          : std::pow(logp / (n * t_bar * t_bar), 1.0 / 6.0);
        case Regime::UltraDense:
            return std::pow(logp / n, 0.25);
    }
    return 0.0;
}

// Least-squares slope and intercept of log y against log x.
inline std::pair<double, double> fit_rate_slope(const std::vector<double>& xs,
                                                const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 3)
        throw std::invalid_argument("fit_rate_slope: need >= 3 matched points");
    const std::size_t m = xs.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < m; ++i) {
        if (!(xs[i] > 0.0) || !(ys[i] > 0.0))
            throw NonPositiveError("fit_rate_slope: coordinates must be positive");
        const double lx = std::log(xs[i]), ly = std::log(ys[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double denom = m * sxx - sx * sx;
    const double slope = (m * sxy - sx * sy) / denom;
    const double intercept = (sy - slope * sx) / m;
    return {slope, intercept};
}

// Geometric grid of `count` bandwidths spanning [lo, hi].
inline std::vector<double> geometric_grid(double lo, double hi, std::size_t count) {
    if (!(lo > 0.0) || !(hi >= lo) || count < 1)
        throw std::invalid_argument("geometric_grid: need 0 < lo <= hi, count >= 1");
    std::vector<double> g(count);
    if (count == 1) {
        g[0] = lo;
        return g;
    }
    const double ratio = std::log(hi / lo) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i)
        g[i] = lo * std::exp(ratio * static_cast<double>(i));
    g.back() = hi;
    return g;
}

}  // namespace fdsmooth
