#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fdsmooth/dataset.hpp"
#include "fdsmooth/errors.hpp"
#include "fdsmooth/kernel.hpp"
#include "fdsmooth/local_fit.hpp"
#include "fdsmooth/threading.hpp"

namespace fdsmooth {

struct SmootherSpec {
    Kernel kernel = Kernel::Epanechnikov;
    double bandwidth = 0.1;
    WeightScheme scheme = WeightScheme::PerObservation;

    void validate() const {
        if (!(bandwidth > 0.0) || !(bandwidth <= 1.0))
            throw std::invalid_argument("bandwidth must lie in (0, 1]");
    }
};

using ScalarFn = std::function<double(double)>;

// Estimated curve on a grid. Points where the local system was singular carry
// NaN and are listed in `failures`.
struct CurveEstimate {
    std::vector<double> grid;
    std::vector<double> values;
    std::vector<std::size_t> failures;
    bool complete() const { return failures.empty(); }
};

// Estimated surface on grid_u x grid_v, row-major (u index is the row).
struct SurfaceEstimate {
    std::vector<double> grid_u;
    std::vector<double> grid_v;
    std::vector<double> values;
    std::vector<std::pair<std::size_t, std::size_t>> failures;
    double at(std::size_t r, std::size_t c) const { return values[r * grid_v.size() + c]; }
    bool complete() const { return failures.empty(); }
};

namespace detail {

// Index range [lo, hi) of observations with |u_t - u0| <= h in a sorted array.
inline std::pair<std::size_t, std::size_t> window(const std::vector<double>& u, double u0,
                                                  double h) {
    const auto lo = std::lower_bound(u.begin(), u.end(), u0 - h);
    const auto hi = std::upper_bound(lo, u.end(), u0 + h);
    return {static_cast<std::size_t>(lo - u.begin()), static_cast<std::size_t>(hi - u.begin())};
}

}  // namespace detail

// Local linear mean estimate mu_j(u0) pooled over subjects with the given
// per-subject weights. Returns nullopt when the design is degenerate at u0.
inline std::optional<double> estimate_mean_at(const FunctionalDataset& data, std::size_t j,
                                              double u0, const SmootherSpec& spec,
                                              const std::vector<double>& weights) {
    spec.validate();
    const double h = spec.bandwidth;
    LocalLinear1D acc;
    for (std::size_t i = 0; i < data.n_subjects(); ++i) {
        const double w = weights[i];
        if (w == 0.0) continue;
        const Series& s = data.series(i, j);
        const auto [lo, hi] = detail::window(s.u, u0, h);
        for (std::size_t t = lo; t < hi; ++t) {
            const double x = (s.u[t] - u0) / h;
            acc.add(x, w * kernel_eval(spec.kernel, x) / h, s.y[t]);
        }
    }
    return acc.intercept();
}

inline std::optional<double> estimate_mean_at(const FunctionalDataset& data, std::size_t j,
                                              double u0, const SmootherSpec& spec) {
    return estimate_mean_at(data, j, u0, spec, mean_weights(data, j, spec.scheme));
}

inline CurveEstimate estimate_mean_curve(const FunctionalDataset& data, std::size_t j,
                                         const std::vector<double>& grid,
                                         const SmootherSpec& spec,
                                         const std::vector<double>& weights) {
    CurveEstimate out;
    out.grid = grid;
    out.values.resize(grid.size());
    for (std::size_t r = 0; r < grid.size(); ++r) {
        const auto v = estimate_mean_at(data, j, grid[r], spec, weights);
        if (v) {
            out.values[r] = *v;
        } else {
            out.values[r] = std::numeric_limits<double>::quiet_NaN();
            out.failures.push_back(r);
        }
    }
    return out;
}

inline CurveEstimate estimate_mean_curve(const FunctionalDataset& data, std::size_t j,
                                         const std::vector<double>& grid,
                                         const SmootherSpec& spec) {
    return estimate_mean_curve(data, j, grid, spec, mean_weights(data, j, spec.scheme));
}

// Piecewise-linear interpolant through a complete curve estimate, clamped to
// the end values outside the grid range.
inline ScalarFn make_interpolant(const CurveEstimate& curve) {
    if (!curve.complete())
        throw IncompleteEstimateError("make_interpolant: curve has failed points");
    if (curve.grid.empty())
        throw IncompleteEstimateError("make_interpolant: empty curve");
    auto grid = curve.grid;
    auto values = curve.values;
    return [grid = std::move(grid), values = std::move(values)](double u) {
        if (u <= grid.front()) return values.front();
        if (u >= grid.back()) return values.back();
        const auto it = std::upper_bound(grid.begin(), grid.end(), u);
        const std::size_t r = static_cast<std::size_t>(it - grid.begin());
        const double t = (u - grid[r - 1]) / (grid[r] - grid[r - 1]);
        return values[r - 1] + t * (values[r] - values[r - 1]);
    };
}

// One raw covariance point: residual product at a time pair.
struct RawCov {
    double u, v, value;
};

// Raw covariances contributed by one subject for variables (j, k):
// theta = {Y_j(u) - mu_j(u)} * {Y_k(v) - mu_k(v)} over all ordered time pairs,
// excluding same-time pairs when j == k (those carry the noise variance).
inline std::vector<RawCov> raw_covariances(const FunctionalDataset& data, std::size_t i,
                                           std::size_t j, std::size_t k, const ScalarFn& mean_j,
                                           const ScalarFn& mean_k) {
    const Series& sj = data.series(i, j);
    const Series& sk = data.series(i, k);
    std::vector<RawCov> out;
    if (sj.empty() || sk.empty()) return out;
    std::vector<double> rj(sj.size()), rk(sk.size());
    for (std::size_t t = 0; t < sj.size(); ++t) rj[t] = sj.y[t] - mean_j(sj.u[t]);
    for (std::size_t s = 0; s < sk.size(); ++s) rk[s] = sk.y[s] - mean_k(sk.u[s]);
    out.reserve(sj.size() * sk.size());
    for (std::size_t t = 0; t < sj.size(); ++t)
        for (std::size_t s = 0; s < sk.size(); ++s) {
            if (j == k && t == s) continue;
            out.push_back({sj.u[t], sk.u[s], rj[t] * rk[s]});
        }
    return out;
}

// Local plane fit at (u0, v0) over explicit scattered points with per-point
// weights; building block shared by the covariance estimators.
inline std::optional<double> local_plane_smooth_at(
    const std::vector<double>& us, const std::vector<double>& vs,
    const std::vector<double>& vals, const std::vector<double>& ws, double u0, double v0,
    Kernel kernel, double h) {
    LocalPlane acc;
    for (std::size_t q = 0; q < us.size(); ++q) {
        const double x = (us[q] - u0) / h;
        const double y = (vs[q] - v0) / h;
        const double c =
            ws[q] * kernel_eval(kernel, x) * kernel_eval(kernel, y) / (h * h);
        if (c == 0.0) continue;
        acc.add(x, y, c, vals[q]);
    }
    return acc.intercept();
}

namespace detail {

// Per-subject residual series for one variable.
inline std::vector<std::vector<double>> residuals(const FunctionalDataset& data, std::size_t j,
                                                  const ScalarFn& mean_j) {
    std::vector<std::vector<double>> res(data.n_subjects());
    for (std::size_t i = 0; i < data.n_subjects(); ++i) {
        const Series& s = data.series(i, j);
        res[i].resize(s.size());
        for (std::size_t t = 0; t < s.size(); ++t) res[i][t] = s.y[t] - mean_j(s.u[t]);
    }
    return res;
}

inline std::optional<double> cov_point(const FunctionalDataset& data, std::size_t j,
                                       std::size_t k, double u0, double v0,
                                       const SmootherSpec& spec,
                                       const std::vector<std::vector<double>>& res_j,
                                       const std::vector<std::vector<double>>& res_k,
                                       const std::vector<double>& weights) {
    const double h = spec.bandwidth;
    LocalPlane acc;
    for (std::size_t i = 0; i < data.n_subjects(); ++i) {
        const double w = weights[i];
        if (w == 0.0) continue;
        const Series& sj = data.series(i, j);
        const Series& sk = data.series(i, k);
        if (sj.empty() || sk.empty()) continue;
        const auto [jlo, jhi] = window(sj.u, u0, h);
        const auto [klo, khi] = window(sk.u, v0, h);
        for (std::size_t t = jlo; t < jhi; ++t) {
            const double x = (sj.u[t] - u0) / h;
            const double cx = kernel_eval(spec.kernel, x) / h;
            if (cx == 0.0) continue;
            for (std::size_t s = klo; s < khi; ++s) {
                if (j == k && t == s) continue;
                const double y = (sk.u[s] - v0) / h;
                const double c = w * cx * kernel_eval(spec.kernel, y) / h;
                if (c == 0.0) continue;
                acc.add(x, y, c, res_j[i][t] * res_k[i][s]);
            }
        }
    }
    return acc.intercept();
}

}  // namespace detail

// Local linear covariance estimate Sigma_jk(u0, v0) from raw covariances of
// mean-centred data. Same-time products are excluded on diagonal blocks.
inline std::optional<double> estimate_cov_at(const FunctionalDataset& data, std::size_t j,
                                             std::size_t k, double u0, double v0,
                                             const SmootherSpec& spec, const ScalarFn& mean_j,
                                             const ScalarFn& mean_k,
                                             const std::vector<double>& weights) {
    spec.validate();
    const auto res_j = detail::residuals(data, j, mean_j);
    const auto res_k = (j == k) ? res_j : detail::residuals(data, k, mean_k);
    return detail::cov_point(data, j, k, u0, v0, spec, res_j, res_k, weights);
}

inline std::optional<double> estimate_cov_at(const FunctionalDataset& data, std::size_t j,
                                             std::size_t k, double u0, double v0,
                                             const SmootherSpec& spec, const ScalarFn& mean_j,
                                             const ScalarFn& mean_k) {
    return estimate_cov_at(data, j, k, u0, v0, spec, mean_j, mean_k,
                           cov_weights(data, j, k, spec.scheme));
}

// Covariance surface on grid_u x grid_v. Diagonal blocks over a shared grid
// are evaluated on the upper triangle and mirrored, so Sigma_jj(u,v) equals
// Sigma_jj(v,u) exactly; the two orientations agree analytically anyway.
inline SurfaceEstimate estimate_cov_surface(const FunctionalDataset& data, std::size_t j,
                                            std::size_t k, const std::vector<double>& grid_u,
                                            const std::vector<double>& grid_v,
                                            const SmootherSpec& spec, const ScalarFn& mean_j,
                                            const ScalarFn& mean_k,
                                            const std::vector<double>& weights,
                                            int threads = 1) {
    spec.validate();
    const auto res_j = detail::residuals(data, j, mean_j);
    const auto res_k = (j == k) ? res_j : detail::residuals(data, k, mean_k);

    SurfaceEstimate out;
    out.grid_u = grid_u;
    out.grid_v = grid_v;
    const std::size_t ru = grid_u.size(), rv = grid_v.size();
    out.values.assign(ru * rv, std::numeric_limits<double>::quiet_NaN());
    const bool mirror = (j == k) && (grid_u == grid_v);

    std::vector<unsigned char> failed(ru * rv, 0);
    parallel_for(ru, threads, [&](std::size_t row_begin, std::size_t row_end) {
        for (std::size_t r = row_begin; r < row_end; ++r) {
            const std::size_t c0 = mirror ? r : 0;
            for (std::size_t c = c0; c < rv; ++c) {
                const auto v = detail::cov_point(data, j, k, grid_u[r], grid_v[c], spec, res_j,
                                                 res_k, weights);
                if (v)
                    out.values[r * rv + c] = *v;
                else
                    failed[r * rv + c] = 1;
            }
        }
    });
    if (mirror) {
        for (std::size_t r = 0; r < ru; ++r)
            for (std::size_t c = r + 1; c < rv; ++c) {
                out.values[c * rv + r] = out.values[r * rv + c];
                failed[c * rv + r] = failed[r * rv + c];
            }
    }
    for (std::size_t r = 0; r < ru; ++r)
        for (std::size_t c = 0; c < rv; ++c)
            if (failed[r * rv + c]) out.failures.emplace_back(r, c);
    return out;
}

inline SurfaceEstimate estimate_cov_surface(const FunctionalDataset& data, std::size_t j,
                                            std::size_t k, const std::vector<double>& grid_u,
                                            const std::vector<double>& grid_v,
                                            const SmootherSpec& spec, const ScalarFn& mean_j,
                                            const ScalarFn& mean_k, int threads = 1) {
    return estimate_cov_surface(data, j, k, grid_u, grid_v, spec, mean_j, mean_k,
                                cov_weights(data, j, k, spec.scheme), threads);
}

// R equispaced points covering [0, 1].
inline std::vector<double> unit_grid(std::size_t r) {
    std::vector<double> g(r);
    if (r == 1) {
        g[0] = 0.0;
        return g;
    }
    for (std::size_t i = 0; i < r; ++i)
        g[i] = static_cast<double>(i) / static_cast<double>(r - 1);
    return g;
}

}  // namespace fdsmooth
