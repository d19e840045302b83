#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "fdsmooth/dataset.hpp"
#include "fdsmooth/errors.hpp"
#include "fdsmooth/local_fit.hpp"
#include "fdsmooth/smoothing.hpp"
#include "fdsmooth/threading.hpp"

namespace fdsmooth {

namespace detail {

// Linear-binning split of a time in [0,1] over R equispaced nodes: fraction
// (1 - delta) goes to node `left`, delta to `left + 1`.
struct BinSplit {
    std::size_t left;
    double delta;
};

inline BinSplit bin_split(double u, std::size_t R) {
    double pos = u * static_cast<double>(R - 1);
    if (pos < 0.0) pos = 0.0;
    const double top = static_cast<double>(R - 1);
    if (pos >= top) return {R - 1, 0.0};
    const double fl = std::floor(pos);
    return {static_cast<std::size_t>(fl), pos - fl};
}

inline void check_binned_bandwidth(double h, std::size_t R) {
    const double hmin = 2.0 / static_cast<double>(R - 1);
    if (h < hmin)
        throw BandwidthTooSmallError("binned path needs bandwidth >= 2/(R-1) = " +
                                     std::to_string(hmin));
}

// Bin indices whose center lies within [u0 - h, u0 + h].
inline std::pair<std::size_t, std::size_t> bin_window(double u0, double h, std::size_t R) {
    const double span = static_cast<double>(R - 1);
    const double lo_f = std::ceil((u0 - h) * span);
    const double hi_f = std::floor((u0 + h) * span);
    const std::size_t rlo = lo_f <= 0.0 ? 0 : static_cast<std::size_t>(lo_f);
    const std::size_t rhi = hi_f >= span ? R : static_cast<std::size_t>(hi_f) + 1;
    return {rlo, rhi};
}

}  // namespace detail

// Per-subject linearly binned observations of one variable: mass[i*R + r] is
// the accumulated bin weight, resp[i*R + r] the weight-times-value sum (the
// value is Y, or Y - center(U) when a centering curve is supplied).
struct BinnedMarginal {
    std::size_t bins = 0;
    std::size_t n_subjects = 0;
    std::vector<double> centers;
    std::vector<double> mass;
    std::vector<double> resp;

    const double* mass_row(std::size_t i) const { return mass.data() + i * bins; }
    const double* resp_row(std::size_t i) const { return resp.data() + i * bins; }
};

inline BinnedMarginal bin_marginal(const FunctionalDataset& data, std::size_t j, std::size_t R,
                                   const ScalarFn& center = nullptr) {
    if (R < 2) throw std::invalid_argument("bin_marginal: need at least 2 bins");
    BinnedMarginal out;
    out.bins = R;
    out.n_subjects = data.n_subjects();
    out.centers = unit_grid(R);
    out.mass.assign(out.n_subjects * R, 0.0);
    out.resp.assign(out.n_subjects * R, 0.0);
    for (std::size_t i = 0; i < out.n_subjects; ++i) {
        const Series& s = data.series(i, j);
        double* m = out.mass.data() + i * R;
        double* q = out.resp.data() + i * R;
        for (std::size_t t = 0; t < s.size(); ++t) {
            const auto b = detail::bin_split(s.u[t], R);
            const double y = center ? s.y[t] - center(s.u[t]) : s.y[t];
            m[b.left] += 1.0 - b.delta;
            q[b.left] += (1.0 - b.delta) * y;
            if (b.delta != 0.0) {
                m[b.left + 1] += b.delta;
                q[b.left + 1] += b.delta * y;
            }
        }
    }
    return out;
}

// Binned residuals of one variable prepared for covariance work: the centered
// marginal plus the same-point band products needed to remove t = s terms on
// diagonal blocks. An observation split over bins (l, l+1) contributes its
// self-product only at (l,l), (l,l+1), (l+1,l+1); the band is symmetric, so
// the main diagonal d0 and upper diagonal d1 capture it exactly.
struct BinnedVariable {
    BinnedMarginal marg;
    std::vector<double> d0_mass, d1_mass;  // per subject: sum_t lambda_t[r] lambda_t[r']
    std::vector<double> d0_resp, d1_resp;  // same with residual-weighted vectors
};

inline BinnedVariable bin_variable(const FunctionalDataset& data, std::size_t j, std::size_t R,
                                   const ScalarFn& center) {
    BinnedVariable out;
    out.marg = bin_marginal(data, j, R, center);
    const std::size_t n = out.marg.n_subjects;
    out.d0_mass.assign(n * R, 0.0);
    out.d1_mass.assign(n * R, 0.0);
    out.d0_resp.assign(n * R, 0.0);
    out.d1_resp.assign(n * R, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const Series& s = data.series(i, j);
        double* d0m = out.d0_mass.data() + i * R;
        double* d1m = out.d1_mass.data() + i * R;
        double* d0q = out.d0_resp.data() + i * R;
        double* d1q = out.d1_resp.data() + i * R;
        for (std::size_t t = 0; t < s.size(); ++t) {
            const auto b = detail::bin_split(s.u[t], R);
            const double e = center ? s.y[t] - center(s.u[t]) : s.y[t];
            const double wl = 1.0 - b.delta, wr = b.delta;
            d0m[b.left] += wl * wl;
            d0q[b.left] += (wl * e) * (wl * e);
            if (wr != 0.0) {
                d0m[b.left + 1] += wr * wr;
                d0q[b.left + 1] += (wr * e) * (wr * e);
                d1m[b.left] += wl * wr;
                d1q[b.left] += (wl * e) * (wr * e);
            }
        }
    }
    return out;
}

// Binned raw-covariance pairs for a variable pair (j, k). Outer products of
// the two marginal vectors reconstruct full pair sums; for j == k the
// same-point products are subtracted via sum_{t != s} = (sum)(sum) - sum_{t=s}.
struct BinnedPairs {
    std::size_t bins = 0;
    std::size_t n_subjects = 0;
    bool marginal = false;  // j == k
    std::vector<double> centers;
    BinnedVariable left;
    BinnedVariable right;  // unused when marginal

    const BinnedVariable& right_side() const { return marginal ? left : right; }

    // Pair mass contributed by subject i, reconstructed from the binned
    // representation; equals T_ij (T_ik - 1{j=k}).
    double pair_mass(std::size_t i) const {
        const std::size_t R = bins;
        const double* a = left.marg.mass_row(i);
        double sa = 0.0;
        for (std::size_t r = 0; r < R; ++r) sa += a[r];
        if (!marginal) {
            const double* a2 = right.marg.mass_row(i);
            double s2 = 0.0;
            for (std::size_t r = 0; r < R; ++r) s2 += a2[r];
            return sa * s2;
        }
        double corr = 0.0;
        for (std::size_t r = 0; r < R; ++r) corr += left.d0_mass[i * R + r];
        for (std::size_t r = 0; r + 1 < R; ++r) corr += 2.0 * left.d1_mass[i * R + r];
        return sa * sa - corr;
    }
};

inline BinnedPairs bin_pairs(const FunctionalDataset& data, std::size_t j, std::size_t k,
                             std::size_t R, const ScalarFn& mean_j, const ScalarFn& mean_k) {
    BinnedPairs out;
    out.bins = R;
    out.n_subjects = data.n_subjects();
    out.marginal = (j == k);
    out.left = bin_variable(data, j, R, mean_j);
    out.centers = out.left.marg.centers;
    if (!out.marginal) out.right = bin_variable(data, k, R, mean_k);
    return out;
}

// Subject-pooled pair moments with the scheme weights folded in and, for
// diagonal blocks, the same-point products already subtracted. These R x R
// arrays are all the covariance smoother needs, for any bandwidth, so one
// pooling pass serves a whole bandwidth sweep.
struct PooledPairs {
    std::size_t bins = 0;
    std::vector<double> centers;
    std::vector<double> mass;  // R x R, row-major: sum_i w_i a_i[r] a'_i[r'] - correction
    std::vector<double> resp;  // R x R analogue with residual vectors
};

inline PooledPairs pool_pairs(const BinnedVariable& va, const BinnedVariable& vb, bool marginal,
                              const std::vector<double>& weights) {
    const std::size_t R = va.marg.bins;
    PooledPairs out;
    out.bins = R;
    out.centers = va.marg.centers;
    out.mass.assign(R * R, 0.0);
    out.resp.assign(R * R, 0.0);

    std::vector<std::size_t> nza, nzb;
    for (std::size_t i = 0; i < va.marg.n_subjects; ++i) {
        const double w = weights[i];
        if (w == 0.0) continue;
        const double* a = va.marg.mass_row(i);
        const double* b = va.marg.resp_row(i);
        const double* a2 = vb.marg.mass_row(i);
        const double* b2 = vb.marg.resp_row(i);
        // A subject touches at most 2 T bins; iterate the nonzero support only.
        nza.clear();
        nzb.clear();
        for (std::size_t r = 0; r < R; ++r)
            if (a[r] != 0.0) nza.push_back(r);
        for (std::size_t r = 0; r < R; ++r)
            if (a2[r] != 0.0) nzb.push_back(r);
        for (std::size_t r : nza) {
            const double wa = w * a[r];
            const double wb = w * b[r];
            double* mrow = out.mass.data() + r * R;
            double* qrow = out.resp.data() + r * R;
            for (std::size_t c : nzb) {
                mrow[c] += wa * a2[c];
                qrow[c] += wb * b2[c];
            }
        }
        if (marginal) {
            const double* d0m = va.d0_mass.data() + i * R;
            const double* d1m = va.d1_mass.data() + i * R;
            const double* d0q = va.d0_resp.data() + i * R;
            const double* d1q = va.d1_resp.data() + i * R;
            for (std::size_t r : nza) {
                out.mass[r * R + r] -= w * d0m[r];
                out.resp[r * R + r] -= w * d0q[r];
                if (r + 1 < R && d1m[r] != 0.0) {
                    out.mass[r * R + r + 1] -= w * d1m[r];
                    out.mass[(r + 1) * R + r] -= w * d1m[r];
                    out.resp[r * R + r + 1] -= w * d1q[r];
                    out.resp[(r + 1) * R + r] -= w * d1q[r];
                }
            }
        }
    }
    return out;
}

inline PooledPairs pool_pairs(const BinnedPairs& binned, const std::vector<double>& weights) {
    return pool_pairs(binned.left, binned.right_side(), binned.marginal, weights);
}

// Local linear mean curve from binned data. Kernel values are computed once
// per (grid point, window bin); the counter, when supplied, tallies them.
inline CurveEstimate estimate_mean_binned(const BinnedMarginal& binned,
                                          const std::vector<double>& weights,
                                          const std::vector<double>& grid,
                                          const SmootherSpec& spec,
                                          std::size_t* kernel_evals = nullptr) {
    spec.validate();
    const std::size_t R = binned.bins;
    detail::check_binned_bandwidth(spec.bandwidth, R);
    const double h = spec.bandwidth;

    // Pool subjects once: the smoother only sees weighted bin totals.
    std::vector<double> gm(R, 0.0), gq(R, 0.0);
    for (std::size_t i = 0; i < binned.n_subjects; ++i) {
        const double w = weights[i];
        if (w == 0.0) continue;
        const double* m = binned.mass_row(i);
        const double* q = binned.resp_row(i);
        for (std::size_t r = 0; r < R; ++r) {
            gm[r] += w * m[r];
            gq[r] += w * q[r];
        }
    }

    CurveEstimate out;
    out.grid = grid;
    out.values.resize(grid.size());
    std::size_t kcount = 0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        const double u0 = grid[g];
        const auto [rlo, rhi] = detail::bin_window(u0, h, R);
        LocalLinear1D acc;
        for (std::size_t r = rlo; r < rhi; ++r) {
            const double x = (binned.centers[r] - u0) / h;
            const double kv = kernel_eval(spec.kernel, x) / h;
            ++kcount;
            const double c = kv * gm[r];
            acc.add_moments(c, c * x, c * x * x, kv * gq[r], kv * gq[r] * x);
        }
        const auto v = acc.intercept();
        if (v) {
            out.values[g] = *v;
        } else {
            out.values[g] = std::numeric_limits<double>::quiet_NaN();
            out.failures.push_back(g);
        }
    }
    if (kernel_evals) *kernel_evals += kcount;
    return out;
}

// Covariance surface from pooled pair moments. The product kernel and basis
// {1, x, y} separate, so each grid row costs three x-moment contractions of
// the pooled arrays plus cheap per-column y-moment sums.
inline SurfaceEstimate estimate_cov_binned(const PooledPairs& pooled,
                                           const std::vector<double>& grid_u,
                                           const std::vector<double>& grid_v,
                                           const SmootherSpec& spec, bool mirror,
                                           int threads = 1,
                                           std::size_t* kernel_evals = nullptr) {
    spec.validate();
    const std::size_t R = pooled.bins;
    detail::check_binned_bandwidth(spec.bandwidth, R);
    const double h = spec.bandwidth;

    SurfaceEstimate out;
    out.grid_u = grid_u;
    out.grid_v = grid_v;
    const std::size_t ru = grid_u.size(), rv = grid_v.size();
    out.values.assign(ru * rv, std::numeric_limits<double>::quiet_NaN());
    std::vector<unsigned char> failed(ru * rv, 0);
    mirror = mirror && (grid_u == grid_v);

    std::vector<std::size_t> kcounts(ru, 0);
    parallel_for(ru, threads, [&](std::size_t row_begin, std::size_t row_end) {
        // Stage-1 buffers: x-moment contractions against full pooled rows.
        std::vector<double> p0(R), p1(R), p2(R), q0(R), q1(R);
        for (std::size_t g = row_begin; g < row_end; ++g) {
            const double u0 = grid_u[g];
            const auto [rlo, rhi] = detail::bin_window(u0, h, R);
            std::fill(p0.begin(), p0.end(), 0.0);
            std::fill(p1.begin(), p1.end(), 0.0);
            std::fill(p2.begin(), p2.end(), 0.0);
            std::fill(q0.begin(), q0.end(), 0.0);
            std::fill(q1.begin(), q1.end(), 0.0);
            for (std::size_t r = rlo; r < rhi; ++r) {
                const double x = (pooled.centers[r] - u0) / h;
                const double kx = kernel_eval(spec.kernel, x) / h;
                ++kcounts[g];
                if (kx == 0.0) continue;
                const double k1 = kx * x, k2 = k1 * x;
                const double* mrow = pooled.mass.data() + r * R;
                const double* qrow = pooled.resp.data() + r * R;
                for (std::size_t c = 0; c < R; ++c) {
                    const double mv = mrow[c];
                    p0[c] += kx * mv;
                    p1[c] += k1 * mv;
                    p2[c] += k2 * mv;
                    const double qv = qrow[c];
                    q0[c] += kx * qv;
                    q1[c] += k1 * qv;
                }
            }
            const std::size_t c0 = mirror ? g : 0;
            for (std::size_t gv = c0; gv < rv; ++gv) {
                const double v0 = grid_v[gv];
                const auto [clo, chi] = detail::bin_window(v0, h, R);
                LocalPlane acc;
                for (std::size_t c = clo; c < chi; ++c) {
                    const double y = (pooled.centers[c] - v0) / h;
                    const double ky = kernel_eval(spec.kernel, y) / h;
                    ++kcounts[g];
                    if (ky == 0.0) continue;
                    const double ky1 = ky * y, ky2 = ky1 * y;
                    acc.add_moments(ky * p0[c], ky * p1[c], ky1 * p0[c], ky * p2[c],
                                    ky1 * p1[c], ky2 * p0[c], ky * q0[c], ky * q1[c],
                                    ky1 * q0[c]);
                }
                const auto val = acc.intercept();
                if (val)
                    out.values[g * rv + gv] = *val;
                else
                    failed[g * rv + gv] = 1;
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
    if (kernel_evals)
        for (std::size_t g = 0; g < ru; ++g) *kernel_evals += kcounts[g];
    return out;
}

inline SurfaceEstimate estimate_cov_binned(const BinnedPairs& binned,
                                           const std::vector<double>& weights,
                                           const std::vector<double>& grid_u,
                                           const std::vector<double>& grid_v,
                                           const SmootherSpec& spec, int threads = 1,
                                           std::size_t* kernel_evals = nullptr) {
    const PooledPairs pooled = pool_pairs(binned, weights);
    return estimate_cov_binned(pooled, grid_u, grid_v, spec, binned.marginal, threads,
                               kernel_evals);
}

}  // namespace fdsmooth
