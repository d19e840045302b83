#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <vector>

#include "fdsmooth/errors.hpp"

namespace fdsmooth {

// Observation times and values for one (subject, variable) cell, sorted by time.
struct Series {
    std::vector<double> u;
    std::vector<double> y;
    std::size_t size() const { return u.size(); }
    bool empty() const { return u.empty(); }
};

// Discretely observed curves for n subjects and p variables. Cells may be
// ragged (any size, including empty). Immutable once built.
class FunctionalDataset {
  public:
    FunctionalDataset(std::size_t n_subjects, std::size_t n_vars,
                      std::vector<Series> cells)
        : n_(n_subjects), p_(n_vars), cells_(std::move(cells)) {
        if (cells_.size() != n_ * p_)
            throw ParseError("dataset: cell count does not match n_subjects * n_vars");
    }

    std::size_t n_subjects() const { return n_; }
    std::size_t n_vars() const { return p_; }

    const Series& series(std::size_t subject, std::size_t var) const {
        return cells_[subject * p_ + var];
    }
    std::size_t count(std::size_t subject, std::size_t var) const {
        return series(subject, var).size();
    }

    std::size_t total_count(std::size_t var) const {
        std::size_t s = 0;
        for (std::size_t i = 0; i < n_; ++i) s += count(i, var);
        return s;
    }

  private:
    std::size_t n_, p_;
    std::vector<Series> cells_;
};

// Incremental construction; build() sorts every cell by observation time.
class DatasetBuilder {
  public:
    DatasetBuilder(std::size_t n_subjects, std::size_t n_vars)
        : n_(n_subjects), p_(n_vars), cells_(n_subjects * n_vars) {}

    void add(std::size_t subject, std::size_t var, double u, double y) {
        if (subject >= n_ || var >= p_)
            throw ParseError("dataset: subject or variable index out of range");
        Series& s = cells_[subject * p_ + var];
        s.u.push_back(u);
        s.y.push_back(y);
    }

    FunctionalDataset build() && {
        for (Series& s : cells_) sort_cell(s);
        return FunctionalDataset(n_, p_, std::move(cells_));
    }

  private:
    static void sort_cell(Series& s) {
        const std::size_t m = s.size();
        if (m < 2) return;
        std::vector<std::size_t> idx(m);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::stable_sort(idx.begin(), idx.end(),
                         [&](std::size_t a, std::size_t b) { return s.u[a] < s.u[b]; });
        Series out;
        out.u.reserve(m);
        out.y.reserve(m);
        for (std::size_t t : idx) {
            out.u.push_back(s.u[t]);
            out.y.push_back(s.y[t]);
        }
        s = std::move(out);
    }

    std::size_t n_, p_;
    std::vector<Series> cells_;
};

enum class WeightScheme { PerObservation, PerSubject };

// Per-subject weight v_ij attached to each observation of variable j in the
// mean objective. Both schemes satisfy sum_i T_ij * v_ij = 1; subjects with
// no observations get weight 0 and do not count toward the per-subject share.
inline std::vector<double> mean_weights(const FunctionalDataset& data, std::size_t j,
                                        WeightScheme scheme) {
    const std::size_t n = data.n_subjects();
    std::vector<double> v(n, 0.0);
    if (scheme == WeightScheme::PerObservation) {
        const std::size_t total = data.total_count(j);
        if (total == 0) throw AllEmptyError("mean_weights: variable has no observations");
        const double w = 1.0 / static_cast<double>(total);
        for (std::size_t i = 0; i < n; ++i)
            if (data.count(i, j) > 0) v[i] = w;
    } else {
        std::size_t active = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (data.count(i, j) > 0) ++active;
        if (active == 0) throw AllEmptyError("mean_weights: variable has no observations");
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t t = data.count(i, j);
            if (t > 0) v[i] = 1.0 / (static_cast<double>(active) * static_cast<double>(t));
        }
    }
    return v;
}

// Number of raw covariance pairs subject i contributes for variables (j, k):
// T_ij * T_ik off the diagonal, T_ij * (T_ij - 1) on it.
inline std::size_t pair_count(const FunctionalDataset& data, std::size_t i, std::size_t j,
                              std::size_t k) {
    const std::size_t tj = data.count(i, j);
    const std::size_t tk = data.count(i, k);
    return (j == k) ? tj * (tk - (tk > 0 ? 1 : 0)) : tj * tk;
}

// Per-subject weight w_ijk attached to each raw covariance pair of (j, k).
// Both schemes satisfy sum_i N_ijk * w_ijk = 1 where N_ijk = pair_count.
inline std::vector<double> cov_weights(const FunctionalDataset& data, std::size_t j,
                                       std::size_t k, WeightScheme scheme) {
    const std::size_t n = data.n_subjects();
    std::vector<double> w(n, 0.0);
    if (scheme == WeightScheme::PerObservation) {
        std::size_t total = 0;
        for (std::size_t i = 0; i < n; ++i) total += pair_count(data, i, j, k);
        if (total == 0) throw NoPairsError("cov_weights: variable pair has no pairs");
        const double ww = 1.0 / static_cast<double>(total);
        for (std::size_t i = 0; i < n; ++i)
            if (pair_count(data, i, j, k) > 0) w[i] = ww;
    } else {
        std::size_t active = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (pair_count(data, i, j, k) > 0) ++active;
        if (active == 0) throw NoPairsError("cov_weights: variable pair has no pairs");
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t c = pair_count(data, i, j, k);
            if (c > 0) w[i] = 1.0 / (static_cast<double>(active) * static_cast<double>(c));
        }
    }
    return w;
}

}  // namespace fdsmooth
