#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "fdsmooth/dataset.hpp"

namespace fdsmooth {

// True mean curve used by the synthetic process.
inline double true_mean(double u) {
    return 1.5 * std::sin(3.0 * std::numbers::pi * (u + 0.5)) + 2.0 * u * u * u;
}

// Orthonormal Fourier basis of the process scores.
inline std::array<double, 4> basis_eval(double u) {
    const double s2 = std::numbers::sqrt2;
    const double a = 2.0 * std::numbers::pi * u;
    return {s2 * std::cos(a), s2 * std::sin(a), s2 * std::cos(2.0 * a), s2 * std::sin(2.0 * a)};
}

inline constexpr std::array<double, 4> score_variances() {
    return {1.0 / 4.0, 1.0 / 9.0, 1.0 / 16.0, 1.0 / 25.0};
}

// Cross-covariance surface: Sigma_jk(u,v) = rho^|j-k| sum_m d_m phi_m(u) phi_m(v).
inline double true_cov(std::size_t j, std::size_t k, double u, double v, double rho) {
    const auto pu = basis_eval(u);
    const auto pv = basis_eval(v);
    const auto d = score_variances();
    double s = 0.0;
    for (std::size_t m = 0; m < 4; ++m) s += d[m] * pu[m] * pv[m];
    const std::size_t lag = j > k ? j - k : k - j;
    return s * std::pow(rho, static_cast<double>(lag));
}

struct GroundTruth {
    double rho = 0.0;
    double mean(double u) const { return true_mean(u); }
    double cov(std::size_t j, std::size_t k, double u, double v) const {
        return true_cov(j, k, u, v, rho);
    }
};

struct SimulationConfig {
    std::size_t n = 100;
    std::size_t p = 1;
    std::size_t T = 5;
    double rho = 0.5;
    double noise_sd = 0.5;
    std::uint64_t seed = 1;
    bool shared_times = false;  // one time set per subject, reused across variables
    bool zero_scores = false;   // force theta = 0 (degenerate process, for checks)

    void validate() const {
        if (n < 1 || p < 1 || T < 1)
            throw std::invalid_argument("simulation: n, p, T must be positive");
        if (!(std::fabs(rho) < 1.0)) throw std::invalid_argument("simulation: |rho| < 1 required");
        if (!(noise_sd >= 0.0)) throw std::invalid_argument("simulation: noise_sd must be >= 0");
    }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Independent substream key per (seed, subject, role) so generation order and
// threading cannot change the draws.
enum class StreamRole : std::uint64_t { Coefficients = 1, Times = 2, Noise = 3 };

inline std::mt19937_64 subject_stream(std::uint64_t seed, std::uint64_t subject,
                                      StreamRole role) {
    std::uint64_t s = splitmix64(seed ^ 0x6a09e667f3bcc909ULL);
    s = splitmix64(s ^ subject);
    s = splitmix64(s ^ static_cast<std::uint64_t>(role));
    return std::mt19937_64(s);
}

}  // namespace detail

struct SimulationOutput {
    FunctionalDataset data;
    GroundTruth truth;
    // theta[ (i*p + j)*4 + m ]: score of basis component m for (subject, variable).
    std::vector<double> coefficients;
};

// Draws the synthetic dataset: scores theta_{ij} with cov rho^|j-k| diag(d)
// via a per-component AR(1) recursion across variables, uniform sampling
// times, and additive Gaussian noise on the observed values.
inline SimulationOutput generate_dataset(const SimulationConfig& cfg) {
    cfg.validate();
    const std::size_t n = cfg.n, p = cfg.p, T = cfg.T;
    const auto d = score_variances();
    const double ar_noise = std::sqrt(1.0 - cfg.rho * cfg.rho);

    std::vector<double> theta(n * p * 4, 0.0);
    DatasetBuilder builder(n, p);
    std::vector<double> shared_u(T);

    for (std::size_t i = 0; i < n; ++i) {
        if (!cfg.zero_scores) {
            auto eng = detail::subject_stream(cfg.seed, i, detail::StreamRole::Coefficients);
            std::normal_distribution<double> stdnorm(0.0, 1.0);
            for (std::size_t m = 0; m < 4; ++m) {
                double z = stdnorm(eng);
                theta[(i * p + 0) * 4 + m] = std::sqrt(d[m]) * z;
                for (std::size_t j = 1; j < p; ++j) {
                    z = cfg.rho * z + ar_noise * stdnorm(eng);
                    theta[(i * p + j) * 4 + m] = std::sqrt(d[m]) * z;
                }
            }
        }

        auto time_eng = detail::subject_stream(cfg.seed, i, detail::StreamRole::Times);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        auto noise_eng = detail::subject_stream(cfg.seed, i, detail::StreamRole::Noise);
        std::normal_distribution<double> stdnorm(0.0, 1.0);

        if (cfg.shared_times)
            for (std::size_t t = 0; t < T; ++t) shared_u[t] = unif(time_eng);

        for (std::size_t j = 0; j < p; ++j) {
            const double* th = theta.data() + (i * p + j) * 4;
            for (std::size_t t = 0; t < T; ++t) {
                const double u = cfg.shared_times ? shared_u[t] : unif(time_eng);
                const auto phi = basis_eval(u);
                double x = true_mean(u);
                for (std::size_t m = 0; m < 4; ++m) x += phi[m] * th[m];
                const double y = x + cfg.noise_sd * stdnorm(noise_eng);
                builder.add(i, j, u, y);
            }
        }
    }

    return {std::move(builder).build(), GroundTruth{cfg.rho}, std::move(theta)};
}

}  // namespace fdsmooth
