#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "fdsmooth/evaluation.hpp"
#include "fdsmooth/simulation.hpp"

using namespace fdsmooth;

namespace {

CurveEstimate curve_from(const std::vector<double>& grid,
                         const std::function<double(double)>& f) {
    CurveEstimate est;
    est.grid = grid;
    for (double u : grid) est.values.push_back(f(u));
    return est;
}

SurfaceEstimate surface_from(const std::vector<double>& grid,
                             const std::function<double(double, double)>& f) {
    SurfaceEstimate est;
    est.grid_u = grid;
    est.grid_v = grid;
    for (double u : grid)
        for (double v : grid) est.values.push_back(f(u, v));
    return est;
}

MiseReport mean_table(const std::vector<double>& h,
                      const std::vector<std::vector<double>>& cells) {
    MiseReport rep;
    rep.p = cells.size();
    rep.h_mean = h;
    rep.has_mean = true;
    for (const auto& row : cells)
        rep.mean_cells.insert(rep.mean_cells.end(), row.begin(), row.end());
    recompute_minima(rep);
    return rep;
}

}  // namespace

TEST_CASE("curve MISE matches analytic integrals") {
    const auto zero = [](double) { return 0.0; };
    const auto grid = unit_grid(1001);

    CHECK(mise_mean(curve_from(grid, zero), zero) == 0.0);
    CHECK(mise_mean(curve_from(grid, [](double) { return 1.0; }), zero) ==
          Catch::Approx(1.0).margin(1e-12));
    CHECK(mise_mean(curve_from(grid, [](double u) { return u; }), zero) ==
          Catch::Approx(1.0 / 3.0).margin(1e-5));
}

TEST_CASE("surface MISE matches analytic double integrals") {
    const auto zero = [](double, double) { return 0.0; };
    const auto grid = unit_grid(201);

    CHECK(mise_cov(surface_from(grid, zero), zero) == 0.0);
    CHECK(mise_cov(surface_from(grid, [](double, double) { return 1.0; }), zero) ==
          Catch::Approx(1.0).margin(1e-12));
    CHECK(mise_cov(surface_from(grid, [](double u, double v) { return u * v; }), zero) ==
          Catch::Approx(1.0 / 9.0).margin(1e-4));
}

TEST_CASE("incomplete estimates cannot be scored") {
    auto est = curve_from(unit_grid(11), [](double u) { return u; });
    est.failures.push_back(3);
    CHECK_THROWS_AS(mise_mean(est, [](double) { return 0.0; }), IncompleteEstimateError);

    auto surf = surface_from(unit_grid(5), [](double u, double v) { return u + v; });
    surf.failures.emplace_back(1, 2);
    CHECK_THROWS_AS(mise_cov(surf, [](double, double) { return 0.0; }),
                    IncompleteEstimateError);
}

TEST_CASE("aggregates follow the hand-evaluated toy table") {
    const auto rep = mean_table({0.1, 0.2}, {{1.0, 2.0}, {3.0, 0.5}});
    const auto agg = aggregate_mises(rep);
    CHECK(agg.ave_mise_mean == Catch::Approx(0.75).margin(1e-15));
    CHECK(agg.max_mise_mean == Catch::Approx(1.0).margin(1e-15));
}

TEST_CASE("single-variable aggregates collapse to the same value") {
    const auto rep = mean_table({0.1, 0.2, 0.3}, {{0.9, 0.4, 1.7}});
    const auto agg = aggregate_mises(rep);
    CHECK(agg.ave_mise_mean == agg.max_mise_mean);
    CHECK(agg.ave_mise_mean == Catch::Approx(0.4));
}

TEST_CASE("brute-force assignment minimum equals MaxMISE") {
    const auto toy = mean_table({0.1, 0.2}, {{1.0, 2.0}, {3.0, 0.5}});
    CHECK(global_opt_bruteforce(toy, Target::Mean) == aggregate_mises(toy).max_mise_mean);

    std::mt19937_64 eng(404);
    std::uniform_real_distribution<double> unif(0.01, 5.0);
    for (int table = 0; table < 25; ++table) {
        std::vector<std::vector<double>> cells(4, std::vector<double>(5));
        for (auto& row : cells)
            for (auto& c : row) c = unif(eng);
        const auto rep = mean_table({0.1, 0.2, 0.3, 0.4, 0.5}, cells);
        CHECK(global_opt_bruteforce(rep, Target::Mean) ==
              aggregate_mises(rep).max_mise_mean);
    }

    const auto single = mean_table({0.3}, {{2.0}, {0.7}, {1.1}});
    CHECK(global_opt_bruteforce(single, Target::Mean) == 2.0);
}

TEST_CASE("brute-force enumeration respects the size guard") {
    std::vector<std::vector<double>> cells(30, std::vector<double>(10, 1.0));
    const auto rep = mean_table(geometric_grid(0.1, 0.5, 10), cells);
    CHECK_THROWS_AS(global_opt_bruteforce(rep, Target::Mean), TooLargeError);
}

TEST_CASE("bandwidth sweeps match a naive recomputation") {
    SimulationConfig sim;
    sim.n = 30;
    sim.p = 2;
    sim.T = 6;
    sim.seed = 17;
    const auto out = generate_dataset(sim);
    const auto grid = unit_grid(31);
    const std::vector<double> H = {0.15, 0.3, 0.45};
    const auto truth = [](std::size_t, double u) { return true_mean(u); };

    const auto rep = bandwidth_sweep_mean(out.data, truth, H, grid, WeightScheme::PerObservation,
                                          SmoothPath::Exact);

    for (std::size_t j = 0; j < sim.p; ++j) {
        double best = 1e300, best_h = 0.0;
        for (std::size_t hi = 0; hi < H.size(); ++hi) {
            SmootherSpec spec{Kernel::Epanechnikov, H[hi], WeightScheme::PerObservation};
            const auto est = estimate_mean_curve(out.data, j, grid, spec);
            REQUIRE(est.complete());
            const double mise =
                mise_mean(est, [](double u) { return true_mean(u); });
            CHECK(rep.mean_cell(j, hi) == Catch::Approx(mise).margin(1e-14));
            if (mise < best) {
                best = mise;
                best_h = H[hi];
            }
        }
        CHECK(rep.best_mise_mean[j] == Catch::Approx(best).margin(1e-14));
        CHECK(rep.best_h_mean[j] == best_h);
    }
}

TEST_CASE("duplicate bandwidths are deduplicated") {
    SimulationConfig sim;
    sim.n = 15;
    sim.p = 1;
    sim.T = 5;
    sim.seed = 3;
    const auto out = generate_dataset(sim);
    const auto grid = unit_grid(21);
    const auto truth = [](std::size_t, double u) { return true_mean(u); };
    const auto a = bandwidth_sweep_mean(out.data, truth, {0.3, 0.2, 0.3, 0.2}, grid,
                                        WeightScheme::PerObservation, SmoothPath::Exact);
    const auto b = bandwidth_sweep_mean(out.data, truth, {0.2, 0.3}, grid,
                                        WeightScheme::PerObservation, SmoothPath::Exact);
    REQUIRE(a.h_mean == b.h_mean);
    CHECK(a.mean_cells == b.mean_cells);
}

TEST_CASE("covariance sweep fills mirrored pairs and respects the guard") {
    SimulationConfig sim;
    sim.n = 25;
    sim.p = 2;
    sim.T = 6;
    sim.seed = 23;
    const auto out = generate_dataset(sim);
    const auto grid = unit_grid(41);
    const double rho = sim.rho;

    auto rep = bandwidth_sweep_mean(
        out.data, [](std::size_t, double u) { return true_mean(u); }, {0.2, 0.35}, grid,
        WeightScheme::PerObservation, SmoothPath::Exact);
    std::vector<ScalarFn> means(sim.p, [](double u) { return true_mean(u); });
    // 0.02 is below the binned guard 2/(R-1) = 0.05 and must be flagged out.
    bandwidth_sweep_cov(
        rep, out.data,
        [rho](std::size_t j, std::size_t k, double u, double v) {
            return true_cov(j, k, u, v, rho);
        },
        {0.02, 0.25, 0.4}, grid, WeightScheme::PerObservation, SmoothPath::Binned, means);

    CHECK(rep.failed_cov_cells >= 3);
    for (std::size_t hi = 0; hi < rep.h_cov.size(); ++hi) {
        if (rep.h_cov[hi] < 2.0 / 40.0) {
            CHECK(std::isnan(rep.cov_cell(0, 1, hi)));
            continue;
        }
        CHECK(rep.cov_cell(0, 1, hi) == rep.cov_cell(1, 0, hi));
        CHECK(rep.cov_cell(0, 0, hi) >= 0.0);
    }
    const auto agg = aggregate_mises(rep);
    CHECK(agg.max_mise_cov >= agg.ave_mise_cov);
    CHECK(std::isfinite(agg.ave_mise_cov));
}

TEST_CASE("rate diagnostics compute the documented quantities") {
    SimulationConfig sim;
    sim.n = 100;
    sim.p = 1;
    sim.T = 5;
    sim.seed = 1;
    const auto out = generate_dataset(sim);

    const auto diag = rate_diagnostics(out.data, 0.1, 0.1, std::exp(1.0));
    CHECK(diag.t_bar_mean[0] == Catch::Approx(5.0));
    CHECK(diag.gamma[0] == Catch::Approx(100.0 * 0.5));
    // Pairs per subject: T (T - 1) = 20, so nu = n min(1, 20 h^2).
    CHECK(diag.t_bar_cov[0] == Catch::Approx(std::sqrt(20.0)));
    CHECK(diag.nu[0] == Catch::Approx(100.0 * 0.2));

    // Saturation: T-bar h >= 1 clamps gamma at n.
    const auto sat = rate_diagnostics(out.data, 0.5, 0.5, std::exp(1.0));
    CHECK(sat.gamma[0] == Catch::Approx(100.0));

    // Monotone in h.
    CHECK(diag.gamma[0] <= sat.gamma[0]);
    CHECK(diag.nu[0] <= sat.nu[0]);
}

TEST_CASE("regime classification follows the declared band") {
    const auto with_T = [](std::size_t T) {
        SimulationConfig sim;
        sim.n = 100;
        sim.p = 1;
        sim.T = T;
        sim.seed = 2;
        return generate_dataset(sim).data;
    };
    // Threshold at n=100, p=e: 100^{1/4} is about 3.16; band [1.58, 6.32].
    CHECK(rate_diagnostics(with_T(20), 0.1, 0.1, std::exp(1.0)).regime ==
          Regime::UltraDense);
    CHECK(rate_diagnostics(with_T(3), 0.1, 0.1, std::exp(1.0)).regime == Regime::SemiDense);
    CHECK(rate_diagnostics(with_T(1), 0.1, 0.1, std::exp(1.0)).regime == Regime::Sparse);
}

TEST_CASE("optimal bandwidth formulas match hand evaluation") {
    const double e = std::exp(1.0);
    CHECK(optimal_bandwidth(100, 10, e, Regime::Sparse, Target::Mean) ==
          Catch::Approx(std::pow(0.01, 0.2)).margin(1e-15));
    CHECK(optimal_bandwidth(100, 10, e, Regime::Sparse, Target::Mean) ==
          Catch::Approx(0.398).margin(5e-4));
    CHECK(optimal_bandwidth(100, 10, e, Regime::SemiDense, Target::Mean) ==
          Catch::Approx(0.251).margin(5e-4));
    CHECK(optimal_bandwidth(100, 10, e, Regime::SemiDense, Target::Cov) ==
          Catch::Approx(0.215).margin(5e-4));
    CHECK(optimal_bandwidth(100, 10, e, Regime::UltraDense, Target::Mean) ==
          Catch::Approx(std::pow(0.01, 0.25)).margin(1e-15));
    CHECK_THROWS_AS(optimal_bandwidth(1, 10, e, Regime::Sparse, Target::Mean),
                    std::invalid_argument);
    CHECK_THROWS_AS(optimal_bandwidth(100, 10, 1.0, Regime::Sparse, Target::Mean),
                    std::invalid_argument);
}

TEST_CASE("rate slope fitting recovers exact power laws") {
    const std::vector<double> xs = {10, 20, 40, 80, 160};
    std::vector<double> ys;
    for (double x : xs) ys.push_back(std::pow(x, -0.8));
    auto [slope, intercept] = fit_rate_slope(xs, ys);
    CHECK(slope == Catch::Approx(-0.8).margin(1e-10));
    CHECK(intercept == Catch::Approx(0.0).margin(1e-10));

    ys.assign(xs.size(), 2.5);
    CHECK(fit_rate_slope(xs, ys).first == Catch::Approx(0.0).margin(1e-12));

    ys.clear();
    for (double x : xs) ys.push_back(3.0 * std::pow(x, -2.0));
    auto [s2, i2] = fit_rate_slope(xs, ys);
    CHECK(s2 == Catch::Approx(-2.0).margin(1e-10));
    CHECK(i2 == Catch::Approx(std::log(3.0)).margin(1e-10));

    CHECK_THROWS_AS(fit_rate_slope({1.0, 2.0, 3.0}, {1.0, -1.0, 1.0}), NonPositiveError);
    CHECK_THROWS_AS(fit_rate_slope({1.0, 2.0}, {1.0, 1.0}), std::invalid_argument);
}

TEST_CASE("geometric grids span the requested interval") {
    const auto g = geometric_grid(0.02, 0.5, 15);
    REQUIRE(g.size() == 15);
    CHECK(g.front() == Catch::Approx(0.02));
    CHECK(g.back() == 0.5);
    for (std::size_t i = 1; i < g.size(); ++i) {
        CHECK(g[i] > g[i - 1]);
        CHECK(g[i] / g[i - 1] == Catch::Approx(g[1] / g[0]).epsilon(1e-10));
    }
}
