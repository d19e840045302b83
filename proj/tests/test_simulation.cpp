#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "fdsmooth/io.hpp"
#include "fdsmooth/simulation.hpp"

using namespace fdsmooth;

TEST_CASE("true mean matches hand-evaluated points") {
    CHECK(true_mean(0.0) == Catch::Approx(-1.5).margin(1e-12));
    CHECK(true_mean(0.5) == Catch::Approx(0.25).margin(1e-12));
    CHECK(true_mean(1.0) == Catch::Approx(3.5).margin(1e-12));
}

TEST_CASE("true covariance matches hand-evaluated points and is symmetric") {
    CHECK(true_cov(0, 0, 0.0, 0.0, 0.5) == Catch::Approx(0.625).margin(1e-12));
    CHECK(true_cov(0, 1, 0.0, 0.0, 0.5) == Catch::Approx(0.3125).margin(1e-12));
    for (const double u : {0.1, 0.4, 0.9})
        for (const double v : {0.0, 0.55, 1.0})
            CHECK(true_cov(1, 3, u, v, 0.6) ==
                  Catch::Approx(true_cov(3, 1, v, u, 0.6)).margin(1e-14));
}

TEST_CASE("degenerate process returns the mean exactly") {
    SimulationConfig cfg;
    cfg.n = 4;
    cfg.p = 2;
    cfg.T = 1;
    cfg.noise_sd = 0.0;
    cfg.zero_scores = true;
    const auto out = generate_dataset(cfg);
    for (std::size_t i = 0; i < cfg.n; ++i)
        for (std::size_t j = 0; j < cfg.p; ++j) {
            const Series& s = out.data.series(i, j);
            REQUIRE(s.size() == 1);
            CHECK(s.y[0] == true_mean(s.u[0]));
        }
}

TEST_CASE("identical configs reproduce bit-identical datasets") {
    SimulationConfig cfg;
    cfg.n = 20;
    cfg.p = 3;
    cfg.T = 6;
    cfg.seed = 99;
    const auto a = generate_dataset(cfg);
    const auto b = generate_dataset(cfg);
    std::ostringstream sa, sb;
    write_long_format(sa, a.data, IndexBase::Zero);
    write_long_format(sb, b.data, IndexBase::Zero);
    CHECK(sa.str() == sb.str());

    cfg.seed = 100;
    const auto c = generate_dataset(cfg);
    std::ostringstream sc;
    write_long_format(sc, c.data, IndexBase::Zero);
    CHECK(sa.str() != sc.str());
}

TEST_CASE("score moments match the designed law") {
    SimulationConfig cfg;
    cfg.n = 2000;
    cfg.p = 3;
    cfg.T = 1;
    cfg.rho = 0.5;
    cfg.seed = 7;
    const auto out = generate_dataset(cfg);
    const auto d = score_variances();
    const double N = static_cast<double>(cfg.n);

    for (std::size_t m = 0; m < 4; ++m) {
        double sum = 0.0, sumsq = 0.0;
        for (std::size_t i = 0; i < cfg.n; ++i) {
            const double th = out.coefficients[(i * cfg.p + 0) * 4 + m];
            sum += th;
            sumsq += th * th;
        }
        const double mean = sum / N;
        const double var = sumsq / N - mean * mean;
        const double se = d[m] * std::sqrt(2.0 / (N - 1));
        CHECK(std::fabs(var - d[m]) <= 4.0 * se);
    }

    // AR(1) across variables: lag-2 correlation is rho^2.
    for (std::size_t m = 0; m < 4; ++m) {
        double s1 = 0, s2 = 0, s11 = 0, s22 = 0, s12 = 0;
        for (std::size_t i = 0; i < cfg.n; ++i) {
            const double a = out.coefficients[(i * cfg.p + 0) * 4 + m];
            const double b = out.coefficients[(i * cfg.p + 2) * 4 + m];
            s1 += a;
            s2 += b;
            s11 += a * a;
            s22 += b * b;
            s12 += a * b;
        }
        const double cov = s12 / N - (s1 / N) * (s2 / N);
        const double va = s11 / N - (s1 / N) * (s1 / N);
        const double vb = s22 / N - (s2 / N) * (s2 / N);
        const double corr = cov / std::sqrt(va * vb);
        const double se = (1.0 - 0.25 * 0.25) / std::sqrt(N - 3.0);
        CHECK(std::fabs(corr - 0.25) <= 4.0 * se);
    }
}

TEST_CASE("process covariance at spot tuples matches the analytic surface") {
    SimulationConfig cfg;
    cfg.n = 4000;
    cfg.p = 2;
    cfg.T = 1;
    cfg.rho = 0.5;
    cfg.seed = 21;
    const auto out = generate_dataset(cfg);
    const double N = static_cast<double>(cfg.n);

    const auto x_value = [&](std::size_t i, std::size_t j, double u) {
        const auto phi = basis_eval(u);
        double x = true_mean(u);
        for (std::size_t m = 0; m < 4; ++m)
            x += phi[m] * out.coefficients[(i * cfg.p + j) * 4 + m];
        return x;
    };

    const std::tuple<std::size_t, std::size_t, double, double> tuples[] = {
        {0, 0, 0.2, 0.2}, {0, 0, 0.3, 0.8}, {0, 1, 0.5, 0.5}, {1, 1, 0.9, 0.1},
        {0, 1, 0.0, 1.0}};
    for (const auto& [j, k, u, v] : tuples) {
        double s1 = 0, s2 = 0, s12 = 0;
        for (std::size_t i = 0; i < cfg.n; ++i) {
            const double a = x_value(i, j, u);
            const double b = x_value(i, k, v);
            s1 += a;
            s2 += b;
            s12 += a * b;
        }
        const double cov = s12 / N - (s1 / N) * (s2 / N);
        CHECK(std::fabs(cov - true_cov(j, k, u, v, cfg.rho)) <= 4.0 / std::sqrt(N));
    }
}

TEST_CASE("observed values carry the process variance plus noise") {
    SimulationConfig cfg;
    cfg.n = 20000;
    cfg.p = 1;
    cfg.T = 1;
    cfg.rho = 0.5;
    cfg.noise_sd = 0.5;
    cfg.seed = 33;
    const auto out = generate_dataset(cfg);

    // Stratify by a narrow time window; centered values have variance
    // Sigma(u,u) + noise_sd^2 up to the window width.
    const double u0 = 0.5, half = 0.05;
    double s = 0, ss = 0;
    std::size_t count = 0;
    double sigma_avg = 0.0;
    for (std::size_t i = 0; i < cfg.n; ++i) {
        const Series& series = out.data.series(i, 0);
        const double u = series.u[0];
        if (std::fabs(u - u0) > half) continue;
        const double centered = series.y[0] - true_mean(u);
        s += centered;
        ss += centered * centered;
        sigma_avg += true_cov(0, 0, u, u, cfg.rho);
        ++count;
    }
    REQUIRE(count > 500);
    const double var = ss / count - (s / count) * (s / count);
    const double expected = sigma_avg / count + 0.25;
    const double se = expected * std::sqrt(2.0 / (count - 1));
    CHECK(std::fabs(var - expected) <= 4.0 * se);
}

TEST_CASE("shared-times mode reuses one time set across variables") {
    SimulationConfig cfg;
    cfg.n = 5;
    cfg.p = 3;
    cfg.T = 4;
    cfg.shared_times = true;
    cfg.seed = 5;
    const auto out = generate_dataset(cfg);
    for (std::size_t i = 0; i < cfg.n; ++i)
        for (std::size_t j = 1; j < cfg.p; ++j)
            for (std::size_t t = 0; t < cfg.T; ++t)
                CHECK(out.data.series(i, j).u[t] == out.data.series(i, 0).u[t]);

    cfg.shared_times = false;
    const auto indep = generate_dataset(cfg);
    bool any_diff = false;
    for (std::size_t t = 0; t < cfg.T; ++t)
        if (indep.data.series(0, 1).u[t] != indep.data.series(0, 0).u[t]) any_diff = true;
    CHECK(any_diff);
}

TEST_CASE("invalid configurations are rejected") {
    SimulationConfig cfg;
    cfg.rho = 1.0;
    CHECK_THROWS_AS(generate_dataset(cfg), std::invalid_argument);
    cfg.rho = 0.5;
    cfg.n = 0;
    CHECK_THROWS_AS(generate_dataset(cfg), std::invalid_argument);
}
