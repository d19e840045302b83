#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "fdsmooth/binning.hpp"
#include "fdsmooth/smoothing.hpp"

using namespace fdsmooth;

namespace {

FunctionalDataset random_dataset(std::mt19937_64& eng, std::size_t n, std::size_t p,
                                 std::size_t T, bool snap_to_nodes = false,
                                 std::size_t R = 0) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 1.0);
    DatasetBuilder b(n, p);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j)
            for (std::size_t t = 0; t < T; ++t) {
                double u = unif(eng);
                if (snap_to_nodes)
                    u = std::round(u * static_cast<double>(R - 1)) /
                        static_cast<double>(R - 1);
                b.add(i, j, u, std::sin(5.0 * u) + 0.3 * noise(eng));
            }
    return std::move(b).build();
}

double sup_gap(const std::vector<double>& a, const std::vector<double>& b) {
    double g = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) g = std::max(g, std::fabs(a[i] - b[i]));
    return g;
}

double value_range(const std::vector<double>& v) {
    double lo = v[0], hi = v[0];
    for (double x : v) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    return hi - lo;
}

}  // namespace

TEST_CASE("linear binning splits single observations as documented") {
    const std::size_t R = 11;  // centers at 0.0, 0.1, ..., 1.0
    DatasetBuilder b(1, 1);
    b.add(0, 0, 0.3, 2.0);
    const auto at_node = bin_marginal(std::move(b).build(), 0, R);
    for (std::size_t r = 0; r < R; ++r)
        CHECK(at_node.mass_row(0)[r] == (r == 3 ? 1.0 : 0.0));

    DatasetBuilder b2(1, 1);
    b2.add(0, 0, 0.35, 2.0);
    const auto mid = bin_marginal(std::move(b2).build(), 0, R);
    CHECK(mid.mass_row(0)[3] == Catch::Approx(0.5).margin(1e-12));
    CHECK(mid.mass_row(0)[4] == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("binning conserves mass and first moments") {
    std::mt19937_64 eng(31);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    DatasetBuilder b(1, 1);
    double sum_u = 0.0, sum_y = 0.0;
    for (int t = 0; t < 37; ++t) {
        const double u = unif(eng), y = unif(eng);
        sum_u += u;
        sum_y += y;
        b.add(0, 0, u, y);
    }
    const auto binned = bin_marginal(std::move(b).build(), 0, 100);
    double mass = 0.0, moment = 0.0, resp = 0.0;
    for (std::size_t r = 0; r < binned.bins; ++r) {
        mass += binned.mass_row(0)[r];
        moment += binned.mass_row(0)[r] * binned.centers[r];
        resp += binned.resp_row(0)[r];
    }
    CHECK(mass == Catch::Approx(37.0).margin(1e-12));
    CHECK(moment == Catch::Approx(sum_u).margin(1e-10));
    CHECK(resp == Catch::Approx(sum_y).margin(1e-10));
}

TEST_CASE("binned mean equals the exact path when data sit on nodes") {
    const std::size_t R = 101;
    std::mt19937_64 eng(17);
    const auto data = random_dataset(eng, 12, 1, 8, true, R);
    const auto grid = unit_grid(R);
    SmootherSpec spec{Kernel::Epanechnikov, 0.15, WeightScheme::PerObservation};
    const auto weights = mean_weights(data, 0, spec.scheme);

    const auto exact = estimate_mean_curve(data, 0, grid, spec, weights);
    const auto binned = estimate_mean_binned(bin_marginal(data, 0, R), weights, grid, spec);
    REQUIRE(exact.complete());
    REQUIRE(binned.complete());
    CHECK(sup_gap(exact.values, binned.values) <= 1e-12);
}

TEST_CASE("binned mean reproduces affine data on a fine grid") {
    const std::size_t R = 401;
    std::mt19937_64 eng(23);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    DatasetBuilder b(200, 1);
    for (std::size_t i = 0; i < 200; ++i)
        for (int t = 0; t < 200; ++t) {
            const double u = unif(eng);
            b.add(i, 0, u, 2.0 * u);
        }
    const auto data = std::move(b).build();
    const auto weights = mean_weights(data, 0, WeightScheme::PerObservation);
    SmootherSpec spec{Kernel::Epanechnikov, 0.2, WeightScheme::PerObservation};
    const auto est =
        estimate_mean_binned(bin_marginal(data, 0, R), weights, {0.5}, spec);
    REQUIRE(est.complete());
    CHECK(est.values[0] == Catch::Approx(1.0).margin(1e-6));
}

TEST_CASE("binned and exact means stay within one percent on random data") {
    std::mt19937_64 eng(57);
    const auto data = random_dataset(eng, 30, 1, 10);
    const std::size_t R = 100;
    const auto grid = unit_grid(R);
    SmootherSpec spec{Kernel::Epanechnikov, 0.15, WeightScheme::PerObservation};
    const auto weights = mean_weights(data, 0, spec.scheme);
    const auto exact = estimate_mean_curve(data, 0, grid, spec, weights);
    const auto binned = estimate_mean_binned(bin_marginal(data, 0, R), weights, grid, spec);
    REQUIRE(exact.complete());
    REQUIRE(binned.complete());
    CHECK(sup_gap(exact.values, binned.values) <= 0.01 * value_range(exact.values));
}

TEST_CASE("pair masses reconstruct the raw pair counts") {
    std::mt19937_64 eng(61);
    const ScalarFn zero = [](double) { return 0.0; };

    DatasetBuilder lone(1, 1);
    lone.add(0, 0, 0.4, 1.0);
    const auto single = bin_pairs(std::move(lone).build(), 0, 0, 50, zero, zero);
    CHECK(single.pair_mass(0) == Catch::Approx(0.0).margin(1e-12));

    DatasetBuilder cross(1, 2);
    for (int t = 0; t < 2; ++t) cross.add(0, 0, 0.1 + 0.3 * t, 1.0);
    for (int t = 0; t < 3; ++t) cross.add(0, 1, 0.2 + 0.2 * t, 1.0);
    const auto cp = bin_pairs(std::move(cross).build(), 0, 1, 50, zero, zero);
    CHECK(cp.pair_mass(0) == Catch::Approx(6.0).margin(1e-12));

    // Two observations exactly on bin centers: mass 2 after removing the two
    // same-point products.
    DatasetBuilder nodes(1, 1);
    nodes.add(0, 0, 0.0, 1.0);
    nodes.add(0, 0, 0.5, 2.0);
    const auto np = bin_pairs(std::move(nodes).build(), 0, 0, 11, zero, zero);
    CHECK(np.pair_mass(0) == Catch::Approx(2.0).margin(1e-12));

    // Random placements: the identity holds through the fractional splits.
    const auto data = random_dataset(eng, 6, 2, 7);
    const auto bp = bin_pairs(data, 0, 0, 64, zero, zero);
    const auto bc = bin_pairs(data, 0, 1, 64, zero, zero);
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(bp.pair_mass(i) == Catch::Approx(7.0 * 6.0).margin(1e-9));
        CHECK(bc.pair_mass(i) == Catch::Approx(49.0).margin(1e-9));
    }
}

TEST_CASE("binned covariance equals the exact path when data sit on nodes") {
    const std::size_t R = 51;
    std::mt19937_64 eng(71);
    const auto data = random_dataset(eng, 10, 2, 6, true, R);
    const auto grid = unit_grid(R);
    const ScalarFn zero = [](double) { return 0.0; };
    SmootherSpec spec{Kernel::Epanechnikov, 0.25, WeightScheme::PerObservation};

    for (const auto& [j, k] : {std::pair<std::size_t, std::size_t>{0, 0}, {0, 1}}) {
        const auto weights = cov_weights(data, j, k, spec.scheme);
        const auto exact =
            estimate_cov_surface(data, j, k, grid, grid, spec, zero, zero, weights);
        const auto binned = estimate_cov_binned(bin_pairs(data, j, k, R, zero, zero), weights,
                                                grid, grid, spec);
        REQUIRE(exact.complete());
        REQUIRE(binned.complete());
        CHECK(sup_gap(exact.values, binned.values) <= 1e-12);
    }
}

TEST_CASE("binned covariance reproduces constant raw covariances at nodes") {
    const std::size_t R = 41;
    std::mt19937_64 eng(83);
    std::uniform_int_distribution<std::size_t> node(0, R - 1);
    DatasetBuilder b(6, 1);
    for (std::size_t i = 0; i < 6; ++i)
        for (int t = 0; t < 5; ++t)
            b.add(0 + i, 0, static_cast<double>(node(eng)) / (R - 1), 2.0);
    const auto data = std::move(b).build();
    const ScalarFn zero = [](double) { return 0.0; };
    const auto weights = cov_weights(data, 0, 0, WeightScheme::PerObservation);
    SmootherSpec spec{Kernel::Epanechnikov, 0.3, WeightScheme::PerObservation};
    const auto grid = unit_grid(R);
    const auto surf =
        estimate_cov_binned(bin_pairs(data, 0, 0, R, zero, zero), weights, grid, grid, spec);
    REQUIRE(surf.complete());
    for (double v : surf.values) CHECK(v == Catch::Approx(4.0).margin(1e-12));
}

TEST_CASE("binned covariance surfaces are exactly symmetric on diagonal blocks") {
    std::mt19937_64 eng(87);
    const auto data = random_dataset(eng, 10, 1, 6);
    const ScalarFn zero = [](double) { return 0.0; };
    const std::size_t R = 60;
    const auto grid = unit_grid(R);
    const auto weights = cov_weights(data, 0, 0, WeightScheme::PerObservation);
    SmootherSpec spec{Kernel::Epanechnikov, 0.2, WeightScheme::PerObservation};
    const auto surf =
        estimate_cov_binned(bin_pairs(data, 0, 0, R, zero, zero), weights, grid, grid, spec);
    for (std::size_t r = 0; r < R; ++r)
        for (std::size_t c = 0; c < R; ++c) CHECK(surf.at(r, c) == surf.at(c, r));
}

TEST_CASE("binned and exact covariance stay within one percent on random data") {
    std::mt19937_64 eng(91);
    const auto data = random_dataset(eng, 25, 2, 8);
    const std::size_t R = 60;
    const auto grid = unit_grid(R);
    const ScalarFn zero = [](double) { return 0.0; };
    SmootherSpec spec{Kernel::Epanechnikov, 0.25, WeightScheme::PerObservation};
    for (const auto& [j, k] : {std::pair<std::size_t, std::size_t>{0, 0}, {0, 1}}) {
        const auto weights = cov_weights(data, j, k, spec.scheme);
        const auto exact =
            estimate_cov_surface(data, j, k, grid, grid, spec, zero, zero, weights);
        const auto binned = estimate_cov_binned(bin_pairs(data, j, k, R, zero, zero), weights,
                                                grid, grid, spec);
        REQUIRE(exact.complete());
        REQUIRE(binned.complete());
        CHECK(sup_gap(exact.values, binned.values) <= 0.01 * value_range(exact.values));
    }
}

TEST_CASE("bin-grid bandwidth guard rejects undersized windows") {
    std::mt19937_64 eng(93);
    const auto data = random_dataset(eng, 5, 1, 5);
    const std::size_t R = 100;
    const auto weights = mean_weights(data, 0, WeightScheme::PerObservation);
    const auto binned = bin_marginal(data, 0, R);
    SmootherSpec spec{Kernel::Epanechnikov, 1.9 / (R - 1), WeightScheme::PerObservation};
    CHECK_THROWS_AS(estimate_mean_binned(binned, weights, unit_grid(R), spec),
                    BandwidthTooSmallError);
    spec.bandwidth = 2.0 / (R - 1);
    CHECK_NOTHROW(estimate_mean_binned(binned, weights, unit_grid(R), spec));
}

TEST_CASE("kernel evaluation count is independent of the raw data size") {
    std::mt19937_64 eng(101);
    const auto small = random_dataset(eng, 5, 1, 5);
    const auto large = random_dataset(eng, 50, 1, 40);
    const std::size_t R = 100;
    const auto grid = unit_grid(R);
    SmootherSpec spec{Kernel::Epanechnikov, 0.1, WeightScheme::PerObservation};

    std::size_t count_small = 0, count_large = 0;
    estimate_mean_binned(bin_marginal(small, 0, R), mean_weights(small, 0, spec.scheme), grid,
                         spec, &count_small);
    estimate_mean_binned(bin_marginal(large, 0, R), mean_weights(large, 0, spec.scheme), grid,
                         spec, &count_large);
    CHECK(count_small == count_large);
    // O(R * window bins): every grid point sees at most 2 h (R-1) + 2 bins.
    const std::size_t window_cap = static_cast<std::size_t>(2.0 * 0.1 * (R - 1)) + 2;
    CHECK(count_small <= R * window_cap);
}

TEST_CASE("binned-exact gap shrinks as the bin grid refines") {
    std::mt19937_64 eng(103);
    const auto data = random_dataset(eng, 20, 1, 10);
    const auto eval_grid = unit_grid(41);
    SmootherSpec spec{Kernel::Epanechnikov, 0.2, WeightScheme::PerObservation};
    const auto weights = mean_weights(data, 0, spec.scheme);
    const auto exact = estimate_mean_curve(data, 0, eval_grid, spec, weights);
    REQUIRE(exact.complete());
    const double range = value_range(exact.values);

    double prev = 1e300;
    for (const std::size_t R : {50, 100, 200, 400, 800}) {
        const auto binned =
            estimate_mean_binned(bin_marginal(data, 0, R), weights, eval_grid, spec);
        REQUIRE(binned.complete());
        const double gap = sup_gap(exact.values, binned.values);
        CHECK(gap <= prev * 1.1);
        if (R == 800) CHECK(gap <= 1e-3 * range);
        prev = gap;
    }
}

TEST_CASE("binned-exact covariance gap shrinks as the bin grid refines") {
    std::mt19937_64 eng(107);
    const auto data = random_dataset(eng, 15, 1, 8);
    const auto eval_grid = unit_grid(21);
    const ScalarFn zero = [](double) { return 0.0; };
    SmootherSpec spec{Kernel::Epanechnikov, 0.25, WeightScheme::PerObservation};
    const auto weights = cov_weights(data, 0, 0, spec.scheme);
    const auto exact =
        estimate_cov_surface(data, 0, 0, eval_grid, eval_grid, spec, zero, zero, weights);
    REQUIRE(exact.complete());

    double prev = 1e300;
    for (const std::size_t R : {50, 100, 200}) {
        const auto binned = estimate_cov_binned(bin_pairs(data, 0, 0, R, zero, zero), weights,
                                                eval_grid, eval_grid, spec);
        REQUIRE(binned.complete());
        const double gap = sup_gap(exact.values, binned.values);
        CHECK(gap <= prev * 1.1);
        prev = gap;
    }
}
