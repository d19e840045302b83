#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "fdsmooth/dataset.hpp"

using namespace fdsmooth;

namespace {

// Dataset with prescribed counts; times/values are arbitrary (weights ignore them).
FunctionalDataset from_counts(const std::vector<std::vector<std::size_t>>& counts) {
    const std::size_t n = counts.size();
    const std::size_t p = counts[0].size();
    DatasetBuilder b(n, p);
    std::mt19937_64 eng(7);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < p; ++j)
            for (std::size_t t = 0; t < counts[i][j]; ++t) b.add(i, j, unif(eng), unif(eng));
    return std::move(b).build();
}

}  // namespace

TEST_CASE("mean weights match the two schemes on small designs") {
    const auto data = from_counts({{3}, {2}});

    const auto per_obs = mean_weights(data, 0, WeightScheme::PerObservation);
    CHECK(per_obs[0] == Catch::Approx(1.0 / 5.0).epsilon(1e-14));
    CHECK(per_obs[1] == Catch::Approx(1.0 / 5.0).epsilon(1e-14));

    const auto per_subj = mean_weights(data, 0, WeightScheme::PerSubject);
    CHECK(per_subj[0] == Catch::Approx(1.0 / 6.0).epsilon(1e-14));
    CHECK(per_subj[1] == Catch::Approx(1.0 / 4.0).epsilon(1e-14));
    CHECK(3.0 * per_subj[0] + 2.0 * per_subj[1] == Catch::Approx(1.0).epsilon(1e-14));

    const auto single = from_counts({{7}});
    CHECK(mean_weights(single, 0, WeightScheme::PerObservation)[0] ==
          Catch::Approx(1.0 / 7.0).epsilon(1e-14));
    CHECK(mean_weights(single, 0, WeightScheme::PerSubject)[0] ==
          Catch::Approx(1.0 / 7.0).epsilon(1e-14));
}

TEST_CASE("covariance weights match the two schemes on small designs") {
    const auto diag = from_counts({{3}, {2}});
    const auto w = cov_weights(diag, 0, 0, WeightScheme::PerObservation);
    CHECK(w[0] == Catch::Approx(1.0 / 8.0).epsilon(1e-14));
    CHECK(w[1] == Catch::Approx(1.0 / 8.0).epsilon(1e-14));

    const auto cross = from_counts({{2, 3}, {1, 4}});
    const auto ws = cov_weights(cross, 0, 1, WeightScheme::PerSubject);
    CHECK(ws[0] == Catch::Approx(1.0 / 12.0).epsilon(1e-14));
    CHECK(ws[1] == Catch::Approx(1.0 / 8.0).epsilon(1e-14));
    CHECK(6.0 * ws[0] + 4.0 * ws[1] == Catch::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("degenerate designs raise the documented errors") {
    const auto lone = from_counts({{1}});
    CHECK_THROWS_AS(cov_weights(lone, 0, 0, WeightScheme::PerObservation), NoPairsError);
    CHECK_THROWS_AS(cov_weights(lone, 0, 0, WeightScheme::PerSubject), NoPairsError);

    const auto empty = from_counts({{0}, {0}});
    CHECK_THROWS_AS(mean_weights(empty, 0, WeightScheme::PerObservation), AllEmptyError);
    CHECK_THROWS_AS(mean_weights(empty, 0, WeightScheme::PerSubject), AllEmptyError);
}

TEST_CASE("weight normalization holds across random ragged designs") {
    std::mt19937_64 eng(12345);
    std::uniform_int_distribution<std::size_t> nd(1, 12), pd(1, 4), td(0, 5);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = nd(eng), p = pd(eng);
        std::vector<std::vector<std::size_t>> counts(n, std::vector<std::size_t>(p));
        for (auto& row : counts)
            for (auto& c : row) c = td(eng);
        const auto data = from_counts(counts);

        for (std::size_t j = 0; j < p; ++j) {
            for (const auto scheme : {WeightScheme::PerObservation, WeightScheme::PerSubject}) {
                std::size_t total = 0;
                for (std::size_t i = 0; i < n; ++i) total += counts[i][j];
                if (total == 0) {
                    CHECK_THROWS_AS(mean_weights(data, j, scheme), AllEmptyError);
                    continue;
                }
                const auto v = mean_weights(data, j, scheme);
                double norm = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    CHECK(v[i] >= 0.0);
                    if (counts[i][j] == 0) CHECK(v[i] == 0.0);
                    norm += static_cast<double>(counts[i][j]) * v[i];
                }
                CHECK(std::fabs(norm - 1.0) <= 1e-12);
            }
            for (std::size_t k = 0; k < p; ++k) {
                for (const auto scheme :
                     {WeightScheme::PerObservation, WeightScheme::PerSubject}) {
                    std::size_t pairs = 0;
                    for (std::size_t i = 0; i < n; ++i) pairs += pair_count(data, i, j, k);
                    if (pairs == 0) {
                        CHECK_THROWS_AS(cov_weights(data, j, k, scheme), NoPairsError);
                        continue;
                    }
                    const auto w = cov_weights(data, j, k, scheme);
                    double norm = 0.0;
                    for (std::size_t i = 0; i < n; ++i)
                        norm += static_cast<double>(pair_count(data, i, j, k)) * w[i];
                    CHECK(std::fabs(norm - 1.0) <= 1e-12);
                }
            }
        }
    }
}

TEST_CASE("schemes coincide when every subject has the same count") {
    const auto data = from_counts({{4, 3}, {4, 3}, {4, 3}});
    for (std::size_t j = 0; j < 2; ++j) {
        const auto a = mean_weights(data, j, WeightScheme::PerObservation);
        const auto b = mean_weights(data, j, WeightScheme::PerSubject);
        for (std::size_t i = 0; i < a.size(); ++i)
            CHECK(a[i] == Catch::Approx(b[i]).margin(1e-15));
    }
    const auto wa = cov_weights(data, 0, 1, WeightScheme::PerObservation);
    const auto wb = cov_weights(data, 0, 1, WeightScheme::PerSubject);
    for (std::size_t i = 0; i < wa.size(); ++i)
        CHECK(wa[i] == Catch::Approx(wb[i]).margin(1e-15));
}

TEST_CASE("weights follow subject permutations") {
    const auto data = from_counts({{2}, {5}, {0}, {3}});
    const auto perm = from_counts({{3}, {2}, {5}, {0}});
    const auto v = mean_weights(data, 0, WeightScheme::PerSubject);
    const auto vp = mean_weights(perm, 0, WeightScheme::PerSubject);
    CHECK(v[0] == vp[1]);
    CHECK(v[1] == vp[2]);
    CHECK(v[2] == vp[3]);
    CHECK(v[3] == vp[0]);
}

TEST_CASE("builder sorts observations by time") {
    DatasetBuilder b(1, 1);
    b.add(0, 0, 0.9, 1.0);
    b.add(0, 0, 0.1, 2.0);
    b.add(0, 0, 0.5, 3.0);
    const auto data = std::move(b).build();
    const Series& s = data.series(0, 0);
    REQUIRE(s.size() == 3);
    CHECK(s.u[0] == 0.1);
    CHECK(s.u[1] == 0.5);
    CHECK(s.u[2] == 0.9);
    CHECK(s.y[0] == 2.0);
    CHECK(s.y[1] == 3.0);
    CHECK(s.y[2] == 1.0);
}
