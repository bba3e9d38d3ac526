#include <doctest.h>

#include <cmath>
#include <set>

#include "coughnet/smote.hpp"

using namespace coughnet;

namespace {

std::vector<std::vector<double>> random_minority(std::size_t n, std::size_t dim, Rng& rng) {
    std::vector<std::vector<double>> out(n, std::vector<double>(dim));
    for (auto& v : out) {
        for (double& x : v) x = rng.uniform(-3.0, 3.0);
    }
    return out;
}

/// Distance from point p to the segment [a, b].
double segment_residual(const std::vector<double>& p, const std::vector<double>& a,
                        const std::vector<double>& b) {
    double ab2 = 0.0, ap_ab = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        ab2 += (b[i] - a[i]) * (b[i] - a[i]);
        ap_ab += (p[i] - a[i]) * (b[i] - a[i]);
    }
    const double t = ab2 > 0.0 ? std::clamp(ap_ab / ab2, 0.0, 1.0) : 0.0;
    double d2 = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double proj = a[i] + t * (b[i] - a[i]);
        d2 += (p[i] - proj) * (p[i] - proj);
    }
    return std::sqrt(d2);
}

double min_residual_over_pairs(const std::vector<double>& p,
                               const std::vector<std::vector<double>>& minority) {
    double best = 1e300;
    for (std::size_t i = 0; i < minority.size(); ++i) {
        for (std::size_t j = i + 1; j < minority.size(); ++j) {
            best = std::min(best, segment_residual(p, minority[i], minority[j]));
        }
    }
    return best;
}

}  // namespace

TEST_CASE("two-point minority keeps synthetics on the segment") {
    const std::vector<std::vector<double>> minority = {{0.0, 0.0}, {1.0, 1.0}};
    SmoteConfig config;
    config.seed = 17;
    const auto synthetics = smote(minority, 10, config);
    REQUIRE(synthetics.size() == 8);
    for (const auto& s : synthetics) {
        CHECK(std::fabs(s[0] - s[1]) <= 1e-9);  // on the diagonal
        CHECK(s[0] >= -1e-12);
        CHECK(s[0] <= 1.0 + 1e-12);
    }
}

TEST_CASE("synthetic count reproduces the dataset arithmetic") {
    Rng rng(3);
    const auto minority = random_minority(92, 5, rng);
    SmoteConfig config;
    config.seed = 99;
    const auto synthetics = smote(minority, 1079, config);
    CHECK(synthetics.size() == 987);  // 1079 - 92
}

TEST_CASE("every synthetic is a convex combination of two minority points") {
    Rng rng(12);
    for (int trial = 0; trial < 20; ++trial) {
        const auto minority = random_minority(5 + rng.uniform_int(10), 4, rng);
        SmoteConfig config;
        config.seed = rng.next_u64();
        const auto synthetics = smote(minority, minority.size() * 2, config);
        for (const auto& s : synthetics) {
            CHECK(min_residual_over_pairs(s, minority) <= 1e-9);
        }
    }
}

TEST_CASE("synthetics stay inside the minority bounding box") {
    Rng rng(21);
    const auto minority = random_minority(12, 6, rng);
    std::vector<double> lo(6, 1e300), hi(6, -1e300);
    for (const auto& v : minority) {
        for (std::size_t i = 0; i < 6; ++i) {
            lo[i] = std::min(lo[i], v[i]);
            hi[i] = std::max(hi[i], v[i]);
        }
    }
    SmoteConfig config;
    config.seed = 5;
    for (const auto& s : smote(minority, 40, config)) {
        for (std::size_t i = 0; i < 6; ++i) {
            CHECK(s[i] >= lo[i] - 1e-12);
            CHECK(s[i] <= hi[i] + 1e-12);
        }
    }
}

TEST_CASE("smote is deterministic per seed and varies across seeds") {
    Rng rng(77);
    const auto minority = random_minority(10, 3, rng);
    SmoteConfig config;
    config.seed = 1;
    const auto a = smote(minority, 30, config);
    const auto b = smote(minority, 30, config);
    CHECK(a == b);
    config.seed = 2;
    const auto c = smote(minority, 30, config);
    CHECK(a != c);
}

TEST_CASE("target_ratio scales the balanced size") {
    Rng rng(31);
    const auto minority = random_minority(10, 3, rng);
    SmoteConfig config;
    config.seed = 8;
    config.target_ratio = 0.5;
    const auto synthetics = smote(minority, 100, config);
    CHECK(synthetics.size() == 40);  // round(100 * 0.5) - 10
}

TEST_CASE("smote input validation") {
    SmoteConfig config;
    CHECK_THROWS_AS(smote({{1.0, 2.0}}, 10, config), InsufficientMinority);
    CHECK_THROWS_AS(smote({}, 10, config), InsufficientMinority);
    CHECK_THROWS_AS(smote({{1.0}, {2.0}}, 1, config), InvalidLength);
}
