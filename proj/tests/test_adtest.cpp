#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "eaglemine/adtest.hpp"
#include "oracles.hpp"

using namespace eaglemine;

namespace {

/// Straight transcription of the statistic: sort, standardize by the sample
/// moments, then A^2 = -n - (1/n) sum (2i+1)[ln F(y_(i)) + ln(1 - F(y_(n-1-i)))].
double a2_by_hand(std::vector<double> xs) {
    std::size_t n = xs.size();
    double mean = 0.0, var = 0.0;
    for (double x : xs) mean += x;
    mean /= double(n);
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= double(n - 1);
    double sd = std::sqrt(var);
    std::sort(xs.begin(), xs.end());
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double lo = oracle::Phi((xs[i] - mean) / sd);
        double hi = oracle::Phi((xs[n - 1 - i] - mean) / sd);
        acc += double(2 * i + 1) * (std::log(lo) + std::log1p(-hi));
    }
    return -double(n) - acc / double(n);
}

}  // namespace

TEST_CASE("normality screen") {
    SUBCASE("constant samples are degenerate and rejected") {
        AdResult r = ad_statistic(std::vector<double>(20, 3.5));
        CHECK(r.degenerate);
        CHECK(r.rejected);
        CHECK_FALSE(r.too_small);
    }
    SUBCASE("fewer than eight samples never reject") {
        AdResult r = ad_statistic({1e6, -1e6, 42.0, 0.0, 3.0, -9.0, 17.0});
        CHECK(r.too_small);
        CHECK_FALSE(r.rejected);
        AdResult ok = ad_statistic({1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0});
        CHECK_FALSE(ok.too_small);
    }
    SUBCASE("statistic and small-sample adjustment match a hand transcription") {
        std::vector<double> xs = {0.2, -1.3, 0.7, 1.9, -0.4, 0.0, 2.2, -0.9, 1.1, 0.5};
        AdResult r = ad_statistic(xs);
        double a2 = a2_by_hand(xs);
        CHECK(r.a2 == doctest::Approx(a2).epsilon(1e-12));
        double n = double(xs.size());
        CHECK(r.a2_star == doctest::Approx(a2 * (1.0 + 4.0 / n - 25.0 / (n * n))).epsilon(1e-12));
        CHECK(r.rejected == (r.a2_star > kAdCritical1pc));
    }
    SUBCASE("near-critical statistics use the pinned threshold") {
        // the flag must flip exactly at the published 1% critical value
        CHECK(kAdCritical1pc == 1.0348);
        CHECK(kAdMinSamples == 8);
    }
    SUBCASE("rarely rejects true gaussian samples") {
        std::mt19937_64 rng(2024);
        std::normal_distribution<double> z(5.0, 2.0);
        int rejected = 0;
        for (int t = 0; t < 300; ++t) {
            std::vector<double> xs(100);
            for (double& x : xs) x = z(rng);
            if (ad_statistic(xs).rejected) ++rejected;
        }
        // nominal size is 1%; allow wide sampling slack
        CHECK(rejected <= 12);
    }
    SUBCASE("almost always rejects uniform samples") {
        std::mt19937_64 rng(77);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        int rejected = 0;
        for (int t = 0; t < 50; ++t) {
            std::vector<double> xs(500);
            for (double& x : xs) x = u(rng);
            if (ad_statistic(xs).rejected) ++rejected;
        }
        CHECK(rejected >= 47);
    }
    SUBCASE("heavy-tailed data is caught even in small batches") {
        std::mt19937_64 rng(9);
        std::cauchy_distribution<double> c(0.0, 1.0);
        std::vector<double> xs(60);
        for (double& x : xs) x = c(rng);
        CHECK(ad_statistic(xs).rejected);
    }
}
