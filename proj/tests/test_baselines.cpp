#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "riskgate/baselines.hpp"
#include "riskgate/errors.hpp"
#include "riskgate/rng.hpp"

using namespace riskgate;
using namespace riskgate::thresholds;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Brute-force candidate enumeration, independent of the sweep.
std::vector<double> candidates(const Labeled& validation) {
    std::set<double> distinct;
    for (const auto& [s, z] : validation) distinct.insert(s);
    std::vector<double> sorted(distinct.begin(), distinct.end());
    std::vector<double> out{-kInf};
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i)
        out.push_back(0.5 * (sorted[i] + sorted[i + 1]));
    out.push_back(kInf);
    return out;
}

Labeled random_set(Rng& rng, std::size_t n) {
    Labeled out;
    for (std::size_t i = 0; i < n; ++i)
        out.emplace_back(rng.uniform(), rng.uniform() < 0.3 ? 1 : 0);
    // guarantee both classes
    out.emplace_back(rng.uniform(), 0);
    out.emplace_back(rng.uniform(), 1);
    return out;
}

}  // namespace

TEST_CASE("F1 threshold separates the textbook four-point set") {
    const Labeled v = {{0.1, 0}, {0.2, 0}, {0.8, 1}, {0.9, 1}};
    const auto t = threshold_f1(v);
    CHECK(t.lambda == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(f1_at(v, t.lambda) == doctest::Approx(1.0));
}

TEST_CASE("single-class validation sets are rejected") {
    CHECK_THROWS_AS(threshold_f1({{0.1, 1}, {0.2, 1}}), calibration_error);
    CHECK_THROWS_AS(threshold_gmean({{0.1, 0}, {0.2, 0}}), calibration_error);
}

TEST_CASE("duplicating every sample leaves the F1 threshold unchanged") {
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const Labeled v = random_set(rng, 40);
        Labeled doubled = v;
        doubled.insert(doubled.end(), v.begin(), v.end());
        CHECK(threshold_f1(v).lambda == threshold_f1(doubled).lambda);
    }
}

TEST_CASE("sweep argmax matches brute force over all candidates") {
    Rng rng(13);
    for (int trial = 0; trial < 50; ++trial) {
        const Labeled v = random_set(rng, 3 + rng.integer(197));
        for (const bool use_f1 : {true, false}) {
            const auto t = use_f1 ? threshold_f1(v) : threshold_gmean(v);
            const auto objective = [&](double lambda) {
                return use_f1 ? f1_at(v, lambda) : gmean_at(v, lambda);
            };
            const double at_best = objective(t.lambda);
            double brute_best = -1.0, brute_lambda = -kInf;
            for (double lambda : candidates(v)) {
                const double obj = objective(lambda);
                if (obj > brute_best) {
                    brute_best = obj;
                    brute_lambda = lambda;
                }
            }
            CHECK(at_best == brute_best);
            CHECK(t.lambda == brute_lambda);  // smallest-lambda tie rule
        }
    }
}

TEST_CASE("gmean hits 1 on perfectly separated scores") {
    const Labeled v = {{0.1, 0}, {0.2, 0}, {0.7, 1}, {0.8, 1}};
    const auto t = threshold_gmean(v);
    CHECK(gmean_at(v, t.lambda) == doctest::Approx(1.0));
}

TEST_CASE("gmean matches exhaustive search on the interleaved set") {
    const Labeled v = {{0.1, 0}, {0.2, 1}, {0.3, 0}, {0.4, 1}};
    const auto t = threshold_gmean(v);
    double best = -1.0, best_lambda = -kInf;
    for (double lambda : candidates(v)) {
        const double obj = gmean_at(v, lambda);
        if (obj > best) {
            best = obj;
            best_lambda = lambda;
        }
    }
    CHECK(t.lambda == best_lambda);
    CHECK(gmean_at(v, t.lambda) == best);
}

TEST_CASE("z-score stores population moments and flags strictly above k") {
    const auto t = threshold_zscore({-1.0, 1.0}, 3.0);
    CHECK(*t.mu_s == 0.0);
    CHECK(*t.sigma_s == 1.0);
    CHECK(decide_single(t, 3.0) == 0);  // z == k is not flagged
    CHECK(decide_single(t, 3.1) == 1);

    const auto t2 = threshold_zscore({2.0, 4.0, 6.0}, 1.5);
    CHECK(*t2.mu_s == doctest::Approx(4.0));
    CHECK(*t2.sigma_s == doctest::Approx(std::sqrt(8.0 / 3.0)).epsilon(1e-12));
    CHECK(decide_single(t2, 9.0) == 1);  // z ~ 3.06 > 1.5
    CHECK(decide_single(t2, 4.0) == 0);  // z = 0
}

TEST_CASE("z-score needs two scores with spread") {
    CHECK_THROWS_AS(threshold_zscore({1.0}, 3.0), calibration_error);
    CHECK_THROWS_AS(threshold_zscore({2.0, 2.0, 2.0}, 3.0), calibration_error);
}

TEST_CASE("decide_single is the single-threshold rule of the decision eq") {
    SingleThreshold t;
    t.method = BaselineMethod::F1;
    t.lambda = 0.5;
    CHECK(decide_single(t, 0.5) == 0);  // boundary goes to normal
    CHECK(decide_single(t, std::nextafter(0.5, 1.0)) == 1);
    CHECK(decide_single(t, 0.4) == 0);
}

TEST_CASE("decisions are monotone nondecreasing in the score") {
    Rng rng(19);
    const Labeled v = random_set(rng, 60);
    const auto t = threshold_f1(v);
    int prev = 0;
    for (double s = -0.5; s < 1.5; s += 0.01) {
        const int d = decide_single(t, s);
        CHECK(d >= prev);
        prev = d;
    }
}
