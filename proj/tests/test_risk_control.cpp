#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "riskgate/errors.hpp"
#include "riskgate/risk_control.hpp"
#include "riskgate/rng.hpp"

using namespace riskgate;
using namespace riskgate::risk;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Exact-summation binomial lower tail in long double, used as the oracle for
// the Bentkus branch (the implementation goes through the incomplete beta).
long double binom_cdf_oracle(long k, long n, long double p) {
    if (p <= 0.0L) return 1.0L;
    if (p >= 1.0L) return k >= n ? 1.0L : 0.0L;
    long double cdf = 0.0L;
    for (long i = 0; i <= k && i <= n; ++i) {
        const long double log_term = std::lgamma(n + 1.0L) - std::lgamma(i + 1.0L) -
                                     std::lgamma(n - i + 1.0L) + i * std::log(p) +
                                     (n - i) * std::log(1.0L - p);
        cdf += std::exp(log_term);
    }
    return std::min(cdf, 1.0L);
}

double hb_pvalue_oracle(double r_hat, long n, double alpha) {
    const long double a = std::min<long double>(r_hat, alpha);
    const long double b = alpha;
    long double h1;
    if (a >= b)
        h1 = 0.0L;
    else if (b >= 1.0L)
        h1 = std::numeric_limits<long double>::infinity();
    else
        h1 = (a <= 0.0L ? 0.0L : a * std::log(a / b)) +
             (1.0L - a) * std::log((1.0L - a) / (1.0L - b));
    const long double hoeffding = std::exp(-static_cast<long double>(n) * h1);
    const long k = static_cast<long>(std::ceil(static_cast<double>(n) * r_hat - 1e-9));
    const long double bentkus = std::exp(1.0L) * binom_cdf_oracle(std::clamp(k, 0L, n), n, b);
    return static_cast<double>(std::min({1.0L, hoeffding, bentkus}));
}

// Per-sample reimplementation of the decision regions, for the risk oracle.
int oracle_decide(double lo, double hi, double s) {
    if (s <= lo) return 0;
    if (s >= hi) return 1;
    return 2;
}

double fpr_oracle(const ThresholdPair& pair, const Labeled& data) {
    long fp = 0, n0 = 0;
    for (const auto& [s, z] : data) {
        if (z != 0) continue;
        ++n0;
        fp += oracle_decide(pair.lo, pair.hi, s) == 1;
    }
    return static_cast<double>(fp) / static_cast<double>(n0);
}

double one_minus_f1_oracle(const ThresholdPair& pair, const Labeled& data) {
    long tp = 0, fp = 0, fn = 0;
    for (const auto& [s, z] : data) {
        const int d = oracle_decide(pair.lo, pair.hi, s);
        if (d == 1) (z == 1 ? tp : fp)++;
        if (d == 0 && z == 1) ++fn;
    }
    if (tp + fp == 0) return 1.0;
    return 1.0 - 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

// Exhaustive argmin with its own exact-fraction comparison and tie rules.
ThresholdPair select_optimal_oracle(const std::vector<ThresholdPair>& members,
                                    const Labeled& validation) {
    long n1 = 0, n0 = 0;
    for (const auto& [s, z] : validation) (z == 1 ? n1 : n0)++;
    const long n = n1 + n0;

    struct Entry {
        ThresholdPair pair;
        long fn, fp, ab;
    };
    std::vector<Entry> entries;
    for (const auto& pair : members) {
        Entry e{pair, 0, 0, 0};
        for (const auto& [s, z] : validation) {
            const int d = oracle_decide(pair.lo, pair.hi, s);
            if (d == 2) ++e.ab;
            if (d == 0 && z == 1) ++e.fn;
            if (d == 1 && z == 0) ++e.fp;
        }
        entries.push_back(e);
    }
    const auto width = [](const ThresholdPair& p) { return p.lo == p.hi ? 0.0 : p.hi - p.lo; };
    const auto better = [&](const Entry& a, const Entry& b) {
        const __int128 ka = static_cast<__int128>(a.fn) * n0 * n +
                            static_cast<__int128>(a.fp) * n1 * n +
                            static_cast<__int128>(a.ab) * n1 * n0;
        const __int128 kb = static_cast<__int128>(b.fn) * n0 * n +
                            static_cast<__int128>(b.fp) * n1 * n +
                            static_cast<__int128>(b.ab) * n1 * n0;
        if (ka != kb) return ka < kb;
        if (a.ab != b.ab) return a.ab < b.ab;
        if (width(a.pair) != width(b.pair)) return width(a.pair) < width(b.pair);
        if (a.pair.lo != b.pair.lo) return a.pair.lo < b.pair.lo;
        return a.pair.hi < b.pair.hi;
    };
    Entry best = entries.front();
    for (const auto& e : entries)
        if (better(e, best)) best = e;
    return best.pair;
}

Labeled random_labeled(Rng& rng, std::size_t n, double prevalence = 0.3) {
    Labeled out;
    for (std::size_t i = 0; i < n; ++i)
        out.emplace_back(rng.uniform(), rng.uniform() < prevalence ? 1 : 0);
    out.emplace_back(rng.uniform(), 0);
    out.emplace_back(rng.uniform(), 1);
    return out;
}

}  // namespace

TEST_CASE("the three decision regions partition the score axis") {
    CHECK(decide_abstain({0.3, 0.7}, 0.5) == Decision::Abstain);
    CHECK(decide_abstain({-kInf, kInf}, 12345.0) == Decision::Abstain);
    CHECK(decide_abstain({0.5, 0.5}, 0.5) == Decision::Normal);  // first branch wins
    CHECK(decide_abstain({0.3, 0.7}, 0.3) == Decision::Normal);
    CHECK(decide_abstain({0.3, 0.7}, 0.7) == Decision::Anomalous);

    Rng rng(3);
    for (int trial = 0; trial < 300; ++trial) {
        const double a = rng.uniform(), b = rng.uniform();
        const ThresholdPair pair{std::min(a, b), std::max(a, b)};
        const double s = rng.uniform(-0.5, 1.5);
        int regions = 0;
        regions += s <= pair.lo;
        regions += !(s <= pair.lo) && s >= pair.hi;
        regions += pair.lo < s && s < pair.hi;
        CHECK(regions == 1);
    }
}

TEST_CASE("grid on {0,1} with m = 2 yields 10 ordered pairs") {
    const auto grid = build_grid({0.0, 1.0}, 2);
    CHECK(grid.values == std::vector<double>{-kInf, 0.0, 1.0, kInf});
    CHECK(grid.pairs.size() == 10);
    for (const auto& p : grid.pairs) CHECK(p.lo <= p.hi);
}

TEST_CASE("constant scores collapse to a single finite grid value") {
    const auto grid = build_grid({0.4, 0.4, 0.4}, 50);
    CHECK(grid.values == std::vector<double>{-kInf, 0.4, kInf});
    CHECK(grid.pairs.size() == 6);
}

TEST_CASE("grid size matches (m+2)(m+3)/2 on distinct scores") {
    Rng rng(5);
    std::vector<double> scores;
    for (int i = 0; i < 500; ++i) scores.push_back(rng.uniform());
    const int m = 50;
    const auto grid = build_grid(scores, m);
    CHECK(grid.pairs.size() == static_cast<std::size_t>((m + 2) * (m + 3) / 2));
    CHECK_THROWS_AS(build_grid({}, 10), calibration_error);
    CHECK_THROWS_AS(build_grid({0.1}, 1), config_error);
}

TEST_CASE("empirical FPR counts only decided false positives") {
    const RiskSpec spec{RiskKind::FPR, 0.1, 0.1};
    const Labeled normals = {{0.1, 0}, {0.2, 0}, {0.9, 0}};
    CHECK(empirical_risk({-kInf, kInf}, normals, spec) == 0.0);
    CHECK(empirical_risk({0.5, 0.8}, normals, spec) == doctest::Approx(1.0 / 3.0));
    CHECK_THROWS_AS(empirical_risk({0.0, 1.0}, {{0.5, 1}}, spec), calibration_error);
}

TEST_CASE("empirical risks match the per-sample recount oracle") {
    Rng rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        const Labeled data = random_labeled(rng, 20);
        const double a = rng.uniform(-0.2, 1.2), b = rng.uniform(-0.2, 1.2);
        const ThresholdPair pair{std::min(a, b), std::max(a, b)};
        CHECK(empirical_risk(pair, data, {RiskKind::FPR, 0.1, 0.1}) == fpr_oracle(pair, data));
        CHECK(empirical_risk(pair, data, {RiskKind::OneMinusF1, 0.1, 0.1}) ==
              one_minus_f1_oracle(pair, data));
    }
}

TEST_CASE("raising the upper threshold never increases the empirical FPR") {
    Rng rng(11);
    const Labeled data = random_labeled(rng, 200);
    const RiskSpec spec{RiskKind::FPR, 0.1, 0.1};
    const double lo = 0.2;
    double prev = empirical_risk({lo, 0.2}, data, spec);
    for (double hi = 0.25; hi <= 1.2; hi += 0.05) {
        const double risk = empirical_risk({lo, hi}, data, spec);
        CHECK(risk <= prev + 1e-15);
        prev = risk;
    }
}

TEST_CASE("hb p-value spot checks") {
    // Both branches reduce to (1 - alpha)^n at zero empirical risk.
    CHECK(hb_pvalue(0.0, 10, 0.1) == doctest::Approx(std::pow(0.9, 10)).epsilon(1e-12));
    CHECK(hb_pvalue(0.15, 50, 0.1) == 1.0);  // risk above alpha: no evidence
    CHECK(hb_pvalue(0.1, 50, 0.1) == 1.0);
    CHECK(hb_pvalue(0.05, 20, 0.2) ==
          doctest::Approx(hb_pvalue_oracle(0.05, 20, 0.2)).epsilon(1e-12));
    CHECK_THROWS_AS(hb_pvalue(0.5, 0, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(hb_pvalue(1.5, 10, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(hb_pvalue(0.5, 10, 1.5), std::invalid_argument);
}

TEST_CASE("hb p-value equals the exact-summation oracle on a grid") {
    for (long n : {1L, 5L, 10L, 50L, 100L}) {
        for (double alpha : {0.01, 0.1, 0.5, 0.9}) {
            for (int i = 0; i <= 20; ++i) {
                const double r = 0.05 * i;
                CHECK(hb_pvalue(r, n, alpha) ==
                      doctest::Approx(hb_pvalue_oracle(r, n, alpha)).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("hb p-value is nonincreasing in alpha for fixed evidence") {
    for (long n : {5L, 30L, 200L}) {
        for (double r : {0.0, 0.02, 0.1}) {
            double prev = 1.0;
            for (double alpha = 0.0; alpha <= 1.0001; alpha += 0.01) {
                const double p = hb_pvalue(r, n, std::min(alpha, 1.0));
                CHECK(p <= prev + 1e-12);
                prev = p;
            }
        }
    }
}

TEST_CASE("bonferroni cutoff keeps p <= delta / |Lambda|") {
    std::vector<PairDiagnostic> tested;
    for (int i = 0; i < 100; ++i)
        tested.push_back({{static_cast<double>(i), static_cast<double>(i + 1)}, 0.0, 0.5});
    tested[3].p_value = 0.0005;  // in at cutoff 0.001
    tested[7].p_value = 0.002;   // out
    const auto fs = bonferroni_select(tested, 0.1);
    REQUIRE(fs.members.size() == 1);
    CHECK(fs.members[0].lo == 3.0);
    CHECK_FALSE(fs.fallback_used);

    // Independent filter re-scan.
    std::size_t expected = 0;
    for (const auto& d : tested) expected += d.p_value <= 0.1 / tested.size();
    CHECK(fs.members.size() == expected);
}

TEST_CASE("all p-values at 1 trigger the infinite fallback pair") {
    std::vector<PairDiagnostic> tested = {{{0.0, 1.0}, 0.3, 1.0}, {{-kInf, kInf}, 0.0, 1.0}};
    const auto fs = bonferroni_select(tested, 0.1);
    CHECK(fs.fallback_used);
    REQUIRE(fs.members.size() == 1);
    CHECK(fs.members[0].lo == -kInf);
    CHECK(fs.members[0].hi == kInf);
    CHECK(fs.empirical_risks[0] == 0.0);
}

TEST_CASE("fallback-only feasible set returns the infinite pair") {
    FeasibleSet fs;
    fs.fallback_used = true;
    fs.members = {{-kInf, kInf}};
    fs.p_values = {1.0};
    fs.empirical_risks = {0.0};
    const Labeled val = {{0.1, 0}, {0.9, 1}};
    const auto chosen = select_optimal(fs, val);
    CHECK(chosen.lo == -kInf);
    CHECK(chosen.hi == kInf);
    CHECK_THROWS_AS(select_optimal(fs, {{0.1, 0}, {0.2, 0}}), calibration_error);
}

TEST_CASE("a perfectly separating pair wins with objective zero") {
    FeasibleSet fs;
    fs.members = {{-kInf, kInf}, {0.45, 0.55}, {0.2, 0.8}};
    fs.p_values = {0.0, 0.0, 0.0};
    fs.empirical_risks = {0.0, 0.0, 0.0};
    const Labeled val = {{0.1, 0}, {0.3, 0}, {0.7, 1}, {0.9, 1}};
    const auto chosen = select_optimal(fs, val);
    CHECK(chosen.lo == 0.45);
    CHECK(chosen.hi == 0.55);
}

TEST_CASE("select_optimal matches the exhaustive oracle with tie-breaks") {
    Rng rng(13);
    for (int trial = 0; trial < 60; ++trial) {
        FeasibleSet fs;
        const std::size_t n_pairs = 2 + rng.integer(49);
        for (std::size_t i = 0; i < n_pairs; ++i) {
            // Coarse grid induces plenty of exact objective ties.
            double a = 0.1 * static_cast<double>(rng.integer(12));
            double b = 0.1 * static_cast<double>(rng.integer(12));
            if (a > b) std::swap(a, b);
            if (rng.uniform() < 0.1) a = -kInf;
            if (rng.uniform() < 0.1) b = kInf;
            fs.members.push_back({a, b});
            fs.p_values.push_back(0.0);
            fs.empirical_risks.push_back(0.0);
        }
        const Labeled val = random_labeled(rng, 100);
        const auto chosen = select_optimal(fs, val);
        const auto expected = select_optimal_oracle(fs.members, val);
        CHECK(chosen.lo == expected.lo);
        CHECK(chosen.hi == expected.hi);
    }
}

TEST_CASE("separable scores calibrate to a finite risk-controlling pair") {
    Rng rng(17);
    Labeled cal, val;
    for (int i = 0; i < 400; ++i) {
        cal.emplace_back(rng.normal(), 0);
        val.emplace_back(rng.normal(), 0);
        if (i % 10 == 0) {
            cal.emplace_back(8.0 + rng.normal(), 1);
            val.emplace_back(8.0 + rng.normal(), 1);
        }
    }
    const RiskSpec spec{RiskKind::FPR, 0.1, 0.1};
    const auto result = calibrate_xltt(cal, val, spec, 50);
    CHECK_FALSE(result.feasible.fallback_used);
    CHECK(std::isfinite(result.chosen.hi));
    CHECK(empirical_risk(result.chosen, cal, spec) <= 0.1);
}

TEST_CASE("vacuous alpha keeps every low-risk pair feasible, abstention zero") {
    Rng rng(19);
    Labeled cal, val;
    for (int i = 0; i < 100; ++i) {
        cal.emplace_back(rng.uniform(), i % 5 == 0 ? 1 : 0);
        val.emplace_back(rng.uniform(), i % 5 == 0 ? 1 : 0);
    }
    const RiskSpec spec{RiskKind::FPR, 1.0, 0.1};
    const auto result = calibrate_xltt(cal, val, spec, 20);
    CHECK_FALSE(result.feasible.fallback_used);
    // Every tested pair with empirical risk below 1 passes at alpha = 1.
    std::size_t below_one = 0;
    for (const auto& d : result.feasible.diagnostics) below_one += d.risk < 1.0;
    CHECK(result.feasible.members.size() == below_one);
    // The chosen pair abstains on nothing.
    long abst = 0;
    for (const auto& [s, z] : val)
        abst += decide_abstain(result.chosen, s) == Decision::Abstain;
    CHECK(abst == 0);
}

TEST_CASE("three calibration points cannot certify a 1 percent risk") {
    const Labeled cal = {{0.1, 0}, {0.2, 0}, {0.9, 1}};
    const Labeled val = {{0.15, 0}, {0.8, 1}};
    const auto result = calibrate_xltt(cal, val, {RiskKind::FPR, 0.01, 0.01}, 10);
    CHECK(result.feasible.fallback_used);
    CHECK(result.chosen.lo == -kInf);
    CHECK(result.chosen.hi == kInf);
}

TEST_CASE("threshold pair JSON keeps infinities as strings") {
    const ThresholdPair pair{-kInf, 0.75};
    const auto j = pair_to_json(pair);
    CHECK(j["lo"] == "-inf");
    CHECK(j["hi"] == 0.75);
    const auto back = pair_from_json(j);
    CHECK(back.lo == pair.lo);
    CHECK(back.hi == pair.hi);
}

TEST_CASE("calibration document round trip preserves the decision rule") {
    Rng rng(23);
    Labeled cal, val;
    for (int i = 0; i < 200; ++i) {
        const int z = i % 4 == 0 ? 1 : 0;
        cal.emplace_back(z == 1 ? 3.0 + rng.normal() : rng.normal(), z);
        val.emplace_back(z == 1 ? 3.0 + rng.normal() : rng.normal(), z);
    }
    const auto result = calibrate_xltt(cal, val, {RiskKind::FPR, 0.2, 0.1}, 20);
    const auto restored = calibration_from_json(calibration_to_json(result));
    CHECK(restored.chosen.lo == result.chosen.lo);
    CHECK(restored.chosen.hi == result.chosen.hi);
    CHECK(restored.feasible.fallback_used == result.feasible.fallback_used);
    CHECK(restored.feasible.members.size() == result.feasible.members.size());
    CHECK(restored.spec.alpha == result.spec.alpha);
}
