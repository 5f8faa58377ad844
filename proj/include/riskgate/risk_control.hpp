#pragma once

#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace riskgate::risk {

// Paired decision thresholds; either endpoint may be infinite.
struct ThresholdPair {
    double lo;  // lambda^l
    double hi;  // lambda^h

    bool operator==(const ThresholdPair&) const = default;
};

enum class Decision { Normal, Anomalous, Abstain };

const char* to_string(Decision decision);
Decision decision_from_string(std::string_view name);

// Normal if s <= lo; else Anomalous if s >= hi; else Abstain. The branches
// are evaluated in this order, so lo == hi == s resolves to Normal.
Decision decide_abstain(const ThresholdPair& pair, double score);

struct ThresholdGrid {
    std::vector<double> values;        // deduplicated finite quantiles + both infinities
    std::vector<ThresholdPair> pairs;  // all ordered pairs lo <= hi
};

// m empirical quantiles at levels j/(m-1) (linear interpolation between
// order statistics), then -inf/+inf appended and all ordered pairs formed.
ThresholdGrid build_grid(const std::vector<double>& calibration_scores, int m);

enum class RiskKind { FPR, OneMinusF1 };

const char* to_string(RiskKind kind);
RiskKind risk_kind_from_string(std::string_view name);

struct RiskSpec {
    RiskKind kind = RiskKind::FPR;
    double alpha = 0.1;
    double delta = 0.1;

    void validate() const;
};

using Labeled = std::vector<std::pair<double, int>>;

// FPR: fraction of true normals decided Anomalous (abstentions are neither
// false positives nor true negatives here). OneMinusF1: 1 - F1 over decided
// samples only; zero decided-anomalous means F1 = 0, risk = 1.
double empirical_risk(const ThresholdPair& pair, const Labeled& calibration,
                      const RiskSpec& spec);

// Hoeffding-Bentkus p-value for H: R > alpha given mean of n bounded losses:
//   min(1, exp(-n h1(min(r, alpha), alpha)), e * BinCDF(ceil(n r); n, alpha)).
double hb_pvalue(double empirical_risk, long n, double alpha);

struct PairDiagnostic {
    ThresholdPair pair;
    double risk;
    double p_value;
};

struct FeasibleSet {
    std::vector<ThresholdPair> members;
    std::vector<double> p_values;        // aligned with members
    std::vector<double> empirical_risks; // aligned with members
    bool fallback_used = false;
    std::vector<PairDiagnostic> diagnostics;  // every tested pair
};

// Keeps pairs with p <= delta / |tested|; when none pass, the output is the
// abstain-everything pair (-inf, +inf) with fallback_used set.
FeasibleSet bonferroni_select(const std::vector<PairDiagnostic>& tested, double delta);

// argmin over members of FNR + FPR + AbstentionRate on the validation set.
// FNR counts only decided-normal anomalies; its denominator is all anomalies.
// Comparisons are exact (shared integer denominators), ties broken by
// smaller abstention count, then smaller hi - lo, then lexicographic (lo, hi).
ThresholdPair select_optimal(const FeasibleSet& feasible, const Labeled& validation);

struct CalibrationResult {
    ThresholdPair chosen;
    FeasibleSet feasible;
    RiskSpec spec;
    int grid_size = 0;
};

CalibrationResult calibrate_xltt(const Labeled& calibration, const Labeled& validation,
                                 const RiskSpec& spec, int m);

// Threshold document I/O; infinities serialize as strings "-inf" / "+inf".
nlohmann::json pair_to_json(const ThresholdPair& pair);
ThresholdPair pair_from_json(const nlohmann::json& j);
nlohmann::json calibration_to_json(const CalibrationResult& result);
CalibrationResult calibration_from_json(const nlohmann::json& j);

}  // namespace riskgate::risk
