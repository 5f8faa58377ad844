#pragma once

#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "riskgate/risk_control.hpp"

namespace riskgate::eval {

struct ConfusionWithAbstain {
    long tp = 0;
    long fp = 0;
    long tn = 0;
    long fn = 0;
    long abstain_normal = 0;
    long abstain_anomalous = 0;

    long total() const { return tp + fp + tn + fn + abstain_normal + abstain_anomalous; }
    long normals() const { return fp + tn + abstain_normal; }
    long anomalies() const { return tp + fn + abstain_anomalous; }

    // Denominators include the abstained members of each class; degenerate
    // denominators yield 0.
    double fpr() const;
    double fnr() const;
    // F1 and G-Mean over decided samples only (the convention recorded in
    // report metadata); G-Mean is sqrt(precision * recall).
    double f1() const;
    double gmean() const;
    double abstention_rate() const;
};

ConfusionWithAbstain confusion(const std::vector<std::pair<risk::Decision, int>>& decisions);

// Mann-Whitney statistic; ties contribute 1/2. Throws metric_error unless
// both classes are present.
double auroc(const std::vector<std::pair<double, int>>& scores_labels);

// Average precision with descending-score tie blocks. Throws metric_error
// when there is no positive.
double aupr(const std::vector<std::pair<double, int>>& scores_labels);

struct MetricReport {
    double fpr = 0.0;
    double fnr = 0.0;
    double f1 = 0.0;
    double gmean = 0.0;
    double abstention_rate = 0.0;
    double auroc = 0.0;  // NaN when undefined (single-class input)
    double aupr = 0.0;   // NaN when undefined (no positives)
    double risk_value = 0.0;
    risk::RiskKind risk_kind = risk::RiskKind::FPR;

    nlohmann::json to_json() const;
};

// Full report from aligned (score, decision, label) triples. auroc/aupr are
// NaN when undefined instead of throwing, so deployment windows with a
// single-class month still report their confusion metrics.
MetricReport evaluate(const std::vector<double>& scores,
                      const std::vector<risk::Decision>& decisions,
                      const std::vector<int>& labels, risk::RiskKind risk_kind);

}  // namespace riskgate::eval
