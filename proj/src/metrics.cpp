#include "riskgate/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "riskgate/errors.hpp"

namespace riskgate::eval {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

double ConfusionWithAbstain::fpr() const {
    return normals() == 0 ? 0.0 : static_cast<double>(fp) / static_cast<double>(normals());
}

double ConfusionWithAbstain::fnr() const {
    return anomalies() == 0 ? 0.0 : static_cast<double>(fn) / static_cast<double>(anomalies());
}

double ConfusionWithAbstain::f1() const {
    if (tp + fp == 0) return 0.0;
    const double denom = static_cast<double>(2 * tp + fp + fn);
    return denom == 0.0 ? 0.0 : 2.0 * static_cast<double>(tp) / denom;
}

double ConfusionWithAbstain::gmean() const {
    if (tp + fp == 0 || tp + fn == 0) return 0.0;
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    return std::sqrt(precision * recall);
}

double ConfusionWithAbstain::abstention_rate() const {
    const long n = total();
    return n == 0 ? 0.0
                  : static_cast<double>(abstain_normal + abstain_anomalous) /
                        static_cast<double>(n);
}

ConfusionWithAbstain confusion(const std::vector<std::pair<risk::Decision, int>>& decisions) {
    ConfusionWithAbstain c;
    for (const auto& [decision, label] : decisions) {
        if (label != 0 && label != 1) throw data_error("labels must be 0 or 1");
        switch (decision) {
            case risk::Decision::Normal:
                (label == 1 ? c.fn : c.tn)++;
                break;
            case risk::Decision::Anomalous:
                (label == 1 ? c.tp : c.fp)++;
                break;
            case risk::Decision::Abstain:
                (label == 1 ? c.abstain_anomalous : c.abstain_normal)++;
                break;
        }
    }
    return c;
}

double auroc(const std::vector<std::pair<double, int>>& scores_labels) {
    long n1 = 0, n0 = 0;
    for (const auto& [s, z] : scores_labels) (z == 1 ? n1 : n0)++;
    if (n1 == 0 || n0 == 0) throw metric_error("AUROC needs both classes");

    std::vector<std::size_t> order(scores_labels.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores_labels[a].first < scores_labels[b].first;
    });

    // Mann-Whitney via average ranks; tie blocks share their mean rank,
    // which contributes the 1/2 per tied cross-class pair.
    double positive_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() &&
               scores_labels[order[j]].first == scores_labels[order[i]].first)
            ++j;
        const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
        for (std::size_t k = i; k < j; ++k)
            if (scores_labels[order[k]].second == 1) positive_rank_sum += avg_rank;
        i = j;
    }
    const double u = positive_rank_sum - 0.5 * static_cast<double>(n1) * (n1 + 1);
    return u / (static_cast<double>(n1) * static_cast<double>(n0));
}

double aupr(const std::vector<std::pair<double, int>>& scores_labels) {
    long positives = 0;
    for (const auto& [s, z] : scores_labels) positives += z == 1;
    if (positives == 0) throw metric_error("AUPR needs at least one positive");

    std::vector<std::size_t> order(scores_labels.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scores_labels[a].first > scores_labels[b].first;
    });

    // Average precision, descending scores, ties as one block: each block
    // contributes precision-after-block times its recall increment.
    double ap = 0.0;
    long cum_tp = 0, cum = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        long block_tp = 0;
        while (j < order.size() &&
               scores_labels[order[j]].first == scores_labels[order[i]].first) {
            block_tp += scores_labels[order[j]].second == 1;
            ++j;
        }
        cum_tp += block_tp;
        cum += static_cast<long>(j - i);
        if (block_tp > 0) {
            const double precision = static_cast<double>(cum_tp) / static_cast<double>(cum);
            ap += precision * static_cast<double>(block_tp) / static_cast<double>(positives);
        }
        i = j;
    }
    return ap;
}

nlohmann::json MetricReport::to_json() const {
    // Undefined ranking metrics (single-class slices) become explicit nulls.
    const auto opt = [](double v) {
        return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
    };
    return nlohmann::json{{"fpr", fpr},
                          {"fnr", fnr},
                          {"f1", f1},
                          {"gmean", gmean},
                          {"abstention_rate", abstention_rate},
                          {"auroc", opt(auroc)},
                          {"aupr", opt(aupr)},
                          {"risk_value", risk_value},
                          {"risk_kind", risk::to_string(risk_kind)},
                          {"f1_convention", "decided_only"}};
}

MetricReport evaluate(const std::vector<double>& scores,
                      const std::vector<risk::Decision>& decisions,
                      const std::vector<int>& labels, risk::RiskKind risk_kind) {
    if (scores.size() != decisions.size() || scores.size() != labels.size())
        throw data_error("scores/decisions/labels must be aligned");

    std::vector<std::pair<risk::Decision, int>> pairs;
    std::vector<std::pair<double, int>> ranked;
    pairs.reserve(scores.size());
    ranked.reserve(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        pairs.emplace_back(decisions[i], labels[i]);
        ranked.emplace_back(scores[i], labels[i]);
    }

    const ConfusionWithAbstain c = confusion(pairs);
    MetricReport report;
    report.fpr = c.fpr();
    report.fnr = c.fnr();
    report.f1 = c.f1();
    report.gmean = c.gmean();
    report.abstention_rate = c.abstention_rate();
    try {
        report.auroc = auroc(ranked);
    } catch (const metric_error&) {
        report.auroc = kNaN;
    }
    try {
        report.aupr = aupr(ranked);
    } catch (const metric_error&) {
        report.aupr = kNaN;
    }
    report.risk_kind = risk_kind;
    report.risk_value = risk_kind == risk::RiskKind::FPR ? report.fpr : 1.0 - report.f1;
    return report;
}

}  // namespace riskgate::eval
