#include "riskgate/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "riskgate/errors.hpp"

namespace riskgate::thresholds {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double f1_from_counts(long tp, long fp, long fn) {
    if (tp + fp == 0) return 0.0;  // no predicted positives
    const double denom = static_cast<double>(2 * tp + fp + fn);
    if (denom == 0.0) return 0.0;
    return 2.0 * static_cast<double>(tp) / denom;
}

double gmean_from_counts(long tp, long fp, long n1) {
    if (tp + fp == 0 || n1 == 0) return 0.0;
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double recall = static_cast<double>(tp) / static_cast<double>(n1);
    return std::sqrt(precision * recall);
}

// Sweep over candidate thresholds (midpoints between consecutive distinct
// sorted scores, plus +/- infinity) in ascending order; first argmax wins.
SingleThreshold sweep(const Labeled& validation, BaselineMethod method) {
    long n1 = 0, n0 = 0;
    for (const auto& [s, z] : validation) (z == 1 ? n1 : n0)++;
    if (n1 == 0 || n0 == 0)
        throw calibration_error("validation set must contain both classes");

    Labeled sorted = validation;
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    // At lambda = -inf everything is predicted positive.
    long tp = n1, fp = n0;
    const auto objective = [&](long tp_, long fp_) {
        return method == BaselineMethod::F1 ? f1_from_counts(tp_, fp_, n1 - tp_)
                                            : gmean_from_counts(tp_, fp_, n1);
    };

    double best_lambda = -kInf;
    double best_value = objective(tp, fp);

    std::size_t i = 0;
    while (i < sorted.size()) {
        // Consume the tie block at sorted[i]; scores <= lambda flip to negative.
        const double value = sorted[i].first;
        while (i < sorted.size() && sorted[i].first == value) {
            (sorted[i].second == 1 ? tp : fp)--;
            ++i;
        }
        const double lambda =
            i < sorted.size() ? 0.5 * (value + sorted[i].first) : kInf;
        // Adjacent representable doubles can round the midpoint onto an
        // endpoint, where these counts would not apply; skip those.
        if (lambda == value || (i < sorted.size() && lambda == sorted[i].first)) continue;
        const double obj = objective(tp, fp);
        if (obj > best_value) {
            best_value = obj;
            best_lambda = lambda;
        }
    }

    SingleThreshold t;
    t.method = method;
    t.lambda = best_lambda;
    return t;
}

long count_above(const Labeled& validation, double lambda, int label) {
    long count = 0;
    for (const auto& [s, z] : validation)
        if (z == label && s > lambda) ++count;
    return count;
}

}  // namespace

const char* to_string(BaselineMethod method) {
    switch (method) {
        case BaselineMethod::F1: return "f1";
        case BaselineMethod::GMean: return "gmean";
        case BaselineMethod::ZScore: return "zscore";
    }
    return "unknown";
}

BaselineMethod baseline_method_from_string(std::string_view name) {
    if (name == "f1") return BaselineMethod::F1;
    if (name == "gmean") return BaselineMethod::GMean;
    if (name == "zscore") return BaselineMethod::ZScore;
    throw config_error("unknown baseline method: " + std::string(name));
}

SingleThreshold threshold_f1(const Labeled& validation) {
    return sweep(validation, BaselineMethod::F1);
}

SingleThreshold threshold_gmean(const Labeled& validation) {
    return sweep(validation, BaselineMethod::GMean);
}

SingleThreshold threshold_zscore(const std::vector<double>& validation_normals, double k) {
    if (validation_normals.size() < 2)
        throw calibration_error("z-score needs at least two normal scores");
    const double n = static_cast<double>(validation_normals.size());
    double mean = 0.0;
    for (double s : validation_normals) mean += s;
    mean /= n;
    double var = 0.0;
    for (double s : validation_normals) var += (s - mean) * (s - mean);
    var /= n;  // population variance
    if (!(var > 0.0)) throw calibration_error("z-score needs nonzero score variance");

    SingleThreshold t;
    t.method = BaselineMethod::ZScore;
    t.zscore_k = k;
    t.mu_s = mean;
    t.sigma_s = std::sqrt(var);
    t.lambda = mean + k * t.sigma_s.value();  // informational; decision uses z-scores
    return t;
}

int decide_single(const SingleThreshold& threshold, double score) {
    if (threshold.method == BaselineMethod::ZScore) {
        const double z = std::abs((score - threshold.mu_s.value()) / threshold.sigma_s.value());
        return z > threshold.zscore_k.value() ? 1 : 0;
    }
    return score <= threshold.lambda ? 0 : 1;
}

double f1_at(const Labeled& validation, double lambda) {
    long n1 = 0;
    for (const auto& [s, z] : validation) n1 += z == 1;
    const long tp = count_above(validation, lambda, 1);
    const long fp = count_above(validation, lambda, 0);
    return f1_from_counts(tp, fp, n1 - tp);
}

double gmean_at(const Labeled& validation, double lambda) {
    long n1 = 0;
    for (const auto& [s, z] : validation) n1 += z == 1;
    return gmean_from_counts(count_above(validation, lambda, 1),
                             count_above(validation, lambda, 0), n1);
}

nlohmann::json to_json(const SingleThreshold& threshold) {
    nlohmann::json j{{"method", to_string(threshold.method)}, {"lambda", threshold.lambda}};
    if (threshold.zscore_k) j["k"] = *threshold.zscore_k;
    if (threshold.mu_s) j["mu"] = *threshold.mu_s;
    if (threshold.sigma_s) j["sigma"] = *threshold.sigma_s;
    return j;
}

SingleThreshold single_threshold_from_json(const nlohmann::json& j) {
    SingleThreshold t;
    try {
        t.method = baseline_method_from_string(j.at("method").get<std::string>());
        t.lambda = j.at("lambda").get<double>();
        if (j.contains("k")) t.zscore_k = j["k"].get<double>();
        if (j.contains("mu")) t.mu_s = j["mu"].get<double>();
        if (j.contains("sigma")) t.sigma_s = j["sigma"].get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw data_error(std::string("malformed threshold document: ") + e.what());
    }
    if (t.method == BaselineMethod::ZScore && (!t.zscore_k || !t.mu_s || !t.sigma_s))
        throw data_error("z-score threshold document missing k/mu/sigma");
    return t;
}

}  // namespace riskgate::thresholds
