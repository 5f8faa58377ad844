#pragma once

#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace riskgate::thresholds {

enum class BaselineMethod { F1, GMean, ZScore };

const char* to_string(BaselineMethod method);
BaselineMethod baseline_method_from_string(std::string_view name);

struct SingleThreshold {
    BaselineMethod method = BaselineMethod::F1;
    double lambda = 0.0;  // for ZScore the cutoff lives in zscore_k instead
    std::optional<double> zscore_k;
    std::optional<double> mu_s;
    std::optional<double> sigma_s;
};

// (score, label) pairs, label in {0, 1}.
using Labeled = std::vector<std::pair<double, int>>;

// Candidate thresholds: midpoints between consecutive distinct sorted scores
// plus -inf and +inf; returns the smallest candidate attaining the maximum.
SingleThreshold threshold_f1(const Labeled& validation);
SingleThreshold threshold_gmean(const Labeled& validation);

// mu/sigma are the mean and population standard deviation of the normal
// scores; flags anomalous when |s - mu| / sigma > k (strict).
SingleThreshold threshold_zscore(const std::vector<double>& validation_normals, double k);

// 0 if s <= lambda (or z-score <= k), else 1.
int decide_single(const SingleThreshold& threshold, double score);

// Objective value at an arbitrary lambda, exposed for the argmax property
// tests. predicted positive := score > lambda.
double f1_at(const Labeled& validation, double lambda);
double gmean_at(const Labeled& validation, double lambda);

nlohmann::json to_json(const SingleThreshold& threshold);
SingleThreshold single_threshold_from_json(const nlohmann::json& j);

}  // namespace riskgate::thresholds
