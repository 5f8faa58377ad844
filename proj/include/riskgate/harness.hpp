#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "riskgate/baselines.hpp"
#include "riskgate/metrics.hpp"
#include "riskgate/risk_control.hpp"
#include "riskgate/scorer.hpp"
#include "riskgate/synth.hpp"

namespace riskgate::eval {

enum class CalibMethod { XLTT, F1, GMean, ZScore };

const char* to_string(CalibMethod method);
CalibMethod calib_method_from_string(std::string_view name);

struct McOptions {
    int n_cal = 500;
    int n_val = 500;
    int pool_size = 50000;
    int train_days = 30;
    int grid_size = 50;
    double zscore_k = 3.0;
    scorer::ScoreKind score_kind = scorer::ScoreKind::DR;
    bool shared_cal_val = false;  // validation set also serves as calibration
};

struct McReplicationRow {
    int replication = 0;
    double true_risk = 0.0;
    double abstention_rate = 0.0;
    double f1 = 0.0;
    bool fallback = false;
    bool violated = false;
};

struct McReport {
    risk::RiskSpec spec;
    CalibMethod method = CalibMethod::XLTT;
    int replications = 0;
    double violation_fraction = 0.0;
    double mean_risk = 0.0;
    double mean_abstention = 0.0;
    double mean_f1 = 0.0;
    double fallback_fraction = 0.0;
    std::vector<McReplicationRow> rows;

    nlohmann::json to_json() const;
};

// Monte Carlo coverage check of the RCPS guarantee. The scorer is fitted
// once on a fixed clean training split; each replication then redraws
// calibration/validation data from fresh generator days, calibrates with
// `method`, and measures the true risk of the resulting decision rule on a
// fixed held-out pool of >= pool_size samples. Calibration errors inside a
// replication count as fallback outcomes rather than crashing the run.
// Reproducible: each replication derives its stream from (seed, index).
McReport mc_validate(const synth::GeneratorConfig& generator_config,
                     const scorer::ScorerConfig& scorer_config,
                     const risk::RiskSpec& spec, CalibMethod method,
                     int replications, std::uint64_t seed,
                     const McOptions& options = {});

struct DeploymentWindow {
    int window_id = 0;
    std::pair<int, int> calibration_days{0, 0};  // inclusive day-id range
    std::pair<int, int> evaluation_days{0, 0};
    bool fallback_used = false;
    MetricReport report;
};

struct DeployOptions {
    CalibMethod method = CalibMethod::XLTT;
    int grid_size = 50;
    double zscore_k = 3.0;
    bool recalibrate = false;  // re-run calibration on the trailing month
    bool shared_cal_val = false;
};

// Rolling month-by-month evaluation: month 0 (30 consecutive day ids,
// relative to the earliest day present) calibrates, months 1..months are
// evaluated with fixed thresholds unless recalibrate is set. Samples must
// already carry scores.
std::vector<DeploymentWindow> deploy_sim_rolling(const std::vector<ScoredSample>& scored,
                                                 const risk::RiskSpec& spec, int months,
                                                 const DeployOptions& options = {});

nlohmann::json deployment_to_json(const std::vector<DeploymentWindow>& windows);
std::string deployment_to_csv(const std::vector<DeploymentWindow>& windows);

}  // namespace riskgate::eval
