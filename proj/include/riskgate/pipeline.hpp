#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "riskgate/harness.hpp"
#include "riskgate/risk_control.hpp"
#include "riskgate/sample.hpp"
#include "riskgate/scorer.hpp"
#include "riskgate/synth.hpp"

namespace riskgate::pipeline {

struct SplitFractions {
    double train = 0.5;
    double validation = 0.2;
    double calibration = 0.2;
    double test = 0.1;

    void validate() const;  // positive, sum to 1 within 1e-9
};

enum class Partition { Train, Validation, Calibration, Test };

const char* to_string(Partition partition);

// Day-level assignment so temporal context never leaks across partitions.
struct SplitResult {
    std::vector<int> train_days;
    std::vector<int> validation_days;
    std::vector<int> calibration_days;
    std::vector<int> test_days;

    bool contains(Partition partition, int day_id) const;
};

SplitResult split_dataset(const std::vector<int>& day_ids, const SplitFractions& fractions,
                          std::uint64_t seed);

std::vector<ScoredSample> filter_partition(const std::vector<ScoredSample>& samples,
                                           const SplitResult& split, Partition partition);

// D_N: training-partition samples with anomalous rows removed and labels
// stripped (unlabeled rows are kept as-is).
std::vector<ScoredSample> clean_training_set(const std::vector<ScoredSample>& samples,
                                             const SplitResult& split);

struct RunConfig {
    std::uint64_t seed = 42;
    synth::GeneratorConfig generator;
    scorer::ScorerConfig scorer;
    risk::RiskSpec risk;
    SplitFractions splits;
    std::string method = "xltt";  // xltt | f1 | gmean | zscore
    int grid_size = 50;
    double zscore_k = 3.0;
    scorer::ScoreKind score_kind = scorer::ScoreKind::DR;
    bool shared_cal_val = false;
    int mc_replications = 500;
    int deploy_months = 6;
    bool deploy_recalibrate = false;
    std::map<std::string, std::string> paths;  // stage file defaults

    std::string path(const std::string& key) const;

    static RunConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

// Applies "a.b.c" = value on top of a config document; values parse as JSON
// scalars when possible and fall back to strings.
void apply_dotted_override(nlohmann::json& config, const std::string& key,
                           const std::string& value);

nlohmann::json load_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& j);

// (score, label) pairs for the labeled+scored subset; throws data_error if a
// sample lacks either field.
risk::Labeled scored_labeled(const std::vector<ScoredSample>& samples);

}  // namespace riskgate::pipeline
