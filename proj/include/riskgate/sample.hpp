#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace riskgate {

enum class AnomalyKind { ColdPanel, HotSpot, SensorDropout, PhaseInconsistent };

const char* to_string(AnomalyKind kind);
std::optional<AnomalyKind> anomaly_kind_from_string(std::string_view name);

// One observation of the plant: a d'-vector of normalized panel temperatures
// plus its (irregular) timestamp. Label/score/decision are filled in by the
// pipeline stages that produce them and stay null before that.
struct ScoredSample {
    double timestamp = 0.0;  // minutes since epoch
    int day_id = 0;
    std::vector<double> features;
    std::optional<int> label;  // 0 normal, 1 anomalous
    std::optional<AnomalyKind> anomaly_kind;
    std::optional<double> score;
    std::optional<std::string> score_kind;  // "dr" or "l"
    std::optional<std::string> decision;    // "normal" / "anomalous" / "abstain"
};

nlohmann::json to_json(const ScoredSample& sample);
ScoredSample sample_from_json(const nlohmann::json& j);

std::vector<ScoredSample> read_jsonl(const std::string& path);
std::string to_jsonl(const std::vector<ScoredSample>& samples);

// Writes via temp file + rename so readers never observe partial output.
void atomic_write_text(const std::string& path, const std::string& content);
void write_jsonl(const std::string& path, const std::vector<ScoredSample>& samples);

}  // namespace riskgate
