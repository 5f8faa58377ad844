#include "riskgate/sample.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "riskgate/errors.hpp"

namespace riskgate {

const char* to_string(AnomalyKind kind) {
    switch (kind) {
        case AnomalyKind::ColdPanel: return "cold_panel";
        case AnomalyKind::HotSpot: return "hot_spot";
        case AnomalyKind::SensorDropout: return "sensor_dropout";
        case AnomalyKind::PhaseInconsistent: return "phase_inconsistent";
    }
    return "unknown";
}

std::optional<AnomalyKind> anomaly_kind_from_string(std::string_view name) {
    if (name == "cold_panel") return AnomalyKind::ColdPanel;
    if (name == "hot_spot") return AnomalyKind::HotSpot;
    if (name == "sensor_dropout") return AnomalyKind::SensorDropout;
    if (name == "phase_inconsistent") return AnomalyKind::PhaseInconsistent;
    return std::nullopt;
}

nlohmann::json to_json(const ScoredSample& sample) {
    nlohmann::json j;
    j["timestamp"] = sample.timestamp;
    j["day_id"] = sample.day_id;
    j["features"] = sample.features;
    j["label"] = sample.label ? nlohmann::json(*sample.label) : nlohmann::json(nullptr);
    j["anomaly_kind"] = sample.anomaly_kind ? nlohmann::json(to_string(*sample.anomaly_kind))
                                            : nlohmann::json(nullptr);
    j["score"] = sample.score ? nlohmann::json(*sample.score) : nlohmann::json(nullptr);
    if (sample.score_kind) j["score_kind"] = *sample.score_kind;
    if (sample.decision) j["decision"] = *sample.decision;
    return j;
}

ScoredSample sample_from_json(const nlohmann::json& j) {
    ScoredSample s;
    try {
        s.timestamp = j.at("timestamp").get<double>();
        s.day_id = j.at("day_id").get<int>();
        s.features = j.at("features").get<std::vector<double>>();
        if (j.contains("label") && !j["label"].is_null()) s.label = j["label"].get<int>();
        if (j.contains("anomaly_kind") && !j["anomaly_kind"].is_null()) {
            auto kind = anomaly_kind_from_string(j["anomaly_kind"].get<std::string>());
            if (!kind) throw data_error("unknown anomaly_kind: " + j["anomaly_kind"].get<std::string>());
            s.anomaly_kind = kind;
        }
        if (j.contains("score") && !j["score"].is_null()) s.score = j["score"].get<double>();
        if (j.contains("score_kind") && !j["score_kind"].is_null())
            s.score_kind = j["score_kind"].get<std::string>();
        if (j.contains("decision") && !j["decision"].is_null())
            s.decision = j["decision"].get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw data_error(std::string("malformed sample record: ") + e.what());
    }
    return s;
}

std::vector<ScoredSample> read_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open " + path);
    std::vector<ScoredSample> samples;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw data_error(path + ":" + std::to_string(lineno) + ": invalid JSON");
        samples.push_back(sample_from_json(j));
    }
    return samples;
}

std::string to_jsonl(const std::vector<ScoredSample>& samples) {
    std::ostringstream out;
    for (const auto& s : samples) out << to_json(s).dump() << '\n';
    return out.str();
}

void atomic_write_text(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw data_error("cannot write " + tmp);
        out << content;
        if (!out.flush()) throw data_error("short write to " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw data_error("cannot rename " + tmp + " to " + path + ": " + ec.message());
    }
}

void write_jsonl(const std::string& path, const std::vector<ScoredSample>& samples) {
    atomic_write_text(path, to_jsonl(samples));
}

}  // namespace riskgate
