#include "riskgate/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "riskgate/errors.hpp"
#include "riskgate/rng.hpp"

namespace riskgate::pipeline {

namespace {
constexpr std::uint64_t kSplitStream = 0x5417ULL;
}

void SplitFractions::validate() const {
    const double parts[4] = {train, validation, calibration, test};
    double sum = 0.0;
    for (double f : parts) {
        if (!(f > 0.0)) throw config_error("split fractions must be positive");
        sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw config_error("split fractions must sum to 1");
}

const char* to_string(Partition partition) {
    switch (partition) {
        case Partition::Train: return "train";
        case Partition::Validation: return "validation";
        case Partition::Calibration: return "calibration";
        case Partition::Test: return "test";
    }
    return "unknown";
}

bool SplitResult::contains(Partition partition, int day_id) const {
    const std::vector<int>* days = nullptr;
    switch (partition) {
        case Partition::Train: days = &train_days; break;
        case Partition::Validation: days = &validation_days; break;
        case Partition::Calibration: days = &calibration_days; break;
        case Partition::Test: days = &test_days; break;
    }
    return std::binary_search(days->begin(), days->end(), day_id);
}

SplitResult split_dataset(const std::vector<int>& day_ids, const SplitFractions& fractions,
                          std::uint64_t seed) {
    fractions.validate();
    std::vector<int> days(day_ids);
    std::sort(days.begin(), days.end());
    days.erase(std::unique(days.begin(), days.end()), days.end());
    const auto n = static_cast<long>(days.size());
    if (n < 4) throw data_error("need at least four days for the four partitions");

    // Seeded Fisher-Yates, then proportional counts from rounded cumulative
    // boundaries so e.g. (0.5, 0.2, 0.2, 0.1) on 100 days gives 50/20/20/10.
    Rng rng(mix_seed(seed, kSplitStream));
    for (long i = n - 1; i > 0; --i) {
        const auto j = static_cast<long>(rng.integer(static_cast<std::uint64_t>(i + 1)));
        std::swap(days[static_cast<std::size_t>(i)], days[static_cast<std::size_t>(j)]);
    }

    const double cum[4] = {fractions.train, fractions.train + fractions.validation,
                           fractions.train + fractions.validation + fractions.calibration, 1.0};
    long bounds[4];
    for (int i = 0; i < 4; ++i) bounds[i] = std::lround(cum[i] * static_cast<double>(n));
    bounds[3] = n;

    SplitResult split;
    std::vector<int>* outs[4] = {&split.train_days, &split.validation_days,
                                 &split.calibration_days, &split.test_days};
    long at = 0;
    for (int i = 0; i < 4; ++i) {
        for (; at < bounds[i]; ++at) outs[i]->push_back(days[static_cast<std::size_t>(at)]);
        if (outs[i]->empty())
            throw data_error("too few days: empty " + std::string(to_string(static_cast<Partition>(i))) +
                             " partition");
        std::sort(outs[i]->begin(), outs[i]->end());
    }
    return split;
}

std::vector<ScoredSample> filter_partition(const std::vector<ScoredSample>& samples,
                                           const SplitResult& split, Partition partition) {
    std::vector<ScoredSample> out;
    for (const auto& s : samples)
        if (split.contains(partition, s.day_id)) out.push_back(s);
    return out;
}

std::vector<ScoredSample> clean_training_set(const std::vector<ScoredSample>& samples,
                                             const SplitResult& split) {
    std::vector<ScoredSample> out;
    for (const auto& s : samples) {
        if (!split.contains(Partition::Train, s.day_id)) continue;
        if (s.label && *s.label == 1) continue;
        ScoredSample copy = s;
        copy.label.reset();
        copy.anomaly_kind.reset();
        out.push_back(std::move(copy));
    }
    return out;
}

std::string RunConfig::path(const std::string& key) const {
    const auto it = paths.find(key);
    if (it != paths.end()) return it->second;
    static const std::map<std::string, std::string> defaults = {
        {"dataset", "data.jsonl"},   {"model", "model.json"},
        {"scored", "scored.jsonl"},  {"threshold", "threshold.json"},
        {"decisions", "decided.jsonl"}, {"report", "report.json"}};
    const auto d = defaults.find(key);
    if (d == defaults.end()) throw config_error("unknown path key: " + key);
    return d->second;
}

RunConfig RunConfig::from_json(const nlohmann::json& j) {
    RunConfig c;
    try {
        if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("generator")) c.generator = synth::config_from_json(j["generator"]);
        if (j.contains("scorer")) c.scorer = scorer::scorer_config_from_json(j["scorer"]);
        if (j.contains("risk")) {
            const auto& r = j["risk"];
            if (r.contains("kind"))
                c.risk.kind = risk::risk_kind_from_string(r["kind"].get<std::string>());
            if (r.contains("alpha")) c.risk.alpha = r["alpha"].get<double>();
            if (r.contains("delta")) c.risk.delta = r["delta"].get<double>();
        }
        if (j.contains("splits")) {
            const auto& s = j["splits"];
            if (s.contains("train")) c.splits.train = s["train"].get<double>();
            if (s.contains("validation")) c.splits.validation = s["validation"].get<double>();
            if (s.contains("calibration")) c.splits.calibration = s["calibration"].get<double>();
            if (s.contains("test")) c.splits.test = s["test"].get<double>();
        }
        if (j.contains("method")) c.method = j["method"].get<std::string>();
        if (j.contains("grid_size")) c.grid_size = j["grid_size"].get<int>();
        if (j.contains("zscore_k")) c.zscore_k = j["zscore_k"].get<double>();
        if (j.contains("score"))
            c.score_kind = scorer::score_kind_from_string(j["score"].get<std::string>());
        if (j.contains("shared_cal_val")) c.shared_cal_val = j["shared_cal_val"].get<bool>();
        if (j.contains("mc_replications")) c.mc_replications = j["mc_replications"].get<int>();
        if (j.contains("deploy_months")) c.deploy_months = j["deploy_months"].get<int>();
        if (j.contains("deploy_recalibrate"))
            c.deploy_recalibrate = j["deploy_recalibrate"].get<bool>();
        if (j.contains("paths"))
            for (const auto& [key, value] : j["paths"].items())
                c.paths[key] = value.get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("bad run config: ") + e.what());
    }
    c.risk.validate();
    c.splits.validate();
    // The run seed drives generation; keep the generator stream aligned.
    c.generator.seed = c.seed;
    return c;
}

nlohmann::json RunConfig::to_json() const {
    nlohmann::json j{{"seed", seed},
                     {"generator", synth::config_to_json(generator)},
                     {"scorer", scorer::config_to_json(scorer)},
                     {"risk",
                      {{"kind", risk::to_string(risk.kind)},
                       {"alpha", risk.alpha},
                       {"delta", risk.delta}}},
                     {"splits",
                      {{"train", splits.train},
                       {"validation", splits.validation},
                       {"calibration", splits.calibration},
                       {"test", splits.test}}},
                     {"method", method},
                     {"grid_size", grid_size},
                     {"zscore_k", zscore_k},
                     {"score", scorer::to_string(score_kind)},
                     {"shared_cal_val", shared_cal_val},
                     {"mc_replications", mc_replications},
                     {"deploy_months", deploy_months},
                     {"deploy_recalibrate", deploy_recalibrate}};
    if (!paths.empty()) {
        nlohmann::json p;
        for (const auto& [key, value] : paths) p[key] = value;
        j["paths"] = p;
    }
    return j;
}

void apply_dotted_override(nlohmann::json& config, const std::string& key,
                           const std::string& value) {
    nlohmann::json* node = &config;
    std::size_t start = 0;
    while (true) {
        const std::size_t dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos
                                                       ? std::string::npos
                                                       : dot - start);
        if (part.empty()) throw config_error("bad override key: " + key);
        if (dot == std::string::npos) {
            nlohmann::json parsed = nlohmann::json::parse(value, nullptr, false);
            (*node)[part] = parsed.is_discarded() ? nlohmann::json(value) : parsed;
            return;
        }
        node = &(*node)[part];
        start = dot + 1;
    }
}

nlohmann::json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open " + path);
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw data_error(path + ": invalid JSON");
    return j;
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
    atomic_write_text(path, j.dump(2) + "\n");
}

risk::Labeled scored_labeled(const std::vector<ScoredSample>& samples) {
    risk::Labeled out;
    out.reserve(samples.size());
    for (const auto& s : samples) {
        if (!s.score) throw data_error("sample missing score");
        if (!s.label) throw data_error("sample missing label");
        out.emplace_back(*s.score, *s.label);
    }
    return out;
}

}  // namespace riskgate::pipeline
