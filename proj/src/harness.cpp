#include "riskgate/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "riskgate/errors.hpp"
#include "riskgate/rng.hpp"

namespace riskgate::eval {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Reserved day-id ranges so training, pool and replication data never share
// a generator stream.
constexpr int kPoolBaseDay = 1'000'000;
constexpr int kReplicationBaseDay = 2'000'000;
constexpr int kReplicationDayStride = 64;

// A calibrated decision rule; single thresholds become the degenerate pair
// (lambda, lambda), which never abstains and sends s <= lambda to Normal.
struct DecisionRule {
    risk::ThresholdPair pair{-kInf, kInf};
    bool is_zscore = false;
    double mu = 0.0;
    double sigma = 1.0;
    double k = 3.0;
    bool fallback = false;

    risk::Decision decide(double score) const {
        if (is_zscore)
            return std::abs((score - mu) / sigma) > k ? risk::Decision::Anomalous
                                                      : risk::Decision::Normal;
        return risk::decide_abstain(pair, score);
    }
};

DecisionRule abstain_all_rule() {
    DecisionRule rule;
    rule.fallback = true;
    return rule;
}

DecisionRule calibrate_rule(CalibMethod method, const risk::Labeled& calibration,
                            const risk::Labeled& validation, const risk::RiskSpec& spec,
                            int grid_size, double zscore_k) {
    DecisionRule rule;
    switch (method) {
        case CalibMethod::XLTT: {
            const auto result = risk::calibrate_xltt(calibration, validation, spec, grid_size);
            rule.pair = result.chosen;
            rule.fallback = result.feasible.fallback_used;
            break;
        }
        case CalibMethod::F1:
        case CalibMethod::GMean: {
            const auto t = method == CalibMethod::F1 ? thresholds::threshold_f1(validation)
                                                     : thresholds::threshold_gmean(validation);
            rule.pair = risk::ThresholdPair{t.lambda, t.lambda};
            break;
        }
        case CalibMethod::ZScore: {
            std::vector<double> normals;
            for (const auto& [s, z] : validation)
                if (z == 0) normals.push_back(s);
            const auto t = thresholds::threshold_zscore(normals, zscore_k);
            rule.is_zscore = true;
            rule.mu = *t.mu_s;
            rule.sigma = *t.sigma_s;
            rule.k = *t.zscore_k;
            break;
        }
    }
    return rule;
}

struct PoolOutcome {
    double risk = 0.0;
    double abstention = 0.0;
    double f1 = 0.0;
};

PoolOutcome measure_on_pool(const DecisionRule& rule, const risk::Labeled& pool,
                            risk::RiskKind kind) {
    long tp = 0, fp = 0, fn = 0, n0 = 0, n1 = 0, abstain = 0;
    for (const auto& [score, label] : pool) {
        (label == 1 ? n1 : n0)++;
        switch (rule.decide(score)) {
            case risk::Decision::Anomalous:
                (label == 1 ? tp : fp)++;
                break;
            case risk::Decision::Normal:
                if (label == 1) ++fn;
                break;
            case risk::Decision::Abstain:
                ++abstain;
                break;
        }
    }
    PoolOutcome out;
    out.abstention = pool.empty() ? 0.0
                                  : static_cast<double>(abstain) /
                                        static_cast<double>(pool.size());
    out.f1 = (tp + fp == 0) ? 0.0
                            : 2.0 * static_cast<double>(tp) /
                                  static_cast<double>(2 * tp + fp + fn);
    if (kind == risk::RiskKind::FPR)
        out.risk = n0 == 0 ? 0.0 : static_cast<double>(fp) / static_cast<double>(n0);
    else
        out.risk = 1.0 - out.f1;
    return out;
}

// Scores a freshly generated day range with the fitted model.
risk::Labeled scored_pairs(const scorer::ConditionalGaussianFlow& model,
                           const synth::GeneratorConfig& config, int first_day, int n_days,
                           scorer::ScoreKind kind) {
    auto samples = synth::generate_days(config, first_day, n_days);
    samples = scorer::score_stream(model, std::move(samples), kind);
    risk::Labeled out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.emplace_back(*s.score, *s.label);
    return out;
}

int days_for(const synth::GeneratorConfig& config, int wanted_samples) {
    // Mean inter-arrival is 3 minutes over the operational span.
    const double span = config.schedule.day_end() - config.schedule.day_start();
    const int per_day = std::max(1, static_cast<int>(span / 3.0));
    return wanted_samples / per_day + 2;
}

}  // namespace

const char* to_string(CalibMethod method) {
    switch (method) {
        case CalibMethod::XLTT: return "xltt";
        case CalibMethod::F1: return "f1";
        case CalibMethod::GMean: return "gmean";
        case CalibMethod::ZScore: return "zscore";
    }
    return "unknown";
}

CalibMethod calib_method_from_string(std::string_view name) {
    if (name == "xltt") return CalibMethod::XLTT;
    if (name == "f1") return CalibMethod::F1;
    if (name == "gmean") return CalibMethod::GMean;
    if (name == "zscore") return CalibMethod::ZScore;
    throw config_error("unknown calibration method: " + std::string(name));
}

McReport mc_validate(const synth::GeneratorConfig& generator_config,
                     const scorer::ScorerConfig& scorer_config, const risk::RiskSpec& spec,
                     CalibMethod method, int replications, std::uint64_t seed,
                     const McOptions& options) {
    spec.validate();
    scorer_config.validate();
    if (replications < 100) throw config_error("mc_validate needs >= 100 replications");
    if (options.n_cal < 1 || options.n_val < 1 || options.pool_size < 1)
        throw config_error("mc_validate sample counts must be positive");

    // All randomness flows through the generator; folding the harness seed
    // into its seed makes the report a pure function of (configs, seed).
    synth::GeneratorConfig gen = generator_config;
    gen.seed = mix_seed(generator_config.seed, seed);
    gen.validate();

    // Score function fixed across replications: fitted once on clean data.
    synth::GeneratorConfig train_cfg = gen;
    train_cfg.n_days = options.train_days;
    auto train = synth::generate_dataset(train_cfg);
    std::erase_if(train, [](const ScoredSample& s) { return s.label && *s.label == 1; });
    for (auto& s : train) s.label.reset();
    const auto model = scorer::fit(train, scorer_config);

    // Fixed held-out pool for the true-risk measurement.
    risk::Labeled pool;
    {
        int day = kPoolBaseDay;
        while (static_cast<int>(pool.size()) < options.pool_size) {
            const int chunk_days =
                days_for(gen, options.pool_size - static_cast<int>(pool.size()));
            auto chunk = scored_pairs(model, gen, day, chunk_days, options.score_kind);
            pool.insert(pool.end(), chunk.begin(), chunk.end());
            day += chunk_days;
        }
    }

    McReport report;
    report.spec = spec;
    report.method = method;
    report.replications = replications;
    report.rows.reserve(static_cast<std::size_t>(replications));

    const int rep_days = days_for(gen, options.n_cal + options.n_val);
    const int rep_stride = std::max(kReplicationDayStride, 2 * rep_days + 8);
    long violations = 0, fallbacks = 0;
    double sum_risk = 0.0, sum_abst = 0.0, sum_f1 = 0.0;
    for (int r = 0; r < replications; ++r) {
        const int base_day = kReplicationBaseDay + r * rep_stride;
        auto fresh = scored_pairs(model, gen, base_day, rep_days, options.score_kind);
        int extra_day = base_day + rep_days;
        while (static_cast<int>(fresh.size()) < options.n_cal + options.n_val) {
            // Rare underfill when inter-arrival draws run long.
            auto extra = scored_pairs(model, gen, extra_day++, 1, options.score_kind);
            fresh.insert(fresh.end(), extra.begin(), extra.end());
        }
        risk::Labeled cal(fresh.begin(), fresh.begin() + options.n_cal);
        risk::Labeled val(fresh.begin() + options.n_cal,
                          fresh.begin() + options.n_cal + options.n_val);
        if (options.shared_cal_val) val = cal;  // the shared-split mode

        DecisionRule rule;
        try {
            rule = calibrate_rule(method, cal, val, spec, options.grid_size, options.zscore_k);
        } catch (const calibration_error&) {
            rule = abstain_all_rule();
        }

        const PoolOutcome outcome = measure_on_pool(rule, pool, spec.kind);
        McReplicationRow row;
        row.replication = r;
        row.true_risk = outcome.risk;
        row.abstention_rate = outcome.abstention;
        row.f1 = outcome.f1;
        row.fallback = rule.fallback;
        row.violated = outcome.risk > spec.alpha;
        report.rows.push_back(row);

        violations += row.violated;
        fallbacks += row.fallback;
        sum_risk += outcome.risk;
        sum_abst += outcome.abstention;
        sum_f1 += outcome.f1;
    }

    const double R = static_cast<double>(replications);
    report.violation_fraction = static_cast<double>(violations) / R;
    report.fallback_fraction = static_cast<double>(fallbacks) / R;
    report.mean_risk = sum_risk / R;
    report.mean_abstention = sum_abst / R;
    report.mean_f1 = sum_f1 / R;
    return report;
}

nlohmann::json McReport::to_json() const {
    nlohmann::json rows_json = nlohmann::json::array();
    for (const auto& row : rows) {
        rows_json.push_back(nlohmann::json{{"replication", row.replication},
                                           {"true_risk", row.true_risk},
                                           {"abstention_rate", row.abstention_rate},
                                           {"f1", row.f1},
                                           {"fallback", row.fallback},
                                           {"violated", row.violated}});
    }
    return nlohmann::json{{"method", eval::to_string(method)},
                          {"risk", risk::to_string(spec.kind)},
                          {"alpha", spec.alpha},
                          {"delta", spec.delta},
                          {"replications", replications},
                          {"violation_fraction", violation_fraction},
                          {"fallback_fraction", fallback_fraction},
                          {"mean_risk", mean_risk},
                          {"mean_abstention", mean_abstention},
                          {"mean_f1", mean_f1},
                          {"rows", std::move(rows_json)}};
}

std::vector<DeploymentWindow> deploy_sim_rolling(const std::vector<ScoredSample>& scored,
                                                 const risk::RiskSpec& spec, int months,
                                                 const DeployOptions& options) {
    spec.validate();
    if (months < 1) throw config_error("months must be >= 1");
    if (scored.empty()) throw data_error("empty dataset");

    int min_day = scored.front().day_id;
    int max_day = scored.front().day_id;
    for (const auto& s : scored) {
        if (!s.score) throw data_error("deploy-sim needs scored samples");
        if (!s.label) throw data_error("deploy-sim needs labeled samples");
        min_day = std::min(min_day, s.day_id);
        max_day = std::max(max_day, s.day_id);
    }
    const int n_months = (max_day - min_day) / 30 + 1;
    if (n_months < months + 1)
        throw config_error("dataset must span at least months+1 synthetic months");

    // A month is 30 consecutive day ids, relative to the earliest day.
    std::vector<std::vector<const ScoredSample*>> by_month(static_cast<std::size_t>(months) + 1);
    for (const auto& s : scored) {
        const int m = (s.day_id - min_day) / 30;
        if (m <= months) by_month[static_cast<std::size_t>(m)].push_back(&s);
    }

    const auto calibrate_on = [&](const std::vector<const ScoredSample*>& month) -> DecisionRule {
        // Alternate the month's days between the calibration and validation
        // roles so both cover the whole month chronologically.
        std::set<int> days;
        for (const auto* s : month) days.insert(s->day_id);
        std::map<int, bool> to_val;
        int i = 0;
        for (int d : days) to_val[d] = (i++ % 2) == 1;
        risk::Labeled cal, val;
        for (const auto* s : month)
            (to_val[s->day_id] ? val : cal).emplace_back(*s->score, *s->label);
        if (options.shared_cal_val) {
            cal.insert(cal.end(), val.begin(), val.end());
            val = cal;
        }
        try {
            return calibrate_rule(options.method, cal, val, spec, options.grid_size,
                                  options.zscore_k);
        } catch (const calibration_error&) {
            return abstain_all_rule();
        }
    };

    DecisionRule rule = calibrate_on(by_month[0]);
    int calib_month = 0;

    std::vector<DeploymentWindow> windows;
    windows.reserve(static_cast<std::size_t>(months));
    for (int w = 1; w <= months; ++w) {
        if (options.recalibrate && w > 1) {
            rule = calibrate_on(by_month[static_cast<std::size_t>(w - 1)]);
            calib_month = w - 1;
        }
        const auto& month = by_month[static_cast<std::size_t>(w)];
        std::vector<double> scores;
        std::vector<risk::Decision> decisions;
        std::vector<int> labels;
        scores.reserve(month.size());
        for (const auto* s : month) {
            scores.push_back(*s->score);
            decisions.push_back(rule.decide(*s->score));
            labels.push_back(*s->label);
        }
        DeploymentWindow window;
        window.window_id = w;
        window.calibration_days = {min_day + 30 * calib_month, min_day + 30 * calib_month + 29};
        window.evaluation_days = {min_day + 30 * w, min_day + 30 * w + 29};
        window.fallback_used = rule.fallback;
        window.report = evaluate(scores, decisions, labels, spec.kind);
        windows.push_back(std::move(window));
    }
    return windows;
}

nlohmann::json deployment_to_json(const std::vector<DeploymentWindow>& windows) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& w : windows) {
        out.push_back(nlohmann::json{
            {"window_id", w.window_id},
            {"calibration_days", {w.calibration_days.first, w.calibration_days.second}},
            {"evaluation_days", {w.evaluation_days.first, w.evaluation_days.second}},
            {"fallback_used", w.fallback_used},
            {"report", w.report.to_json()}});
    }
    return out;
}

std::string deployment_to_csv(const std::vector<DeploymentWindow>& windows) {
    std::ostringstream out;
    out << "window_id,risk,fpr,fnr,f1,abstention_rate,auroc,aupr\n";
    const auto cell = [](double v) {
        std::ostringstream s;
        if (std::isfinite(v)) s << v;
        return s.str();  // empty cell when the metric is undefined
    };
    for (const auto& w : windows) {
        out << w.window_id << ',' << cell(w.report.risk_value) << ',' << cell(w.report.fpr)
            << ',' << cell(w.report.fnr) << ',' << cell(w.report.f1) << ','
            << cell(w.report.abstention_rate) << ',' << cell(w.report.auroc) << ','
            << cell(w.report.aupr) << '\n';
    }
    return out.str();
}

}  // namespace riskgate::eval
