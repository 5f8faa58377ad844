// riskgate: simulate -> fit-scorer -> score -> calibrate -> decide ->
// evaluate, plus mc-validate and deploy-sim. Stages communicate through
// files; every output is written atomically so reruns are byte-stable.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "riskgate/baselines.hpp"
#include "riskgate/errors.hpp"
#include "riskgate/harness.hpp"
#include "riskgate/metrics.hpp"
#include "riskgate/pipeline.hpp"
#include "riskgate/risk_control.hpp"
#include "riskgate/sample.hpp"
#include "riskgate/scorer.hpp"
#include "riskgate/synth.hpp"

namespace {

using nlohmann::json;
using namespace riskgate;

struct StageFlags {
    std::optional<std::string> config_path;
    std::optional<std::string> data;
    std::optional<std::string> model;
    std::optional<std::string> thresholds;
    std::optional<std::string> out;
    std::optional<std::string> csv;
    std::optional<std::string> method;
    std::optional<std::string> risk;
    std::optional<std::string> score;
    std::optional<std::string> split;
    std::optional<double> alpha, delta, zscore_k;
    std::optional<int> grid_size, replications, months, n_days;
    std::optional<std::uint64_t> seed;
    std::optional<bool> use_tau, use_gamma;
    bool recalibrate = false;
    bool shared_cal_val = false;
};

// --a.b.c VALUE (or --a.b.c=VALUE) pairs are config overrides, not CLI11
// options; strip them out before parsing.
std::vector<std::string> extract_dotted(std::vector<std::string>& args,
                                        std::vector<std::pair<std::string, std::string>>& overrides) {
    std::vector<std::string> rest;
    for (std::size_t i = 0; i < args.size(); ++i) {
        const std::string& a = args[i];
        if (a.rfind("--", 0) == 0 && a.find('.') != std::string::npos) {
            const std::string body = a.substr(2);
            const std::size_t eq = body.find('=');
            if (eq != std::string::npos) {
                overrides.emplace_back(body.substr(0, eq), body.substr(eq + 1));
            } else {
                if (i + 1 >= args.size())
                    throw config_error("override " + a + " needs a value");
                overrides.emplace_back(body, args[++i]);
            }
            continue;
        }
        rest.push_back(a);
    }
    return rest;
}

pipeline::RunConfig resolve_config(const StageFlags& flags,
                                   const std::vector<std::pair<std::string, std::string>>& overrides) {
    json doc = json::object();
    if (flags.config_path) doc = pipeline::load_json_file(*flags.config_path);
    for (const auto& [key, value] : overrides)
        pipeline::apply_dotted_override(doc, key, value);
    if (const char* env = std::getenv("RISKGATE_SEED"))
        doc["seed"] = std::stoull(env);
    // Dedicated flags outrank the config file and the environment.
    if (flags.seed) doc["seed"] = *flags.seed;
    if (flags.alpha) doc["risk"]["alpha"] = *flags.alpha;
    if (flags.delta) doc["risk"]["delta"] = *flags.delta;
    if (flags.risk) doc["risk"]["kind"] = *flags.risk;
    if (flags.method) doc["method"] = *flags.method;
    if (flags.grid_size) doc["grid_size"] = *flags.grid_size;
    if (flags.zscore_k) doc["zscore_k"] = *flags.zscore_k;
    if (flags.score) doc["score"] = *flags.score;
    if (flags.replications) doc["mc_replications"] = *flags.replications;
    if (flags.months) doc["deploy_months"] = *flags.months;
    if (flags.recalibrate) doc["deploy_recalibrate"] = true;
    if (flags.shared_cal_val) doc["shared_cal_val"] = true;
    if (flags.n_days) doc["generator"]["n_days"] = *flags.n_days;
    if (flags.use_tau) doc["scorer"]["use_tau"] = *flags.use_tau;
    if (flags.use_gamma) doc["scorer"]["use_gamma"] = *flags.use_gamma;
    return pipeline::RunConfig::from_json(doc);
}

std::optional<pipeline::Partition> parse_split(const std::optional<std::string>& split) {
    if (!split || *split == "all") return std::nullopt;
    if (*split == "train") return pipeline::Partition::Train;
    if (*split == "validation") return pipeline::Partition::Validation;
    if (*split == "calibration") return pipeline::Partition::Calibration;
    if (*split == "test") return pipeline::Partition::Test;
    throw config_error("unknown split: " + *split);
}

std::vector<int> day_ids(const std::vector<ScoredSample>& samples) {
    std::vector<int> days;
    days.reserve(samples.size());
    for (const auto& s : samples) days.push_back(s.day_id);
    return days;
}

std::vector<ScoredSample> maybe_filter(std::vector<ScoredSample> samples,
                                       const pipeline::RunConfig& cfg,
                                       const std::optional<std::string>& split) {
    const auto partition = parse_split(split);
    if (!partition) return samples;
    const auto sp = pipeline::split_dataset(day_ids(samples), cfg.splits, cfg.seed);
    return pipeline::filter_partition(samples, sp, *partition);
}

int cmd_simulate(const pipeline::RunConfig& cfg, const StageFlags& flags) {
    const auto data = synth::generate_dataset(cfg.generator);
    write_jsonl(flags.out ? *flags.out : cfg.path("dataset"), data);
    return 0;
}

int cmd_fit_scorer(const pipeline::RunConfig& cfg, const StageFlags& flags) {
    const auto data = read_jsonl(flags.data ? *flags.data : cfg.path("dataset"));
    const auto split = pipeline::split_dataset(day_ids(data), cfg.splits, cfg.seed);
    const auto train = pipeline::clean_training_set(data, split);
    const auto model = scorer::fit(train, cfg.scorer);
    pipeline::write_json_file(flags.out ? *flags.out : cfg.path("model"), model.to_json());
    return 0;
}

int cmd_score(const pipeline::RunConfig& cfg, const StageFlags& flags) {
    const auto data = read_jsonl(flags.data ? *flags.data : cfg.path("dataset"));
    const auto model = scorer::ConditionalGaussianFlow::from_json(
        pipeline::load_json_file(flags.model ? *flags.model : cfg.path("model")));
    auto scored = scorer::score_stream(model, data, cfg.score_kind);
    scored = maybe_filter(std::move(scored), cfg, flags.split);
    write_jsonl(flags.out ? *flags.out : cfg.path("scored"), scored);
    return 0;
}

int cmd_calibrate(const pipeline::RunConfig& cfg, const StageFlags& flags) {
    const auto scored = read_jsonl(flags.data ? *flags.data : cfg.path("scored"));
    const std::string out = flags.out ? *flags.out : cfg.path("threshold");

    if (cfg.method == "xltt") {
        const auto split = pipeline::split_dataset(day_ids(scored), cfg.splits, cfg.seed);
        auto cal = pipeline::scored_labeled(
            pipeline::filter_partition(scored, split, pipeline::Partition::Calibration));
        auto val = pipeline::scored_labeled(
            pipeline::filter_partition(scored, split, pipeline::Partition::Validation));
        if (cfg.shared_cal_val) {
            // One pooled set plays both roles.
            cal.insert(cal.end(), val.begin(), val.end());
            val = cal;
        }
        const auto result = risk::calibrate_xltt(cal, val, cfg.risk, cfg.grid_size);
        pipeline::write_json_file(out, risk::calibration_to_json(result));
        if (result.feasible.fallback_used)
            std::cerr << "riskgate: warning: no pair controls the risk; "
                         "falling back to (-inf, +inf) (abstain everything)\n";
        return 0;
    }

    const auto split = pipeline::split_dataset(day_ids(scored), cfg.splits, cfg.seed);
    const auto val = pipeline::scored_labeled(
        pipeline::filter_partition(scored, split, pipeline::Partition::Validation));
    thresholds::SingleThreshold t;
    if (cfg.method == "f1") {
        t = thresholds::threshold_f1(val);
    } else if (cfg.method == "gmean") {
        t = thresholds::threshold_gmean(val);
    } else if (cfg.method == "zscore") {
        std::vector<double> normals;
        for (const auto& [s, z] : val)
            if (z == 0) normals.push_back(s);
        t = thresholds::threshold_zscore(normals, cfg.zscore_k);
    } else {
        throw config_error("unknown method: " + cfg.method);
    }
    pipeline::write_json_file(out, thresholds::to_json(t));
    return 0;
}

int cmd_decide(const pipeline::RunConfig& cfg, const StageFlags& flags) {
    const auto doc = pipeline::load_json_file(flags.thresholds ? *flags.thresholds
                                                               : cfg.path("threshold"));
    auto data = read_jsonl(flags.data ? *flags.data : cfg.path("scored"));
    data = maybe_filter(std::move(data), cfg, flags.split);

    const std::string method = doc.value("method", "xltt");
    if (method == "xltt") {
        const auto result = risk::calibration_from_json(doc);
        for (auto& s : data) {
            if (!s.score) throw data_error("sample missing score");
            s.decision = risk::to_string(risk::decide_abstain(result.chosen, *s.score));
        }
    } else {
        const auto t = thresholds::single_threshold_from_json(doc);
        for (auto& s : data) {
            if (!s.score) throw data_error("sample missing score");
            s.decision = thresholds::decide_single(t, *s.score) == 1 ? "anomalous" : "normal";
        }
    }
    write_jsonl(flags.out ? *flags.out : cfg.path("decisions"), data);
    return 0;
}

int cmd_evaluate(const pipeline::RunConfig& cfg, const StageFlags& flags) {
    auto data = read_jsonl(flags.data ? *flags.data : cfg.path("decisions"));
    data = maybe_filter(std::move(data), cfg, flags.split);
    std::vector<double> scores;
    std::vector<risk::Decision> decisions;
    std::vector<int> labels;
    for (const auto& s : data) {
        if (!s.score || !s.label || !s.decision)
            throw data_error("evaluate needs score, label and decision on every sample");
        scores.push_back(*s.score);
        labels.push_back(*s.label);
        decisions.push_back(risk::decision_from_string(*s.decision));
    }
    const auto report = eval::evaluate(scores, decisions, labels, cfg.risk.kind);
    pipeline::write_json_file(flags.out ? *flags.out : cfg.path("report"), report.to_json());
    return 0;
}

int cmd_mc_validate(const pipeline::RunConfig& cfg, const StageFlags& flags) {
    eval::McOptions opts;
    opts.grid_size = cfg.grid_size;
    opts.zscore_k = cfg.zscore_k;
    opts.score_kind = cfg.score_kind;
    opts.shared_cal_val = cfg.shared_cal_val;
    const auto report =
        eval::mc_validate(cfg.generator, cfg.scorer, cfg.risk,
                          eval::calib_method_from_string(cfg.method), cfg.mc_replications,
                          cfg.seed, opts);
    pipeline::write_json_file(flags.out ? *flags.out : cfg.path("report"), report.to_json());
    return 0;
}

int cmd_deploy_sim(const pipeline::RunConfig& cfg, const StageFlags& flags) {
    const auto scored = read_jsonl(flags.data ? *flags.data : cfg.path("scored"));
    eval::DeployOptions opts;
    opts.method = eval::calib_method_from_string(cfg.method);
    opts.grid_size = cfg.grid_size;
    opts.zscore_k = cfg.zscore_k;
    opts.recalibrate = cfg.deploy_recalibrate;
    opts.shared_cal_val = cfg.shared_cal_val;
    const auto windows = eval::deploy_sim_rolling(scored, cfg.risk, cfg.deploy_months, opts);

    // One JSON object per window, plus the CSV summary.
    std::string jsonl;
    for (const auto& w : eval::deployment_to_json(windows)) jsonl += w.dump() + "\n";
    const std::string out = flags.out ? *flags.out : "deploy_windows.jsonl";
    atomic_write_text(out, jsonl);
    atomic_write_text(flags.csv ? *flags.csv : "deploy_summary.csv",
                      eval::deployment_to_csv(windows));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    std::vector<std::string> raw(argv + 1, argv + argc);
    std::vector<std::pair<std::string, std::string>> overrides;
    StageFlags flags;
    std::string command;

    try {
        std::vector<std::string> args = extract_dotted(raw, overrides);

        CLI::App app{"risk-controlled anomaly decisions for CSP plant telemetry"};
        app.require_subcommand(1);

        const auto add_common = [&](CLI::App* sub) {
            sub->add_option("--config", flags.config_path, "JSON config file");
            sub->add_option("--seed", flags.seed, "override the run seed");
            sub->add_option("--out", flags.out, "output file");
            sub->add_option("--data", flags.data, "input data file (JSON Lines)");
        };

        auto* simulate = app.add_subcommand("simulate", "generate a synthetic dataset");
        add_common(simulate);
        simulate->add_option("--n-days", flags.n_days, "number of days to generate");

        auto* fit = app.add_subcommand("fit-scorer", "fit the density scorer on clean training days");
        add_common(fit);

        auto* score = app.add_subcommand("score", "score samples with a fitted model");
        add_common(score);
        score->add_option("--model", flags.model, "model file");
        score->add_option("--score", flags.score, "score function: dr or l");
        score->add_option("--split", flags.split, "restrict output to one partition");
        score->add_flag("--use-tau,!--no-use-tau", flags.use_tau, "include tau encodings");
        score->add_flag("--use-gamma,!--no-use-gamma", flags.use_gamma, "include gamma encodings");

        auto* calibrate = app.add_subcommand("calibrate", "select decision thresholds");
        add_common(calibrate);
        calibrate->add_option("--method", flags.method, "xltt | f1 | gmean | zscore");
        calibrate->add_option("--risk", flags.risk, "controlled risk: fpr | f1");
        calibrate->add_option("--alpha", flags.alpha, "risk tolerance");
        calibrate->add_option("--delta", flags.delta, "error level");
        calibrate->add_option("--grid-size", flags.grid_size, "threshold grid size m");
        calibrate->add_option("--zscore-k", flags.zscore_k, "z-score cutoff k");
        calibrate->add_flag("--shared-cal-val", flags.shared_cal_val,
                            "validation set also serves as calibration set");

        auto* decide = app.add_subcommand("decide", "apply thresholds to a scored stream");
        add_common(decide);
        decide->add_option("--thresholds", flags.thresholds, "threshold document");
        decide->add_option("--split", flags.split, "restrict to one partition");

        auto* evaluate = app.add_subcommand("evaluate", "metrics for a decided stream");
        add_common(evaluate);
        evaluate->add_option("--split", flags.split, "restrict to one partition");

        auto* mc = app.add_subcommand("mc-validate", "Monte Carlo coverage check");
        add_common(mc);
        mc->add_option("--method", flags.method, "xltt | f1 | gmean | zscore");
        mc->add_option("--risk", flags.risk, "controlled risk: fpr | f1");
        mc->add_option("--alpha", flags.alpha, "risk tolerance");
        mc->add_option("--delta", flags.delta, "error level");
        mc->add_option("--replications", flags.replications, "number of replications");
        mc->add_option("--grid-size", flags.grid_size, "threshold grid size m");
        mc->add_option("--score", flags.score, "score function: dr or l");

        auto* deploy = app.add_subcommand("deploy-sim", "rolling month-by-month deployment");
        add_common(deploy);
        deploy->add_option("--months", flags.months, "number of evaluated months");
        deploy->add_option("--method", flags.method, "xltt | f1 | gmean | zscore");
        deploy->add_option("--risk", flags.risk, "controlled risk: fpr | f1");
        deploy->add_option("--alpha", flags.alpha, "risk tolerance");
        deploy->add_option("--delta", flags.delta, "error level");
        deploy->add_option("--csv", flags.csv, "CSV summary path");
        deploy->add_flag("--recalibrate", flags.recalibrate,
                         "recalibrate on the trailing month");

        std::reverse(args.begin(), args.end());
        try {
            app.parse(args);
        } catch (const CLI::ParseError& e) {
            const int code = app.exit(e);
            return code == 0 ? 0 : 2;
        }

        command = app.get_subcommands().front()->get_name();
        const pipeline::RunConfig cfg = resolve_config(flags, overrides);

        if (command == "simulate") return cmd_simulate(cfg, flags);
        if (command == "fit-scorer") return cmd_fit_scorer(cfg, flags);
        if (command == "score") return cmd_score(cfg, flags);
        if (command == "calibrate") return cmd_calibrate(cfg, flags);
        if (command == "decide") return cmd_decide(cfg, flags);
        if (command == "evaluate") return cmd_evaluate(cfg, flags);
        if (command == "mc-validate") return cmd_mc_validate(cfg, flags);
        if (command == "deploy-sim") return cmd_deploy_sim(cfg, flags);
        std::cerr << "riskgate: unknown command " << command << "\n";
        return 2;
    } catch (const config_error& e) {
        std::cerr << "riskgate: config error: " << e.what() << "\n";
        return 2;
    } catch (const data_error& e) {
        std::cerr << "riskgate: data error: " << e.what() << "\n";
        return 3;
    } catch (const calibration_error& e) {
        std::cerr << "riskgate: calibration error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "riskgate: error: " << e.what() << "\n";
        return 1;
    }
}
