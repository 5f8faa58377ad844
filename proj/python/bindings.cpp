#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

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

namespace py = pybind11;
using namespace riskgate;

namespace {

risk::RiskSpec make_spec(const std::string& kind, double alpha, double delta) {
    risk::RiskSpec spec;
    spec.kind = risk::risk_kind_from_string(kind);
    spec.alpha = alpha;
    spec.delta = delta;
    spec.validate();
    return spec;
}

}  // namespace

PYBIND11_MODULE(_riskgate, m) {
    m.doc() = "risk-controlled anomaly decisions: synthetic CSP data, density "
              "scoring and paired-threshold calibration";

    py::enum_<AnomalyKind>(m, "AnomalyKind")
        .value("ColdPanel", AnomalyKind::ColdPanel)
        .value("HotSpot", AnomalyKind::HotSpot)
        .value("SensorDropout", AnomalyKind::SensorDropout)
        .value("PhaseInconsistent", AnomalyKind::PhaseInconsistent);

    py::class_<ScoredSample>(m, "ScoredSample")
        .def(py::init<>())
        .def_readwrite("timestamp", &ScoredSample::timestamp)
        .def_readwrite("day_id", &ScoredSample::day_id)
        .def_readwrite("features", &ScoredSample::features)
        .def_readwrite("label", &ScoredSample::label)
        .def_readwrite("anomaly_kind", &ScoredSample::anomaly_kind)
        .def_readwrite("score", &ScoredSample::score)
        .def_readwrite("decision", &ScoredSample::decision)
        .def("__repr__", [](const ScoredSample& s) { return to_json(s).dump(); });

    py::class_<synth::GeneratorConfig>(m, "GeneratorConfig")
        .def(py::init<>())
        .def_readwrite("seed", &synth::GeneratorConfig::seed)
        .def_readwrite("n_days", &synth::GeneratorConfig::n_days)
        .def_readwrite("d_prime", &synth::GeneratorConfig::d_prime)
        .def_readwrite("contamination", &synth::GeneratorConfig::contamination)
        .def_readwrite("anomaly_magnitude", &synth::GeneratorConfig::anomaly_magnitude)
        .def_readwrite("noise_sigma", &synth::GeneratorConfig::noise_sigma)
        .def_readwrite("ar_coefficient", &synth::GeneratorConfig::ar_coefficient);

    m.def("generate_day", &synth::generate_day, py::arg("config"), py::arg("day_id"));
    m.def("generate_dataset", &synth::generate_dataset, py::arg("config"));
    m.def(
        "inject_anomaly",
        [](std::vector<ScoredSample> day, AnomalyKind kind, std::size_t start,
           std::size_t duration, double magnitude, double noise_sigma, std::uint64_t seed) {
            return synth::inject_anomaly(std::move(day), synth::DaySchedule::standard(), kind,
                                         start, duration, magnitude, noise_sigma, seed);
        },
        py::arg("day"), py::arg("kind"), py::arg("start_index"), py::arg("duration"),
        py::arg("magnitude"), py::arg("noise_sigma"), py::arg("seed"));

    py::class_<scorer::ScorerConfig>(m, "ScorerConfig")
        .def(py::init<>())
        .def_readwrite("d_t", &scorer::ScorerConfig::d_t)
        .def_readwrite("base", &scorer::ScorerConfig::base)
        .def_readwrite("K", &scorer::ScorerConfig::K)
        .def_readwrite("ridge", &scorer::ScorerConfig::ridge)
        .def_readwrite("shrinkage", &scorer::ScorerConfig::shrinkage)
        .def_readwrite("rho", &scorer::ScorerConfig::rho)
        .def_readwrite("use_tau", &scorer::ScorerConfig::use_tau)
        .def_readwrite("use_gamma", &scorer::ScorerConfig::use_gamma);

    py::class_<scorer::ConditionalGaussianFlow>(m, "ConditionalGaussianFlow")
        .def_readonly("d_prime", &scorer::ConditionalGaussianFlow::d_prime)
        .def_property_readonly("weight",
                               [](const scorer::ConditionalGaussianFlow& f) { return f.weight; })
        .def_property_readonly("bias",
                               [](const scorer::ConditionalGaussianFlow& f) { return f.bias; })
        .def_property_readonly(
            "cholesky", [](const scorer::ConditionalGaussianFlow& f) { return f.cholesky; })
        .def("predict_mean", &scorer::ConditionalGaussianFlow::predict_mean)
        .def("latent", &scorer::ConditionalGaussianFlow::latent)
        .def("inverse", &scorer::ConditionalGaussianFlow::inverse)
        .def("log_density", &scorer::ConditionalGaussianFlow::log_density)
        .def("score_dr", &scorer::ConditionalGaussianFlow::score_dr)
        .def("score_l", &scorer::ConditionalGaussianFlow::score_l)
        .def("to_json", [](const scorer::ConditionalGaussianFlow& f) { return f.to_json().dump(); })
        .def_static("from_json", [](const std::string& text) {
            return scorer::ConditionalGaussianFlow::from_json(nlohmann::json::parse(text));
        });

    m.def("fit_scorer", &scorer::fit, py::arg("train"), py::arg("config"));
    m.def(
        "score_stream",
        [](const scorer::ConditionalGaussianFlow& model, std::vector<ScoredSample> samples,
           const std::string& kind) {
            return scorer::score_stream(model, std::move(samples),
                                        scorer::score_kind_from_string(kind));
        },
        py::arg("model"), py::arg("samples"), py::arg("kind") = "dr");

    py::class_<thresholds::SingleThreshold>(m, "SingleThreshold")
        .def_property_readonly("method",
                               [](const thresholds::SingleThreshold& t) {
                                   return std::string(thresholds::to_string(t.method));
                               })
        .def_readonly("lam", &thresholds::SingleThreshold::lambda)
        .def_readonly("zscore_k", &thresholds::SingleThreshold::zscore_k)
        .def_readonly("mu", &thresholds::SingleThreshold::mu_s)
        .def_readonly("sigma", &thresholds::SingleThreshold::sigma_s);

    m.def("threshold_f1", &thresholds::threshold_f1, py::arg("validation"));
    m.def("threshold_gmean", &thresholds::threshold_gmean, py::arg("validation"));
    m.def("threshold_zscore", &thresholds::threshold_zscore, py::arg("normal_scores"),
          py::arg("k") = 3.0);
    m.def("decide_single", &thresholds::decide_single, py::arg("threshold"), py::arg("score"));

    py::class_<risk::ThresholdPair>(m, "ThresholdPair")
        .def(py::init<double, double>(), py::arg("lo"), py::arg("hi"))
        .def_readwrite("lo", &risk::ThresholdPair::lo)
        .def_readwrite("hi", &risk::ThresholdPair::hi);

    m.def(
        "decide_abstain",
        [](const risk::ThresholdPair& pair, double score) {
            return std::string(risk::to_string(risk::decide_abstain(pair, score)));
        },
        py::arg("pair"), py::arg("score"));
    m.def("hb_pvalue", &risk::hb_pvalue, py::arg("empirical_risk"), py::arg("n"),
          py::arg("alpha"));
    m.def(
        "build_grid",
        [](const std::vector<double>& scores, int m_) {
            const auto grid = risk::build_grid(scores, m_);
            std::vector<std::pair<double, double>> pairs;
            pairs.reserve(grid.pairs.size());
            for (const auto& p : grid.pairs) pairs.emplace_back(p.lo, p.hi);
            return py::make_tuple(grid.values, pairs);
        },
        py::arg("scores"), py::arg("m"));
    m.def(
        "empirical_risk",
        [](const risk::ThresholdPair& pair, const risk::Labeled& calibration,
           const std::string& kind, double alpha, double delta) {
            return risk::empirical_risk(pair, calibration, make_spec(kind, alpha, delta));
        },
        py::arg("pair"), py::arg("calibration"), py::arg("kind") = "fpr",
        py::arg("alpha") = 0.1, py::arg("delta") = 0.1);

    py::class_<risk::CalibrationResult>(m, "CalibrationResult")
        .def_property_readonly("chosen",
                               [](const risk::CalibrationResult& r) { return r.chosen; })
        .def_property_readonly(
            "fallback_used",
            [](const risk::CalibrationResult& r) { return r.feasible.fallback_used; })
        .def_property_readonly(
            "feasible_count",
            [](const risk::CalibrationResult& r) { return r.feasible.members.size(); })
        .def("to_json",
             [](const risk::CalibrationResult& r) { return risk::calibration_to_json(r).dump(); });

    m.def(
        "calibrate_xltt",
        [](const risk::Labeled& calibration, const risk::Labeled& validation,
           const std::string& kind, double alpha, double delta, int m_) {
            return risk::calibrate_xltt(calibration, validation, make_spec(kind, alpha, delta),
                                        m_);
        },
        py::arg("calibration"), py::arg("validation"), py::arg("kind") = "fpr",
        py::arg("alpha") = 0.1, py::arg("delta") = 0.1, py::arg("m") = 50);

    m.def("auroc", &eval::auroc, py::arg("scores_labels"));
    m.def("aupr", &eval::aupr, py::arg("scores_labels"));

    m.def(
        "mc_validate",
        [](const synth::GeneratorConfig& gen, const scorer::ScorerConfig& sc,
           const std::string& kind, double alpha, double delta, const std::string& method,
           int replications, std::uint64_t seed, int n_cal, int n_val, int pool_size) {
            eval::McOptions opts;
            opts.n_cal = n_cal;
            opts.n_val = n_val;
            opts.pool_size = pool_size;
            const auto report =
                eval::mc_validate(gen, sc, make_spec(kind, alpha, delta),
                                  eval::calib_method_from_string(method), replications, seed,
                                  opts);
            return report.to_json().dump();
        },
        py::arg("generator"), py::arg("scorer"), py::arg("kind") = "fpr",
        py::arg("alpha") = 0.1, py::arg("delta") = 0.1, py::arg("method") = "xltt",
        py::arg("replications") = 500, py::arg("seed") = 1, py::arg("n_cal") = 500,
        py::arg("n_val") = 500, py::arg("pool_size") = 50000);

    m.def(
        "deploy_sim_rolling",
        [](const std::vector<ScoredSample>& scored, const std::string& kind, double alpha,
           double delta, int months, const std::string& method, bool recalibrate) {
            eval::DeployOptions opts;
            opts.method = eval::calib_method_from_string(method);
            opts.recalibrate = recalibrate;
            const auto windows =
                eval::deploy_sim_rolling(scored, make_spec(kind, alpha, delta), months, opts);
            return eval::deployment_to_json(windows).dump();
        },
        py::arg("scored"), py::arg("kind") = "fpr", py::arg("alpha") = 0.1,
        py::arg("delta") = 0.1, py::arg("months") = 6, py::arg("method") = "xltt",
        py::arg("recalibrate") = false);

    py::register_exception<config_error>(m, "ConfigError");
    py::register_exception<data_error>(m, "DataError");
    py::register_exception<calibration_error>(m, "CalibrationError");
}
