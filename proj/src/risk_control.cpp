#include "riskgate/risk_control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <boost/math/distributions/binomial.hpp>

#include "riskgate/errors.hpp"

namespace riskgate::risk {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Linear interpolation between order statistics (the numpy default).
double quantile_sorted(const std::vector<double>& sorted, double level) {
    const auto n = sorted.size();
    if (n == 1) return sorted[0];
    const double h = level * static_cast<double>(n - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= n) return sorted[n - 1];
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

struct PairStats {
    long fn = 0;  // anomalies decided normal
    long fp = 0;  // normals decided anomalous
    long ab = 0;  // abstentions, either class
};

PairStats stats_for(const ThresholdPair& pair, const Labeled& validation) {
    PairStats st;
    for (const auto& [score, label] : validation) {
        switch (decide_abstain(pair, score)) {
            case Decision::Normal:
                if (label == 1) ++st.fn;
                break;
            case Decision::Anomalous:
                if (label == 0) ++st.fp;
                break;
            case Decision::Abstain:
                ++st.ab;
                break;
        }
    }
    return st;
}

double pair_width(const ThresholdPair& pair) {
    if (pair.lo == pair.hi) return 0.0;  // covers equal infinities
    return pair.hi - pair.lo;
}

bool lex_less(const ThresholdPair& a, const ThresholdPair& b) {
    if (a.lo != b.lo) return a.lo < b.lo;
    return a.hi < b.hi;
}

}  // namespace

const char* to_string(Decision decision) {
    switch (decision) {
        case Decision::Normal: return "normal";
        case Decision::Anomalous: return "anomalous";
        case Decision::Abstain: return "abstain";
    }
    return "unknown";
}

Decision decision_from_string(std::string_view name) {
    if (name == "normal") return Decision::Normal;
    if (name == "anomalous") return Decision::Anomalous;
    if (name == "abstain") return Decision::Abstain;
    throw data_error("unknown decision: " + std::string(name));
}

Decision decide_abstain(const ThresholdPair& pair, double score) {
    if (score <= pair.lo) return Decision::Normal;
    if (score >= pair.hi) return Decision::Anomalous;
    return Decision::Abstain;
}

ThresholdGrid build_grid(const std::vector<double>& calibration_scores, int m) {
    if (calibration_scores.empty()) throw calibration_error("empty calibration scores");
    if (m < 2) throw config_error("grid size must be >= 2");

    std::vector<double> sorted = calibration_scores;
    std::sort(sorted.begin(), sorted.end());

    ThresholdGrid grid;
    grid.values.reserve(static_cast<std::size_t>(m) + 2);
    for (int j = 0; j < m; ++j)
        grid.values.push_back(quantile_sorted(sorted, static_cast<double>(j) / (m - 1)));
    std::sort(grid.values.begin(), grid.values.end());
    grid.values.erase(std::unique(grid.values.begin(), grid.values.end()), grid.values.end());
    grid.values.insert(grid.values.begin(), -kInf);
    grid.values.push_back(kInf);

    const std::size_t total = grid.values.size();
    grid.pairs.reserve(total * (total + 1) / 2);
    for (std::size_t i = 0; i < total; ++i)
        for (std::size_t j = i; j < total; ++j)
            grid.pairs.push_back(ThresholdPair{grid.values[i], grid.values[j]});
    return grid;
}

void RiskSpec::validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw config_error("alpha must lie in [0,1]");
    if (!(delta >= 0.0 && delta <= 1.0)) throw config_error("delta must lie in [0,1]");
}

const char* to_string(RiskKind kind) { return kind == RiskKind::FPR ? "fpr" : "f1"; }

RiskKind risk_kind_from_string(std::string_view name) {
    if (name == "fpr") return RiskKind::FPR;
    if (name == "f1") return RiskKind::OneMinusF1;
    throw config_error("unknown risk kind: " + std::string(name));
}

double empirical_risk(const ThresholdPair& pair, const Labeled& calibration,
                      const RiskSpec& spec) {
    if (!(pair.lo <= pair.hi)) throw std::invalid_argument("threshold pair must have lo <= hi");
    if (spec.kind == RiskKind::FPR) {
        long n0 = 0, fp = 0;
        for (const auto& [score, label] : calibration) {
            if (label != 0) continue;
            ++n0;
            if (decide_abstain(pair, score) == Decision::Anomalous) ++fp;
        }
        if (n0 == 0) throw calibration_error("FPR risk needs at least one normal sample");
        return static_cast<double>(fp) / static_cast<double>(n0);
    }

    long tp = 0, fp = 0, fn = 0, n0 = 0, n1 = 0;
    for (const auto& [score, label] : calibration) {
        (label == 1 ? n1 : n0)++;
        switch (decide_abstain(pair, score)) {
            case Decision::Anomalous:
                (label == 1 ? tp : fp)++;
                break;
            case Decision::Normal:
                if (label == 1) ++fn;
                break;
            case Decision::Abstain:
                break;
        }
    }
    if (n0 == 0 || n1 == 0) throw calibration_error("1-F1 risk needs both classes");
    if (tp + fp == 0) return 1.0;  // no decided anomalies: F1 defined as 0
    const double f1 = 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
    return 1.0 - f1;
}

double hb_pvalue(double empirical_risk, long n, double alpha) {
    if (n < 1) throw std::invalid_argument("sample count must be >= 1");
    if (!(empirical_risk >= -1e-12 && empirical_risk <= 1.0 + 1e-12))
        throw std::invalid_argument("empirical risk outside [0,1]");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha outside [0,1]");
    const double r = std::clamp(empirical_risk, 0.0, 1.0);

    // Relative-entropy (Hoeffding) branch: h1(a, b) for a = min(r, alpha).
    const double a = std::min(r, alpha);
    const double b = alpha;
    double h1;
    if (a >= b) {
        h1 = 0.0;  // h1(b, b) = 0; no evidence against the null
    } else if (b >= 1.0) {
        h1 = kInf;
    } else {
        const double t1 = a <= 0.0 ? 0.0 : a * std::log(a / b);
        const double t2 = (1.0 - a) * std::log((1.0 - a) / (1.0 - b));
        h1 = t1 + t2;
    }
    const double hoeffding = std::exp(-static_cast<double>(n) * h1);

    // Bentkus branch: e * P(Bin(n, alpha) <= ceil(n r)). The nudge keeps
    // ceil() exact when r is a ratio of counts.
    long k = static_cast<long>(std::ceil(static_cast<double>(n) * r - 1e-9));
    k = std::clamp<long>(k, 0, n);
    double tail;
    if (b <= 0.0) {
        tail = 1.0;
    } else if (b >= 1.0) {
        tail = k >= n ? 1.0 : 0.0;
    } else {
        tail = boost::math::cdf(boost::math::binomial_distribution<double>(
                                    static_cast<double>(n), b),
                                static_cast<double>(k));
    }
    const double bentkus = std::exp(1.0) * tail;

    return std::min({1.0, hoeffding, bentkus});
}

FeasibleSet bonferroni_select(const std::vector<PairDiagnostic>& tested, double delta) {
    if (tested.empty()) throw std::invalid_argument("no tested pairs");
    FeasibleSet out;
    out.diagnostics = tested;
    const double cutoff = delta / static_cast<double>(tested.size());
    for (const auto& d : tested) {
        if (d.p_value <= cutoff) {
            out.members.push_back(d.pair);
            out.p_values.push_back(d.p_value);
            out.empirical_risks.push_back(d.risk);
        }
    }
    if (out.members.empty()) {
        out.fallback_used = true;
        out.members = {ThresholdPair{-kInf, kInf}};
        double p = 1.0, r = 0.0;
        for (const auto& d : tested)
            if (std::isinf(d.pair.lo) && d.pair.lo < 0 && std::isinf(d.pair.hi) && d.pair.hi > 0) {
                p = d.p_value;
                r = d.risk;
            }
        out.p_values = {p};
        out.empirical_risks = {r};
    }
    return out;
}

ThresholdPair select_optimal(const FeasibleSet& feasible, const Labeled& validation) {
    if (feasible.members.empty()) throw calibration_error("empty feasible set");
    long n1 = 0, n0 = 0;
    for (const auto& [score, label] : validation) (label == 1 ? n1 : n0)++;
    if (n1 == 0 || n0 == 0)
        throw calibration_error("validation set must contain both classes");
    const long n = n1 + n0;

    // FNR + FPR + AbstentionRate compared exactly over the common
    // denominator n1 * n0 * n, so tie-breaking is deterministic.
    const auto objective_key = [&](const PairStats& st) -> __int128 {
        return static_cast<__int128>(st.fn) * n0 * n + static_cast<__int128>(st.fp) * n1 * n +
               static_cast<__int128>(st.ab) * n1 * n0;
    };

    std::size_t best = 0;
    PairStats best_st = stats_for(feasible.members[0], validation);
    __int128 best_key = objective_key(best_st);
    for (std::size_t i = 1; i < feasible.members.size(); ++i) {
        const PairStats st = stats_for(feasible.members[i], validation);
        const __int128 key = objective_key(st);
        bool better = false;
        if (key != best_key) {
            better = key < best_key;
        } else if (st.ab != best_st.ab) {
            better = st.ab < best_st.ab;
        } else {
            const double w = pair_width(feasible.members[i]);
            const double bw = pair_width(feasible.members[best]);
            if (w != bw)
                better = w < bw;
            else
                better = lex_less(feasible.members[i], feasible.members[best]);
        }
        if (better) {
            best = i;
            best_st = st;
            best_key = key;
        }
    }
    return feasible.members[best];
}

CalibrationResult calibrate_xltt(const Labeled& calibration, const Labeled& validation,
                                 const RiskSpec& spec, int m) {
    spec.validate();
    if (calibration.empty()) throw calibration_error("empty calibration set");

    std::vector<double> scores;
    scores.reserve(calibration.size());
    long n0 = 0;
    for (const auto& [score, label] : calibration) {
        scores.push_back(score);
        if (label == 0) ++n0;
    }
    // FPR is a mean of per-sample losses over the normals only; 1-F1 is
    // non-decomposable and uses the full count (heuristic, as reported in
    // the output metadata).
    const long n_eff = spec.kind == RiskKind::FPR ? n0 : static_cast<long>(calibration.size());
    if (n_eff < 1) throw calibration_error("no effective calibration samples for this risk");

    const ThresholdGrid grid = build_grid(scores, m);
    std::vector<PairDiagnostic> diags;
    diags.reserve(grid.pairs.size());
    for (const auto& pair : grid.pairs) {
        const double risk = empirical_risk(pair, calibration, spec);
        diags.push_back({pair, risk, hb_pvalue(risk, n_eff, spec.alpha)});
    }

    CalibrationResult result;
    result.feasible = bonferroni_select(diags, spec.delta);
    result.chosen = select_optimal(result.feasible, validation);
    result.spec = spec;
    result.grid_size = m;
    return result;
}

nlohmann::json pair_to_json(const ThresholdPair& pair) {
    const auto encode = [](double v) -> nlohmann::json {
        if (std::isinf(v)) return v > 0 ? "+inf" : "-inf";
        return v;
    };
    return nlohmann::json{{"lo", encode(pair.lo)}, {"hi", encode(pair.hi)}};
}

namespace {
double decode_endpoint(const nlohmann::json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "+inf" || s == "inf") return kInf;
        if (s == "-inf") return -kInf;
        throw data_error("unknown threshold endpoint: " + s);
    }
    return j.get<double>();
}
}  // namespace

ThresholdPair pair_from_json(const nlohmann::json& j) {
    try {
        ThresholdPair p{decode_endpoint(j.at("lo")), decode_endpoint(j.at("hi"))};
        if (!(p.lo <= p.hi)) throw data_error("threshold pair must have lo <= hi");
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw data_error(std::string("malformed threshold pair: ") + e.what());
    }
}

nlohmann::json calibration_to_json(const CalibrationResult& result) {
    nlohmann::json diags = nlohmann::json::array();
    for (const auto& d : result.feasible.diagnostics) {
        nlohmann::json row = pair_to_json(d.pair);
        row["risk"] = d.risk;
        row["p"] = d.p_value;
        diags.push_back(std::move(row));
    }
    return nlohmann::json{
        {"method", "xltt"},
        {"chosen", pair_to_json(result.chosen)},
        {"fallback_used", result.feasible.fallback_used},
        {"alpha", result.spec.alpha},
        {"delta", result.spec.delta},
        {"risk", to_string(result.spec.kind)},
        {"grid_size", result.grid_size},
        {"feasible_count", result.feasible.members.size()},
        {"p_value_validity", result.spec.kind == RiskKind::FPR ? "exact" : "heuristic"},
        {"f1_convention", "decided_only"},
        {"diagnostics", std::move(diags)}};
}

CalibrationResult calibration_from_json(const nlohmann::json& j) {
    CalibrationResult result;
    try {
        result.chosen = pair_from_json(j.at("chosen"));
        result.spec.alpha = j.at("alpha").get<double>();
        result.spec.delta = j.at("delta").get<double>();
        result.spec.kind = risk_kind_from_string(j.at("risk").get<std::string>());
        result.grid_size = j.at("grid_size").get<int>();
        std::vector<PairDiagnostic> diags;
        for (const auto& row : j.at("diagnostics")) {
            diags.push_back({pair_from_json(row), row.at("risk").get<double>(),
                             row.at("p").get<double>()});
        }
        if (!diags.empty()) result.feasible = bonferroni_select(diags, result.spec.delta);
        result.feasible.fallback_used = j.at("fallback_used").get<bool>();
    } catch (const nlohmann::json::exception& e) {
        throw data_error(std::string("malformed calibration document: ") + e.what());
    }
    return result;
}

}  // namespace riskgate::risk
