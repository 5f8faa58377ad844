#include "riskgate/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "riskgate/errors.hpp"

namespace riskgate::scorer {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
}

void ScorerConfig::validate() const {
    if (d_t < 2 || d_t % 2 != 0) throw config_error("d_t must be a positive even integer");
    if (!(base > 0.0)) throw config_error("base must be positive");
    if (K < 1) throw config_error("K must be >= 1");
    if (!(ridge > 0.0)) throw config_error("ridge must be positive");
    if (!(shrinkage >= 0.0 && shrinkage <= 1.0)) throw config_error("shrinkage must lie in [0,1]");
    if (!(rho > 0.0 && rho <= 1.0)) throw config_error("rho must lie in (0,1]");
    if (!(epsilon > 0.0)) throw config_error("epsilon must be positive");
    if (!use_tau && !use_gamma) throw config_error("at least one time encoding must be enabled");
}

std::vector<double> sinusoidal(double u, int d_t, double base) {
    std::vector<double> psi(static_cast<std::size_t>(d_t));
    for (int j = 0; j < d_t / 2; ++j) {
        const double omega = std::pow(base, -2.0 * j / d_t);
        psi[2 * j] = std::sin(omega * u);
        psi[2 * j + 1] = std::cos(omega * u);
    }
    return psi;
}

TimeEncoding encode_time(double t, double t_prev, double t_day_start,
                         const ScorerConfig& config, bool first_of_day) {
    TimeEncoding enc;
    if (first_of_day) {
        enc.tau = config.epsilon;
        enc.gamma = config.epsilon;
    } else {
        if (t < t_prev || t_prev < t_day_start)
            throw std::invalid_argument("timestamps out of order");
        enc.tau = t - t_prev;
        enc.gamma = t - t_day_start;
        if (enc.tau <= 0.0) enc.tau = config.epsilon;
        if (enc.gamma <= 0.0) enc.gamma = config.epsilon;
    }
    enc.psi_tau = sinusoidal(enc.tau, config.d_t, config.base);
    enc.psi_gamma = sinusoidal(enc.gamma, config.d_t, config.base);
    return enc;
}

Eigen::VectorXd embed(const ScoredSample& sample, const TimeEncoding& enc,
                      const ScorerConfig& config) {
    const auto d = static_cast<Eigen::Index>(sample.features.size());
    Eigen::VectorXd e(d + config.time_dim());
    for (Eigen::Index i = 0; i < d; ++i) e[i] = sample.features[static_cast<std::size_t>(i)];
    Eigen::Index at = d;
    if (config.use_tau)
        for (double v : enc.psi_tau) e[at++] = v;
    if (config.use_gamma)
        for (double v : enc.psi_gamma) e[at++] = v;
    return e;
}

ContextWindow build_context(std::span<const ScoredSample> history, const ScorerConfig& config,
                            int d_prime) {
    ContextWindow ctx;
    ctx.aggregated = Eigen::VectorXd::Zero(d_prime + config.time_dim());
    if (history.empty()) return ctx;
    const auto d = static_cast<Eigen::Index>(history.front().features.size());
    if (d != d_prime) throw std::invalid_argument("history feature dimension mismatch");

    const std::size_t take = std::min<std::size_t>(config.K, history.size());
    const double t_day_start = history.front().timestamp;
    double weight = 1.0;  // newest gets rho^0
    double total_weight = 0.0;
    for (std::size_t age = 0; age < take; ++age) {
        const std::size_t idx = history.size() - 1 - age;
        const auto& s = history[idx];
        const bool first = idx == 0;
        const double t_prev = first ? s.timestamp : history[idx - 1].timestamp;
        const TimeEncoding enc = encode_time(s.timestamp, t_prev, t_day_start, config, first);
        ctx.aggregated += weight * embed(s, enc, config);
        total_weight += weight;
        weight *= config.rho;
    }
    ctx.aggregated /= total_weight;
    ctx.used = take;
    return ctx;
}

const char* to_string(ScoreKind kind) { return kind == ScoreKind::DR ? "dr" : "l"; }

ScoreKind score_kind_from_string(std::string_view name) {
    if (name == "dr") return ScoreKind::DR;
    if (name == "l") return ScoreKind::L;
    throw config_error("unknown score kind: " + std::string(name));
}

Eigen::VectorXd ConditionalGaussianFlow::predict_mean(const Eigen::VectorXd& context) const {
    if (context.size() == 0) return bias;  // zero context: prediction is the intercept
    if (context.size() != weight.cols())
        throw std::invalid_argument("context dimension mismatch");
    return weight * context + bias;
}

Eigen::VectorXd ConditionalGaussianFlow::latent(const Eigen::VectorXd& y,
                                                const Eigen::VectorXd& context) const {
    if (y.size() != d_prime) throw std::invalid_argument("feature dimension mismatch");
    return cholesky.triangularView<Eigen::Lower>().solve(y - predict_mean(context));
}

Eigen::VectorXd ConditionalGaussianFlow::inverse(const Eigen::VectorXd& v,
                                                 const Eigen::VectorXd& context) const {
    if (v.size() != d_prime) throw std::invalid_argument("latent dimension mismatch");
    return cholesky.triangularView<Eigen::Lower>() * v + predict_mean(context);
}

double ConditionalGaussianFlow::log_det_cholesky() const {
    return cholesky.diagonal().array().log().sum();
}

double ConditionalGaussianFlow::log_density(const Eigen::VectorXd& y,
                                            const Eigen::VectorXd& context) const {
    const Eigen::VectorXd v = latent(y, context);
    return -0.5 * v.squaredNorm() - 0.5 * d_prime * std::log(kTwoPi) - log_det_cholesky();
}

double ConditionalGaussianFlow::score_dr(const Eigen::VectorXd& y,
                                         const Eigen::VectorXd& context) const {
    return -log_density(y, context);
}

double ConditionalGaussianFlow::score_l(const Eigen::VectorXd& y,
                                        const Eigen::VectorXd& context) const {
    return latent(y, context).norm();
}

ConditionalGaussianFlow fit_linear(const Eigen::MatrixXd& contexts,
                                   const Eigen::MatrixXd& targets,
                                   const ScorerConfig& config) {
    config.validate();
    const Eigen::Index n = contexts.rows();
    const Eigen::Index ctx_dim = contexts.cols();
    const Eigen::Index d = targets.cols();
    if (targets.rows() != n) throw std::invalid_argument("contexts/targets row mismatch");
    if (n <= ctx_dim) throw calibration_error("need more training samples than context dims");

    const Eigen::RowVectorXd c_mean = contexts.colwise().mean();
    const Eigen::RowVectorXd y_mean = targets.colwise().mean();
    const Eigen::MatrixXd cc = contexts.rowwise() - c_mean;
    const Eigen::MatrixXd yc = targets.rowwise() - y_mean;

    // Ridge on the normalized Gram keeps the penalty scale-free in n.
    Eigen::MatrixXd gram = (cc.transpose() * cc) / static_cast<double>(n);
    gram.diagonal().array() += config.ridge;
    const Eigen::MatrixXd cross = (cc.transpose() * yc) / static_cast<double>(n);
    const Eigen::MatrixXd weight_t = gram.ldlt().solve(cross);  // ctx_dim x d

    ConditionalGaussianFlow model;
    model.d_prime = static_cast<int>(d);
    model.config = config;
    model.weight = weight_t.transpose();
    model.bias = (y_mean - c_mean * weight_t).transpose();

    const Eigen::MatrixXd residuals = yc - cc * weight_t;
    Eigen::MatrixXd cov = (residuals.transpose() * residuals) / static_cast<double>(n);
    const Eigen::VectorXd diag = cov.diagonal();
    cov = (1.0 - config.shrinkage) * cov;
    cov.diagonal() += config.shrinkage * diag;
    cov.diagonal().array() += config.ridge;

    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success)
        throw calibration_error("residual covariance not positive definite");
    model.cholesky = llt.matrixL();
    return model;
}

namespace {

// Day-grouped views in timestamp order; day boundaries isolate context.
std::map<int, std::vector<const ScoredSample*>> group_by_day(
    const std::vector<ScoredSample>& samples) {
    std::map<int, std::vector<const ScoredSample*>> days;
    for (const auto& s : samples) days[s.day_id].push_back(&s);
    for (auto& [day, rows] : days)
        std::sort(rows.begin(), rows.end(),
                  [](const ScoredSample* a, const ScoredSample* b) {
                      return a->timestamp < b->timestamp;
                  });
    return days;
}

}  // namespace

ConditionalGaussianFlow fit(const std::vector<ScoredSample>& train, const ScorerConfig& config) {
    config.validate();
    if (train.empty()) throw calibration_error("empty training set");
    const auto d = static_cast<Eigen::Index>(train.front().features.size());
    const Eigen::Index ctx_dim = d + config.time_dim();
    if (static_cast<Eigen::Index>(train.size()) <= ctx_dim)
        throw calibration_error("need more training samples than context dims");

    const auto days = group_by_day(train);
    Eigen::MatrixXd contexts(static_cast<Eigen::Index>(train.size()), ctx_dim);
    Eigen::MatrixXd targets(static_cast<Eigen::Index>(train.size()), d);
    Eigen::Index row = 0;
    std::vector<ScoredSample> day_rows;
    for (const auto& [day_id, rows] : days) {
        day_rows.clear();
        day_rows.reserve(rows.size());
        for (const auto* p : rows) day_rows.push_back(*p);
        for (std::size_t i = 0; i < day_rows.size(); ++i) {
            if (static_cast<Eigen::Index>(day_rows[i].features.size()) != d)
                throw data_error("inconsistent feature dimension in training set");
            const ContextWindow ctx = build_context(
                std::span<const ScoredSample>(day_rows.data(), i), config, static_cast<int>(d));
            contexts.row(row) = ctx.aggregated.transpose();
            for (Eigen::Index k = 0; k < d; ++k)
                targets(row, k) = day_rows[i].features[static_cast<std::size_t>(k)];
            ++row;
        }
    }
    return fit_linear(contexts, targets, config);
}

double score_sample(const ConditionalGaussianFlow& model,
                    std::span<const ScoredSample> history, const ScoredSample& sample,
                    ScoreKind kind) {
    const ContextWindow ctx = build_context(history, model.config, model.d_prime);
    const Eigen::VectorXd& context = ctx.aggregated;
    Eigen::VectorXd y(model.d_prime);
    if (static_cast<int>(sample.features.size()) != model.d_prime)
        throw std::invalid_argument("feature dimension mismatch");
    for (int i = 0; i < model.d_prime; ++i) y[i] = sample.features[static_cast<std::size_t>(i)];
    return kind == ScoreKind::DR ? model.score_dr(y, context) : model.score_l(y, context);
}

std::vector<ScoredSample> score_stream(const ConditionalGaussianFlow& model,
                                       std::vector<ScoredSample> samples, ScoreKind kind) {
    // Stable day-wise ordering; output keeps the input order.
    std::map<int, std::vector<std::size_t>> days;
    for (std::size_t i = 0; i < samples.size(); ++i) days[samples[i].day_id].push_back(i);

    std::vector<ScoredSample> day_rows;
    for (auto& [day_id, indices] : days) {
        std::sort(indices.begin(), indices.end(), [&](std::size_t a, std::size_t b) {
            return samples[a].timestamp < samples[b].timestamp;
        });
        day_rows.clear();
        day_rows.reserve(indices.size());
        for (std::size_t idx : indices) day_rows.push_back(samples[idx]);
        for (std::size_t i = 0; i < indices.size(); ++i) {
            const double s = score_sample(
                model, std::span<const ScoredSample>(day_rows.data(), i), day_rows[i], kind);
            samples[indices[i]].score = s;
            samples[indices[i]].score_kind = to_string(kind);
        }
    }
    return samples;
}

nlohmann::json config_to_json(const ScorerConfig& config) {
    return nlohmann::json{{"d_t", config.d_t},
                          {"base", config.base},
                          {"K", config.K},
                          {"ridge", config.ridge},
                          {"shrinkage", config.shrinkage},
                          {"rho", config.rho},
                          {"use_tau", config.use_tau},
                          {"use_gamma", config.use_gamma},
                          {"epsilon", config.epsilon}};
}

ScorerConfig scorer_config_from_json(const nlohmann::json& j) {
    ScorerConfig c;
    try {
        if (j.contains("d_t")) c.d_t = j["d_t"].get<int>();
        if (j.contains("base")) c.base = j["base"].get<double>();
        if (j.contains("K")) c.K = j["K"].get<int>();
        if (j.contains("ridge")) c.ridge = j["ridge"].get<double>();
        if (j.contains("shrinkage")) c.shrinkage = j["shrinkage"].get<double>();
        if (j.contains("rho")) c.rho = j["rho"].get<double>();
        if (j.contains("use_tau")) c.use_tau = j["use_tau"].get<bool>();
        if (j.contains("use_gamma")) c.use_gamma = j["use_gamma"].get<bool>();
        if (j.contains("epsilon")) c.epsilon = j["epsilon"].get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("bad scorer config: ") + e.what());
    }
    c.validate();
    return c;
}

nlohmann::json ConditionalGaussianFlow::to_json() const {
    std::vector<double> w;
    w.reserve(static_cast<std::size_t>(weight.rows() * weight.cols()));
    for (Eigen::Index r = 0; r < weight.rows(); ++r)
        for (Eigen::Index c = 0; c < weight.cols(); ++c) w.push_back(weight(r, c));
    std::vector<double> b(bias.data(), bias.data() + bias.size());
    std::vector<double> chol;  // packed lower triangle, row-major
    for (Eigen::Index r = 0; r < cholesky.rows(); ++r)
        for (Eigen::Index c = 0; c <= r; ++c) chol.push_back(cholesky(r, c));
    return nlohmann::json{{"d_prime", d_prime},
                          {"context_dim", context_dim()},
                          {"weight", w},
                          {"bias", b},
                          {"cholesky", chol},
                          {"hyper", config_to_json(config)}};
}

ConditionalGaussianFlow ConditionalGaussianFlow::from_json(const nlohmann::json& j) {
    ConditionalGaussianFlow m;
    try {
        m.d_prime = j.at("d_prime").get<int>();
        m.config = scorer_config_from_json(j.at("hyper"));
        const auto ctx_dim = j.at("context_dim").get<int>();
        if (ctx_dim != m.d_prime + m.config.time_dim())
            throw data_error("model context_dim inconsistent with hyperparameters");
        const auto w = j.at("weight").get<std::vector<double>>();
        const auto b = j.at("bias").get<std::vector<double>>();
        const auto chol = j.at("cholesky").get<std::vector<double>>();
        const auto d = static_cast<Eigen::Index>(m.d_prime);
        if (w.size() != static_cast<std::size_t>(d * ctx_dim) ||
            b.size() != static_cast<std::size_t>(d) ||
            chol.size() != static_cast<std::size_t>(d * (d + 1) / 2))
            throw data_error("model arrays have wrong length");
        m.weight.resize(d, ctx_dim);
        for (Eigen::Index r = 0; r < d; ++r)
            for (Eigen::Index c = 0; c < ctx_dim; ++c)
                m.weight(r, c) = w[static_cast<std::size_t>(r * ctx_dim + c)];
        m.bias = Eigen::Map<const Eigen::VectorXd>(b.data(), d);
        m.cholesky = Eigen::MatrixXd::Zero(d, d);
        std::size_t at = 0;
        for (Eigen::Index r = 0; r < d; ++r)
            for (Eigen::Index c = 0; c <= r; ++c) m.cholesky(r, c) = chol[at++];
        for (Eigen::Index r = 0; r < d; ++r)
            if (!(m.cholesky(r, r) > 0.0)) throw data_error("cholesky diagonal must be positive");
    } catch (const nlohmann::json::exception& e) {
        throw data_error(std::string("malformed model document: ") + e.what());
    }
    return m;
}

}  // namespace riskgate::scorer
