#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "riskgate/sample.hpp"

namespace riskgate::scorer {

struct ScorerConfig {
    int d_t = 8;            // sinusoidal encoding dimension (even)
    double base = 10000.0;  // frequency base
    int K = 30;             // context window length
    double ridge = 1e-3;
    double shrinkage = 0.1;  // diagonal shrinkage of the residual covariance
    double rho = 0.9;        // context decay, newest weight largest
    bool use_tau = true;
    bool use_gamma = true;
    double epsilon = 1e-5;  // substitute for zero elapsed times

    void validate() const;
    int time_dim() const { return (use_tau ? d_t : 0) + (use_gamma ? d_t : 0); }
};

struct TimeEncoding {
    double tau = 0.0;    // inter-arrival minutes
    double gamma = 0.0;  // minutes since day start
    std::vector<double> psi_tau;
    std::vector<double> psi_gamma;
};

// [sin(w_j u), cos(w_j u)] pairs with w_j = base^(-2j/d_t), j = 0..d_t/2-1.
std::vector<double> sinusoidal(double u, int d_t, double base);

TimeEncoding encode_time(double t, double t_prev, double t_day_start,
                         const ScorerConfig& config, bool first_of_day = false);

struct ContextWindow {
    Eigen::VectorXd aggregated;  // length d_prime + time_dim(), zero when no history
    std::size_t used = 0;        // number of history samples aggregated
};

// Per-sample embedding: features (+) psi_tau (+) psi_gamma, honoring the
// use_tau / use_gamma switches.
Eigen::VectorXd embed(const ScoredSample& sample, const TimeEncoding& enc,
                      const ScorerConfig& config);

// Exponentially weighted mean of the most recent min(K, |history|)
// embeddings; weight rho^age, normalized. History must be one day, sorted.
// d_prime sizes the zero vector returned for an empty history.
ContextWindow build_context(std::span<const ScoredSample> history,
                            const ScorerConfig& config, int d_prime);

enum class ScoreKind { DR, L };
const char* to_string(ScoreKind kind);
ScoreKind score_kind_from_string(std::string_view name);

// Affine conditional-Gaussian flow: y = L v + (W c + b), v ~ N(0, I).
// Invertible by construction; log-density is exact via change of variables.
struct ConditionalGaussianFlow {
    int d_prime = 0;
    ScorerConfig config;
    Eigen::MatrixXd weight;    // d' x context_dim
    Eigen::VectorXd bias;      // d'
    Eigen::MatrixXd cholesky;  // d' x d' lower triangular, positive diagonal

    int context_dim() const { return d_prime + config.time_dim(); }

    Eigen::VectorXd predict_mean(const Eigen::VectorXd& context) const;
    // v = L^-1 (y - mean(c))
    Eigen::VectorXd latent(const Eigen::VectorXd& y, const Eigen::VectorXd& context) const;
    // g(v; c) = L v + mean(c)
    Eigen::VectorXd inverse(const Eigen::VectorXd& v, const Eigen::VectorXd& context) const;
    // -1/2 |v|^2 - d'/2 log(2 pi) - log det L
    double log_density(const Eigen::VectorXd& y, const Eigen::VectorXd& context) const;
    double log_det_cholesky() const;

    double score_dr(const Eigen::VectorXd& y, const Eigen::VectorXd& context) const;
    double score_l(const Eigen::VectorXd& y, const Eigen::VectorXd& context) const;

    nlohmann::json to_json() const;
    static ConditionalGaussianFlow from_json(const nlohmann::json& j);
};

// Ridge regression of targets on contexts (rows are observations) plus a
// shrunk Cholesky factor of the residual covariance:
//   (1 - shrinkage) * Cov + shrinkage * diag(Cov) + ridge * I.
ConditionalGaussianFlow fit_linear(const Eigen::MatrixXd& contexts,
                                   const Eigen::MatrixXd& targets,
                                   const ScorerConfig& config);

// Builds one (context, target) row per training sample — context from the
// same-day history only — and delegates to fit_linear.
ConditionalGaussianFlow fit(const std::vector<ScoredSample>& train,
                            const ScorerConfig& config);

double score_sample(const ConditionalGaussianFlow& model,
                    std::span<const ScoredSample> history,
                    const ScoredSample& sample, ScoreKind kind);

// Scores every sample against its own-day history; fills score, score_kind.
std::vector<ScoredSample> score_stream(const ConditionalGaussianFlow& model,
                                       std::vector<ScoredSample> samples,
                                       ScoreKind kind);

nlohmann::json config_to_json(const ScorerConfig& config);
ScorerConfig scorer_config_from_json(const nlohmann::json& j);

}  // namespace riskgate::scorer
