#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "riskgate/sample.hpp"

namespace riskgate::synth {

enum class Phase { Preheating, Filling, Power, Draining };

const char* to_string(Phase phase);

struct PhaseSchedule {
    Phase phase;
    double start_minute;    // minutes since day start, [0, 1440]
    double end_minute;
    double mean_level;      // normalized temperature in [0, 1]
    double gradient_slope;  // per-panel increment along the flow direction
};

// Four contiguous phases covering one operational day. Filling ramps from the
// Preheating level up to the Power level; Draining ramps back down.
struct DaySchedule {
    std::array<PhaseSchedule, 4> phases;

    static DaySchedule standard();

    void validate() const;
    double day_start() const { return phases.front().start_minute; }
    double day_end() const { return phases.back().end_minute; }
    Phase phase_at(double minute) const;
    // Scheduled mean temperature of `panel` at `minute` (noise-free curve).
    double level_at(double minute, int panel) const;
};

struct GeneratorConfig {
    std::uint64_t seed = 42;
    int n_days = 10;
    int d_prime = 8;
    double contamination = 0.1;      // fraction of anomalous samples, [0, 0.5]
    double anomaly_magnitude = 4.0;  // in units of noise_sigma
    double noise_sigma = 0.08;
    double ar_coefficient = 0.3;     // AR(1) coefficient, [0, 1)
    DaySchedule schedule = DaySchedule::standard();

    void validate() const;
};

// One day of normal operation: phase-structured mean curve with a spatial
// gradient, stationary AR(1) noise per panel, inter-arrival times uniform in
// [1, 5] minutes. Pure function of (config, day_id). All labels 0.
std::vector<ScoredSample> generate_day(const GeneratorConfig& config, int day_id);

// Relabels day[start_index, start_index + duration) as anomalous and applies
// the perturbation for `kind`. Returns the modified copy.
std::vector<ScoredSample> inject_anomaly(std::vector<ScoredSample> day,
                                         const DaySchedule& schedule,
                                         AnomalyKind kind,
                                         std::size_t start_index,
                                         std::size_t duration,
                                         double magnitude,
                                         double noise_sigma,
                                         std::uint64_t seed);

// n_days concatenated, with anomaly windows injected per day until the
// labeled fraction matches config.contamination (exact per-day rounding).
std::vector<ScoredSample> generate_dataset(const GeneratorConfig& config);

// Same contract over an explicit day-id range [first_day_id,
// first_day_id + n_days); generate_dataset is the range starting at 0.
std::vector<ScoredSample> generate_days(const GeneratorConfig& config, int first_day_id,
                                        int n_days);

nlohmann::json config_to_json(const GeneratorConfig& config);
GeneratorConfig config_from_json(const nlohmann::json& j);

}  // namespace riskgate::synth
