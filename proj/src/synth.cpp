#include "riskgate/synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "riskgate/errors.hpp"
#include "riskgate/rng.hpp"

namespace riskgate::synth {

namespace {

constexpr std::uint64_t kDayStream = 0xD4151ULL;
constexpr std::uint64_t kInjectStream = 0x1213ECULL;

// Share of the noise variance carried by a receiver-wide AR(1) factor
// (ambient and irradiance fluctuations move every panel together); the rest
// is per-panel sensor noise. Marginal per-panel sd stays at noise_sigma.
constexpr double kCommonNoiseShare = 0.85;

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

double lerp(double a, double b, double u) { return a + (b - a) * u; }

}  // namespace

const char* to_string(Phase phase) {
    switch (phase) {
        case Phase::Preheating: return "preheating";
        case Phase::Filling: return "filling";
        case Phase::Power: return "power";
        case Phase::Draining: return "draining";
    }
    return "unknown";
}

DaySchedule DaySchedule::standard() {
    // 06:00-08:00 preheat at 0.2, ramp to the 0.7 power level by 09:00, hold
    // until 19:00, drain back down by 20:00.
    DaySchedule s;
    s.phases = {
        PhaseSchedule{Phase::Preheating, 360.0, 480.0, 0.2, 0.01},
        PhaseSchedule{Phase::Filling, 480.0, 540.0, 0.45, 0.02},
        PhaseSchedule{Phase::Power, 540.0, 1140.0, 0.7, 0.03},
        PhaseSchedule{Phase::Draining, 1140.0, 1200.0, 0.45, 0.02},
    };
    return s;
}

void DaySchedule::validate() const {
    static const Phase order[4] = {Phase::Preheating, Phase::Filling, Phase::Power,
                                   Phase::Draining};
    for (int i = 0; i < 4; ++i) {
        const auto& p = phases[i];
        if (p.phase != order[i]) throw config_error("phases out of order");
        if (!(p.start_minute >= 0.0 && p.start_minute < p.end_minute && p.end_minute <= 1440.0))
            throw config_error("phase minutes out of range");
        if (i > 0 && phases[i - 1].end_minute != p.start_minute)
            throw config_error("phases not contiguous");
        if (!(p.mean_level >= 0.0 && p.mean_level <= 1.0))
            throw config_error("phase mean_level out of [0,1]");
    }
    if (!(phases[2].mean_level > phases[0].mean_level))
        throw config_error("power level must exceed preheating level");
}

Phase DaySchedule::phase_at(double minute) const {
    for (int i = 0; i < 3; ++i)
        if (minute >= phases[i].start_minute && minute < phases[i].end_minute)
            return phases[i].phase;
    if (minute >= phases[3].start_minute && minute <= phases[3].end_minute)
        return phases[3].phase;
    throw std::out_of_range("minute outside operational day");
}

double DaySchedule::level_at(double minute, int panel) const {
    const auto& pre = phases[0];
    const auto& fill = phases[1];
    const auto& pow = phases[2];
    const auto& drain = phases[3];
    const double low = pre.mean_level + pre.gradient_slope * panel;
    const double high = pow.mean_level + pow.gradient_slope * panel;
    switch (phase_at(minute)) {
        case Phase::Preheating: return low;
        case Phase::Filling:
            return lerp(low, high, (minute - fill.start_minute) / (fill.end_minute - fill.start_minute));
        case Phase::Power: return high;
        case Phase::Draining:
            return lerp(high, low, (minute - drain.start_minute) / (drain.end_minute - drain.start_minute));
    }
    throw std::out_of_range("minute outside operational day");
}

void GeneratorConfig::validate() const {
    if (n_days < 1) throw config_error("n_days must be >= 1");
    if (d_prime < 1) throw config_error("d_prime must be >= 1");
    if (!(contamination >= 0.0 && contamination <= 0.5))
        throw config_error("contamination must lie in [0, 0.5]");
    if (!(anomaly_magnitude >= 0.0)) throw config_error("anomaly_magnitude must be >= 0");
    if (!(noise_sigma >= 0.0)) throw config_error("noise_sigma must be >= 0");
    if (!(ar_coefficient >= 0.0 && ar_coefficient < 1.0))
        throw config_error("ar_coefficient must lie in [0, 1)");
    schedule.validate();
}

std::vector<ScoredSample> generate_day(const GeneratorConfig& config, int day_id) {
    config.validate();
    Rng rng(mix_seed(config.seed, static_cast<std::uint64_t>(day_id), kDayStream));

    const int d = config.d_prime;
    const double day_end = config.schedule.day_end();
    const double phi = config.ar_coefficient;
    const double innovation = std::sqrt(1.0 - phi * phi);
    const double common_scale = config.noise_sigma * std::sqrt(kCommonNoiseShare);
    const double panel_scale = config.noise_sigma * std::sqrt(1.0 - kCommonNoiseShare);

    // Stationary AR(1) start so the first sample is not special. One chain
    // shared by all panels plus an independent chain per panel.
    double common = rng.normal();
    std::vector<double> panel_noise(d);
    for (auto& e : panel_noise) e = rng.normal();

    std::vector<ScoredSample> day;
    double minute = config.schedule.day_start();
    while (minute <= day_end) {
        ScoredSample s;
        s.timestamp = 1440.0 * day_id + minute;
        s.day_id = day_id;
        s.label = 0;
        s.features.resize(d);
        for (int p = 0; p < d; ++p)
            s.features[p] = clamp01(config.schedule.level_at(minute, p) +
                                    common_scale * common + panel_scale * panel_noise[p]);
        day.push_back(std::move(s));

        minute += rng.uniform(1.0, 5.0);
        common = phi * common + innovation * rng.normal();
        for (auto& e : panel_noise) e = phi * e + innovation * rng.normal();
    }
    return day;
}

std::vector<ScoredSample> inject_anomaly(std::vector<ScoredSample> day,
                                         const DaySchedule& schedule, AnomalyKind kind,
                                         std::size_t start_index, std::size_t duration,
                                         double magnitude, double noise_sigma,
                                         std::uint64_t seed) {
    if (start_index + duration > day.size())
        throw std::out_of_range("anomaly window exceeds day length");
    if (magnitude < 0.0) throw config_error("anomaly magnitude must be >= 0");
    if (day.empty() || duration == 0) return day;

    Rng rng(seed);
    const int d = static_cast<int>(day[start_index].features.size());
    const int panel = static_cast<int>(rng.integer(static_cast<std::uint64_t>(d)));
    const double shift = magnitude * noise_sigma;

    for (std::size_t i = start_index; i < start_index + duration; ++i) {
        auto& s = day[i];
        s.label = 1;
        s.anomaly_kind = kind;
        switch (kind) {
            case AnomalyKind::ColdPanel:
                s.features[panel] = clamp01(s.features[panel] - shift);
                break;
            case AnomalyKind::HotSpot:
                s.features[panel] = clamp01(s.features[panel] + shift);
                break;
            case AnomalyKind::SensorDropout:
                s.features[panel] = 0.0;
                break;
            case AnomalyKind::PhaseInconsistent: {
                // Swap the frame's scheduled level with the opposite phase:
                // preheat-like frames get the power curve and vice versa.
                const double minute = s.timestamp - 1440.0 * s.day_id;
                const double pre0 = schedule.level_at(schedule.phases[0].start_minute, 0);
                const double pow0 = schedule.level_at(schedule.phases[2].start_minute, 0);
                const bool looks_hot = schedule.level_at(minute, 0) >= 0.5 * (pre0 + pow0);
                for (int p = 0; p < d; ++p) {
                    const double current = schedule.level_at(minute, p);
                    const double target = looks_hot
                        ? schedule.level_at(schedule.phases[0].start_minute, p)
                        : schedule.level_at(schedule.phases[2].start_minute, p);
                    s.features[p] = clamp01(s.features[p] + (target - current));
                }
                break;
            }
        }
    }
    return day;
}

std::vector<ScoredSample> generate_dataset(const GeneratorConfig& config) {
    return generate_days(config, 0, config.n_days);
}

std::vector<ScoredSample> generate_days(const GeneratorConfig& config, int first_day_id,
                                        int n_days) {
    config.validate();
    static const AnomalyKind kKinds[4] = {AnomalyKind::ColdPanel, AnomalyKind::HotSpot,
                                          AnomalyKind::SensorDropout,
                                          AnomalyKind::PhaseInconsistent};

    std::vector<ScoredSample> dataset;
    for (int day_id = first_day_id; day_id < first_day_id + n_days; ++day_id) {
        auto day = generate_day(config, day_id);
        const std::size_t n = day.size();
        const auto target =
            static_cast<std::size_t>(std::lround(config.contamination * static_cast<double>(n)));

        Rng inject_rng(mix_seed(config.seed, static_cast<std::uint64_t>(day_id), kInjectStream));
        std::vector<bool> taken(n, false);
        std::size_t injected = 0;
        int window_index = 0;
        while (injected < target) {
            std::size_t duration =
                std::min<std::size_t>(3 + inject_rng.integer(13), target - injected);
            duration = std::max<std::size_t>(duration, 1);

            // Uniform placement with retries, then a linear scan fallback on
            // the first free run (trimmed to fit).
            std::size_t start = n;  // sentinel: not found
            for (int attempt = 0; attempt < 128 && start == n; ++attempt) {
                const std::size_t cand = inject_rng.integer(n - duration + 1);
                bool free = true;
                for (std::size_t i = cand; i < cand + duration; ++i)
                    if (taken[i]) { free = false; break; }
                if (free) start = cand;
            }
            if (start == n) {
                std::size_t best_start = n, best_len = 0, run = 0;
                for (std::size_t i = 0; i <= n; ++i) {
                    if (i < n && !taken[i]) {
                        ++run;
                    } else {
                        if (run > best_len) { best_len = run; best_start = i - run; }
                        run = 0;
                    }
                }
                if (best_len == 0) break;  // day saturated; cannot inject more
                duration = std::min(duration, best_len);
                start = best_start;
            }

            AnomalyKind kind = kKinds[inject_rng.integer(4)];
            if (kind == AnomalyKind::PhaseInconsistent) {
                // The phase swap is defined between the preheating and power
                // plateaus; mid-ramp frames have no opposite level to borrow.
                const double start_minute =
                    day[start].timestamp - 1440.0 * day[start].day_id;
                const Phase phase = config.schedule.phase_at(start_minute);
                if (phase == Phase::Filling || phase == Phase::Draining)
                    kind = kKinds[inject_rng.integer(3)];
            }
            const std::uint64_t window_seed =
                mix_seed(config.seed, static_cast<std::uint64_t>(day_id),
                         kInjectStream + 0x100 + static_cast<std::uint64_t>(window_index));
            day = inject_anomaly(std::move(day), config.schedule, kind, start, duration,
                                 config.anomaly_magnitude, config.noise_sigma, window_seed);
            for (std::size_t i = start; i < start + duration; ++i) taken[i] = true;
            injected += duration;
            ++window_index;
        }

        dataset.insert(dataset.end(), std::make_move_iterator(day.begin()),
                       std::make_move_iterator(day.end()));
    }
    return dataset;
}

nlohmann::json config_to_json(const GeneratorConfig& config) {
    return nlohmann::json{{"seed", config.seed},
                          {"n_days", config.n_days},
                          {"d_prime", config.d_prime},
                          {"contamination", config.contamination},
                          {"anomaly_magnitude", config.anomaly_magnitude},
                          {"noise_sigma", config.noise_sigma},
                          {"ar_coefficient", config.ar_coefficient}};
}

GeneratorConfig config_from_json(const nlohmann::json& j) {
    GeneratorConfig c;
    try {
        if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("n_days")) c.n_days = j["n_days"].get<int>();
        if (j.contains("d_prime")) c.d_prime = j["d_prime"].get<int>();
        if (j.contains("contamination")) c.contamination = j["contamination"].get<double>();
        if (j.contains("anomaly_magnitude"))
            c.anomaly_magnitude = j["anomaly_magnitude"].get<double>();
        if (j.contains("noise_sigma")) c.noise_sigma = j["noise_sigma"].get<double>();
        if (j.contains("ar_coefficient")) c.ar_coefficient = j["ar_coefficient"].get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("bad generator config: ") + e.what());
    }
    c.validate();
    return c;
}

}  // namespace riskgate::synth
