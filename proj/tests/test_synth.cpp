#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "riskgate/errors.hpp"
#include "riskgate/sample.hpp"
#include "riskgate/synth.hpp"

using namespace riskgate;
using namespace riskgate::synth;

namespace {

// Independent re-evaluation of the scheduled mean curve for the standard
// schedule; deliberately not calling DaySchedule::level_at.
double reference_level(double minute, int panel) {
    const double low = 0.2 + 0.01 * panel;
    const double high = 0.7 + 0.03 * panel;
    if (minute < 480.0) return low;
    if (minute < 540.0) return low + (high - low) * (minute - 480.0) / 60.0;
    if (minute < 1140.0) return high;
    return high + (low - high) * (minute - 1140.0) / 60.0;
}

GeneratorConfig small_config() {
    GeneratorConfig cfg;
    cfg.seed = 7;
    cfg.n_days = 2;
    cfg.d_prime = 4;
    cfg.contamination = 0.0;
    return cfg;
}

}  // namespace

TEST_CASE("generate_day is a pure function of (config, day_id)") {
    const auto cfg = small_config();
    const auto a = generate_day(cfg, 1);
    const auto b = generate_day(cfg, 1);
    CHECK(to_jsonl(a) == to_jsonl(b));
    const auto c = generate_day(cfg, 2);
    CHECK(to_jsonl(a) != to_jsonl(c));
}

TEST_CASE("zero noise reproduces the scheduled mean curve exactly") {
    auto cfg = small_config();
    cfg.noise_sigma = 0.0;
    cfg.ar_coefficient = 0.0;
    const auto day = generate_day(cfg, 0);
    for (const auto& s : day) {
        const double minute = s.timestamp - 1440.0 * s.day_id;
        for (int p = 0; p < cfg.d_prime; ++p)
            CHECK(s.features[static_cast<std::size_t>(p)] ==
                  doctest::Approx(reference_level(minute, p)).epsilon(1e-12));
    }
}

TEST_CASE("inter-arrival times stay in [1, 5] minutes") {
    const auto cfg = small_config();
    for (int day_id = 0; day_id < 5; ++day_id) {
        const auto day = generate_day(cfg, day_id);
        REQUIRE(day.size() > 1);
        for (std::size_t i = 1; i < day.size(); ++i) {
            const double gap = day[i].timestamp - day[i - 1].timestamp;
            CHECK(gap >= 1.0);
            CHECK(gap <= 5.0);
        }
    }
}

TEST_CASE("every day covers all four phases and starts at preheating") {
    const auto cfg = small_config();
    const auto schedule = cfg.schedule;
    for (int day_id = 0; day_id < 10; ++day_id) {
        const auto day = generate_day(cfg, day_id);
        CHECK(day.front().timestamp - 1440.0 * day_id == schedule.day_start());
        std::set<Phase> seen;
        for (const auto& s : day) seen.insert(schedule.phase_at(s.timestamp - 1440.0 * day_id));
        CHECK(seen.size() == 4);
    }
}

TEST_CASE("labels are all zero before injection and features stay in [0,1]") {
    auto cfg = small_config();
    cfg.noise_sigma = 0.2;  // exaggerate so the tails get clipped
    const auto day = generate_day(cfg, 0);
    for (const auto& s : day) {
        CHECK(s.label == 0);
        for (double f : s.features) {
            CHECK(f >= 0.0);
            CHECK(f <= 1.0);
        }
    }
}

TEST_CASE("zero-magnitude cold panel flips labels but not features") {
    const auto cfg = small_config();
    const auto day = generate_day(cfg, 0);
    const auto after = inject_anomaly(day, cfg.schedule, AnomalyKind::ColdPanel, 5, 4, 0.0,
                                      cfg.noise_sigma, 99);
    for (std::size_t i = 0; i < day.size(); ++i) {
        CHECK(after[i].features == day[i].features);
        if (i >= 5 && i < 9) {
            CHECK(after[i].label == 1);
            CHECK(after[i].anomaly_kind == AnomalyKind::ColdPanel);
        } else {
            CHECK(after[i].label == 0);
        }
    }
}

TEST_CASE("sensor dropout zeroes exactly one panel in the window") {
    const auto cfg = small_config();
    const auto day = generate_day(cfg, 0);
    const auto after = inject_anomaly(day, cfg.schedule, AnomalyKind::SensorDropout, 10, 6, 4.0,
                                      cfg.noise_sigma, 123);
    int dropped_panel = -1;
    for (int p = 0; p < cfg.d_prime; ++p)
        if (after[10].features[static_cast<std::size_t>(p)] == 0.0) dropped_panel = p;
    REQUIRE(dropped_panel >= 0);
    for (std::size_t i = 10; i < 16; ++i) {
        CHECK(after[i].features[static_cast<std::size_t>(dropped_panel)] == 0.0);
        for (int p = 0; p < cfg.d_prime; ++p)
            if (p != dropped_panel)
                CHECK(after[i].features[static_cast<std::size_t>(p)] ==
                      day[i].features[static_cast<std::size_t>(p)]);
    }
}

TEST_CASE("cold panel shifts the affected panel by exactly magnitude * sigma") {
    // Window in the power phase, far from the clipping boundary.
    auto cfg = small_config();
    cfg.noise_sigma = 0.02;
    const auto day = generate_day(cfg, 0);
    std::size_t start = 0;
    while (day[start].timestamp - 1440.0 * day[start].day_id < 600.0) ++start;
    const double shift = 4.0 * 0.02;  // 0.08
    const auto after =
        inject_anomaly(day, cfg.schedule, AnomalyKind::ColdPanel, start, 5, 4.0, 0.02, 321);
    int panel = -1;
    for (int p = 0; p < cfg.d_prime; ++p)
        if (after[start].features[static_cast<std::size_t>(p)] !=
            day[start].features[static_cast<std::size_t>(p)])
            panel = p;
    REQUIRE(panel >= 0);
    for (std::size_t i = start; i < start + 5; ++i)
        CHECK(after[i].features[static_cast<std::size_t>(panel)] ==
              day[i].features[static_cast<std::size_t>(panel)] - shift);
}

TEST_CASE("phase-inconsistent swaps preheating frames onto the power curve") {
    auto cfg = small_config();
    cfg.noise_sigma = 0.0;
    cfg.ar_coefficient = 0.0;
    const auto day = generate_day(cfg, 0);
    // First samples are preheating; after injection they should sit at the
    // power level instead.
    const auto after = inject_anomaly(day, cfg.schedule, AnomalyKind::PhaseInconsistent, 0, 3,
                                      4.0, cfg.noise_sigma, 5);
    for (std::size_t i = 0; i < 3; ++i)
        for (int p = 0; p < cfg.d_prime; ++p)
            CHECK(after[i].features[static_cast<std::size_t>(p)] ==
                  doctest::Approx(0.7 + 0.03 * p).epsilon(1e-12));
}

TEST_CASE("window outside the day raises an index error") {
    const auto cfg = small_config();
    const auto day = generate_day(cfg, 0);
    CHECK_THROWS_AS(inject_anomaly(day, cfg.schedule, AnomalyKind::HotSpot, day.size() - 2, 5,
                                   1.0, cfg.noise_sigma, 1),
                    std::out_of_range);
}

TEST_CASE("zero contamination means zero anomalous labels") {
    auto cfg = small_config();
    cfg.n_days = 5;
    for (const auto& s : generate_dataset(cfg)) CHECK(s.label == 0);
}

TEST_CASE("contamination hits the target count within one sample per day") {
    GeneratorConfig cfg;
    cfg.seed = 11;
    cfg.n_days = 36;  // roughly 10k samples
    cfg.contamination = 0.1;
    const auto data = generate_dataset(cfg);
    long anomalous = 0;
    for (const auto& s : data) anomalous += *s.label == 1;
    const double target = cfg.contamination * static_cast<double>(data.size());
    CHECK(std::abs(static_cast<double>(anomalous) - target) <= cfg.n_days);
    for (const auto& s : data)
        for (double f : s.features) {
            CHECK(f >= 0.0);
            CHECK(f <= 1.0);
        }
}

TEST_CASE("seeds change the noise but not the schedule") {
    auto a_cfg = small_config();
    auto b_cfg = small_config();
    b_cfg.seed = 8888;
    const auto a = generate_day(a_cfg, 0);
    const auto b = generate_day(b_cfg, 0);
    CHECK(a.front().features != b.front().features);
    // Same phase structure: both start at the same minute with the same dims.
    CHECK(a.front().timestamp == b.front().timestamp);
    CHECK(a.front().features.size() == b.front().features.size());
}

TEST_CASE("power phase runs hotter than preheating over many clean days") {
    auto cfg = small_config();
    cfg.n_days = 100;
    cfg.contamination = 0.0;
    double power_sum = 0.0, preheat_sum = 0.0;
    long power_n = 0, preheat_n = 0;
    for (const auto& s : generate_dataset(cfg)) {
        const double minute = s.timestamp - 1440.0 * s.day_id;
        const Phase phase = cfg.schedule.phase_at(minute);
        for (double f : s.features) {
            if (phase == Phase::Power) {
                power_sum += f;
                ++power_n;
            } else if (phase == Phase::Preheating) {
                preheat_sum += f;
                ++preheat_n;
            }
        }
    }
    REQUIRE(power_n > 0);
    REQUIRE(preheat_n > 0);
    CHECK(power_sum / power_n > preheat_sum / preheat_n);
}

TEST_CASE("invalid configs are rejected") {
    auto cfg = small_config();
    cfg.contamination = 0.6;
    CHECK_THROWS_AS(generate_day(cfg, 0), config_error);
    cfg = small_config();
    cfg.ar_coefficient = 1.0;
    CHECK_THROWS_AS(generate_dataset(cfg), config_error);
}
