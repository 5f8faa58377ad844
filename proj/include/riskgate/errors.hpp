#pragma once

#include <stdexcept>
#include <string>

namespace riskgate {

// Error taxonomy mirrored by the CLI exit codes:
//   config_error -> 2, data_error -> 3, calibration_error -> 4.
struct config_error : std::runtime_error {
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct data_error : std::runtime_error {
    explicit data_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Degenerate metric input (e.g. single-class AUROC). Treated as a data
// problem by the CLI.
struct metric_error : data_error {
    explicit metric_error(const std::string& msg) : data_error(msg) {}
};

// Calibration could not be carried out at all (single-class validation set,
// zero-variance normals, ...). The xLTT fallback pair is NOT an error.
struct calibration_error : std::runtime_error {
    explicit calibration_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace riskgate
