#pragma once

#include <string_view>

namespace vigil::detector {

/// Ensemble rule over the two distances. BothAbove fires when both exceed
/// their thresholds, EitherAbove when at least one does. Comparisons are
/// strict.
enum class Mode { BothAbove, EitherAbove };

const char* mode_name(Mode mode);
Mode parse_mode(std::string_view name);

struct DetectorConfig {
    Mode mode = Mode::BothAbove;
    double t_ae = 100.0;
    double t_lstm = 100.0;
    int cooldown_s = 30;

    bool operator==(const DetectorConfig&) const = default;
};

} // namespace vigil::detector
