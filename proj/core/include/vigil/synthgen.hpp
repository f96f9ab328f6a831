#pragma once

#include "vigil/telemetry.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace vigil::synthgen {

enum class Shape { Step, Ramp, SpikeTrain };

const char* shape_name(Shape shape);
Shape parse_shape(std::string_view text);

/// One disturbance superposed on the baseline. The offset added at time t
/// is envelope(t) * amount with amount = delta + mean * (factor - 1), so a
/// purely additive injection leaves factor at 1 and a purely multiplicative
/// one leaves delta at 0. Envelopes over [start_s, end_s): step holds 1,
/// ramp rises linearly to 1 at the end, spike_train is 1 during the first
/// second of every kSpikePeriodS-second slot.
struct Injection {
    double start_s = 0.0;
    double end_s = 0.0;
    int feature = 0;
    double delta = 0.0;
    double factor = 1.0;
    Shape shape = Shape::Step;

    bool operator==(const Injection&) const = default;
};

inline constexpr double kSpikePeriodS = 10.0;

struct ScenarioSpec {
    std::string name;
    double duration_s = 600.0;
    std::uint64_t seed = 0;
    std::array<double, 6> baseline_means{};
    std::array<double, 6> baseline_stds{};
    std::vector<Injection> injections;

    bool operator==(const ScenarioSpec&) const = default;
};

/// Calm host defaults: moderate total CPU, a quiet self process, stable
/// memory counters, near-full battery.
ScenarioSpec baseline_scenario(std::string name, double duration_s, std::uint64_t seed);

/// Throws InvalidSpec when fields are non-finite, the duration is not
/// positive, stds are negative, or an injection falls outside the run or
/// names a bad feature.
void validate_spec(const ScenarioSpec& spec);

struct GenStats {
    std::uint64_t clamped_values = 0;
};

/// One sample per second over duration_s, timestamps t*1000. Every feature
/// draws Gaussian noise around its baseline mean on every sample (so the
/// stream is a prefix-stable function of the seed), injections are
/// superposed, and out-of-range values are clamped into the valid feature
/// ranges with each clamp counted in stats.
telemetry::RunRecord generate_run(const ScenarioSpec& spec, GenStats* stats = nullptr);

struct LabeledScenario {
    ScenarioSpec spec;
    telemetry::Label label = telemetry::Label::Benign;
};

/// Fixed 20-scenario evaluation suite: 10 benign runs over varied calm
/// baselines and 10 anomalous runs covering step, ramp, spike-train and
/// multiplicative injections across the features. Two anomalous scenarios
/// start their injections only in the final fifth of the run. Every
/// injection peaks at least 5 baseline stds away from its feature's mean.
std::vector<LabeledScenario> standard_suite();

std::string write_spec_json(const ScenarioSpec& spec);
ScenarioSpec parse_spec_json(const std::string& text);
void write_spec_file(const ScenarioSpec& spec, const std::filesystem::path& path);
ScenarioSpec parse_spec_file(const std::filesystem::path& path);

} // namespace vigil::synthgen
