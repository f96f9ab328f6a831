#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace vigil::telemetry {

/// One periodic measurement of the host. Percentages are in [0, 100],
/// memory counters in kilobytes, and every component must be finite.
struct FeatureVector {
    double cpu_total_pct = 0.0;
    double cpu_self_pct = 0.0;
    double mem_used_kb = 0.0;
    double mem_free_kb = 0.0;
    double mem_cached_kb = 0.0;
    double battery_pct = 0.0;

    static constexpr int kCount = 6;
    static const std::array<const char*, 6>& names();

    std::array<double, 6> to_array() const;
    static FeatureVector from_array(const std::array<double, 6>& values);

    /// Throws RangeViolation when any component is non-finite or outside
    /// its stated range. Violations are rejected, never clamped.
    void validate() const;

    bool operator==(const FeatureVector&) const = default;
};

struct TelemetrySample {
    std::int64_t timestamp_ms = 0;
    FeatureVector features;

    bool operator==(const TelemetrySample&) const = default;
};

enum class Label { Benign, Malicious, Unlabeled };

const char* label_name(Label label);
Label parse_label(std::string_view text);

struct RunRecord {
    std::string run_id;
    Label label = Label::Unlabeled;
    std::vector<TelemetrySample> samples;

    bool operator==(const RunRecord&) const = default;
};

inline constexpr const char* kCsvHeader =
    "timestamp_ms,cpu_total_pct,cpu_self_pct,mem_used_kb,mem_free_kb,"
    "mem_cached_kb,battery_pct";

/// Parses the telemetry CSV format. Validates the header, field count and
/// ranges, and strictly increasing timestamps.
RunRecord parse_csv(std::istream& in, std::string run_id = "");
RunRecord parse_csv_text(std::string_view text, std::string run_id = "");
RunRecord parse_csv_file(const std::filesystem::path& path);

void write_csv(const RunRecord& run, std::ostream& out);
std::string write_csv_text(const RunRecord& run);
void write_csv_file(const RunRecord& run, const std::filesystem::path& path);

/// Live probe over the host's procfs/sysfs counters. CPU percentages are
/// derived from jiffy deltas between consecutive calls (whole-uptime
/// aggregates on the first call). Hosts without a battery report 100.
class HostProbe {
public:
    explicit HostProbe(std::filesystem::path root = "/");

    bool available() const { return available_; }

    /// One sample at the current wall clock. Consecutive calls return
    /// strictly increasing timestamps. Throws ProbeUnavailable when the
    /// platform lacks the required counters.
    TelemetrySample sample();

private:
    std::filesystem::path root_;
    bool available_ = false;
    std::optional<std::filesystem::path> battery_capacity_path_;
    bool have_prev_ = false;
    unsigned long long prev_total_ = 0;
    unsigned long long prev_idle_ = 0;
    unsigned long long prev_self_ = 0;
    double last_cpu_total_pct_ = 0.0;
    double last_cpu_self_pct_ = 0.0;
    std::int64_t last_timestamp_ms_ = 0;
    bool have_last_timestamp_ = false;
};

/// Ordered sample source with one producer and one consumer. Replay yields
/// the recorded samples as fast as the consumer pulls them; live mode probes
/// the host once per period.
class SampleStream {
public:
    static SampleStream replay(RunRecord run, int period_ms = 1000);
    static SampleStream live(HostProbe probe, int period_ms = 1000);

    /// Next sample, or nullopt at end of stream (replay exhausted).
    std::optional<TelemetrySample> next();

private:
    SampleStream() = default;

    bool is_replay_ = true;
    RunRecord run_;
    std::size_t index_ = 0;
    std::optional<HostProbe> probe_;
    int period_ms_ = 1000;
    bool started_ = false;
    std::chrono::steady_clock::time_point next_due_{};
};

} // namespace vigil::telemetry
