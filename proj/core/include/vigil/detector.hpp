#pragma once

#include "vigil/detector_config.hpp"
#include "vigil/models.hpp"
#include "vigil/telemetry.hpp"

#include <cstdint>
#include <deque>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace vigil::detector {

/// Per-stream scoring state: the last-M standardized window plus cooldown
/// bookkeeping. One state per stream; never shared across threads.
struct DetectorState {
    std::deque<models::Vector> window;
    std::optional<std::int64_t> last_warning_ms;
    std::optional<std::int64_t> last_timestamp_ms;
    std::uint64_t samples_seen = 0;
    std::uint64_t warnings_emitted = 0;
};

struct WarningEvent {
    std::int64_t timestamp_ms = 0;
    double ae_dist = 0.0;
    /// Absent when the rule fired during LSTM warmup (EitherAbove only).
    std::optional<double> lstm_dist;
    Mode rule_fired = Mode::BothAbove;
};

struct ScoreRecord {
    std::int64_t timestamp_ms = 0;
    double ae_dist = 0.0;
    /// Absent while the window holds fewer than M prior samples.
    std::optional<double> lstm_dist;
    bool warned = false;

    bool operator==(const ScoreRecord&) const = default;
};

struct IngestResult {
    ScoreRecord record;
    std::optional<WarningEvent> warning;

    bool lstm_ready() const { return record.lstm_dist.has_value(); }
};

/// Ensemble rule with strict comparisons.
bool decide(double ae_dist, double lstm_dist, const DetectorConfig& cfg);

/// Scores one sample: standardizes it, computes the reconstruction distance,
/// computes the prediction distance once M prior samples exist, applies the
/// ensemble rule, and enforces the warning cooldown. During warmup only the
/// EitherAbove rule can fire (on the reconstruction distance alone).
/// Samples must arrive in strictly increasing timestamp order.
IngestResult ingest(DetectorState& state, const models::ModelBundle& bundle,
                    const DetectorConfig& cfg, const telemetry::TelemetrySample& sample);

struct ScoreRunResult {
    std::vector<ScoreRecord> records;
    std::vector<WarningEvent> warnings;
    std::uint64_t warning_count = 0;
};

/// Folds ingest over a run from a fresh state.
ScoreRunResult score_run(const models::ModelBundle& bundle, const DetectorConfig& cfg,
                         const telemetry::RunRecord& run);

/// Nearest-rank percentile thresholds over training score pairs.
/// Requires >= 50 pairs and 50 <= p <= 100.
std::pair<double, double> calibrate(const std::vector<std::pair<double, double>>& scores,
                                    double percentile);

/// (ae_dist, lstm_dist) pairs from the records where both distances exist.
std::vector<std::pair<double, double>> collect_score_pairs(const std::vector<ScoreRecord>& records);

inline constexpr const char* kScoreLogHeader = "timestamp_ms,ae_dist,lstm_dist,warned";

/// Score log CSV. The lstm_dist cell is empty for warmup records.
std::string write_score_log(const std::vector<ScoreRecord>& records);
std::vector<ScoreRecord> parse_score_log(const std::string& text);
void write_score_log_file(const std::vector<ScoreRecord>& records,
                          const std::filesystem::path& path);
std::vector<ScoreRecord> parse_score_log_file(const std::filesystem::path& path);

} // namespace vigil::detector
