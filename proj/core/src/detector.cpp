#include "vigil/detector.hpp"

#include "vigil/errors.hpp"
#include "vigil/text.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace vigil::detector {

const char* mode_name(Mode mode) {
    return mode == Mode::BothAbove ? "both" : "either";
}

Mode parse_mode(std::string_view name) {
    if (name == "both") return Mode::BothAbove;
    if (name == "either") return Mode::EitherAbove;
    raise(ErrorCode::InvalidArgument, "unknown detector mode: '" + std::string(name) + "'");
}

bool decide(double ae_dist, double lstm_dist, const DetectorConfig& cfg) {
    if (cfg.mode == Mode::BothAbove)
        return ae_dist > cfg.t_ae && lstm_dist > cfg.t_lstm;
    return ae_dist > cfg.t_ae || lstm_dist > cfg.t_lstm;
}

IngestResult ingest(DetectorState& state, const models::ModelBundle& bundle,
                    const DetectorConfig& cfg, const telemetry::TelemetrySample& sample) {
    if (state.last_timestamp_ms && sample.timestamp_ms <= *state.last_timestamp_ms)
        raise(ErrorCode::OutOfOrderSample,
              "timestamp " + std::to_string(sample.timestamp_ms) + " not after " +
                  std::to_string(*state.last_timestamp_ms));

    const auto z = models::standardize(bundle.standardizer, sample.features);
    const auto reconstruction = models::ae_forward(bundle.autoencoder, z);
    const double ae_dist = models::euclidean_distance(z, reconstruction);

    const std::size_t window_size = static_cast<std::size_t>(bundle.lstm.window);
    std::optional<double> lstm_dist;
    if (state.window.size() == window_size) {
        const std::vector<models::Vector> window(state.window.begin(), state.window.end());
        const auto prediction = models::lstm_forecast(bundle.lstm, window);
        lstm_dist = models::euclidean_distance(z, prediction);
    }

    bool rule_fired;
    if (lstm_dist) {
        rule_fired = decide(ae_dist, *lstm_dist, cfg);
    } else {
        // warmup: the LSTM clause cannot participate
        rule_fired = cfg.mode == Mode::EitherAbove && ae_dist > cfg.t_ae;
    }

    bool warned = rule_fired;
    if (warned && cfg.cooldown_s > 0 && state.last_warning_ms &&
        sample.timestamp_ms - *state.last_warning_ms <
            static_cast<std::int64_t>(cfg.cooldown_s) * 1000)
        warned = false;

    IngestResult result;
    result.record = {sample.timestamp_ms, ae_dist, lstm_dist, warned};
    if (warned) {
        state.last_warning_ms = sample.timestamp_ms;
        state.warnings_emitted += 1;
        result.warning = WarningEvent{sample.timestamp_ms, ae_dist, lstm_dist, cfg.mode};
    }

    state.window.push_back(z);
    if (state.window.size() > window_size) state.window.pop_front();
    state.samples_seen += 1;
    state.last_timestamp_ms = sample.timestamp_ms;
    return result;
}

ScoreRunResult score_run(const models::ModelBundle& bundle, const DetectorConfig& cfg,
                         const telemetry::RunRecord& run) {
    ScoreRunResult result;
    result.records.reserve(run.samples.size());
    DetectorState state;
    for (const auto& sample : run.samples) {
        auto step = ingest(state, bundle, cfg, sample);
        result.records.push_back(step.record);
        if (step.warning) result.warnings.push_back(*step.warning);
    }
    result.warning_count = result.warnings.size();
    return result;
}

std::pair<double, double> calibrate(const std::vector<std::pair<double, double>>& scores,
                                    double percentile) {
    if (percentile < 50.0 || percentile > 100.0)
        raise(ErrorCode::InvalidArgument,
              "percentile must be in [50, 100], got " + format_value(percentile));
    if (scores.size() < 50)
        raise(ErrorCode::InsufficientData,
              "calibration needs >= 50 score pairs, got " + std::to_string(scores.size()));

    std::vector<double> ae(scores.size());
    std::vector<double> lstm(scores.size());
    for (std::size_t k = 0; k < scores.size(); ++k) {
        ae[k] = scores[k].first;
        lstm[k] = scores[k].second;
    }
    std::sort(ae.begin(), ae.end());
    std::sort(lstm.begin(), lstm.end());

    const double n = static_cast<double>(scores.size());
    std::size_t rank = static_cast<std::size_t>(std::ceil(percentile / 100.0 * n));
    rank = std::clamp<std::size_t>(rank, 1, scores.size());
    return {ae[rank - 1], lstm[rank - 1]};
}

std::vector<std::pair<double, double>> collect_score_pairs(const std::vector<ScoreRecord>& records) {
    std::vector<std::pair<double, double>> pairs;
    pairs.reserve(records.size());
    for (const auto& r : records)
        if (r.lstm_dist) pairs.emplace_back(r.ae_dist, *r.lstm_dist);
    return pairs;
}

std::string write_score_log(const std::vector<ScoreRecord>& records) {
    std::ostringstream out;
    out << kScoreLogHeader << '\n';
    for (const auto& r : records) {
        out << r.timestamp_ms << ',' << format_value(r.ae_dist) << ',';
        if (r.lstm_dist) out << format_value(*r.lstm_dist);
        out << ',' << (r.warned ? '1' : '0') << '\n';
    }
    return out.str();
}

std::vector<ScoreRecord> parse_score_log(const std::string& text) {
    const auto lines = split_lines(text);
    if (lines.empty()) raise(ErrorCode::MalformedRow, "missing score log header");
    if (lines[0] != kScoreLogHeader)
        raise(ErrorCode::MalformedRow,
              "unexpected score log header: '" + std::string(lines[0]) + "'");

    std::vector<ScoreRecord> records;
    records.reserve(lines.size() - 1);
    std::optional<std::int64_t> last_ts;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::string context = "score row " + std::to_string(i);
        const auto fields = split_fields(lines[i]);
        if (fields.size() != 4)
            raise(ErrorCode::MalformedRow,
                  context + ": expected 4 fields, got " + std::to_string(fields.size()));
        ScoreRecord r;
        r.timestamp_ms = parse_int(fields[0], context.c_str());
        r.ae_dist = parse_double(fields[1], context.c_str());
        if (!fields[2].empty()) r.lstm_dist = parse_double(fields[2], context.c_str());
        if (fields[3] == "1") r.warned = true;
        else if (fields[3] == "0") r.warned = false;
        else raise(ErrorCode::MalformedRow, context + ": warned flag must be 0 or 1");
        if (r.ae_dist < 0.0 || !std::isfinite(r.ae_dist) ||
            (r.lstm_dist && (*r.lstm_dist < 0.0 || !std::isfinite(*r.lstm_dist))))
            raise(ErrorCode::RangeViolation, context + ": distances must be finite and >= 0");
        if (last_ts && r.timestamp_ms <= *last_ts)
            raise(ErrorCode::NonMonotoneTimestamp, context + ": timestamps must increase");
        last_ts = r.timestamp_ms;
        records.push_back(r);
    }
    return records;
}

void write_score_log_file(const std::vector<ScoreRecord>& records,
                          const std::filesystem::path& path) {
    write_file(path.string(), write_score_log(records));
}

std::vector<ScoreRecord> parse_score_log_file(const std::filesystem::path& path) {
    return parse_score_log(read_file(path.string()));
}

} // namespace vigil::detector
