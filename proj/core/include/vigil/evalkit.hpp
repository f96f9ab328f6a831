#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace vigil::evalkit {

enum class RunLabel { Benign, Malicious };

const char* run_label_name(RunLabel label);
RunLabel parse_run_label(std::string_view text);

/// One evaluated run: its ground-truth label and how many warnings the
/// detector raised over it.
struct RunOutcome {
    std::string run_id;
    RunLabel true_label = RunLabel::Benign;
    std::uint64_t warning_count = 0;

    bool operator==(const RunOutcome&) const = default;
};

/// Run-level prediction: malicious iff the run produced at least k warnings.
RunLabel classify_run(const RunOutcome& outcome, std::uint64_t k = 1);

/// Malicious is the positive class.
struct ConfusionMatrix {
    std::uint64_t tp = 0;
    std::uint64_t fp = 0;
    std::uint64_t tn = 0;
    std::uint64_t fn = 0;

    bool operator==(const ConfusionMatrix&) const = default;
};

ConfusionMatrix confusion(std::span<const RunOutcome> outcomes, std::uint64_t k = 1);

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Per-class and macro-averaged metrics. The benign class is scored
/// symmetrically (tn acts as its true positives). Macro values are the
/// unweighted means of the two per-class values; in particular macro F1 is
/// the mean of the per-class F1 scores, not the F1 of the macro precision
/// and recall. 0/0 ratios are defined as 0.
struct MetricsReport {
    ClassMetrics benign;
    ClassMetrics malicious;
    ClassMetrics macro;
};

MetricsReport metrics(const ConfusionMatrix& cm);

struct RenderedReport {
    std::string text;         // per-run table plus metrics table
    std::string report_csv;   // class,precision,recall,f1
    std::string outcomes_csv; // run_id,label,warning_count
};

RenderedReport render_report(const MetricsReport& report,
                             std::span<const RunOutcome> outcomes,
                             std::uint64_t k = 1);

inline constexpr const char* kOutcomesCsvHeader = "run_id,label,warning_count";
inline constexpr const char* kReportCsvHeader = "class,precision,recall,f1";

std::string write_outcomes_csv(std::span<const RunOutcome> outcomes);
std::vector<RunOutcome> parse_outcomes_csv(const std::string& text);
void write_outcomes_file(std::span<const RunOutcome> outcomes,
                         const std::filesystem::path& path);
std::vector<RunOutcome> parse_outcomes_file(const std::filesystem::path& path);

/// Re-reads a rendered report CSV into (class name, metrics) rows.
std::vector<std::pair<std::string, ClassMetrics>> parse_report_csv(const std::string& text);

} // namespace vigil::evalkit
