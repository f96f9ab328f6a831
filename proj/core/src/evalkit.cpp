#include "vigil/evalkit.hpp"

#include "vigil/errors.hpp"
#include "vigil/text.hpp"

#include <cstdio>
#include <sstream>

namespace vigil::evalkit {

const char* run_label_name(RunLabel label) {
    return label == RunLabel::Benign ? "benign" : "malicious";
}

RunLabel parse_run_label(std::string_view text) {
    if (text == "benign") return RunLabel::Benign;
    if (text == "malicious") return RunLabel::Malicious;
    raise(ErrorCode::MalformedRow, "unknown run label: '" + std::string(text) + "'");
}

RunLabel classify_run(const RunOutcome& outcome, std::uint64_t k) {
    if (k < 1) raise(ErrorCode::InvalidArgument, "warning threshold k must be >= 1");
    return outcome.warning_count >= k ? RunLabel::Malicious : RunLabel::Benign;
}

ConfusionMatrix confusion(std::span<const RunOutcome> outcomes, std::uint64_t k) {
    if (outcomes.empty()) raise(ErrorCode::EmptyInput, "no run outcomes to tally");
    ConfusionMatrix cm;
    for (const auto& outcome : outcomes) {
        const bool predicted_malicious = classify_run(outcome, k) == RunLabel::Malicious;
        const bool is_malicious = outcome.true_label == RunLabel::Malicious;
        if (is_malicious && predicted_malicious) cm.tp += 1;
        else if (is_malicious && !predicted_malicious) cm.fn += 1;
        else if (!is_malicious && predicted_malicious) cm.fp += 1;
        else cm.tn += 1;
    }
    return cm;
}

namespace {

double ratio(std::uint64_t num, std::uint64_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double f1_score(double precision, double recall) {
    return precision + recall == 0.0 ? 0.0
                                     : 2.0 * precision * recall / (precision + recall);
}

std::string format_pct(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f%%", fraction * 100.0);
    return buf;
}

} // namespace

MetricsReport metrics(const ConfusionMatrix& cm) {
    MetricsReport report;
    report.malicious.precision = ratio(cm.tp, cm.tp + cm.fp);
    report.malicious.recall = ratio(cm.tp, cm.tp + cm.fn);
    report.malicious.f1 = f1_score(report.malicious.precision, report.malicious.recall);
    report.benign.precision = ratio(cm.tn, cm.tn + cm.fn);
    report.benign.recall = ratio(cm.tn, cm.tn + cm.fp);
    report.benign.f1 = f1_score(report.benign.precision, report.benign.recall);
    report.macro.precision = (report.benign.precision + report.malicious.precision) / 2.0;
    report.macro.recall = (report.benign.recall + report.malicious.recall) / 2.0;
    report.macro.f1 = (report.benign.f1 + report.malicious.f1) / 2.0;
    return report;
}

RenderedReport render_report(const MetricsReport& report,
                             std::span<const RunOutcome> outcomes,
                             std::uint64_t k) {
    RenderedReport out;

    std::ostringstream text;
    text << "Run outcomes (k = " << k << ")\n";
    char row[160];
    std::snprintf(row, sizeof(row), "%-28s %-10s %9s  %s\n", "run_id", "label",
                  "warnings", "predicted");
    text << row;
    for (const auto& o : outcomes) {
        std::snprintf(row, sizeof(row), "%-28s %-10s %9llu  %s\n", o.run_id.c_str(),
                      run_label_name(o.true_label),
                      static_cast<unsigned long long>(o.warning_count),
                      run_label_name(classify_run(o, k)));
        text << row;
    }
    text << "\nMetrics (0/0 ratios reported as 0)\n";
    std::snprintf(row, sizeof(row), "%-10s %10s %10s %10s\n", "class", "precision",
                  "recall", "f1");
    text << row;
    const auto metrics_row = [&](const char* name, const ClassMetrics& m) {
        std::snprintf(row, sizeof(row), "%-10s %10s %10s %10s\n", name,
                      format_pct(m.precision).c_str(), format_pct(m.recall).c_str(),
                      format_pct(m.f1).c_str());
        text << row;
    };
    metrics_row("benign", report.benign);
    metrics_row("malicious", report.malicious);
    metrics_row("macro", report.macro);
    out.text = text.str();

    std::ostringstream csv;
    csv << kReportCsvHeader << '\n';
    const auto csv_row = [&](const char* name, const ClassMetrics& m) {
        csv << name << ',' << format_value(m.precision) << ',' << format_value(m.recall)
            << ',' << format_value(m.f1) << '\n';
    };
    csv_row("benign", report.benign);
    csv_row("malicious", report.malicious);
    csv_row("macro", report.macro);
    out.report_csv = csv.str();

    out.outcomes_csv = write_outcomes_csv(outcomes);
    return out;
}

std::string write_outcomes_csv(std::span<const RunOutcome> outcomes) {
    std::ostringstream out;
    out << kOutcomesCsvHeader << '\n';
    for (const auto& o : outcomes)
        out << o.run_id << ',' << run_label_name(o.true_label) << ',' << o.warning_count
            << '\n';
    return out.str();
}

std::vector<RunOutcome> parse_outcomes_csv(const std::string& text) {
    const auto lines = split_lines(text);
    if (lines.empty()) raise(ErrorCode::MalformedRow, "missing outcomes header");
    if (lines[0] != kOutcomesCsvHeader)
        raise(ErrorCode::MalformedRow,
              "unexpected outcomes header: '" + std::string(lines[0]) + "'");
    std::vector<RunOutcome> outcomes;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::string context = "outcomes row " + std::to_string(i);
        const auto fields = split_fields(lines[i]);
        if (fields.size() != 3)
            raise(ErrorCode::MalformedRow,
                  context + ": expected 3 fields, got " + std::to_string(fields.size()));
        RunOutcome o;
        o.run_id = std::string(fields[0]);
        if (o.run_id.empty()) raise(ErrorCode::MalformedRow, context + ": empty run_id");
        o.true_label = parse_run_label(fields[1]);
        const auto count = parse_int(fields[2], context.c_str());
        if (count < 0)
            raise(ErrorCode::MalformedRow, context + ": negative warning count");
        o.warning_count = static_cast<std::uint64_t>(count);
        outcomes.push_back(std::move(o));
    }
    return outcomes;
}

void write_outcomes_file(std::span<const RunOutcome> outcomes,
                         const std::filesystem::path& path) {
    write_file(path.string(), write_outcomes_csv(outcomes));
}

std::vector<RunOutcome> parse_outcomes_file(const std::filesystem::path& path) {
    return parse_outcomes_csv(read_file(path.string()));
}

std::vector<std::pair<std::string, ClassMetrics>> parse_report_csv(const std::string& text) {
    const auto lines = split_lines(text);
    if (lines.empty()) raise(ErrorCode::MalformedRow, "missing report header");
    if (lines[0] != kReportCsvHeader)
        raise(ErrorCode::MalformedRow,
              "unexpected report header: '" + std::string(lines[0]) + "'");
    std::vector<std::pair<std::string, ClassMetrics>> rows;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::string context = "report row " + std::to_string(i);
        const auto fields = split_fields(lines[i]);
        if (fields.size() != 4)
            raise(ErrorCode::MalformedRow,
                  context + ": expected 4 fields, got " + std::to_string(fields.size()));
        ClassMetrics m;
        m.precision = parse_double(fields[1], context.c_str());
        m.recall = parse_double(fields[2], context.c_str());
        m.f1 = parse_double(fields[3], context.c_str());
        rows.emplace_back(std::string(fields[0]), m);
    }
    return rows;
}

} // namespace vigil::evalkit
