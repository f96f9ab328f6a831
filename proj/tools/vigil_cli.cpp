#include "vigil/detector.hpp"
#include "vigil/errors.hpp"
#include "vigil/evalkit.hpp"
#include "vigil/models.hpp"
#include "vigil/synthgen.hpp"
#include "vigil/telemetry.hpp"
#include "vigil/text.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace fs = std::filesystem;
using namespace vigil;

namespace {

struct SharedOptions {
    std::uint64_t seed = 0;
    std::string mode = "both";
    double t_ae = 100.0;
    double t_lstm = 100.0;
    int cooldown_s = 30;
    int period_ms = 1000;
    int epochs = 50;
    double lr = 1e-3;

    CLI::Option* mode_opt = nullptr;
    CLI::Option* t_ae_opt = nullptr;
    CLI::Option* t_lstm_opt = nullptr;
    CLI::Option* cooldown_opt = nullptr;
    CLI::Option* seed_opt = nullptr;

    detector::DetectorConfig detector_config() const {
        detector::DetectorConfig cfg;
        cfg.mode = detector::parse_mode(mode);
        cfg.t_ae = t_ae;
        cfg.t_lstm = t_lstm;
        cfg.cooldown_s = cooldown_s;
        return cfg;
    }
};

constexpr const char* kLabelsHeader = "run_id,label";

void write_labels_file(const std::vector<std::pair<std::string, telemetry::Label>>& labels,
                       const fs::path& path) {
    std::string text = std::string(kLabelsHeader) + "\n";
    for (const auto& [run_id, label] : labels)
        text += run_id + "," + telemetry::label_name(label) + "\n";
    write_file(path.string(), text);
}

std::vector<std::pair<std::string, evalkit::RunLabel>> parse_labels_file(const fs::path& path) {
    const auto text = read_file(path.string());
    const auto lines = split_lines(text);
    if (lines.empty() || lines[0] != kLabelsHeader)
        raise(ErrorCode::MalformedRow, "labels file must start with '" +
                                           std::string(kLabelsHeader) + "'");
    std::vector<std::pair<std::string, evalkit::RunLabel>> labels;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto fields = split_fields(lines[i]);
        if (fields.size() != 2)
            raise(ErrorCode::MalformedRow,
                  "labels row " + std::to_string(i) + ": expected 2 fields");
        labels.emplace_back(std::string(fields[0]), evalkit::parse_run_label(fields[1]));
    }
    return labels;
}

telemetry::SampleStream open_stream(const std::string& replay_path,
                                    const std::string& probe_root, int period_ms) {
    if (!replay_path.empty())
        return telemetry::SampleStream::replay(telemetry::parse_csv_file(replay_path),
                                               period_ms);
    telemetry::HostProbe probe(probe_root);
    if (!probe.available())
        raise(ErrorCode::ProbeUnavailable,
              "no usable procfs under '" + probe_root + "' and no --replay source");
    return telemetry::SampleStream::live(std::move(probe), period_ms);
}

int cmd_collect(const SharedOptions& shared, const std::string& out_path,
                double duration_s, const std::string& replay_path,
                const std::string& probe_root) {
    auto stream = open_stream(replay_path, probe_root, shared.period_ms);
    const auto wanted = static_cast<std::size_t>(std::max<std::int64_t>(
        1, std::llround(duration_s * 1000.0 / shared.period_ms)));

    telemetry::RunRecord run;
    run.run_id = fs::path(out_path).stem().string();
    while (run.samples.size() < wanted) {
        auto sample = stream.next();
        if (!sample) break;
        run.samples.push_back(*sample);
    }
    telemetry::write_csv_file(run, out_path);
    std::cout << "wrote " << run.samples.size() << " samples to " << out_path << "\n";
    return 0;
}

int cmd_synth(const SharedOptions& shared, bool suite, const std::string& spec_path,
              bool baseline, double duration_s, const std::string& out_dir) {
    fs::create_directories(out_dir);
    synthgen::GenStats stats;

    if (suite) {
        std::vector<std::pair<std::string, telemetry::Label>> labels;
        for (const auto& [spec, label] : synthgen::standard_suite()) {
            auto run = synthgen::generate_run(spec, &stats);
            run.label = label;
            const auto path = fs::path(out_dir) / (spec.name + ".csv");
            telemetry::write_csv_file(run, path);
            labels.emplace_back(spec.name, label);
            std::cout << "wrote " << path.string() << "\n";
        }
        write_labels_file(labels, fs::path(out_dir) / "labels.csv");
        std::cout << "wrote " << (fs::path(out_dir) / "labels.csv").string() << "\n";
    } else {
        synthgen::ScenarioSpec spec;
        if (baseline) {
            spec = synthgen::baseline_scenario("baseline", duration_s, shared.seed);
        } else {
            spec = synthgen::parse_spec_file(spec_path);
            if (shared.seed_opt->count() > 0) spec.seed = shared.seed;
        }
        const auto run = synthgen::generate_run(spec, &stats);
        const auto path = fs::path(out_dir) / (spec.name + ".csv");
        telemetry::write_csv_file(run, path);
        std::cout << "wrote " << path.string() << "\n";
    }
    if (stats.clamped_values > 0)
        std::cout << "clamped " << stats.clamped_values << " out-of-range values\n";
    return 0;
}

int cmd_train(const SharedOptions& shared, const std::vector<std::string>& csv_paths,
              const std::string& out_path, int window, int hidden) {
    std::vector<telemetry::RunRecord> runs;
    std::vector<telemetry::FeatureVector> pooled;
    for (const auto& path : csv_paths) {
        runs.push_back(telemetry::parse_csv_file(path));
        for (const auto& sample : runs.back().samples) pooled.push_back(sample.features);
    }

    models::ModelBundle bundle;
    bundle.standardizer = models::fit_standardizer(pooled);
    std::vector<std::vector<models::Vector>> sequences;
    std::vector<models::Vector> flat;
    flat.reserve(pooled.size());
    for (const auto& run : runs) {
        auto& sequence = sequences.emplace_back();
        sequence.reserve(run.samples.size());
        for (const auto& sample : run.samples) {
            sequence.push_back(models::standardize(bundle.standardizer, sample.features));
            flat.push_back(sequence.back());
        }
    }

    models::TrainConfig cfg;
    cfg.epochs = shared.epochs;
    cfg.lr = shared.lr;
    cfg.seed = shared.seed;

    auto ae = models::train_autoencoder(flat, cfg);
    std::cout << "autoencoder epoch loss " << format_value(ae.initial_epoch_loss)
              << " -> " << format_value(ae.final_epoch_loss) << " over " << cfg.epochs
              << " epochs\n";
    auto lstm = models::train_lstm(sequences, window, hidden, cfg);
    std::cout << "lstm epoch loss " << format_value(lstm.initial_epoch_loss) << " -> "
              << format_value(lstm.final_epoch_loss) << " over " << cfg.epochs
              << " epochs\n";

    bundle.autoencoder = std::move(ae.model);
    bundle.lstm = std::move(lstm.model);
    bundle.detector = shared.detector_config();
    models::save_bundle_file(bundle, out_path);
    std::cout << "wrote bundle to " << out_path << "\n";
    return 0;
}

int cmd_calibrate(const std::string& bundle_path,
                  const std::vector<std::string>& csv_paths, double percentile,
                  std::string out_path) {
    if (out_path.empty()) out_path = bundle_path;
    auto bundle = models::load_bundle_file(bundle_path);

    const auto cfg = bundle.detector;
    std::vector<std::pair<double, double>> pairs;
    for (const auto& path : csv_paths) {
        const auto run = telemetry::parse_csv_file(path);
        const auto scored = detector::score_run(bundle, cfg, run);
        const auto run_pairs = detector::collect_score_pairs(scored.records);
        pairs.insert(pairs.end(), run_pairs.begin(), run_pairs.end());
    }

    const auto [t_ae, t_lstm] = detector::calibrate(pairs, percentile);
    bundle.detector.t_ae = t_ae;
    bundle.detector.t_lstm = t_lstm;
    models::save_bundle_file(bundle, out_path);
    std::cout << "calibrated on " << pairs.size() << " score pairs at p"
              << format_value(percentile) << ": t_ae=" << format_value(t_ae)
              << " t_lstm=" << format_value(t_lstm) << "\n";
    std::cout << "wrote bundle to " << out_path << "\n";
    return 0;
}

int cmd_detect(const SharedOptions& shared, const std::string& bundle_path,
               const std::string& replay_path, const std::string& probe_root,
               double duration_s, const std::string& score_log_path) {
    const auto bundle = models::load_bundle_file(bundle_path);

    auto cfg = bundle.detector;
    cfg.cooldown_s = shared.cooldown_s;
    if (shared.mode_opt->count() > 0) cfg.mode = detector::parse_mode(shared.mode);
    if (shared.t_ae_opt->count() > 0) cfg.t_ae = shared.t_ae;
    if (shared.t_lstm_opt->count() > 0) cfg.t_lstm = shared.t_lstm;

    auto stream = open_stream(replay_path, probe_root, shared.period_ms);
    const auto wanted = replay_path.empty()
                            ? static_cast<std::size_t>(std::max<std::int64_t>(
                                  1, std::llround(duration_s * 1000.0 / shared.period_ms)))
                            : std::numeric_limits<std::size_t>::max();

    detector::DetectorState state;
    std::vector<detector::ScoreRecord> records;
    while (state.samples_seen < wanted) {
        auto sample = stream.next();
        if (!sample) break;
        const auto result = detector::ingest(state, bundle, cfg, *sample);
        records.push_back(result.record);
        if (result.warning) {
            const auto& w = *result.warning;
            std::cout << "WARN " << w.timestamp_ms << " ae=" << format_value(w.ae_dist)
                      << " lstm="
                      << (w.lstm_dist ? format_value(*w.lstm_dist) : std::string("na"))
                      << "\n"
                      << std::flush;
        }
    }
    if (!score_log_path.empty())
        detector::write_score_log_file(records, score_log_path);
    std::cerr << "scored " << records.size() << " samples, " << state.warnings_emitted
              << " warnings\n";
    return state.warnings_emitted > 0 ? 2 : 0;
}

int cmd_eval(const std::string& outcomes_path, const std::string& scores_dir,
             const std::string& labels_path, std::uint64_t k,
             const std::string& out_dir) {
    std::vector<evalkit::RunOutcome> outcomes;
    if (!outcomes_path.empty()) {
        outcomes = evalkit::parse_outcomes_file(outcomes_path);
    } else {
        for (const auto& [run_id, label] : parse_labels_file(labels_path)) {
            const auto log_path = fs::path(scores_dir) / (run_id + ".csv");
            const auto records = detector::parse_score_log_file(log_path);
            evalkit::RunOutcome outcome;
            outcome.run_id = run_id;
            outcome.true_label = label;
            for (const auto& record : records)
                if (record.warned) outcome.warning_count += 1;
            outcomes.push_back(std::move(outcome));
        }
    }

    const auto cm = evalkit::confusion(outcomes, k);
    const auto report = evalkit::metrics(cm);
    const auto rendered = evalkit::render_report(report, outcomes, k);
    std::cout << rendered.text;

    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        write_file((fs::path(out_dir) / "report.csv").string(), rendered.report_csv);
        write_file((fs::path(out_dir) / "outcomes.csv").string(), rendered.outcomes_csv);
        std::cout << "wrote " << (fs::path(out_dir) / "report.csv").string() << " and "
                  << (fs::path(out_dir) / "outcomes.csv").string() << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"vigil: train and run a telemetry anomaly detector"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Flat key=value file; keys match the long option names");

    SharedOptions shared;
    shared.seed_opt =
        app.add_option("--seed", shared.seed, "PRNG seed")->capture_default_str();
    shared.mode_opt = app.add_option("--mode", shared.mode, "Ensemble rule")
                          ->check(CLI::IsMember({"both", "either"}))
                          ->capture_default_str();
    shared.t_ae_opt = app.add_option("--t-ae", shared.t_ae, "Reconstruction threshold")
                          ->check(CLI::PositiveNumber)
                          ->capture_default_str();
    shared.t_lstm_opt = app.add_option("--t-lstm", shared.t_lstm, "Prediction threshold")
                            ->check(CLI::PositiveNumber)
                            ->capture_default_str();
    shared.cooldown_opt =
        app.add_option("--cooldown-s", shared.cooldown_s,
                       "Seconds between warnings, 0 disables")
            ->check(CLI::NonNegativeNumber)
            ->capture_default_str();
    app.add_option("--period-ms", shared.period_ms, "Sampling period")
        ->check(CLI::Range(100, 3600000))
        ->capture_default_str();
    app.add_option("--epochs", shared.epochs, "Training epochs")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--lr", shared.lr, "Learning rate")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    auto* collect = app.add_subcommand("collect", "Record host telemetry to CSV");
    collect->fallthrough();
    std::string collect_out;
    double collect_duration = 900.0;
    std::string collect_replay;
    std::string probe_root = "/";
    collect->add_option("--out", collect_out, "Output CSV path")->required();
    collect->add_option("--duration-s", collect_duration, "Recording length")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    collect->add_option("--replay", collect_replay, "Re-record an existing CSV");
    collect->add_option("--probe-root", probe_root,
                        "Filesystem root for procfs/sysfs (testing aid)")
        ->capture_default_str();

    auto* synth = app.add_subcommand("synth", "Generate synthetic telemetry runs");
    synth->fallthrough();
    bool synth_suite = false;
    std::string synth_spec;
    bool synth_baseline = false;
    double synth_duration = 900.0;
    std::string synth_out;
    auto* suite_opt =
        synth->add_flag("--suite", synth_suite, "Generate the 20-run evaluation suite");
    auto* spec_opt = synth->add_option("--spec", synth_spec, "Scenario JSON file");
    auto* baseline_opt = synth->add_flag("--baseline", synth_baseline,
                                         "Generate a calm training baseline");
    synth->add_option("--duration-s", synth_duration, "Baseline length")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    synth->add_option("--out", synth_out, "Output directory")->required();
    suite_opt->excludes(spec_opt, baseline_opt);
    spec_opt->excludes(baseline_opt);

    auto* train = app.add_subcommand("train", "Fit the models on benign telemetry");
    train->fallthrough();
    std::vector<std::string> train_inputs;
    std::string train_out;
    int train_window = 20;
    int train_hidden = 32;
    train->add_option("inputs", train_inputs, "Benign telemetry CSVs")
        ->required()
        ->expected(-1);
    train->add_option("--out", train_out, "Bundle output path")->required();
    train->add_option("--window", train_window, "Forecast window length")
        ->check(CLI::Range(2, 1000))
        ->capture_default_str();
    train->add_option("--hidden", train_hidden, "LSTM hidden units")
        ->check(CLI::Range(1, 1024))
        ->capture_default_str();

    auto* calibrate = app.add_subcommand("calibrate", "Set thresholds from benign scores");
    calibrate->fallthrough();
    std::string calibrate_bundle;
    std::vector<std::string> calibrate_inputs;
    double calibrate_percentile = 99.0;
    std::string calibrate_out;
    calibrate->add_option("--bundle", calibrate_bundle, "Bundle to update")->required();
    calibrate->add_option("inputs", calibrate_inputs, "Benign telemetry CSVs")
        ->required()
        ->expected(-1);
    calibrate->add_option("--percentile", calibrate_percentile, "Score percentile")
        ->capture_default_str();
    calibrate->add_option("--out", calibrate_out,
                          "Output bundle path (default: rewrite --bundle)");

    auto* detect = app.add_subcommand("detect", "Score a stream and raise warnings");
    detect->fallthrough();
    std::string detect_bundle;
    std::string detect_replay;
    double detect_duration = 600.0;
    std::string detect_out;
    detect->add_option("--bundle", detect_bundle, "Trained bundle")->required();
    detect->add_option("--replay", detect_replay, "Telemetry CSV to score");
    detect->add_option("--duration-s", detect_duration, "Live scoring length")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    detect->add_option("--probe-root", probe_root,
                       "Filesystem root for procfs/sysfs (testing aid)");
    detect->add_option("--out", detect_out, "Score log output path");

    auto* eval = app.add_subcommand("eval", "Score run outcomes into a report");
    eval->fallthrough();
    std::string eval_outcomes;
    std::string eval_scores;
    std::string eval_labels;
    std::uint64_t eval_k = 1;
    std::string eval_out;
    auto* outcomes_opt =
        eval->add_option("--outcomes", eval_outcomes, "run_id,label,warning_count CSV");
    auto* scores_opt =
        eval->add_option("--scores", eval_scores, "Directory of per-run score logs");
    auto* labels_opt = eval->add_option("--labels", eval_labels, "run_id,label CSV");
    eval->add_option("-k,--min-warnings", eval_k,
                     "Warnings needed to call a run malicious")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    eval->add_option("--out", eval_out, "Directory for report.csv and outcomes.csv");
    outcomes_opt->excludes(scores_opt, labels_opt);
    scores_opt->needs(labels_opt);
    labels_opt->needs(scores_opt);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (collect->parsed())
            return cmd_collect(shared, collect_out, collect_duration, collect_replay,
                               probe_root);
        if (synth->parsed()) {
            if (!synth_suite && synth_spec.empty() && !synth_baseline)
                raise(ErrorCode::InvalidArgument,
                      "synth needs one of --suite, --spec, --baseline");
            return cmd_synth(shared, synth_suite, synth_spec, synth_baseline,
                             synth_duration, synth_out);
        }
        if (train->parsed())
            return cmd_train(shared, train_inputs, train_out, train_window, train_hidden);
        if (calibrate->parsed())
            return cmd_calibrate(calibrate_bundle, calibrate_inputs,
                                 calibrate_percentile, calibrate_out);
        if (detect->parsed())
            return cmd_detect(shared, detect_bundle, detect_replay, probe_root,
                              detect_duration, detect_out);
        if (eval->parsed()) {
            if (eval_outcomes.empty() && eval_scores.empty())
                raise(ErrorCode::InvalidArgument,
                      "eval needs --outcomes or --scores with --labels");
            return cmd_eval(eval_outcomes, eval_scores, eval_labels, eval_k, eval_out);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << " [" << error_code_name(e.code()) << "]\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
