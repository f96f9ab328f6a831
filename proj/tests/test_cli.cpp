#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "vigil/detector.hpp"
#include "vigil/evalkit.hpp"
#include "vigil/models.hpp"
#include "vigil/synthgen.hpp"
#include "vigil/telemetry.hpp"
#include "vigil/text.hpp"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

const fs::path& work_dir() {
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() / "vigil_test_cli";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

CliResult run_cli(const std::string& args) {
    static int call = 0;
    const auto out_path = work_dir() / ("stdout_" + std::to_string(call) + ".txt");
    const auto err_path = work_dir() / ("stderr_" + std::to_string(call) + ".txt");
    ++call;
    const std::string command = std::string("\"") + VIGIL_CLI_PATH + "\" " + args +
                                " > " + out_path.string() + " 2> " + err_path.string();
    const int status = std::system(command.c_str());
    CliResult result;
    if (WIFEXITED(status)) result.exit_code = WEXITSTATUS(status);
    result.out = slurp(out_path);
    result.err = slurp(err_path);
    return result;
}

std::size_t count_lines_starting(const std::string& text, const std::string& prefix) {
    std::size_t count = 0, pos = 0;
    while (pos < text.size()) {
        const auto end = text.find('\n', pos);
        const auto line = text.substr(pos, end == std::string::npos ? end : end - pos);
        if (line.rfind(prefix, 0) == 0) ++count;
        if (end == std::string::npos) break;
        pos = end + 1;
    }
    return count;
}

fs::path baseline_csv() {
    static const fs::path path = [] {
        const auto dir = work_dir() / "data";
        const auto result = run_cli("--seed 500 synth --baseline --duration-s 150 --out " +
                                    dir.string());
        REQUIRE(result.exit_code == 0);
        return dir / "baseline.csv";
    }();
    return path;
}

fs::path trained_bundle() {
    static const fs::path path = [] {
        const auto bundle = work_dir() / "bundle.json";
        const auto result = run_cli("--seed 7 --epochs 3 train " + baseline_csv().string() +
                                    " --out " + bundle.string() + " --window 8 --hidden 3");
        REQUIRE(result.exit_code == 0);
        return bundle;
    }();
    return path;
}

} // namespace

TEST_CASE("help lists the pipeline subcommands") {
    const auto result = run_cli("--help");
    CHECK(result.exit_code == 0);
    for (const char* name : {"collect", "synth", "train", "calibrate", "detect", "eval"})
        CHECK(result.out.find(name) != std::string::npos);
}

TEST_CASE("a subcommand is required") {
    const auto result = run_cli("");
    CHECK(result.exit_code != 0);
}

TEST_CASE("synth --baseline writes a parseable csv") {
    const auto run = vigil::telemetry::parse_csv_file(baseline_csv());
    CHECK(run.samples.size() == 150);
    CHECK(run.run_id == "baseline");
}

TEST_CASE("synth needs a generation mode") {
    const auto result = run_cli("synth --out " + (work_dir() / "nothing").string());
    CHECK(result.exit_code == 1);
    CHECK(result.err.find("error:") != std::string::npos);
}

TEST_CASE("train reports epoch losses and writes a loadable bundle") {
    const auto bundle_path = trained_bundle();
    const auto bundle = vigil::models::load_bundle_file(bundle_path);
    CHECK(bundle.lstm.window == 8);
    CHECK(bundle.detector.t_ae == 100.0);

    const auto repeat = work_dir() / "bundle_repeat.json";
    const auto result = run_cli("--seed 7 --epochs 3 train " + baseline_csv().string() +
                                " --out " + repeat.string() + " --window 8 --hidden 3");
    CHECK(result.exit_code == 0);
    CHECK(result.out.find("over 3 epochs") != std::string::npos);
    CHECK(slurp(repeat) == slurp(bundle_path));
}

TEST_CASE("a config file supplies shared defaults") {
    const auto cfg = work_dir() / "vigil.cfg";
    vigil::write_file(cfg.string(), "epochs=2\nseed=9\n");
    const auto result = run_cli("--config " + cfg.string() + " train " +
                                baseline_csv().string() + " --out " +
                                (work_dir() / "bundle_cfg.json").string() +
                                " --window 8 --hidden 3");
    CHECK(result.exit_code == 0);
    CHECK(result.out.find("over 2 epochs") != std::string::npos);
}

TEST_CASE("calibrate rewrites the thresholds in place") {
    const auto bundle_path = work_dir() / "bundle_cal.json";
    fs::copy_file(trained_bundle(), bundle_path, fs::copy_options::overwrite_existing);
    const auto result = run_cli("calibrate --bundle " + bundle_path.string() + " " +
                                baseline_csv().string() + " --percentile 99");
    CHECK(result.exit_code == 0);
    CHECK(result.out.find("calibrated on 142 score pairs") != std::string::npos);
    const auto bundle = vigil::models::load_bundle_file(bundle_path);
    CHECK(bundle.detector.t_ae > 0.0);
    CHECK(bundle.detector.t_ae < 100.0);
    CHECK(bundle.detector.t_lstm < 100.0);
}

TEST_CASE("calibrate rejects an impossible percentile") {
    const auto result = run_cli("calibrate --bundle " + trained_bundle().string() + " " +
                                baseline_csv().string() + " --percentile 101");
    CHECK(result.exit_code == 1);
    CHECK(result.err.find("InvalidArgument") != std::string::npos);
}

TEST_CASE("detect stays quiet under generous thresholds") {
    const auto result = run_cli("--t-ae 1000 --t-lstm 1000 --mode both detect --bundle " +
                                trained_bundle().string() + " --replay " +
                                baseline_csv().string());
    CHECK(result.exit_code == 0);
    CHECK(result.out.find("WARN") == std::string::npos);
    CHECK(result.err.find("scored 150 samples, 0 warnings") != std::string::npos);
}

TEST_CASE("detect exits 2 and prints warning lines when the rule fires") {
    const auto log_path = work_dir() / "scores" / "loud.csv";
    fs::create_directories(log_path.parent_path());
    const auto result = run_cli(
        "--t-ae 0.000001 --t-lstm 0.000001 --mode either --cooldown-s 0 detect --bundle " +
        trained_bundle().string() + " --replay " + baseline_csv().string() + " --out " +
        log_path.string());
    CHECK(result.exit_code == 2);
    CHECK(count_lines_starting(result.out, "WARN ") == 150);
    CHECK(result.out.find(" lstm=na") != std::string::npos);

    // warmup rows carry no prediction distance; the rest do
    const auto records = vigil::detector::parse_score_log_file(log_path);
    REQUIRE(records.size() == 150);
    for (std::size_t i = 0; i < records.size(); ++i) {
        CHECK(records[i].warned);
        CHECK(records[i].lstm_dist.has_value() == (i >= 8));
    }
}

TEST_CASE("detect rejects a corrupt bundle") {
    const auto bad = work_dir() / "bad_bundle.json";
    vigil::write_file(bad.string(), "this is not a bundle");
    const auto result = run_cli("detect --bundle " + bad.string() + " --replay " +
                                baseline_csv().string());
    CHECK(result.exit_code == 1);
    CHECK(result.err.find("CorruptBundle") != std::string::npos);
}

TEST_CASE("collect re-records a replay source at the requested length") {
    const auto out = work_dir() / "recorded.csv";
    const auto result = run_cli("collect --replay " + baseline_csv().string() +
                                " --duration-s 30 --out " + out.string());
    CHECK(result.exit_code == 0);
    const auto run = vigil::telemetry::parse_csv_file(out);
    CHECK(run.samples.size() == 30);
    CHECK(run.run_id == "recorded");
}

TEST_CASE("eval renders the published metrics from an outcomes file") {
    std::vector<vigil::evalkit::RunOutcome> outcomes;
    const std::vector<std::uint64_t> malicious_counts = {2, 3, 0, 5, 1, 0, 2, 1, 0, 0};
    for (std::size_t i = 0; i < malicious_counts.size(); ++i)
        outcomes.push_back({"mal_" + std::to_string(i + 1),
                            vigil::evalkit::RunLabel::Malicious, malicious_counts[i]});
    for (std::size_t i = 0; i < 10; ++i)
        outcomes.push_back(
            {"ben_" + std::to_string(i + 1), vigil::evalkit::RunLabel::Benign, 0});
    const auto outcomes_path = work_dir() / "outcomes.csv";
    vigil::evalkit::write_outcomes_file(outcomes, outcomes_path);

    const auto report_dir = work_dir() / "report";
    const auto result = run_cli("eval --outcomes " + outcomes_path.string() + " --out " +
                                report_dir.string());
    CHECK(result.exit_code == 0);
    for (const char* pct : {"71.4%", "83.3%", "60.0%", "75.0%", "85.7%", "79.2%"})
        CHECK(result.out.find(pct) != std::string::npos);

    const auto rows = vigil::evalkit::parse_report_csv(slurp(report_dir / "report.csv"));
    REQUIRE(rows.size() == 3);
    CHECK(rows[2].second.f1 == doctest::Approx(0.7916667).epsilon(1e-5));
    CHECK(vigil::evalkit::parse_outcomes_file(report_dir / "outcomes.csv") == outcomes);
}

TEST_CASE("eval aggregates per-run score logs against a labels file") {
    const auto scores_dir = work_dir() / "scores";
    fs::create_directories(scores_dir);
    const auto quiet = run_cli("--t-ae 1000 --t-lstm 1000 detect --bundle " +
                               trained_bundle().string() + " --replay " +
                               baseline_csv().string() + " --out " +
                               (scores_dir / "quiet.csv").string());
    REQUIRE(quiet.exit_code == 0);
    const auto loud = run_cli(
        "--t-ae 0.000001 --t-lstm 0.000001 --mode either --cooldown-s 0 detect --bundle " +
        trained_bundle().string() + " --replay " + baseline_csv().string() + " --out " +
        (scores_dir / "loud.csv").string());
    REQUIRE(loud.exit_code == 2);

    const auto labels = work_dir() / "labels.csv";
    vigil::write_file(labels.string(), "run_id,label\nquiet,benign\nloud,malicious\n");

    const auto result =
        run_cli("eval --scores " + scores_dir.string() + " --labels " + labels.string());
    CHECK(result.exit_code == 0);
    CHECK(result.out.find("100.0%") != std::string::npos);
    CHECK(result.out.find("quiet") != std::string::npos);
    CHECK(result.out.find("loud") != std::string::npos);
}

TEST_CASE("eval requires outcome or score inputs") {
    const auto result = run_cli("eval");
    CHECK(result.exit_code == 1);
    CHECK(result.err.find("error:") != std::string::npos);
}

TEST_CASE("the full suite lands on disk with its labels") {
    const auto suite_dir = work_dir() / "suite";
    const auto result = run_cli("synth --suite --out " + suite_dir.string());
    CHECK(result.exit_code == 0);

    std::size_t csv_count = 0;
    for (const auto& entry : fs::directory_iterator(suite_dir))
        if (entry.path().extension() == ".csv") ++csv_count;
    CHECK(csv_count == 21); // 20 runs plus labels.csv

    const auto labels_text = slurp(suite_dir / "labels.csv");
    CHECK(labels_text.rfind("run_id,label\n", 0) == 0);
    std::size_t benign = 0, malicious = 0, pos = 0;
    while ((pos = labels_text.find(",benign", pos)) != std::string::npos) {
        ++benign;
        pos += 7;
    }
    pos = 0;
    while ((pos = labels_text.find(",malicious", pos)) != std::string::npos) {
        ++malicious;
        pos += 10;
    }
    CHECK(benign == 10);
    CHECK(malicious == 10);

    const auto one = vigil::telemetry::parse_csv_file(suite_dir / "a01_cpu_step.csv");
    CHECK(one.samples.size() == 600);
}

TEST_CASE("synth --spec honors the file and the seed override") {
    vigil::synthgen::ScenarioSpec spec;
    spec.name = "from_file";
    spec.duration_s = 60.0;
    spec.seed = 11;
    spec.baseline_means = {40.0, 2.0, 3.0e6, 1.5e6, 8.0e5, 90.0};
    spec.baseline_stds = {5.0, 0.5, 5.0e4, 4.0e4, 2.0e4, 1.0};
    const auto spec_path = work_dir() / "scenario.json";
    vigil::synthgen::write_spec_file(spec, spec_path);

    const auto out_a = work_dir() / "synth_a";
    REQUIRE(run_cli("synth --spec " + spec_path.string() + " --out " + out_a.string())
                .exit_code == 0);
    const auto run_a = vigil::telemetry::parse_csv_file(out_a / "from_file.csv");
    CHECK(run_a.samples.size() == 60);

    const auto out_b = work_dir() / "synth_b";
    REQUIRE(run_cli("--seed 999 synth --spec " + spec_path.string() + " --out " +
                    out_b.string())
                .exit_code == 0);
    const auto run_b = vigil::telemetry::parse_csv_file(out_b / "from_file.csv");
    CHECK(run_a.samples != run_b.samples);
}
