#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "vigil/errors.hpp"
#include "vigil/rng.hpp"
#include "vigil/telemetry.hpp"
#include "vigil/text.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

using namespace vigil;
using namespace vigil::telemetry;

namespace {

RunRecord random_run(std::uint64_t seed, int n) {
    Rng rng(seed);
    RunRecord run;
    run.run_id = "random";
    for (int t = 0; t < n; ++t) {
        TelemetrySample sample;
        sample.timestamp_ms = 1000 * (t + 1);
        sample.features.cpu_total_pct = rng.uniform(0.0, 100.0);
        sample.features.cpu_self_pct = rng.uniform(0.0, 100.0);
        sample.features.mem_used_kb = rng.uniform(0.0, 8e6);
        sample.features.mem_free_kb = rng.uniform(0.0, 8e6);
        sample.features.mem_cached_kb = rng.uniform(0.0, 8e6);
        sample.features.battery_pct = rng.uniform(0.0, 100.0);
        run.samples.push_back(sample);
    }
    return run;
}

bool close_to_6_digits(double a, double b) {
    if (a == b) return true;
    const double scale = std::max(std::fabs(a), std::fabs(b));
    return std::fabs(a - b) <= 1e-5 * scale + 1e-12;
}

std::filesystem::path temp_dir() {
    auto dir = std::filesystem::temp_directory_path() / "vigil_test_telemetry";
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace

TEST_CASE("parse_csv maps fields directly") {
    const std::string text = std::string(kCsvHeader) +
                             "\n1000,12.5,0.8,900000,2100000,300000,97\n";
    const auto run = parse_csv_text(text, "one");
    REQUIRE(run.samples.size() == 1);
    CHECK(run.run_id == "one");
    CHECK(run.samples[0].timestamp_ms == 1000);
    CHECK(run.samples[0].features.cpu_total_pct == doctest::Approx(12.5));
    CHECK(run.samples[0].features.cpu_self_pct == doctest::Approx(0.8));
    CHECK(run.samples[0].features.mem_used_kb == doctest::Approx(900000));
    CHECK(run.samples[0].features.mem_free_kb == doctest::Approx(2100000));
    CHECK(run.samples[0].features.mem_cached_kb == doctest::Approx(300000));
    CHECK(run.samples[0].features.battery_pct == doctest::Approx(97));
}

TEST_CASE("parse_csv rejects wrong column counts") {
    const std::string text = std::string(kCsvHeader) + "\n1000,12.5,0.8,900000,2100000\n";
    try {
        parse_csv_text(text);
        FAIL("expected MalformedRow");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MalformedRow);
    }
}

TEST_CASE("parse_csv rejects non-numeric fields") {
    const std::string text = std::string(kCsvHeader) + "\n1000,abc,0.8,1,2,3,97\n";
    try {
        parse_csv_text(text);
        FAIL("expected MalformedRow");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MalformedRow);
    }
}

TEST_CASE("parse_csv rejects a bad header") {
    try {
        parse_csv_text("time,cpu\n");
        FAIL("expected MalformedRow");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MalformedRow);
    }
}

TEST_CASE("parse_csv rejects out-of-range values instead of clamping") {
    const std::string text = std::string(kCsvHeader) + "\n1000,250,0.8,1,2,3,97\n";
    try {
        parse_csv_text(text);
        FAIL("expected RangeViolation");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::RangeViolation);
    }
}

TEST_CASE("parse_csv rejects non-increasing timestamps") {
    const std::string text =
        std::string(kCsvHeader) + "\n2000,1,1,1,1,1,1\n1500,1,1,1,1,1,1\n";
    try {
        parse_csv_text(text);
        FAIL("expected NonMonotoneTimestamp");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NonMonotoneTimestamp);
    }
}

TEST_CASE("write_csv emits a header-only file for an empty run") {
    RunRecord run;
    run.run_id = "empty";
    CHECK(write_csv_text(run) == std::string(kCsvHeader) + "\n");
}

TEST_CASE("write_csv emits two lines for one sample") {
    auto run = random_run(1, 1);
    const auto text = write_csv_text(run);
    CHECK(split_lines(text).size() == 2);
}

TEST_CASE("csv round-trip preserves a random 100-sample run to 6 significant digits") {
    const auto run = random_run(7, 100);
    const auto back = parse_csv_text(write_csv_text(run), run.run_id);
    REQUIRE(back.samples.size() == run.samples.size());
    for (std::size_t i = 0; i < run.samples.size(); ++i) {
        CHECK(back.samples[i].timestamp_ms == run.samples[i].timestamp_ms);
        const auto a = run.samples[i].features.to_array();
        const auto b = back.samples[i].features.to_array();
        for (int f = 0; f < 6; ++f) {
            INFO("sample ", i, " feature ", f);
            CHECK(close_to_6_digits(a[static_cast<std::size_t>(f)],
                                    b[static_cast<std::size_t>(f)]));
        }
    }
}

TEST_CASE("csv values use plain decimal notation") {
    auto run = random_run(3, 20);
    const auto text = write_csv_text(run);
    const auto rows = text.substr(text.find('\n') + 1);
    CHECK(rows.find('e') == std::string::npos);
    CHECK(rows.find('E') == std::string::npos);
    CHECK(text.find('"') == std::string::npos);
    CHECK(text.find("\r") == std::string::npos);
}

TEST_CASE("feature validation rejects NaN and negative memory") {
    FeatureVector v;
    v.mem_used_kb = -1;
    try {
        v.validate();
        FAIL("expected RangeViolation");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::RangeViolation);
    }
    v.mem_used_kb = std::nan("");
    try {
        v.validate();
        FAIL("expected RangeViolation");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::RangeViolation);
    }
}

TEST_CASE("replay stream yields the recorded samples then ends") {
    const auto run = random_run(11, 600);
    auto stream = SampleStream::replay(run);
    std::size_t count = 0;
    while (auto s = stream.next()) {
        REQUIRE(count < run.samples.size());
        CHECK(*s == run.samples[count]);
        ++count;
    }
    CHECK(count == 600);
    CHECK(!stream.next().has_value());
}

TEST_CASE("replay is deterministic across two passes") {
    const auto run = random_run(13, 50);
    auto a = SampleStream::replay(run);
    auto b = SampleStream::replay(run);
    while (true) {
        auto sa = a.next();
        auto sb = b.next();
        CHECK(sa.has_value() == sb.has_value());
        if (!sa) break;
        CHECK(*sa == *sb);
    }
}

TEST_CASE("periods below 100 ms are rejected") {
    const auto run = random_run(17, 5);
    try {
        SampleStream::replay(run, 50);
        FAIL("expected InvalidArgument");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidArgument);
    }
}

TEST_CASE("csv file io round-trips and takes run_id from the stem") {
    const auto run = random_run(19, 10);
    const auto path = temp_dir() / "roundtrip_run.csv";
    write_csv_file(run, path);
    const auto back = parse_csv_file(path);
    CHECK(back.run_id == "roundtrip_run");
    CHECK(back.samples.size() == 10);
}

TEST_CASE("missing file raises IoError") {
    try {
        parse_csv_file(temp_dir() / "does_not_exist.csv");
        FAIL("expected IoError");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::IoError);
    }
}

namespace {

// Minimal procfs/sysfs tree the probe can read.
void write_fake_proc(const std::filesystem::path& root, unsigned long long user,
                     unsigned long long idle, unsigned long long self_ticks) {
    namespace fs = std::filesystem;
    fs::create_directories(root / "proc/self");
    fs::create_directories(root / "sys/class/power_supply/BAT0");
    {
        std::ofstream st(root / "proc/stat");
        st << "cpu  " << user << " 0 100 " << idle << " 50 0 0 0 0 0\n";
        st << "cpu0 " << user << " 0 100 " << idle << " 50 0 0 0 0 0\n";
    }
    {
        std::ofstream mi(root / "proc/meminfo");
        mi << "MemTotal:       16000000 kB\n";
        mi << "MemFree:         4000000 kB\n";
        mi << "MemAvailable:    9000000 kB\n";
        mi << "Buffers:          500000 kB\n";
        mi << "Cached:          3000000 kB\n";
    }
    {
        std::ofstream stat(root / "proc/self/stat");
        stat << "1234 (vigil test) S 1 1234 1234 0 -1 4194304 100 0 0 0 " << self_ticks
             << " " << self_ticks << " 0 0 20 0 1 0 100 1000000 500";
        for (int i = 0; i < 30; ++i) stat << " 0";
        stat << "\n";
    }
    {
        std::ofstream type(root / "sys/class/power_supply/BAT0/type");
        type << "Battery\n";
    }
    {
        std::ofstream cap(root / "sys/class/power_supply/BAT0/capacity");
        cap << "73\n";
    }
}

} // namespace

TEST_CASE("probe reads a synthetic proc tree") {
    const auto root = temp_dir() / "fakeproc";
    std::filesystem::remove_all(root);
    write_fake_proc(root, 1000, 9000, 40);
    HostProbe probe(root);
    REQUIRE(probe.available());

    auto first = probe.sample();
    first.features.validate();
    CHECK(first.features.mem_used_kb == doctest::Approx(12000000));
    CHECK(first.features.mem_free_kb == doctest::Approx(4000000));
    CHECK(first.features.mem_cached_kb == doctest::Approx(3000000));
    CHECK(first.features.battery_pct == doctest::Approx(73));

    // Second call sees a busier interval: deltas are 900 busy, 100 idle.
    write_fake_proc(root, 1900, 9100, 80);
    auto second = probe.sample();
    second.features.validate();
    CHECK(second.timestamp_ms > first.timestamp_ms);
    CHECK(second.features.cpu_total_pct == doctest::Approx(90.0).epsilon(0.01));
}

TEST_CASE("probe without procfs reports unavailable") {
    const auto root = temp_dir() / "no_such_root";
    std::filesystem::remove_all(root);
    HostProbe probe(root);
    CHECK(!probe.available());
    try {
        probe.sample();
        FAIL("expected ProbeUnavailable");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ProbeUnavailable);
    }
}

TEST_CASE("probe without a battery reports 100") {
    const auto root = temp_dir() / "no_battery";
    std::filesystem::remove_all(root);
    write_fake_proc(root, 1000, 9000, 40);
    std::filesystem::remove_all(root / "sys/class/power_supply/BAT0");
    HostProbe probe(root);
    REQUIRE(probe.available());
    CHECK(probe.sample().features.battery_pct == doctest::Approx(100));
}

TEST_CASE("host probe produces valid strictly ordered samples when procfs exists") {
    HostProbe probe;
    if (!probe.available()) return;
    auto a = probe.sample();
    auto b = probe.sample();
    a.features.validate();
    b.features.validate();
    CHECK(b.timestamp_ms > a.timestamp_ms);
}
