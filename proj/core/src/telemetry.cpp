#include "vigil/telemetry.hpp"

#include "vigil/errors.hpp"
#include "vigil/text.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

namespace vigil::telemetry {

const std::array<const char*, 6>& FeatureVector::names() {
    static const std::array<const char*, 6> kNames = {
        "cpu_total_pct", "cpu_self_pct",  "mem_used_kb",
        "mem_free_kb",   "mem_cached_kb", "battery_pct",
    };
    return kNames;
}

std::array<double, 6> FeatureVector::to_array() const {
    return {cpu_total_pct, cpu_self_pct, mem_used_kb,
            mem_free_kb,   mem_cached_kb, battery_pct};
}

FeatureVector FeatureVector::from_array(const std::array<double, 6>& values) {
    return {values[0], values[1], values[2], values[3], values[4], values[5]};
}

void FeatureVector::validate() const {
    const auto values = to_array();
    for (int i = 0; i < kCount; ++i) {
        if (!std::isfinite(values[i]))
            raise(ErrorCode::RangeViolation,
                  std::string(names()[i]) + " is not finite");
    }
    const auto check_pct = [&](double v, const char* name) {
        if (v < 0.0 || v > 100.0)
            raise(ErrorCode::RangeViolation,
                  std::string(name) + " outside [0, 100]: " + format_value(v));
    };
    check_pct(cpu_total_pct, "cpu_total_pct");
    check_pct(cpu_self_pct, "cpu_self_pct");
    check_pct(battery_pct, "battery_pct");
    const auto check_kb = [&](double v, const char* name) {
        if (v < 0.0)
            raise(ErrorCode::RangeViolation,
                  std::string(name) + " negative: " + format_value(v));
    };
    check_kb(mem_used_kb, "mem_used_kb");
    check_kb(mem_free_kb, "mem_free_kb");
    check_kb(mem_cached_kb, "mem_cached_kb");
}

const char* label_name(Label label) {
    switch (label) {
    case Label::Benign: return "benign";
    case Label::Malicious: return "malicious";
    case Label::Unlabeled: return "unlabeled";
    }
    return "unlabeled";
}

Label parse_label(std::string_view text) {
    if (text == "benign") return Label::Benign;
    if (text == "malicious") return Label::Malicious;
    if (text == "unlabeled") return Label::Unlabeled;
    raise(ErrorCode::MalformedRow, "unknown label: '" + std::string(text) + "'");
}

RunRecord parse_csv_text(std::string_view text, std::string run_id) {
    const auto lines = split_lines(text);
    if (lines.empty())
        raise(ErrorCode::MalformedRow, "missing header line");
    if (lines[0] != kCsvHeader)
        raise(ErrorCode::MalformedRow,
              "unexpected header: '" + std::string(lines[0]) + "'");

    RunRecord run;
    run.run_id = std::move(run_id);
    run.samples.reserve(lines.size() - 1);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::string context = "row " + std::to_string(i);
        const auto fields = split_fields(lines[i]);
        if (fields.size() != 7)
            raise(ErrorCode::MalformedRow,
                  context + ": expected 7 fields, got " + std::to_string(fields.size()));

        TelemetrySample sample;
        sample.timestamp_ms = parse_int(fields[0], context.c_str());
        std::array<double, 6> values{};
        for (int f = 0; f < 6; ++f)
            values[static_cast<std::size_t>(f)] =
                parse_double(fields[static_cast<std::size_t>(f) + 1], context.c_str());
        sample.features = FeatureVector::from_array(values);
        sample.features.validate();

        if (!run.samples.empty() && sample.timestamp_ms <= run.samples.back().timestamp_ms)
            raise(ErrorCode::NonMonotoneTimestamp,
                  context + ": timestamp " + std::to_string(sample.timestamp_ms) +
                      " not after " + std::to_string(run.samples.back().timestamp_ms));
        run.samples.push_back(sample);
    }
    return run;
}

RunRecord parse_csv(std::istream& in, std::string run_id) {
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv_text(buf.str(), std::move(run_id));
}

RunRecord parse_csv_file(const std::filesystem::path& path) {
    return parse_csv_text(read_file(path.string()), path.stem().string());
}

void write_csv(const RunRecord& run, std::ostream& out) {
    out << kCsvHeader << '\n';
    for (const auto& sample : run.samples) {
        out << sample.timestamp_ms;
        for (double v : sample.features.to_array()) out << ',' << format_value(v);
        out << '\n';
    }
}

std::string write_csv_text(const RunRecord& run) {
    std::ostringstream out;
    write_csv(run, out);
    return out.str();
}

void write_csv_file(const RunRecord& run, const std::filesystem::path& path) {
    write_file(path.string(), write_csv_text(run));
}

namespace {

struct CpuTotals {
    unsigned long long total = 0;
    unsigned long long idle = 0;
};

// First line of proc/stat: cpu user nice system idle iowait irq softirq steal ...
std::optional<CpuTotals> read_cpu_totals(const std::filesystem::path& stat_path) {
    std::ifstream in(stat_path);
    if (!in) return std::nullopt;
    std::string tag;
    in >> tag;
    if (tag != "cpu") return std::nullopt;
    unsigned long long v[8] = {};
    for (auto& x : v)
        if (!(in >> x)) return std::nullopt;
    CpuTotals t;
    t.total = v[0] + v[1] + v[2] + v[3] + v[4] + v[5] + v[6] + v[7];
    t.idle = v[3] + v[4];
    return t;
}

// utime+stime from proc/self/stat; the comm field may contain spaces, so
// fields are counted from the last ')'.
std::optional<unsigned long long> read_self_jiffies(const std::filesystem::path& stat_path) {
    std::ifstream in(stat_path);
    if (!in) return std::nullopt;
    std::string line;
    std::getline(in, line);
    const std::size_t close = line.rfind(')');
    if (close == std::string::npos) return std::nullopt;
    std::istringstream rest(line.substr(close + 1));
    std::string field;
    // after ')': field 3 is state; utime and stime are fields 14 and 15
    unsigned long long utime = 0, stime = 0;
    for (int idx = 3; idx <= 15 && rest; ++idx) {
        if (idx == 14) {
            if (!(rest >> utime)) return std::nullopt;
        } else if (idx == 15) {
            if (!(rest >> stime)) return std::nullopt;
        } else {
            if (!(rest >> field)) return std::nullopt;
        }
    }
    return utime + stime;
}

struct MemInfo {
    double total_kb = 0;
    double free_kb = 0;
    double cached_kb = 0;
};

std::optional<MemInfo> read_meminfo(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) return std::nullopt;
    MemInfo mem;
    bool have_total = false, have_free = false, have_cached = false;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream row(line);
        std::string key;
        double value = 0;
        if (!(row >> key >> value)) continue;
        if (key == "MemTotal:") { mem.total_kb = value; have_total = true; }
        else if (key == "MemFree:") { mem.free_kb = value; have_free = true; }
        else if (key == "Cached:") { mem.cached_kb = value; have_cached = true; }
    }
    if (!have_total || !have_free || !have_cached) return std::nullopt;
    return mem;
}

double clamp_pct(double v) { return v < 0.0 ? 0.0 : (v > 100.0 ? 100.0 : v); }

} // namespace

HostProbe::HostProbe(std::filesystem::path root) : root_(std::move(root)) {
    std::error_code ec;
    const bool have_proc =
        std::filesystem::exists(root_ / "proc" / "stat", ec) &&
        std::filesystem::exists(root_ / "proc" / "meminfo", ec) &&
        std::filesystem::exists(root_ / "proc" / "self" / "stat", ec);
    available_ = have_proc;

    const auto supply_dir = root_ / "sys" / "class" / "power_supply";
    if (available_ && std::filesystem::exists(supply_dir, ec)) {
        for (const auto& entry : std::filesystem::directory_iterator(supply_dir, ec)) {
            const auto type_path = entry.path() / "type";
            const auto cap_path = entry.path() / "capacity";
            std::ifstream type_in(type_path);
            std::string type;
            if (type_in && std::getline(type_in, type) && type == "Battery" &&
                std::filesystem::exists(cap_path, ec)) {
                battery_capacity_path_ = cap_path;
                break;
            }
        }
    }
}

TelemetrySample HostProbe::sample() {
    if (!available_)
        raise(ErrorCode::ProbeUnavailable,
              "no procfs counters under " + root_.string());

    const auto totals = read_cpu_totals(root_ / "proc" / "stat");
    const auto self_jiffies = read_self_jiffies(root_ / "proc" / "self" / "stat");
    const auto mem = read_meminfo(root_ / "proc" / "meminfo");
    if (!totals || !self_jiffies || !mem)
        raise(ErrorCode::ProbeUnavailable,
              "unreadable procfs counters under " + root_.string());

    double cpu_total_pct;
    double cpu_self_pct;
    if (have_prev_ && totals->total > prev_total_) {
        const double dt = static_cast<double>(totals->total - prev_total_);
        const double didle = static_cast<double>(totals->idle - prev_idle_);
        const double dself = static_cast<double>(*self_jiffies - prev_self_);
        cpu_total_pct = clamp_pct((dt - didle) / dt * 100.0);
        cpu_self_pct = clamp_pct(dself / dt * 100.0);
    } else if (have_prev_) {
        // no jiffy advanced between calls; reuse the previous estimate
        cpu_total_pct = last_cpu_total_pct_;
        cpu_self_pct = last_cpu_self_pct_;
    } else {
        const double total = static_cast<double>(totals->total);
        cpu_total_pct = total > 0.0
            ? clamp_pct((total - static_cast<double>(totals->idle)) / total * 100.0)
            : 0.0;
        cpu_self_pct = total > 0.0
            ? clamp_pct(static_cast<double>(*self_jiffies) / total * 100.0)
            : 0.0;
    }
    prev_total_ = totals->total;
    prev_idle_ = totals->idle;
    prev_self_ = *self_jiffies;
    last_cpu_total_pct_ = cpu_total_pct;
    last_cpu_self_pct_ = cpu_self_pct;
    have_prev_ = true;

    double battery_pct = 100.0;
    if (battery_capacity_path_) {
        std::ifstream cap_in(*battery_capacity_path_);
        double cap = 100.0;
        if (cap_in >> cap) battery_pct = clamp_pct(cap);
    }

    TelemetrySample out;
    out.features.cpu_total_pct = cpu_total_pct;
    out.features.cpu_self_pct = cpu_self_pct;
    out.features.mem_used_kb = mem->total_kb - mem->free_kb;
    out.features.mem_free_kb = mem->free_kb;
    out.features.mem_cached_kb = mem->cached_kb;
    out.features.battery_pct = battery_pct;
    out.features.validate();

    auto now_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::system_clock::now().time_since_epoch())
                      .count();
    if (have_last_timestamp_ && now_ms <= last_timestamp_ms_)
        now_ms = last_timestamp_ms_ + 1;
    last_timestamp_ms_ = now_ms;
    have_last_timestamp_ = true;
    out.timestamp_ms = now_ms;
    return out;
}

SampleStream SampleStream::replay(RunRecord run, int period_ms) {
    if (period_ms < 100)
        raise(ErrorCode::InvalidArgument,
              "period_ms must be >= 100, got " + std::to_string(period_ms));
    SampleStream s;
    s.is_replay_ = true;
    s.run_ = std::move(run);
    s.period_ms_ = period_ms;
    return s;
}

SampleStream SampleStream::live(HostProbe probe, int period_ms) {
    if (period_ms < 100)
        raise(ErrorCode::InvalidArgument,
              "period_ms must be >= 100, got " + std::to_string(period_ms));
    SampleStream s;
    s.is_replay_ = false;
    s.probe_ = std::move(probe);
    s.period_ms_ = period_ms;
    return s;
}

std::optional<TelemetrySample> SampleStream::next() {
    if (is_replay_) {
        if (index_ >= run_.samples.size()) return std::nullopt;
        return run_.samples[index_++];
    }
    const auto period = std::chrono::milliseconds(period_ms_);
    if (!started_) {
        started_ = true;
        next_due_ = std::chrono::steady_clock::now() + period;
        return probe_->sample();
    }
    std::this_thread::sleep_until(next_due_);
    next_due_ += period;
    return probe_->sample();
}

} // namespace vigil::telemetry
