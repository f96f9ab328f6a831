#include "vigil/synthgen.hpp"

#include "vigil/errors.hpp"
#include "vigil/rng.hpp"
#include "vigil/text.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <limits>
#include <utility>

namespace vigil::synthgen {

const char* shape_name(Shape shape) {
    switch (shape) {
    case Shape::Step: return "step";
    case Shape::Ramp: return "ramp";
    case Shape::SpikeTrain: return "spike_train";
    }
    return "step";
}

Shape parse_shape(std::string_view text) {
    if (text == "step") return Shape::Step;
    if (text == "ramp") return Shape::Ramp;
    if (text == "spike_train") return Shape::SpikeTrain;
    raise(ErrorCode::InvalidSpec, "unknown injection shape: '" + std::string(text) + "'");
}

void validate_spec(const ScenarioSpec& spec) {
    if (spec.name.empty())
        raise(ErrorCode::InvalidSpec, "scenario name is empty");
    if (!std::isfinite(spec.duration_s) || spec.duration_s <= 0.0)
        raise(ErrorCode::InvalidSpec, "duration_s must be positive");
    for (int f = 0; f < telemetry::FeatureVector::kCount; ++f) {
        const auto fs = static_cast<std::size_t>(f);
        if (!std::isfinite(spec.baseline_means[fs]))
            raise(ErrorCode::InvalidSpec,
                  std::string("baseline mean for ") +
                      telemetry::FeatureVector::names()[fs] + " is not finite");
        if (!std::isfinite(spec.baseline_stds[fs]) || spec.baseline_stds[fs] < 0.0)
            raise(ErrorCode::InvalidSpec,
                  std::string("baseline std for ") +
                      telemetry::FeatureVector::names()[fs] +
                      " must be finite and non-negative");
    }
    for (std::size_t i = 0; i < spec.injections.size(); ++i) {
        const auto& inj = spec.injections[i];
        const std::string context = "injection " + std::to_string(i);
        if (inj.feature < 0 || inj.feature >= telemetry::FeatureVector::kCount)
            raise(ErrorCode::InvalidSpec,
                  context + ": feature index " + std::to_string(inj.feature) +
                      " outside [0, 6)");
        if (!std::isfinite(inj.start_s) || !std::isfinite(inj.end_s) ||
            inj.start_s < 0.0 || inj.end_s > spec.duration_s || inj.start_s >= inj.end_s)
            raise(ErrorCode::InvalidSpec,
                  context + ": interval must satisfy 0 <= start < end <= duration");
        if (!std::isfinite(inj.delta))
            raise(ErrorCode::InvalidSpec, context + ": delta is not finite");
        if (!std::isfinite(inj.factor) || inj.factor < 0.0)
            raise(ErrorCode::InvalidSpec,
                  context + ": factor must be finite and non-negative");
    }
}

namespace {

double envelope_at(const Injection& inj, double t) {
    if (t < inj.start_s || t >= inj.end_s) return 0.0;
    switch (inj.shape) {
    case Shape::Step: return 1.0;
    case Shape::Ramp: return (t - inj.start_s + 1.0) / (inj.end_s - inj.start_s);
    case Shape::SpikeTrain:
        return std::fmod(t - inj.start_s, kSpikePeriodS) < 1.0 ? 1.0 : 0.0;
    }
    return 0.0;
}

double clamp_feature(int feature, double value, GenStats& stats) {
    const bool is_pct = feature == 0 || feature == 1 || feature == 5;
    double lo = 0.0;
    double hi = is_pct ? 100.0 : std::numeric_limits<double>::infinity();
    if (value < lo) {
        stats.clamped_values += 1;
        return lo;
    }
    if (value > hi) {
        stats.clamped_values += 1;
        return hi;
    }
    return value;
}

} // namespace

telemetry::RunRecord generate_run(const ScenarioSpec& spec, GenStats* stats) {
    validate_spec(spec);
    GenStats local;
    GenStats& tally = stats ? *stats : local;

    const auto n = static_cast<std::int64_t>(std::llround(spec.duration_s));
    Rng rng(spec.seed);

    telemetry::RunRecord run;
    run.run_id = spec.name;
    run.samples.reserve(static_cast<std::size_t>(n));
    for (std::int64_t t = 0; t < n; ++t) {
        const double ts = static_cast<double>(t);
        std::array<double, 6> values{};
        for (int f = 0; f < telemetry::FeatureVector::kCount; ++f) {
            const auto fs = static_cast<std::size_t>(f);
            values[fs] = spec.baseline_means[fs] + spec.baseline_stds[fs] * rng.gaussian();
        }
        for (const auto& inj : spec.injections) {
            const auto fs = static_cast<std::size_t>(inj.feature);
            const double amount =
                inj.delta + spec.baseline_means[fs] * (inj.factor - 1.0);
            values[fs] += amount * envelope_at(inj, ts);
        }
        for (int f = 0; f < telemetry::FeatureVector::kCount; ++f) {
            const auto fs = static_cast<std::size_t>(f);
            values[fs] = clamp_feature(f, values[fs], tally);
        }

        telemetry::TelemetrySample sample;
        sample.timestamp_ms = t * 1000;
        sample.features = telemetry::FeatureVector::from_array(values);
        sample.features.validate();
        run.samples.push_back(sample);
    }
    return run;
}

ScenarioSpec baseline_scenario(std::string name, double duration_s, std::uint64_t seed) {
    ScenarioSpec spec;
    spec.name = std::move(name);
    spec.duration_s = duration_s;
    spec.seed = seed;
    spec.baseline_means = {35.0, 2.0, 3.0e6, 1.5e6, 8.0e5, 90.0};
    spec.baseline_stds = {5.0, 0.5, 5.0e4, 4.0e4, 2.0e4, 1.0};
    return spec;
}

namespace {

ScenarioSpec suite_baseline(std::string name, std::uint64_t seed, double noise_scale,
                            double mean_shift_stds) {
    auto spec = baseline_scenario(std::move(name), 600.0, seed);
    for (std::size_t f = 0; f < 6; ++f) {
        spec.baseline_means[f] += mean_shift_stds * spec.baseline_stds[f];
        spec.baseline_stds[f] *= noise_scale;
    }
    return spec;
}

} // namespace

std::vector<LabeledScenario> standard_suite() {
    std::vector<LabeledScenario> suite;
    suite.reserve(20);

    // Benign runs stay well inside the training baseline's spread: noise at
    // roughly half scale and mean offsets within 0.3 baseline stds.
    const std::array<double, 10> shifts = {0.0,  0.2,  -0.2, 0.3,  -0.3,
                                           0.1,  -0.1, 0.25, -0.25, 0.15};
    for (int i = 0; i < 10; ++i) {
        const auto is = static_cast<std::size_t>(i);
        char name[16];
        std::snprintf(name, sizeof(name), "benign_%02d", i + 1);
        auto spec = suite_baseline(name, 1000 + static_cast<std::uint64_t>(i),
                                   0.50 + 0.015 * i, shifts[is]);
        suite.push_back({std::move(spec), telemetry::Label::Benign});
    }

    const auto anomalous = [&suite](std::string name, std::uint64_t seed,
                                    std::vector<Injection> injections) {
        auto spec = suite_baseline(std::move(name), seed, 0.6, 0.0);
        spec.injections = std::move(injections);
        suite.push_back({std::move(spec), telemetry::Label::Malicious});
    };

    anomalous("a01_cpu_step", 2001, {{120, 300, 0, 40.0, 1.0, Shape::Step}});
    anomalous("a02_cpu_self_spikes", 2002, {{100, 500, 1, 5.0, 1.0, Shape::SpikeTrain}});
    anomalous("a03_mem_ramp", 2003, {{150, 450, 2, 4.5e5, 1.0, Shape::Ramp}});
    anomalous("a04_mem_free_drop", 2004, {{200, 400, 3, -3.2e5, 1.0, Shape::Step}});
    anomalous("a05_battery_drain", 2005, {{60, 540, 5, -12.0, 1.0, Shape::Ramp}});
    anomalous("a06_cache_step", 2006, {{180, 360, 4, 1.6e5, 1.0, Shape::Step}});
    anomalous("a07_cpu_double", 2007, {{120, 480, 0, 0.0, 2.0, Shape::Step}});
    anomalous("a08_cpu_mem_combo", 2008,
              {{150, 450, 0, 30.0, 1.0, Shape::Step},
               {150, 450, 2, 3.5e5, 1.0, Shape::Ramp}});
    // The last two start only after 80% of the run, so a recording cut
    // short misses them entirely.
    anomalous("a09_late_cpu_step", 2009, {{500, 590, 0, 45.0, 1.0, Shape::Step}});
    anomalous("a10_late_mem_ramp", 2010, {{485, 595, 2, 5.0e5, 1.0, Shape::Ramp}});

    return suite;
}

std::string write_spec_json(const ScenarioSpec& spec) {
    nlohmann::json doc;
    doc["name"] = spec.name;
    doc["duration_s"] = spec.duration_s;
    doc["seed"] = spec.seed;
    doc["baseline"]["means"] = spec.baseline_means;
    doc["baseline"]["stds"] = spec.baseline_stds;
    doc["injections"] = nlohmann::json::array();
    for (const auto& inj : spec.injections) {
        nlohmann::json entry;
        entry["start_s"] = inj.start_s;
        entry["end_s"] = inj.end_s;
        entry["feature"] = inj.feature;
        entry["delta"] = inj.delta;
        entry["factor"] = inj.factor;
        entry["shape"] = shape_name(inj.shape);
        doc["injections"].push_back(std::move(entry));
    }
    return doc.dump(2) + "\n";
}

namespace {

int parse_feature_field(const nlohmann::json& value) {
    if (value.is_string()) {
        const auto& names = telemetry::FeatureVector::names();
        const auto text = value.get<std::string>();
        for (int f = 0; f < telemetry::FeatureVector::kCount; ++f)
            if (text == names[static_cast<std::size_t>(f)]) return f;
        raise(ErrorCode::InvalidSpec, "unknown feature name: '" + text + "'");
    }
    return value.get<int>();
}

} // namespace

ScenarioSpec parse_spec_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorCode::InvalidSpec, std::string("scenario is not valid JSON: ") + e.what());
    }

    ScenarioSpec spec;
    try {
        spec.name = doc.at("name").get<std::string>();
        spec.duration_s = doc.at("duration_s").get<double>();
        spec.seed = doc.at("seed").get<std::uint64_t>();
        spec.baseline_means = doc.at("baseline").at("means").get<std::array<double, 6>>();
        spec.baseline_stds = doc.at("baseline").at("stds").get<std::array<double, 6>>();
        if (doc.contains("injections")) {
            for (const auto& entry : doc.at("injections")) {
                Injection inj;
                inj.start_s = entry.at("start_s").get<double>();
                inj.end_s = entry.at("end_s").get<double>();
                inj.feature = parse_feature_field(entry.at("feature"));
                if (entry.contains("delta")) inj.delta = entry.at("delta").get<double>();
                if (entry.contains("factor")) inj.factor = entry.at("factor").get<double>();
                inj.shape = parse_shape(entry.at("shape").get<std::string>());
                spec.injections.push_back(inj);
            }
        }
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorCode::InvalidSpec, std::string("scenario schema mismatch: ") + e.what());
    }
    validate_spec(spec);
    return spec;
}

void write_spec_file(const ScenarioSpec& spec, const std::filesystem::path& path) {
    write_file(path.string(), write_spec_json(spec));
}

ScenarioSpec parse_spec_file(const std::filesystem::path& path) {
    return parse_spec_json(read_file(path.string()));
}

} // namespace vigil::synthgen
