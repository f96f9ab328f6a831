#include "vigil/detector.hpp"
#include "vigil/models.hpp"
#include "vigil/rng.hpp"
#include "vigil/synthgen.hpp"

#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

using namespace vigil;

namespace {

models::ModelBundle quick_bundle() {
    models::ModelBundle bundle;
    const auto run =
        synthgen::generate_run(synthgen::baseline_scenario("bench", 300.0, 1));
    std::vector<telemetry::FeatureVector> features;
    for (const auto& sample : run.samples) features.push_back(sample.features);
    bundle.standardizer = models::fit_standardizer(features);

    std::vector<models::Vector> flat;
    for (const auto& f : features)
        flat.push_back(models::standardize(bundle.standardizer, f));
    models::TrainConfig cfg;
    cfg.epochs = 2;
    cfg.seed = 1;
    bundle.autoencoder = models::train_autoencoder(flat, cfg).model;
    bundle.lstm = models::train_lstm(flat, 20, 32, cfg).model;
    bundle.detector.t_ae = 4.0;
    bundle.detector.t_lstm = 4.0;
    return bundle;
}

const models::ModelBundle& bundle() {
    static const models::ModelBundle b = quick_bundle();
    return b;
}

void bench_ae_forward(benchmark::State& state) {
    const auto& b = bundle();
    Rng rng(2);
    models::Vector z(6);
    for (auto& v : z) v = rng.gaussian();
    for (auto _ : state)
        benchmark::DoNotOptimize(models::ae_forward(b.autoencoder, z));
}

void bench_lstm_forecast(benchmark::State& state) {
    const auto& b = bundle();
    Rng rng(3);
    std::vector<models::Vector> window(20, models::Vector(6));
    for (auto& x : window)
        for (auto& v : x) v = rng.gaussian();
    for (auto _ : state)
        benchmark::DoNotOptimize(models::lstm_forecast(b.lstm, window));
}

void bench_detector_ingest(benchmark::State& state) {
    const auto& b = bundle();
    const auto run =
        synthgen::generate_run(synthgen::baseline_scenario("ingest", 600.0, 4));
    detector::DetectorState det;
    std::size_t next = 0;
    std::int64_t offset = 0;
    for (auto _ : state) {
        auto sample = run.samples[next];
        sample.timestamp_ms += offset;
        benchmark::DoNotOptimize(detector::ingest(det, b, b.detector, sample));
        if (++next == run.samples.size()) {
            next = 0;
            offset += 600000;
        }
    }
    state.SetItemsProcessed(state.iterations());
}

void bench_generate_run(benchmark::State& state) {
    const auto spec = synthgen::baseline_scenario("gen", 600.0, 5);
    for (auto _ : state)
        benchmark::DoNotOptimize(synthgen::generate_run(spec));
}

BENCHMARK(bench_ae_forward);
BENCHMARK(bench_lstm_forecast);
BENCHMARK(bench_detector_ingest);
BENCHMARK(bench_generate_run);

} // namespace

BENCHMARK_MAIN();
