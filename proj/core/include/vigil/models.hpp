#pragma once

#include "vigil/detector_config.hpp"
#include "vigil/nn.hpp"
#include "vigil/telemetry.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace vigil::models {

using nn::Vector;

inline constexpr double kStdFloor = 1e-6;

/// Per-feature z-scoring transform fitted on training data. Constant
/// features get their std clamped up to kStdFloor so they standardize to 0.
struct Standardizer {
    std::array<double, 6> means{};
    std::array<double, 6> stds{};

    bool operator==(const Standardizer&) const = default;
};

Standardizer fit_standardizer(std::span<const telemetry::FeatureVector> samples);

Vector standardize(const Standardizer& s, const telemetry::FeatureVector& x);
/// Inverse transform; returns raw-unit values (reconstructions may fall
/// outside the valid feature ranges, so no FeatureVector is produced).
Vector destandardize(const Standardizer& s, const Vector& z);

/// 6 -> 3 -> 1 -> 3 -> 6 dense network with tanh hidden layers and an
/// identity output layer. The width-1 bottleneck is what makes the
/// reconstruction distance informative.
struct Autoencoder {
    std::array<nn::DenseLayer, 4> layers;

    bool operator==(const Autoencoder&) const = default;
};

Autoencoder make_autoencoder(Rng& rng);

Vector ae_forward(const Autoencoder& model, const Vector& z);
/// Bottleneck code for z (the encoder half).
double ae_encode(const Autoencoder& model, const Vector& z);
/// Reconstruction from a bottleneck code (the decoder half).
Vector ae_decode(const Autoencoder& model, double code);

/// Window-M next-step forecaster: LSTM over the window, identity readout of
/// the final hidden state.
struct LSTMPredictor {
    int window = 20;
    nn::LSTMCell cell;
    nn::DenseLayer readout;

    bool operator==(const LSTMPredictor&) const = default;
};

LSTMPredictor make_lstm_predictor(int window, int hidden, Rng& rng);

Vector lstm_forecast(const LSTMPredictor& model, std::span<const Vector> window);

struct TrainConfig {
    int epochs = 50;
    double lr = 1e-3;
    std::uint64_t seed = 0;
    bool shuffle = true;
};

struct AutoencoderTraining {
    Autoencoder model;
    double initial_epoch_loss = 0.0;
    double final_epoch_loss = 0.0;
};

/// Trains the reconstruction model; each sample is its own target.
/// Deterministic for a fixed (data, config) pair.
AutoencoderTraining train_autoencoder(std::span<const Vector> samples, const TrainConfig& cfg);

struct LSTMTraining {
    LSTMPredictor model;
    double initial_epoch_loss = 0.0;
    double final_epoch_loss = 0.0;
};

/// Trains the forecaster on all stride-1 (M-window, next sample) pairs of
/// the sequence.
LSTMTraining train_lstm(std::span<const Vector> sequence, int window, int hidden,
                        const TrainConfig& cfg);
/// Same, over several independent sequences; windows never cross a
/// sequence boundary.
LSTMTraining train_lstm(std::span<const std::vector<Vector>> sequences, int window,
                        int hidden, const TrainConfig& cfg);

double euclidean_distance(std::span<const double> a, std::span<const double> b);

inline constexpr int kBundleFormatVersion = 1;

/// Everything needed to score a stream: the standardizer, both models, and
/// the detector thresholds calibrated for them.
struct ModelBundle {
    int format_version = kBundleFormatVersion;
    Standardizer standardizer;
    Autoencoder autoencoder;
    LSTMPredictor lstm;
    detector::DetectorConfig detector;
};

std::string save_bundle(const ModelBundle& bundle);
ModelBundle load_bundle(const std::string& text);
void save_bundle_file(const ModelBundle& bundle, const std::filesystem::path& path);
ModelBundle load_bundle_file(const std::filesystem::path& path);

} // namespace vigil::models
