#include "vigil/models.hpp"

#include "vigil/errors.hpp"
#include "vigil/text.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace vigil::models {

using json = nlohmann::json;

Standardizer fit_standardizer(std::span<const telemetry::FeatureVector> samples) {
    if (samples.size() < 2)
        raise(ErrorCode::InsufficientData,
              "standardizer needs >= 2 samples, got " + std::to_string(samples.size()));

    Standardizer s;
    const double n = static_cast<double>(samples.size());
    for (const auto& fv : samples) {
        const auto values = fv.to_array();
        for (int k = 0; k < 6; ++k) s.means[static_cast<std::size_t>(k)] += values[static_cast<std::size_t>(k)];
    }
    for (auto& m : s.means) m /= n;
    for (const auto& fv : samples) {
        const auto values = fv.to_array();
        for (std::size_t k = 0; k < 6; ++k) {
            const double d = values[k] - s.means[k];
            s.stds[k] += d * d;
        }
    }
    for (auto& v : s.stds) v = std::max(std::sqrt(v / n), kStdFloor);
    return s;
}

Vector standardize(const Standardizer& s, const telemetry::FeatureVector& x) {
    const auto values = x.to_array();
    Vector z(6);
    for (std::size_t k = 0; k < 6; ++k) z[k] = (values[k] - s.means[k]) / s.stds[k];
    return z;
}

Vector destandardize(const Standardizer& s, const Vector& z) {
    if (z.size() != 6)
        raise(ErrorCode::ShapeMismatch, "destandardize expects 6 components");
    Vector x(6);
    for (std::size_t k = 0; k < 6; ++k) x[k] = z[k] * s.stds[k] + s.means[k];
    return x;
}

Autoencoder make_autoencoder(Rng& rng) {
    Autoencoder model;
    model.layers[0] = nn::make_dense(6, 3, nn::Activation::Tanh, rng);
    model.layers[1] = nn::make_dense(3, 1, nn::Activation::Tanh, rng);
    model.layers[2] = nn::make_dense(1, 3, nn::Activation::Tanh, rng);
    model.layers[3] = nn::make_dense(3, 6, nn::Activation::Identity, rng);
    return model;
}

Vector ae_forward(const Autoencoder& model, const Vector& z) {
    Vector current = z;
    for (const auto& layer : model.layers)
        current = nn::dense_forward(layer, current).output;
    return current;
}

double ae_encode(const Autoencoder& model, const Vector& z) {
    Vector h = nn::dense_forward(model.layers[0], z).output;
    return nn::dense_forward(model.layers[1], h).output[0];
}

Vector ae_decode(const Autoencoder& model, double code) {
    Vector h = nn::dense_forward(model.layers[2], Vector{code}).output;
    return nn::dense_forward(model.layers[3], h).output;
}

namespace {

std::size_t layer_param_count(const nn::DenseLayer& layer) {
    return layer.weights.data.size() + layer.bias.size();
}

void require_dim6(std::span<const Vector> samples, const char* what) {
    for (const auto& v : samples)
        if (v.size() != 6)
            raise(ErrorCode::ShapeMismatch, std::string(what) + ": expected 6-vectors");
}

} // namespace

AutoencoderTraining train_autoencoder(std::span<const Vector> samples, const TrainConfig& cfg) {
    if (samples.size() < 32)
        raise(ErrorCode::InsufficientData,
              "autoencoder training needs >= 32 samples, got " + std::to_string(samples.size()));
    if (cfg.epochs < 1) raise(ErrorCode::InvalidArgument, "epochs must be >= 1");
    if (cfg.lr < 0.0) raise(ErrorCode::InvalidArgument, "lr must be >= 0");
    require_dim6(samples, "autoencoder training data");

    Rng rng(cfg.seed);
    AutoencoderTraining result;
    result.model = make_autoencoder(rng);
    auto& model = result.model;

    std::size_t total = 0;
    for (const auto& layer : model.layers) total += layer_param_count(layer);
    nn::AdamState state(total, cfg.lr);

    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (cfg.shuffle) rng.shuffle(order);
        double epoch_loss = 0.0;
        for (const std::size_t idx : order) {
            const Vector& z = samples[idx];

            std::array<nn::DenseResult, 4> fwd;
            const Vector* current = &z;
            for (std::size_t l = 0; l < 4; ++l) {
                fwd[l] = nn::dense_forward(model.layers[l], *current);
                current = &fwd[l].output;
            }
            const auto loss = nn::mse_loss(fwd[3].output, z);
            epoch_loss += loss.loss;

            std::array<nn::DenseGrads, 4> back;
            const Vector* dy = &loss.d_pred;
            for (std::size_t l = 4; l-- > 0;) {
                back[l] = nn::dense_backward(model.layers[l], fwd[l].cache, *dy);
                dy = &back[l].dx;
            }

            std::vector<std::span<double>> params;
            std::vector<std::span<const double>> grads;
            for (std::size_t l = 0; l < 4; ++l) {
                params.emplace_back(model.layers[l].weights.data);
                params.emplace_back(model.layers[l].bias);
                grads.emplace_back(back[l].dw.data);
                grads.emplace_back(back[l].db);
            }
            nn::adam_update(params, grads, state);
        }
        epoch_loss /= static_cast<double>(samples.size());
        if (epoch == 0) result.initial_epoch_loss = epoch_loss;
        result.final_epoch_loss = epoch_loss;
    }
    return result;
}

LSTMPredictor make_lstm_predictor(int window, int hidden, Rng& rng) {
    if (window < 2) raise(ErrorCode::InvalidArgument, "window must be >= 2");
    if (hidden < 1) raise(ErrorCode::InvalidArgument, "hidden size must be >= 1");
    LSTMPredictor model;
    model.window = window;
    model.cell = nn::make_lstm(6, hidden, rng);
    model.readout = nn::make_dense(hidden, 6, nn::Activation::Identity, rng);
    return model;
}

Vector lstm_forecast(const LSTMPredictor& model, std::span<const Vector> window) {
    if (static_cast<int>(window.size()) != model.window)
        raise(ErrorCode::WrongWindowLength,
              "expected " + std::to_string(model.window) + " samples, got " +
                  std::to_string(window.size()));
    const std::size_t n = static_cast<std::size_t>(model.cell.hidden_size);
    Vector h(n, 0.0);
    Vector c(n, 0.0);
    for (const auto& x : window) {
        auto step = nn::lstm_step_forward(model.cell, x, h, c);
        h = std::move(step.h);
        c = std::move(step.c);
    }
    return nn::dense_forward(model.readout, h).output;
}

LSTMTraining train_lstm(std::span<const Vector> sequence, int window, int hidden,
                        const TrainConfig& cfg) {
    const std::vector<Vector> seq(sequence.begin(), sequence.end());
    const std::vector<std::vector<Vector>> sequences = {seq};
    return train_lstm(sequences, window, hidden, cfg);
}

LSTMTraining train_lstm(std::span<const std::vector<Vector>> sequences, int window,
                        int hidden, const TrainConfig& cfg) {
    if (cfg.epochs < 1) raise(ErrorCode::InvalidArgument, "epochs must be >= 1");
    if (cfg.lr < 0.0) raise(ErrorCode::InvalidArgument, "lr must be >= 0");

    // (sequence, target index) for every stride-1 window
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t s = 0; s < sequences.size(); ++s) {
        require_dim6(sequences[s], "lstm training data");
        for (std::size_t t = static_cast<std::size_t>(window); t < sequences[s].size(); ++t)
            pairs.emplace_back(s, t);
    }
    if (pairs.size() < 32)
        raise(ErrorCode::InsufficientData,
              "lstm training needs >= 32 window/target pairs, got " +
                  std::to_string(pairs.size()));

    Rng rng(cfg.seed);
    LSTMTraining result;
    result.model = make_lstm_predictor(window, hidden, rng);
    auto& model = result.model;

    const std::size_t total = model.cell.w_i.data.size() * 4 +
                              model.cell.b_i.size() * 4 +
                              layer_param_count(model.readout);
    nn::AdamState state(total, cfg.lr);

    std::vector<std::size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), 0);
    const std::size_t hidden_n = static_cast<std::size_t>(hidden);

    std::vector<nn::LSTMStepCache> caches(static_cast<std::size_t>(window));
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (cfg.shuffle) rng.shuffle(order);
        double epoch_loss = 0.0;
        for (const std::size_t idx : order) {
            const auto& seq = sequences[pairs[idx].first];
            const std::size_t target = pairs[idx].second;

            Vector h(hidden_n, 0.0);
            Vector c(hidden_n, 0.0);
            for (int t = 0; t < window; ++t) {
                auto step = nn::lstm_step_forward(
                    model.cell, seq[target - static_cast<std::size_t>(window) + static_cast<std::size_t>(t)], h, c);
                h = std::move(step.h);
                c = std::move(step.c);
                caches[static_cast<std::size_t>(t)] = std::move(step.cache);
            }
            auto readout = nn::dense_forward(model.readout, h);
            const auto loss = nn::mse_loss(readout.output, seq[target]);
            epoch_loss += loss.loss;

            auto readout_grads = nn::dense_backward(model.readout, readout.cache, loss.d_pred);
            auto cell_grads = nn::lstm_backward_through_time(model.cell, caches, readout_grads.dx);

            const std::span<double> params[] = {
                model.cell.w_i.data, model.cell.w_f.data, model.cell.w_o.data,
                model.cell.w_g.data, model.cell.b_i,      model.cell.b_f,
                model.cell.b_o,      model.cell.b_g,      model.readout.weights.data,
                model.readout.bias,
            };
            const std::span<const double> grads[] = {
                cell_grads.dw_i.data, cell_grads.dw_f.data, cell_grads.dw_o.data,
                cell_grads.dw_g.data, cell_grads.db_i,      cell_grads.db_f,
                cell_grads.db_o,      cell_grads.db_g,      readout_grads.dw.data,
                readout_grads.db,
            };
            nn::adam_update(params, grads, state);
        }
        epoch_loss /= static_cast<double>(pairs.size());
        if (epoch == 0) result.initial_epoch_loss = epoch_loss;
        result.final_epoch_loss = epoch_loss;
    }
    return result;
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        raise(ErrorCode::ShapeMismatch,
              "distance over vectors of length " + std::to_string(a.size()) + " and " +
                  std::to_string(b.size()));
    double acc = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        acc += d * d;
    }
    return std::sqrt(acc);
}

namespace {

json layer_to_json(const nn::DenseLayer& layer) {
    return json{
        {"shape", {layer.out_dim(), layer.in_dim()}},
        {"weights", layer.weights.data},
        {"bias", layer.bias},
        {"activation", nn::activation_name(layer.activation)},
    };
}

nn::DenseLayer layer_from_json(const json& j) {
    nn::DenseLayer layer;
    const auto shape = j.at("shape");
    if (!shape.is_array() || shape.size() != 2)
        raise(ErrorCode::CorruptBundle, "layer shape must be [out, in]");
    const int out = shape[0].get<int>();
    const int in = shape[1].get<int>();
    if (out < 1 || in < 1) raise(ErrorCode::CorruptBundle, "non-positive layer shape");
    layer.weights = nn::Matrix(out, in);
    const auto& weights = j.at("weights");
    if (weights.size() != layer.weights.data.size())
        raise(ErrorCode::CorruptBundle, "layer weight count does not match shape");
    layer.weights.data = weights.get<std::vector<double>>();
    layer.bias = j.at("bias").get<std::vector<double>>();
    if (layer.bias.size() != static_cast<std::size_t>(out))
        raise(ErrorCode::CorruptBundle, "layer bias count does not match shape");
    layer.activation = nn::parse_activation(j.at("activation").get<std::string>());
    return layer;
}

json gate_to_json(const nn::Matrix& m) { return m.data; }

nn::Matrix gate_from_json(const json& j, int hidden, int concat) {
    nn::Matrix m(hidden, concat);
    const auto data = j.get<std::vector<double>>();
    if (data.size() != m.data.size())
        raise(ErrorCode::CorruptBundle, "gate matrix size does not match dimensions");
    m.data = data;
    return m;
}

Vector bias_from_json(const json& j, int hidden) {
    auto v = j.get<std::vector<double>>();
    if (v.size() != static_cast<std::size_t>(hidden))
        raise(ErrorCode::CorruptBundle, "gate bias size does not match hidden size");
    return v;
}

} // namespace

std::string save_bundle(const ModelBundle& bundle) {
    json j;
    j["format_version"] = bundle.format_version;
    j["standardizer"] = {
        {"means", bundle.standardizer.means},
        {"stds", bundle.standardizer.stds},
    };
    json layers = json::array();
    for (const auto& layer : bundle.autoencoder.layers) layers.push_back(layer_to_json(layer));
    j["autoencoder"] = {{"layers", layers}};
    j["lstm"] = {
        {"m", bundle.lstm.window},
        {"h", bundle.lstm.cell.hidden_size},
        {"input", bundle.lstm.cell.input_size},
        {"w_i", gate_to_json(bundle.lstm.cell.w_i)},
        {"w_f", gate_to_json(bundle.lstm.cell.w_f)},
        {"w_o", gate_to_json(bundle.lstm.cell.w_o)},
        {"w_g", gate_to_json(bundle.lstm.cell.w_g)},
        {"b_i", bundle.lstm.cell.b_i},
        {"b_f", bundle.lstm.cell.b_f},
        {"b_o", bundle.lstm.cell.b_o},
        {"b_g", bundle.lstm.cell.b_g},
        {"readout", layer_to_json(bundle.lstm.readout)},
    };
    j["detector"] = {
        {"mode", detector::mode_name(bundle.detector.mode)},
        {"t_ae", bundle.detector.t_ae},
        {"t_lstm", bundle.detector.t_lstm},
    };
    return j.dump(2) + "\n";
}

ModelBundle load_bundle(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        raise(ErrorCode::CorruptBundle, std::string("not valid JSON: ") + e.what());
    }
    try {
        if (!j.contains("format_version"))
            raise(ErrorCode::CorruptBundle, "missing format_version");
        const int version = j.at("format_version").get<int>();
        if (version != kBundleFormatVersion)
            raise(ErrorCode::UnknownVersion,
                  "bundle format_version " + std::to_string(version) + " is not supported");

        ModelBundle bundle;
        bundle.format_version = version;

        const auto& std_j = j.at("standardizer");
        const auto means = std_j.at("means").get<std::vector<double>>();
        const auto stds = std_j.at("stds").get<std::vector<double>>();
        if (means.size() != 6 || stds.size() != 6)
            raise(ErrorCode::CorruptBundle, "standardizer must carry 6 means and 6 stds");
        std::copy(means.begin(), means.end(), bundle.standardizer.means.begin());
        std::copy(stds.begin(), stds.end(), bundle.standardizer.stds.begin());

        const auto& layers = j.at("autoencoder").at("layers");
        if (layers.size() != 4)
            raise(ErrorCode::CorruptBundle, "autoencoder must have 4 layers");
        for (std::size_t l = 0; l < 4; ++l)
            bundle.autoencoder.layers[l] = layer_from_json(layers[l]);
        if (bundle.autoencoder.layers[0].in_dim() != 6 ||
            bundle.autoencoder.layers[1].out_dim() != 1 ||
            bundle.autoencoder.layers[3].out_dim() != 6)
            raise(ErrorCode::CorruptBundle, "autoencoder is not a 6 -> 1 -> 6 network");

        const auto& lstm_j = j.at("lstm");
        bundle.lstm.window = lstm_j.at("m").get<int>();
        const int hidden = lstm_j.at("h").get<int>();
        const int input = lstm_j.at("input").get<int>();
        if (bundle.lstm.window < 2 || hidden < 1 || input != 6)
            raise(ErrorCode::CorruptBundle, "invalid lstm dimensions");
        const int concat = input + hidden;
        bundle.lstm.cell.input_size = input;
        bundle.lstm.cell.hidden_size = hidden;
        bundle.lstm.cell.w_i = gate_from_json(lstm_j.at("w_i"), hidden, concat);
        bundle.lstm.cell.w_f = gate_from_json(lstm_j.at("w_f"), hidden, concat);
        bundle.lstm.cell.w_o = gate_from_json(lstm_j.at("w_o"), hidden, concat);
        bundle.lstm.cell.w_g = gate_from_json(lstm_j.at("w_g"), hidden, concat);
        bundle.lstm.cell.b_i = bias_from_json(lstm_j.at("b_i"), hidden);
        bundle.lstm.cell.b_f = bias_from_json(lstm_j.at("b_f"), hidden);
        bundle.lstm.cell.b_o = bias_from_json(lstm_j.at("b_o"), hidden);
        bundle.lstm.cell.b_g = bias_from_json(lstm_j.at("b_g"), hidden);
        bundle.lstm.readout = layer_from_json(lstm_j.at("readout"));
        if (bundle.lstm.readout.in_dim() != hidden || bundle.lstm.readout.out_dim() != 6)
            raise(ErrorCode::CorruptBundle, "lstm readout shape does not match cell");

        const auto& det_j = j.at("detector");
        bundle.detector.mode = detector::parse_mode(det_j.at("mode").get<std::string>());
        bundle.detector.t_ae = det_j.at("t_ae").get<double>();
        bundle.detector.t_lstm = det_j.at("t_lstm").get<double>();
        if (!(bundle.detector.t_ae > 0.0) || !(bundle.detector.t_lstm > 0.0))
            raise(ErrorCode::CorruptBundle, "detector thresholds must be positive");
        return bundle;
    } catch (const json::exception& e) {
        raise(ErrorCode::CorruptBundle, std::string("malformed bundle: ") + e.what());
    }
}

void save_bundle_file(const ModelBundle& bundle, const std::filesystem::path& path) {
    write_file(path.string(), save_bundle(bundle));
}

ModelBundle load_bundle_file(const std::filesystem::path& path) {
    return load_bundle(read_file(path.string()));
}

} // namespace vigil::models
