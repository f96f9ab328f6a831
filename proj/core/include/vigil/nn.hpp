#pragma once

#include "vigil/rng.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace vigil::nn {

using Vector = std::vector<double>;

/// Row-major dense matrix of 64-bit floats.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

    double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

    bool operator==(const Matrix&) const = default;
};

enum class Activation { Tanh, Relu, Identity };

const char* activation_name(Activation act);
Activation parse_activation(std::string_view name);

struct DenseLayer {
    Matrix weights; // out x in
    Vector bias;    // out
    Activation activation = Activation::Identity;

    int in_dim() const { return weights.cols; }
    int out_dim() const { return weights.rows; }

    bool operator==(const DenseLayer&) const = default;
};

/// Uniform(-s, s) init with s = sqrt(1 / fan_in).
DenseLayer make_dense(int in_dim, int out_dim, Activation activation, Rng& rng);

struct DenseCache {
    Vector input;
    Vector pre; // pre-activation Wx + b
};

struct DenseResult {
    Vector output;
    DenseCache cache;
};

DenseResult dense_forward(const DenseLayer& layer, const Vector& x);

struct DenseGrads {
    Vector dx;
    Matrix dw;
    Vector db;
};

/// dy is the loss gradient w.r.t. the layer output.
DenseGrads dense_backward(const DenseLayer& layer, const DenseCache& cache, const Vector& dy);

/// Forget-gate LSTM cell. Gates use sigmoid, the candidate uses tanh:
///   i,f,o = sigmoid(W_{i,f,o} [x;h] + b),  g = tanh(W_g [x;h] + b_g)
///   c' = f*c + i*g,  h' = o*tanh(c')
struct LSTMCell {
    int input_size = 0;
    int hidden_size = 0;
    Matrix w_i, w_f, w_o, w_g; // hidden x (input + hidden)
    Vector b_i, b_f, b_o, b_g; // hidden

    bool operator==(const LSTMCell&) const = default;
};

LSTMCell make_lstm(int input_size, int hidden_size, Rng& rng);

struct LSTMStepCache {
    Vector x, h_prev, c_prev;
    Vector i, f, o, g;
    Vector c_new, tanh_c_new;
};

struct LSTMStepResult {
    Vector h;
    Vector c;
    LSTMStepCache cache;
};

LSTMStepResult lstm_step_forward(const LSTMCell& cell, const Vector& x,
                                 const Vector& h, const Vector& c);

struct LSTMGrads {
    Matrix dw_i, dw_f, dw_o, dw_g;
    Vector db_i, db_f, db_o, db_g;
    std::vector<Vector> dx; // per time step
};

/// Backpropagation through time over a full forward pass. d_final_h is the
/// loss gradient w.r.t. the hidden state after the last step; parameter
/// gradients are summed across steps.
LSTMGrads lstm_backward_through_time(const LSTMCell& cell,
                                     std::span<const LSTMStepCache> caches,
                                     const Vector& d_final_h);

struct MseResult {
    double loss = 0.0;
    Vector d_pred;
};

/// loss = mean((pred - target)^2), d_pred = 2 (pred - target) / n.
MseResult mse_loss(const Vector& pred, const Vector& target);

struct AdamState {
    Vector m;
    Vector v;
    long step = 0;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    explicit AdamState(std::size_t size, double lr_ = 1e-3)
        : m(size, 0.0), v(size, 0.0), lr(lr_) {}
};

/// One bias-corrected Adam update over a single parameter block.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);

/// Same update over several blocks sharing one state (and one step count);
/// blocks must always be passed in the same order.
void adam_update(std::span<const std::span<double>> param_blocks,
                 std::span<const std::span<const double>> grad_blocks,
                 AdamState& state);

/// Max elementwise discrepancy between central finite differences of f and
/// the supplied analytic gradient. Relative error, with an absolute fallback
/// when both magnitudes are below 1e-8.
double grad_check(const std::function<double(std::span<const double>)>& f,
                  std::span<double> params,
                  std::span<const double> analytic_grad,
                  double h);

} // namespace vigil::nn
