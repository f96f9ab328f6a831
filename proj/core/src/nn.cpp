#include "vigil/nn.hpp"

#include "vigil/errors.hpp"

#include <cmath>
#include <string>

namespace vigil::nn {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

void require_size(const Vector& v, std::size_t n, const char* what) {
    if (v.size() != n)
        raise(ErrorCode::ShapeMismatch,
              std::string(what) + ": expected " + std::to_string(n) + " elements, got " +
                  std::to_string(v.size()));
}

// y = W x
Vector matvec(const Matrix& w, const Vector& x) {
    Vector y(static_cast<std::size_t>(w.rows), 0.0);
    for (int r = 0; r < w.rows; ++r) {
        double acc = 0.0;
        const double* row = &w.data[static_cast<std::size_t>(r) * w.cols];
        for (int c = 0; c < w.cols; ++c) acc += row[c] * x[static_cast<std::size_t>(c)];
        y[static_cast<std::size_t>(r)] = acc;
    }
    return y;
}

// y += W^T d
void add_matTvec(const Matrix& w, const Vector& d, Vector& y) {
    for (int r = 0; r < w.rows; ++r) {
        const double dr = d[static_cast<std::size_t>(r)];
        const double* row = &w.data[static_cast<std::size_t>(r) * w.cols];
        for (int c = 0; c < w.cols; ++c) y[static_cast<std::size_t>(c)] += row[c] * dr;
    }
}

// W += outer(d, x)
void add_outer(Matrix& w, const Vector& d, const Vector& x) {
    for (int r = 0; r < w.rows; ++r) {
        const double dr = d[static_cast<std::size_t>(r)];
        double* row = &w.data[static_cast<std::size_t>(r) * w.cols];
        for (int c = 0; c < w.cols; ++c) row[c] += dr * x[static_cast<std::size_t>(c)];
    }
}

} // namespace

const char* activation_name(Activation act) {
    switch (act) {
    case Activation::Tanh: return "tanh";
    case Activation::Relu: return "relu";
    case Activation::Identity: return "identity";
    }
    return "identity";
}

Activation parse_activation(std::string_view name) {
    if (name == "tanh") return Activation::Tanh;
    if (name == "relu") return Activation::Relu;
    if (name == "identity") return Activation::Identity;
    raise(ErrorCode::CorruptBundle, "unknown activation: '" + std::string(name) + "'");
}

DenseLayer make_dense(int in_dim, int out_dim, Activation activation, Rng& rng) {
    DenseLayer layer;
    layer.weights = Matrix(out_dim, in_dim);
    layer.bias.assign(static_cast<std::size_t>(out_dim), 0.0);
    layer.activation = activation;
    const double s = std::sqrt(1.0 / in_dim);
    for (auto& w : layer.weights.data) w = rng.uniform(-s, s);
    for (auto& b : layer.bias) b = rng.uniform(-s, s);
    return layer;
}

DenseResult dense_forward(const DenseLayer& layer, const Vector& x) {
    require_size(x, static_cast<std::size_t>(layer.in_dim()), "dense_forward input");
    DenseResult result;
    result.cache.input = x;
    result.cache.pre = matvec(layer.weights, x);
    for (int r = 0; r < layer.out_dim(); ++r)
        result.cache.pre[static_cast<std::size_t>(r)] += layer.bias[static_cast<std::size_t>(r)];
    result.output = result.cache.pre;
    switch (layer.activation) {
    case Activation::Tanh:
        for (auto& v : result.output) v = std::tanh(v);
        break;
    case Activation::Relu:
        for (auto& v : result.output) v = v > 0.0 ? v : 0.0;
        break;
    case Activation::Identity:
        break;
    }
    return result;
}

DenseGrads dense_backward(const DenseLayer& layer, const DenseCache& cache, const Vector& dy) {
    require_size(dy, static_cast<std::size_t>(layer.out_dim()), "dense_backward dy");
    require_size(cache.input, static_cast<std::size_t>(layer.in_dim()), "dense_backward cache");

    // gradient w.r.t. pre-activation
    Vector da(dy.size());
    for (std::size_t r = 0; r < dy.size(); ++r) {
        switch (layer.activation) {
        case Activation::Tanh: {
            const double t = std::tanh(cache.pre[r]);
            da[r] = dy[r] * (1.0 - t * t);
            break;
        }
        case Activation::Relu:
            da[r] = cache.pre[r] > 0.0 ? dy[r] : 0.0;
            break;
        case Activation::Identity:
            da[r] = dy[r];
            break;
        }
    }

    DenseGrads grads;
    grads.dw = Matrix(layer.out_dim(), layer.in_dim());
    add_outer(grads.dw, da, cache.input);
    grads.db = da;
    grads.dx.assign(cache.input.size(), 0.0);
    add_matTvec(layer.weights, da, grads.dx);
    return grads;
}

LSTMCell make_lstm(int input_size, int hidden_size, Rng& rng) {
    LSTMCell cell;
    cell.input_size = input_size;
    cell.hidden_size = hidden_size;
    const int concat = input_size + hidden_size;
    const double s = std::sqrt(1.0 / concat);
    const auto init_matrix = [&](Matrix& w) {
        w = Matrix(hidden_size, concat);
        for (auto& v : w.data) v = rng.uniform(-s, s);
    };
    const auto init_bias = [&](Vector& b) {
        b.assign(static_cast<std::size_t>(hidden_size), 0.0);
        for (auto& v : b) v = rng.uniform(-s, s);
    };
    init_matrix(cell.w_i);
    init_matrix(cell.w_f);
    init_matrix(cell.w_o);
    init_matrix(cell.w_g);
    init_bias(cell.b_i);
    init_bias(cell.b_f);
    init_bias(cell.b_o);
    init_bias(cell.b_g);
    return cell;
}

LSTMStepResult lstm_step_forward(const LSTMCell& cell, const Vector& x,
                                 const Vector& h, const Vector& c) {
    require_size(x, static_cast<std::size_t>(cell.input_size), "lstm input");
    require_size(h, static_cast<std::size_t>(cell.hidden_size), "lstm hidden state");
    require_size(c, static_cast<std::size_t>(cell.hidden_size), "lstm cell state");

    Vector xh;
    xh.reserve(x.size() + h.size());
    xh.insert(xh.end(), x.begin(), x.end());
    xh.insert(xh.end(), h.begin(), h.end());

    const std::size_t n = static_cast<std::size_t>(cell.hidden_size);
    LSTMStepResult result;
    auto& cache = result.cache;
    cache.x = x;
    cache.h_prev = h;
    cache.c_prev = c;
    cache.i = matvec(cell.w_i, xh);
    cache.f = matvec(cell.w_f, xh);
    cache.o = matvec(cell.w_o, xh);
    cache.g = matvec(cell.w_g, xh);
    for (std::size_t k = 0; k < n; ++k) {
        cache.i[k] = sigmoid(cache.i[k] + cell.b_i[k]);
        cache.f[k] = sigmoid(cache.f[k] + cell.b_f[k]);
        cache.o[k] = sigmoid(cache.o[k] + cell.b_o[k]);
        cache.g[k] = std::tanh(cache.g[k] + cell.b_g[k]);
    }
    cache.c_new.resize(n);
    cache.tanh_c_new.resize(n);
    result.h.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        cache.c_new[k] = cache.f[k] * c[k] + cache.i[k] * cache.g[k];
        cache.tanh_c_new[k] = std::tanh(cache.c_new[k]);
        result.h[k] = cache.o[k] * cache.tanh_c_new[k];
    }
    result.c = cache.c_new;
    return result;
}

LSTMGrads lstm_backward_through_time(const LSTMCell& cell,
                                     std::span<const LSTMStepCache> caches,
                                     const Vector& d_final_h) {
    require_size(d_final_h, static_cast<std::size_t>(cell.hidden_size), "bptt d_final_h");
    const std::size_t n = static_cast<std::size_t>(cell.hidden_size);
    const int concat = cell.input_size + cell.hidden_size;

    LSTMGrads grads;
    grads.dw_i = Matrix(cell.hidden_size, concat);
    grads.dw_f = Matrix(cell.hidden_size, concat);
    grads.dw_o = Matrix(cell.hidden_size, concat);
    grads.dw_g = Matrix(cell.hidden_size, concat);
    grads.db_i.assign(n, 0.0);
    grads.db_f.assign(n, 0.0);
    grads.db_o.assign(n, 0.0);
    grads.db_g.assign(n, 0.0);
    grads.dx.assign(caches.size(), Vector(static_cast<std::size_t>(cell.input_size), 0.0));

    Vector dh = d_final_h;
    Vector dc(n, 0.0);
    Vector da_i(n), da_f(n), da_o(n), da_g(n);
    Vector dxh(static_cast<std::size_t>(concat));
    for (std::size_t t = caches.size(); t-- > 0;) {
        const auto& cc = caches[t];
        require_size(cc.x, static_cast<std::size_t>(cell.input_size), "bptt cache");
        for (std::size_t k = 0; k < n; ++k) {
            const double tanh_c = cc.tanh_c_new[k];
            const double d_o = dh[k] * tanh_c;
            const double dck = dc[k] + dh[k] * cc.o[k] * (1.0 - tanh_c * tanh_c);
            const double d_i = dck * cc.g[k];
            const double d_g = dck * cc.i[k];
            const double d_f = dck * cc.c_prev[k];
            da_i[k] = d_i * cc.i[k] * (1.0 - cc.i[k]);
            da_f[k] = d_f * cc.f[k] * (1.0 - cc.f[k]);
            da_o[k] = d_o * cc.o[k] * (1.0 - cc.o[k]);
            da_g[k] = d_g * (1.0 - cc.g[k] * cc.g[k]);
            dc[k] = dck * cc.f[k];
        }

        Vector xh;
        xh.reserve(cc.x.size() + cc.h_prev.size());
        xh.insert(xh.end(), cc.x.begin(), cc.x.end());
        xh.insert(xh.end(), cc.h_prev.begin(), cc.h_prev.end());

        add_outer(grads.dw_i, da_i, xh);
        add_outer(grads.dw_f, da_f, xh);
        add_outer(grads.dw_o, da_o, xh);
        add_outer(grads.dw_g, da_g, xh);
        for (std::size_t k = 0; k < n; ++k) {
            grads.db_i[k] += da_i[k];
            grads.db_f[k] += da_f[k];
            grads.db_o[k] += da_o[k];
            grads.db_g[k] += da_g[k];
        }

        std::fill(dxh.begin(), dxh.end(), 0.0);
        add_matTvec(cell.w_i, da_i, dxh);
        add_matTvec(cell.w_f, da_f, dxh);
        add_matTvec(cell.w_o, da_o, dxh);
        add_matTvec(cell.w_g, da_g, dxh);
        for (int k = 0; k < cell.input_size; ++k)
            grads.dx[t][static_cast<std::size_t>(k)] = dxh[static_cast<std::size_t>(k)];
        for (std::size_t k = 0; k < n; ++k)
            dh[k] = dxh[static_cast<std::size_t>(cell.input_size) + k];
    }
    return grads;
}

MseResult mse_loss(const Vector& pred, const Vector& target) {
    require_size(target, pred.size(), "mse_loss target");
    if (pred.empty()) raise(ErrorCode::ShapeMismatch, "mse_loss: empty vectors");
    MseResult result;
    result.d_pred.resize(pred.size());
    const double n = static_cast<double>(pred.size());
    for (std::size_t k = 0; k < pred.size(); ++k) {
        const double diff = pred[k] - target[k];
        result.loss += diff * diff;
        result.d_pred[k] = 2.0 * diff / n;
    }
    result.loss /= n;
    return result;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state) {
    const std::span<double> pb[] = {params};
    const std::span<const double> gb[] = {grads};
    adam_update(pb, gb, state);
}

void adam_update(std::span<const std::span<double>> param_blocks,
                 std::span<const std::span<const double>> grad_blocks,
                 AdamState& state) {
    if (param_blocks.size() != grad_blocks.size())
        raise(ErrorCode::ShapeMismatch, "adam: param/grad block count mismatch");
    std::size_t total = 0;
    for (const auto& b : param_blocks) total += b.size();
    if (total != state.m.size())
        raise(ErrorCode::ShapeMismatch,
              "adam: state holds " + std::to_string(state.m.size()) +
                  " moments for " + std::to_string(total) + " parameters");

    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    std::size_t offset = 0;
    for (std::size_t b = 0; b < param_blocks.size(); ++b) {
        auto params = param_blocks[b];
        auto grads = grad_blocks[b];
        if (params.size() != grads.size())
            raise(ErrorCode::ShapeMismatch, "adam: block shape mismatch");
        for (std::size_t k = 0; k < params.size(); ++k) {
            const double g = grads[k];
            double& m = state.m[offset + k];
            double& v = state.v[offset + k];
            m = state.beta1 * m + (1.0 - state.beta1) * g;
            v = state.beta2 * v + (1.0 - state.beta2) * g * g;
            const double m_hat = m / bc1;
            const double v_hat = v / bc2;
            params[k] -= state.lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
        }
        offset += params.size();
    }
}

double grad_check(const std::function<double(std::span<const double>)>& f,
                  std::span<double> params,
                  std::span<const double> analytic_grad,
                  double h) {
    if (analytic_grad.size() != params.size())
        raise(ErrorCode::ShapeMismatch, "grad_check: gradient size mismatch");
    double max_err = 0.0;
    for (std::size_t k = 0; k < params.size(); ++k) {
        const double saved = params[k];
        params[k] = saved + h;
        const double plus = f(params);
        params[k] = saved - h;
        const double minus = f(params);
        params[k] = saved;
        const double numeric = (plus - minus) / (2.0 * h);
        const double analytic = analytic_grad[k];
        const double scale = std::max(std::fabs(numeric), std::fabs(analytic));
        const double diff = std::fabs(numeric - analytic);
        const double err = scale < 1e-8 ? diff : diff / scale;
        if (err > max_err) max_err = err;
    }
    return max_err;
}

} // namespace vigil::nn
