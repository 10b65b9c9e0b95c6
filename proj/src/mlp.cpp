#include "uad/mlp.hpp"

#include <cmath>
#include <string>

#include "uad/errors.hpp"

namespace uad::nn {

namespace {

constexpr double kLeakySlope = 0.01;

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

void apply_activation(Activation act, const Eigen::MatrixXd& pre, Eigen::MatrixXd& out) {
    switch (act) {
        case Activation::LeakyRelu:
            out = pre.unaryExpr([](double x) { return x > 0.0 ? x : kLeakySlope * x; });
            break;
        case Activation::Sigmoid:
            out = pre.unaryExpr([](double x) { return sigmoid(x); });
            break;
        case Activation::Identity:
            out = pre;
            break;
    }
}

// Derivative evaluated from the pre-activation and the cached activation value.
Eigen::MatrixXd activation_derivative(Activation act, const Eigen::MatrixXd& pre,
                                      const Eigen::MatrixXd& value) {
    switch (act) {
        case Activation::LeakyRelu:
            return pre.unaryExpr([](double x) { return x > 0.0 ? 1.0 : kLeakySlope; });
        case Activation::Sigmoid:
            return (value.array() * (1.0 - value.array())).matrix();
        case Activation::Identity:
            return Eigen::MatrixXd::Ones(pre.rows(), pre.cols());
    }
    return {};
}

Activation layer_activation(const Mlp& net, int layer) {
    return layer + 1 == net.layer_count() ? net.output_activation
                                          : net.hidden_activation;
}

void check_input_rows(const Mlp& net, Eigen::Index rows, const char* where) {
    if (rows != net.input_dim())
        throw ShapeError(std::string(where) + ": input dimension " + std::to_string(rows) +
                         " != network input dimension " + std::to_string(net.input_dim()));
}

}  // namespace

bool Mlp::all_finite() const {
    for (const auto& w : weights)
        if (!w.allFinite()) return false;
    for (const auto& b : biases)
        if (!b.allFinite()) return false;
    return true;
}

Mlp make_mlp(const std::vector<int>& layer_dims, Activation hidden, Activation output,
             Rng& rng) {
    if (layer_dims.size() < 2)
        throw ShapeError("make_mlp: need at least an input and an output dimension");
    for (int d : layer_dims)
        if (d < 1) throw ShapeError("make_mlp: layer dimensions must be positive");

    Mlp net;
    net.layer_dims = layer_dims;
    net.hidden_activation = hidden;
    net.output_activation = output;
    for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
        int fan_in = layer_dims[l];
        int fan_out = layer_dims[l + 1];
        double limit = std::sqrt(6.0 / (fan_in + fan_out));
        Eigen::MatrixXd w(fan_out, fan_in);
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c)
                w(r, c) = rng.uniform(-limit, limit);
        net.weights.push_back(std::move(w));
        net.biases.emplace_back(Eigen::VectorXd::Zero(fan_out));
    }
    return net;
}

ForwardCache forward_cached(const Mlp& net, const Eigen::MatrixXd& inputs) {
    check_input_rows(net, inputs.rows(), "forward");
    ForwardCache cache;
    cache.pre.resize(net.weights.size());
    cache.act.resize(net.weights.size() + 1);
    cache.act[0] = inputs;
    for (int l = 0; l < net.layer_count(); ++l) {
        cache.pre[l].noalias() = net.weights[l] * cache.act[l];
        cache.pre[l].colwise() += net.biases[l];
        apply_activation(layer_activation(net, l), cache.pre[l], cache.act[l + 1]);
    }
    return cache;
}

Eigen::MatrixXd forward_batch(const Mlp& net, const Eigen::MatrixXd& inputs) {
    check_input_rows(net, inputs.rows(), "forward");
    Eigen::MatrixXd cur = inputs;
    Eigen::MatrixXd next;
    for (int l = 0; l < net.layer_count(); ++l) {
        Eigen::MatrixXd pre = net.weights[l] * cur;
        pre.colwise() += net.biases[l];
        apply_activation(layer_activation(net, l), pre, next);
        cur = std::move(next);
    }
    return cur;
}

Eigen::VectorXd forward(const Mlp& net, const Eigen::VectorXd& input) {
    return forward_batch(net, input);
}

MlpGradients backward(const Mlp& net, const ForwardCache& cache,
                      const Eigen::MatrixXd& output_grads,
                      Eigen::MatrixXd* input_grads) {
    if (output_grads.rows() != net.output_dim() ||
        output_grads.cols() != cache.act[0].cols())
        throw ShapeError("backward: output_grads shape does not match network output");
    if (cache.act[0].cols() == 0) throw ShapeError("backward: empty batch");
    if (!cache.act[0].allFinite() || !output_grads.allFinite())
        throw ShapeError("backward: non-finite values in inputs");

    MlpGradients grads;
    grads.weights.resize(net.weights.size());
    grads.biases.resize(net.biases.size());

    Eigen::MatrixXd delta;
    for (int l = net.layer_count() - 1; l >= 0; --l) {
        const Eigen::MatrixXd deriv =
            activation_derivative(layer_activation(net, l), cache.pre[l], cache.act[l + 1]);
        if (l == net.layer_count() - 1)
            delta = output_grads.cwiseProduct(deriv);
        else
            delta = delta.cwiseProduct(deriv);
        grads.weights[l].noalias() = delta * cache.act[l].transpose();
        grads.biases[l] = delta.rowwise().sum();
        if (l > 0)
            delta = (net.weights[l].transpose() * delta).eval();
        else if (input_grads)
            input_grads->noalias() = net.weights[0].transpose() * delta;
    }
    return grads;
}

MlpGradients backward(const Mlp& net, const Eigen::MatrixXd& inputs,
                      const Eigen::MatrixXd& output_grads) {
    ForwardCache cache = forward_cached(net, inputs);
    return backward(net, cache, output_grads);
}

RmsPropState make_rmsprop_state(const Mlp& net, double decay, double stabilizer) {
    if (!(decay > 0.0 && decay < 1.0))
        throw std::domain_error("rmsprop: decay must be in (0,1)");
    if (!(stabilizer > 0.0))
        throw std::domain_error("rmsprop: stabilizer must be positive");
    RmsPropState state;
    state.decay = decay;
    state.stabilizer = stabilizer;
    for (const auto& w : net.weights)
        state.v_weights.emplace_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
    for (const auto& b : net.biases)
        state.v_biases.emplace_back(Eigen::VectorXd::Zero(b.size()));
    return state;
}

void rmsprop_step(Mlp& params, const MlpGradients& grads, RmsPropState& state,
                  double learning_rate) {
    if (!(learning_rate > 0.0))
        throw std::domain_error("rmsprop_step: learning rate must be positive");
    if (grads.weights.size() != params.weights.size() ||
        state.v_weights.size() != params.weights.size())
        throw ShapeError("rmsprop_step: mismatched layer counts");

    auto update = [&](auto& theta, const auto& g, auto& v) {
        if (theta.rows() != g.rows() || theta.cols() != g.cols())
            throw ShapeError("rmsprop_step: gradient shape mismatch");
        v = state.decay * v + (1.0 - state.decay) * g.cwiseProduct(g);
        theta -= learning_rate *
                 g.cwiseQuotient((v.cwiseSqrt().array() + state.stabilizer).matrix());
    };
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        update(params.weights[l], grads.weights[l], state.v_weights[l]);
        update(params.biases[l], grads.biases[l], state.v_biases[l]);
    }
}

void clip_weights(Mlp& params, double c) {
    if (!(c > 0.0)) throw std::domain_error("clip_weights: c must be positive");
    for (auto& w : params.weights) w = w.cwiseMax(-c).cwiseMin(c);
    for (auto& b : params.biases) b = b.cwiseMax(-c).cwiseMin(c);
}

}  // namespace uad::nn
