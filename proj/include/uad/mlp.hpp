#pragma once

#include <Eigen/Dense>
#include <vector>

#include "uad/rng.hpp"

namespace uad::nn {

enum class Activation { LeakyRelu, Sigmoid, Identity };

// Fully-connected feedforward network. Hidden layers share one activation,
// the output layer has its own. Batches are matrices with one sample per column.
struct Mlp {
    std::vector<int> layer_dims;  // input dim first, output dim last
    std::vector<Eigen::MatrixXd> weights;  // weights[l] is dims[l+1] x dims[l]
    std::vector<Eigen::VectorXd> biases;
    Activation hidden_activation = Activation::LeakyRelu;
    Activation output_activation = Activation::Identity;

    int input_dim() const { return layer_dims.front(); }
    int output_dim() const { return layer_dims.back(); }
    int layer_count() const { return static_cast<int>(weights.size()); }
    bool all_finite() const;
};

// Weights uniform in +-sqrt(6/(fan_in+fan_out)), biases zero, seeded.
Mlp make_mlp(const std::vector<int>& layer_dims, Activation hidden, Activation output,
             Rng& rng);

Eigen::VectorXd forward(const Mlp& net, const Eigen::VectorXd& input);
Eigen::MatrixXd forward_batch(const Mlp& net, const Eigen::MatrixXd& inputs);

struct ForwardCache {
    std::vector<Eigen::MatrixXd> pre;  // pre[l]: pre-activation of layer l
    std::vector<Eigen::MatrixXd> act;  // act[0] = inputs, act[l+1] = activation of layer l
    const Eigen::MatrixXd& output() const { return act.back(); }
};

ForwardCache forward_cached(const Mlp& net, const Eigen::MatrixXd& inputs);

struct MlpGradients {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;
};

// Gradient of sum_i <output_i, output_grads_i> over the batch with respect to
// every weight and bias. When input_grads is non-null it also receives the
// gradient with respect to the inputs (used to chain two networks).
MlpGradients backward(const Mlp& net, const ForwardCache& cache,
                      const Eigen::MatrixXd& output_grads,
                      Eigen::MatrixXd* input_grads = nullptr);
MlpGradients backward(const Mlp& net, const Eigen::MatrixXd& inputs,
                      const Eigen::MatrixXd& output_grads);

struct RmsPropState {
    std::vector<Eigen::MatrixXd> v_weights;  // squared-gradient accumulators
    std::vector<Eigen::VectorXd> v_biases;
    double decay = 0.9;
    double stabilizer = 1e-8;
};

RmsPropState make_rmsprop_state(const Mlp& net, double decay = 0.9,
                                double stabilizer = 1e-8);

// v <- decay*v + (1-decay)*g^2;  theta <- theta - lr*g/(sqrt(v) + stabilizer)
void rmsprop_step(Mlp& params, const MlpGradients& grads, RmsPropState& state,
                  double learning_rate);

// Clamp every weight and bias to [-c, c].
void clip_weights(Mlp& params, double c);

}  // namespace uad::nn
