#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "uad/mlp.hpp"
#include "uad/rng.hpp"

namespace uad::wigan {

// Adversarial training of an inverse generator: the generator maps data
// samples to scalars in (0,1), a clipped critic compares them against
// synthetic uniform draws, and both descend their stochastic gradients.
struct TrainConfig {
    double learning_rate = 0.001;
    double clip_c = 0.01;
    int batch_size_m = 100;
    int critic_iters_n = 10;  // critic steps per generator step
    int total_generator_iters = 2000;
    std::uint64_t seed = 0;
    std::vector<int> generator_hidden = {32, 32};
    std::vector<int> critic_hidden = {32, 32};
    double validation_fraction = 0.1;
    // Snapshot selection: every snapshot_every generator iterations the
    // candidate generator is scored by the mean K1 of quantized validation
    // batches, and the best-scoring snapshot is returned.
    int snapshot_every = 50;
    int val_levels_m = 200;
    int val_batch_n = 50;
    double rmsprop_decay = 0.9;
    double rmsprop_stabilizer = 1e-8;
};

void validate(const TrainConfig& config);

struct TraceRow {
    int iter = 0;
    double critic_loss = 0.0;   // (1/m) sum f(U) - (1/m) sum f(g(Z)), pre-update
    double gen_loss = 0.0;      // (1/m) sum f(g(Z)), pre-update
    std::optional<double> val_k1_mean;  // set on snapshot iterations
};

struct TrainingTrace {
    std::vector<TraceRow> rows;
};

void write_trace_csv(const TrainingTrace& trace, const std::filesystem::path& path);

// One critic update: descend the gradient of mean f(U) - mean f(g(Z)) and clip
// every critic parameter to [-clip_c, clip_c]. Returns the pre-update loss.
double critic_step(nn::Mlp& critic, const nn::Mlp& generator,
                   const Eigen::MatrixXd& data_cols, const Eigen::VectorXd& uniform_batch,
                   double learning_rate, double clip_c, nn::RmsPropState& state);

// One generator update: descend the gradient of mean f(g(Z)). No clipping.
double generator_step(nn::Mlp& generator, const nn::Mlp& critic,
                      const Eigen::MatrixXd& data_cols, double learning_rate,
                      nn::RmsPropState& state);

struct TrainResult {
    nn::Mlp generator;
    TrainingTrace trace;
    double best_val_k1 = 0.0;
    int best_iter = 0;
};

// data: one observation per row. Deterministic for a fixed config (seed).
TrainResult train(const Eigen::MatrixXd& data, const TrainConfig& config);

// Uniform-with-replacement minibatch draw over [0, population).
std::vector<int> minibatch_indices(Rng& rng, int population, int count);

// Mean K1 over consecutive disjoint batches of quantized generator outputs.
double mean_validation_k1(const nn::Mlp& generator, const Eigen::MatrixXd& val_cols,
                          int levels_m, int batch_n);

}  // namespace uad::wigan
