#include "uad/wigan.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <string>

#include "uad/common.hpp"
#include "uad/csv.hpp"
#include "uad/errors.hpp"
#include "uad/uniformity.hpp"

namespace uad::wigan {

namespace {

// Independent RNG streams so uniform-reference draws, minibatch picks, and
// initialization can be replayed separately.
enum : std::uint64_t {
    kStreamGeneratorInit = 1,
    kStreamCriticInit = 2,
    kStreamMinibatch = 3,
    kStreamUniformRef = 4,
    kStreamSplit = 5,
};

std::vector<int> full_dims(int input_dim, const std::vector<int>& hidden, int output_dim) {
    std::vector<int> dims;
    dims.push_back(input_dim);
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(output_dim);
    return dims;
}

Eigen::MatrixXd gather_columns(const Eigen::MatrixXd& data_cols,
                               const std::vector<int>& indices) {
    Eigen::MatrixXd out(data_cols.rows(), static_cast<Eigen::Index>(indices.size()));
    for (std::size_t i = 0; i < indices.size(); ++i)
        out.col(static_cast<Eigen::Index>(i)) = data_cols.col(indices[i]);
    return out;
}

}  // namespace

void validate(const TrainConfig& c) {
    if (!(c.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (!(c.clip_c > 0.0)) throw ConfigError("clip_c must be positive");
    if (c.batch_size_m < 1) throw ConfigError("batch_size_m must be >= 1");
    if (c.critic_iters_n < 1) throw ConfigError("critic_iters_n must be >= 1");
    if (c.total_generator_iters < 1)
        throw ConfigError("total_generator_iters must be >= 1");
    if (!(c.validation_fraction >= 0.0 && c.validation_fraction < 1.0))
        throw ConfigError("validation_fraction must be in [0,1)");
    if (c.snapshot_every < 1) throw ConfigError("snapshot_every must be >= 1");
    if (c.val_levels_m < 2) throw ConfigError("val_levels_m must be >= 2");
    if (c.val_batch_n < 1) throw ConfigError("val_batch_n must be >= 1");
    for (int h : c.generator_hidden)
        if (h < 1) throw ConfigError("generator_hidden dimensions must be positive");
    for (int h : c.critic_hidden)
        if (h < 1) throw ConfigError("critic_hidden dimensions must be positive");
    if (!(c.rmsprop_decay > 0.0 && c.rmsprop_decay < 1.0))
        throw ConfigError("rmsprop_decay must be in (0,1)");
    if (!(c.rmsprop_stabilizer > 0.0))
        throw ConfigError("rmsprop_stabilizer must be positive");
}

std::vector<int> minibatch_indices(Rng& rng, int population, int count) {
    if (population < 1) throw ShapeError("minibatch_indices: empty population");
    std::vector<int> indices(static_cast<std::size_t>(count));
    for (auto& idx : indices)
        idx = static_cast<int>(rng.below(static_cast<std::uint64_t>(population)));
    return indices;
}

double critic_step(nn::Mlp& critic, const nn::Mlp& generator,
                   const Eigen::MatrixXd& data_cols, const Eigen::VectorXd& uniform_batch,
                   double learning_rate, double clip_c, nn::RmsPropState& state) {
    const Eigen::Index m = data_cols.cols();
    if (m == 0) throw ShapeError("critic_step: empty data batch");
    if (uniform_batch.size() != m)
        throw ShapeError("critic_step: uniform batch size != data batch size");

    Eigen::MatrixXd transported = forward_batch(generator, data_cols);  // 1 x m

    // Critic input: the m uniform references followed by the m generator outputs.
    Eigen::MatrixXd critic_in(1, 2 * m);
    critic_in.leftCols(m) = uniform_batch.transpose();
    critic_in.rightCols(m) = transported;

    nn::ForwardCache cache = forward_cached(critic, critic_in);
    const Eigen::MatrixXd& out = cache.output();  // 1 x 2m

    const double inv_m = 1.0 / static_cast<double>(m);
    double loss = (out.leftCols(m).sum() - out.rightCols(m).sum()) * inv_m;

    Eigen::MatrixXd out_grads(1, 2 * m);
    out_grads.leftCols(m).setConstant(inv_m);
    out_grads.rightCols(m).setConstant(-inv_m);

    nn::MlpGradients grads = backward(critic, cache, out_grads);
    rmsprop_step(critic, grads, state, learning_rate);
    clip_weights(critic, clip_c);
    return loss;
}

double generator_step(nn::Mlp& generator, const nn::Mlp& critic,
                      const Eigen::MatrixXd& data_cols, double learning_rate,
                      nn::RmsPropState& state) {
    const Eigen::Index m = data_cols.cols();
    if (m == 0) throw ShapeError("generator_step: empty data batch");

    nn::ForwardCache gen_cache = forward_cached(generator, data_cols);
    nn::ForwardCache critic_cache = forward_cached(critic, gen_cache.output());

    const double inv_m = 1.0 / static_cast<double>(m);
    double loss = critic_cache.output().sum() * inv_m;

    Eigen::MatrixXd critic_out_grads =
        Eigen::MatrixXd::Constant(1, m, inv_m);
    Eigen::MatrixXd dloss_dy;
    backward(critic, critic_cache, critic_out_grads, &dloss_dy);

    nn::MlpGradients grads = backward(generator, gen_cache, dloss_dy);
    rmsprop_step(generator, grads, state, learning_rate);
    return loss;
}

double mean_validation_k1(const nn::Mlp& generator, const Eigen::MatrixXd& val_cols,
                          int levels_m, int batch_n) {
    const int total = static_cast<int>(val_cols.cols());
    const int batches = total / batch_n;
    if (batches == 0) throw ShapeError("mean_validation_k1: fewer samples than one batch");

    Eigen::MatrixXd outputs = forward_batch(generator, val_cols);
    std::vector<int> symbols(static_cast<std::size_t>(batch_n));
    double k1_sum = 0.0;
    for (int b = 0; b < batches; ++b) {
        for (int i = 0; i < batch_n; ++i)
            symbols[static_cast<std::size_t>(i)] =
                uniformity::quantize(clamp_unit(outputs(0, b * batch_n + i)), levels_m);
        k1_sum += uniformity::k1_statistic(symbols);
    }
    return k1_sum / batches;
}

TrainResult train(const Eigen::MatrixXd& data, const TrainConfig& config) {
    validate(config);
    const int total_rows = static_cast<int>(data.rows());
    const int dim = static_cast<int>(data.cols());
    if (total_rows == 0 || dim == 0) throw DataError("train: no rows");
    if (!data.allFinite()) throw DataError("train: non-finite value in training data");

    for (int c = 0; c < dim; ++c) {
        if (data.col(c).maxCoeff() == data.col(c).minCoeff())
            throw DegenerateDataError(
                "train: coordinate " + std::to_string(c) +
                " has zero variance; a constant cannot be transported to the uniform "
                "distribution");
    }

    // Validation split: seeded shuffle, tail fraction held out.
    const int val_count = static_cast<int>(config.validation_fraction * total_rows);
    const int train_count = total_rows - val_count;
    if (train_count < config.batch_size_m)
        throw ConfigError("train: training split (" + std::to_string(train_count) +
                          ") smaller than batch_size_m (" +
                          std::to_string(config.batch_size_m) + ")");

    std::vector<int> order(static_cast<std::size_t>(total_rows));
    std::iota(order.begin(), order.end(), 0);
    Rng split_rng(derive_seed(config.seed, kStreamSplit));
    for (int i = total_rows - 1; i > 0; --i) {
        int j = static_cast<int>(split_rng.below(static_cast<std::uint64_t>(i + 1)));
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }

    Eigen::MatrixXd train_cols(dim, train_count);
    for (int i = 0; i < train_count; ++i)
        train_cols.col(i) = data.row(order[static_cast<std::size_t>(i)]).transpose();
    Eigen::MatrixXd val_cols(dim, val_count);
    for (int i = 0; i < val_count; ++i)
        val_cols.col(i) =
            data.row(order[static_cast<std::size_t>(train_count + i)]).transpose();

    Rng gen_init(derive_seed(config.seed, kStreamGeneratorInit));
    Rng critic_init(derive_seed(config.seed, kStreamCriticInit));
    nn::Mlp generator = nn::make_mlp(full_dims(dim, config.generator_hidden, 1),
                                     nn::Activation::LeakyRelu,
                                     nn::Activation::Sigmoid, gen_init);
    nn::Mlp critic = nn::make_mlp(full_dims(1, config.critic_hidden, 1),
                                  nn::Activation::LeakyRelu,
                                  nn::Activation::Identity, critic_init);

    nn::RmsPropState gen_state =
        make_rmsprop_state(generator, config.rmsprop_decay, config.rmsprop_stabilizer);
    nn::RmsPropState critic_state =
        make_rmsprop_state(critic, config.rmsprop_decay, config.rmsprop_stabilizer);

    Rng minibatch_rng(derive_seed(config.seed, kStreamMinibatch));
    Rng uniform_rng(derive_seed(config.seed, kStreamUniformRef));

    const bool can_validate = val_count >= config.val_batch_n;

    TrainResult result;
    result.best_val_k1 = -std::numeric_limits<double>::infinity();
    result.best_iter = config.total_generator_iters;
    result.trace.rows.reserve(static_cast<std::size_t>(config.total_generator_iters));

    for (int iter = 1; iter <= config.total_generator_iters; ++iter) {
        double critic_loss = 0.0;
        for (int t = 0; t < config.critic_iters_n; ++t) {
            Eigen::VectorXd uniforms(config.batch_size_m);
            for (int i = 0; i < config.batch_size_m; ++i)
                uniforms(i) = uniform_rng.uniform01();
            Eigen::MatrixXd batch = gather_columns(
                train_cols, minibatch_indices(minibatch_rng, train_count,
                                              config.batch_size_m));
            critic_loss = critic_step(critic, generator, batch, uniforms,
                                      config.learning_rate, config.clip_c, critic_state);
        }

        Eigen::MatrixXd batch = gather_columns(
            train_cols,
            minibatch_indices(minibatch_rng, train_count, config.batch_size_m));
        double gen_loss =
            generator_step(generator, critic, batch, config.learning_rate, gen_state);

        if (!generator.all_finite() || !critic.all_finite())
            throw TrainingDivergedError(
                "train: non-finite parameters at iteration " + std::to_string(iter),
                iter);

        TraceRow row;
        row.iter = iter;
        row.critic_loss = critic_loss;
        row.gen_loss = gen_loss;

        if (can_validate &&
            (iter % config.snapshot_every == 0 || iter == config.total_generator_iters)) {
            double score = mean_validation_k1(generator, val_cols, config.val_levels_m,
                                              config.val_batch_n);
            row.val_k1_mean = score;
            if (score > result.best_val_k1) {
                result.best_val_k1 = score;
                result.best_iter = iter;
                result.generator = generator;
            }
        }
        result.trace.rows.push_back(std::move(row));
    }

    if (!can_validate) {
        result.generator = generator;
        result.best_val_k1 = std::numeric_limits<double>::quiet_NaN();
        result.best_iter = config.total_generator_iters;
    }
    return result;
}

void write_trace_csv(const TrainingTrace& trace, const std::filesystem::path& path) {
    csv::AtomicWriter writer(path);
    auto& out = writer.stream();
    out << "iter,critic_loss,gen_loss,val_k1_mean\n";
    for (const auto& row : trace.rows) {
        out << row.iter << ',' << csv::fmt_g17(row.critic_loss) << ','
            << csv::fmt_g17(row.gen_loss) << ',';
        if (row.val_k1_mean) out << csv::fmt_g17(*row.val_k1_mean);
        out << '\n';
    }
    writer.commit();
}

}  // namespace uad::wigan
