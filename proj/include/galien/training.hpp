#pragma once

#include "galien/embedding.hpp"
#include "galien/nnet.hpp"
#include "galien/series.hpp"

#include <cstdint>
#include <vector>

namespace galien::train {

struct TrainConfig {
    int batch_size = 32;
    int max_epochs = 10;
    double learning_rate = 1e-4;
    /// Consecutive non-improving validation epochs tolerated before stopping;
    /// 0 stops at the first non-improving epoch.
    int patience = 3;
    std::uint64_t seed = 2020;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    /// Global gradient-norm cap; 0 disables clipping.
    double clip_norm = 0.0;

    void validate() const;
};

struct EpochRecord {
    int epoch = 0; // 1-based
    double train_loss = 0.0;
    double val_loss = 0.0;
    double seconds = 0.0;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    int best_epoch = 0;
    double best_val_loss = 0.0;
    bool stopped_early = false;
};

/// Mean squared difference; raises LengthMismatch on unequal sizes.
double mse_loss(const Eigen::VectorXd& pred, const Eigen::VectorXd& target);

/// First-moment / second-moment adaptive updates with bias correction.
/// Slot order is the weight registry order.
struct AdamState {
    long step = 0;
    std::vector<nn::Matrix> m1;
    std::vector<nn::Matrix> m2;

    static AdamState zeros_like(const nn::ModelWeights& w);
    void apply(nn::ModelWeights& w, const std::vector<nn::Matrix>& grads,
               const TrainConfig& cfg);
};

/// Mean squared error of the model over a full pair list, in normalized
/// units, computed in mini-batches of `batch_size`.
double dataset_mse(const nn::ModelWeights& w, const std::vector<WindowPair>& pairs,
                   int batch_size);

struct TrainResult {
    nn::ModelWeights weights;
    TrainHistory history;
};

/// Trains from a seeded initialization, shuffling each epoch, stopping once
/// validation loss fails to improve for more than `patience` consecutive
/// epochs, and returning the best-validation weights.
TrainResult train(const std::vector<WindowPair>& train_pairs,
                  const std::vector<WindowPair>& val_pairs, const nn::ModelConfig& model,
                  const TrainConfig& cfg);

struct SeedRun {
    std::uint64_t seed = 0;
    nn::ModelWeights weights;
    TrainHistory history;
    double test_mae = 0.0;
    double test_mape = 0.0;
    bool best = false;
};

/// Independent run per seed; marks the single lowest-test-MAE run as best
/// (ties break toward the earlier seed in the list). Test metrics are
/// computed on denormalized values.
std::vector<SeedRun> multi_seed_run(const std::vector<WindowPair>& train_pairs,
                                    const std::vector<WindowPair>& val_pairs,
                                    const std::vector<WindowPair>& test_pairs,
                                    const nn::ModelConfig& model, const TrainConfig& base,
                                    const std::vector<std::uint64_t>& seeds,
                                    const NormStats& norm);

} // namespace galien::train
