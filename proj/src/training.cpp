#include "galien/training.hpp"

#include "galien/errors.hpp"
#include "galien/evaluation.hpp"
#include "galien/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <utility>

namespace galien::train {

namespace {

/// Salt decorrelating the epoch-shuffle stream from the weight-init stream,
/// which both derive from the same run seed.
constexpr std::uint64_t kShuffleSalt = 0x9E3779B97F4A7C15ULL;

} // namespace

void TrainConfig::validate() const {
    if (batch_size < 1) raise(Errc::config_invalid, "batch_size must be >= 1");
    if (max_epochs < 1) raise(Errc::config_invalid, "max_epochs must be >= 1");
    if (!(learning_rate > 0.0)) raise(Errc::config_invalid, "learning_rate must be > 0");
    if (patience < 0) raise(Errc::config_invalid, "patience must be >= 0");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
        raise(Errc::config_invalid, "adam betas must lie in [0, 1)");
    }
    if (!(adam_eps > 0.0)) raise(Errc::config_invalid, "adam_eps must be > 0");
    if (clip_norm < 0.0) raise(Errc::config_invalid, "clip_norm must be >= 0");
}

double mse_loss(const Eigen::VectorXd& pred, const Eigen::VectorXd& target) {
    if (pred.size() != target.size()) {
        raise(Errc::length_mismatch, "mse_loss inputs have different lengths");
    }
    if (pred.size() == 0) raise(Errc::length_mismatch, "mse_loss inputs are empty");
    return (pred - target).squaredNorm() / static_cast<double>(pred.size());
}

AdamState AdamState::zeros_like(const nn::ModelWeights& w) {
    AdamState s;
    w.for_each_tensor([&](const std::string&, const nn::Matrix& t) {
        s.m1.push_back(nn::Matrix::Zero(t.rows(), t.cols()));
        s.m2.push_back(nn::Matrix::Zero(t.rows(), t.cols()));
    });
    return s;
}

void AdamState::apply(nn::ModelWeights& w, const std::vector<nn::Matrix>& grads,
                      const TrainConfig& cfg) {
    if (grads.size() != m1.size()) {
        raise(Errc::shape_mismatch, "gradient count differs from optimizer state");
    }
    ++step;
    double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(step));
    double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(step));
    std::size_t i = 0;
    w.for_each_tensor([&](const std::string&, nn::Matrix& t) {
        const nn::Matrix& g = grads[i];
        if (g.rows() != t.rows() || g.cols() != t.cols()) {
            raise(Errc::shape_mismatch, "gradient shape differs from its tensor");
        }
        m1[i] = cfg.adam_beta1 * m1[i] + (1.0 - cfg.adam_beta1) * g;
        m2[i] = (cfg.adam_beta2 * m2[i].array() + (1.0 - cfg.adam_beta2) * g.array().square())
                    .matrix();
        t.array() -= cfg.learning_rate * (m1[i].array() / bc1) /
                     ((m2[i].array() / bc2).sqrt() + cfg.adam_eps);
        ++i;
    });
}

double dataset_mse(const nn::ModelWeights& w, const std::vector<WindowPair>& pairs,
                   int batch_size) {
    if (pairs.empty()) raise(Errc::config_invalid, "dataset_mse needs at least one pair");
    std::vector<std::size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto bs = static_cast<std::size_t>(batch_size);
    double sum = 0.0;
    for (std::size_t at = 0; at < order.size(); at += bs) {
        std::size_t end = std::min(order.size(), at + bs);
        nn::Batch b = nn::make_batch(pairs, order, at, end, w.config);
        nn::ForwardGraph fg = nn::build_forward(w, b);
        int loss = fg.g.mse_against(fg.output, b.targets);
        sum += fg.g.value(loss)(0, 0) * static_cast<double>(end - at);
    }
    return sum / static_cast<double>(pairs.size());
}

TrainResult train(const std::vector<WindowPair>& train_pairs,
                  const std::vector<WindowPair>& val_pairs, const nn::ModelConfig& model,
                  const TrainConfig& cfg) {
    cfg.validate();
    model.validate();
    if (train_pairs.empty() || val_pairs.empty()) {
        raise(Errc::config_invalid, "train requires non-empty training and validation pairs");
    }

    nn::ModelWeights w = nn::ModelWeights::init(model, cfg.seed);
    AdamState adam = AdamState::zeros_like(w);
    Rng shuffle_rng(cfg.seed ^ kShuffleSalt);
    std::vector<std::size_t> order(train_pairs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainHistory hist;
    nn::ModelWeights best_w = w;
    double best_val = std::numeric_limits<double>::infinity();
    int streak = 0;
    int stop_after = std::max(cfg.patience, 1);
    auto bs = static_cast<std::size_t>(cfg.batch_size);

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        auto t0 = std::chrono::steady_clock::now();
        shuffle_rng.shuffle(order);
        double loss_sum = 0.0;
        long batch_index = 0;
        for (std::size_t at = 0; at < order.size(); at += bs, ++batch_index) {
            std::size_t end = std::min(order.size(), at + bs);
            nn::Batch b = nn::make_batch(train_pairs, order, at, end, model);
            nn::ForwardGraph fg = nn::build_forward(w, b);
            int loss_id = fg.g.mse_against(fg.output, b.targets);
            double loss = fg.g.value(loss_id)(0, 0);
            if (!std::isfinite(loss)) {
                raise(Errc::non_finite_loss, "loss is not finite at epoch " +
                                                 std::to_string(epoch) + ", batch " +
                                                 std::to_string(batch_index));
            }
            loss_sum += loss * static_cast<double>(end - at);
            fg.g.backward(loss_id);
            std::vector<nn::Matrix> grads;
            grads.reserve(fg.params.size());
            for (const auto& [name, id] : fg.params) grads.push_back(fg.g.grad(id));
            if (cfg.clip_norm > 0.0) {
                double sq = 0.0;
                for (const auto& g : grads) sq += g.squaredNorm();
                double norm = std::sqrt(sq);
                if (norm > cfg.clip_norm) {
                    double s = cfg.clip_norm / norm;
                    for (auto& g : grads) g *= s;
                }
            }
            adam.apply(w, grads, cfg);
        }
        double train_loss = loss_sum / static_cast<double>(order.size());
        double val_loss = dataset_mse(w, val_pairs, cfg.batch_size);
        if (!std::isfinite(val_loss)) {
            raise(Errc::non_finite_loss,
                  "validation loss is not finite after epoch " + std::to_string(epoch));
        }
        double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        hist.epochs.push_back({epoch, train_loss, val_loss, seconds});
        if (val_loss < best_val) {
            best_val = val_loss;
            hist.best_epoch = epoch;
            best_w = w;
            streak = 0;
        } else if (++streak >= stop_after) {
            hist.stopped_early = true;
            break;
        }
    }
    hist.best_val_loss = best_val;
    return {std::move(best_w), std::move(hist)};
}

std::vector<SeedRun> multi_seed_run(const std::vector<WindowPair>& train_pairs,
                                    const std::vector<WindowPair>& val_pairs,
                                    const std::vector<WindowPair>& test_pairs,
                                    const nn::ModelConfig& model, const TrainConfig& base,
                                    const std::vector<std::uint64_t>& seeds,
                                    const NormStats& norm) {
    if (seeds.empty()) raise(Errc::config_invalid, "multi_seed_run requires at least one seed");
    if (test_pairs.empty()) {
        raise(Errc::config_invalid, "multi_seed_run requires non-empty test pairs");
    }
    nn::Matrix truth(model.d_pred, static_cast<long>(test_pairs.size()));
    for (std::size_t i = 0; i < test_pairs.size(); ++i) {
        truth.col(static_cast<long>(i)) = test_pairs[i].target;
    }
    nn::Matrix truth_dn = eval::denormalize(truth, norm);

    std::vector<SeedRun> runs;
    runs.reserve(seeds.size());
    for (std::uint64_t seed : seeds) {
        TrainConfig cfg = base;
        cfg.seed = seed;
        TrainResult r = train(train_pairs, val_pairs, model, cfg);
        nn::Matrix pred = eval::predict_pairs(r.weights, test_pairs, cfg.batch_size);
        nn::Matrix pred_dn = eval::denormalize(pred, norm);
        SeedRun run;
        run.seed = seed;
        run.weights = std::move(r.weights);
        run.history = std::move(r.history);
        run.test_mae = eval::mae(truth_dn, pred_dn);
        run.test_mape = eval::mape(truth_dn, pred_dn);
        runs.push_back(std::move(run));
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < runs.size(); ++i) {
        if (runs[i].test_mae < runs[best].test_mae) best = i;
    }
    runs[best].best = true;
    return runs;
}

} // namespace galien::train
