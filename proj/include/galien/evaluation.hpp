#pragma once

#include "galien/embedding.hpp"
#include "galien/nnet.hpp"
#include "galien/series.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace galien::eval {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Mean absolute difference, in whatever units the inputs carry.
double mae(const Vector& truth, const Vector& pred);
double mae(const Matrix& truth, const Matrix& pred);

/// Mean of |truth - pred| / |truth|, returned as a fraction (0.075, not
/// 7.5%). Any zero truth entry is a hard error naming its index.
double mape(const Vector& truth, const Vector& pred);
double mape(const Matrix& truth, const Matrix& pred);

/// Per-horizon-step mean absolute error: row r averages |truth - pred|
/// over the samples (columns) of step r.
Vector per_step_mae(const Matrix& truth, const Matrix& pred);

/// Maps z-scores back to original units, elementwise.
Matrix denormalize(const Matrix& values, const NormStats& stats);

/// Model outputs over a pair list in pair order, one column per pair,
/// computed in mini-batches of `batch_size`. Normalized units.
Matrix predict_pairs(const nn::ModelWeights& w, const std::vector<WindowPair>& pairs,
                     int batch_size);

/// Flat look-back window recovered from an embedded image, as a vector of
/// length (m - 1) * tau + N.
Vector recover_window(const TrajectoryImage& image);

/// Repeats the last observed value `horizon` times.
Vector persistence_forecast(const Vector& window, int horizon);

/// Copies the last full period cyclically over the horizon.
Vector seasonal_naive_forecast(const Vector& window, int horizon, int period);

/// One ridge regression per horizon step over flattened look-back windows,
/// with an unpenalized-in-spirit intercept column (the ridge term shrinks it
/// like any coefficient; recovery tests use a tiny lambda).
struct LinearForecaster {
    int lookback = 0;
    int horizon = 0;
    double lambda = 0.0;
    Matrix coef; // horizon x (lookback + 1); last column is the intercept

    /// Fits on the recovered windows and targets of `pairs`. A zero lambda
    /// with collinear features is a hard error.
    static LinearForecaster fit(const std::vector<WindowPair>& pairs, double lambda);

    Vector predict(const Vector& window) const;

    void save(const std::string& path) const;
    static LinearForecaster load(const std::string& path);
};

struct BaselineScores {
    double mae = 0.0;
    double mape = 0.0;
};

struct EvalReport {
    std::string dataset;
    std::string fingerprint;
    std::string variant;
    int lookback = 0;
    int horizon = 0;
    std::uint64_t seed = 0;
    double mae = 0.0;
    double mape = 0.0;
    std::vector<double> per_step_mae;
    std::map<std::string, BaselineScores> baselines;
    double wall_seconds = 0.0;
    bool best_of_seeds = false;
};

struct EvalOptions {
    int batch_size = 32;
    /// Samples per season for the seasonal-naive baseline; skipped when the
    /// look-back window is shorter than one period.
    int seasonal_period = 96;
    /// Optional ridge baseline fitted on the training pairs.
    const LinearForecaster* linear = nullptr;
    std::string dataset;
    std::string fingerprint;
    std::uint64_t seed = 0;
};

/// Model and baseline metrics over a pair list, denormalized before any
/// metric is computed. Baselines forecast from each recovered window.
EvalReport evaluate_model(const nn::ModelWeights& w, const std::vector<WindowPair>& pairs,
                          const NormStats& norm, const EvalOptions& opts);

/// 64-bit FNV-1a of a string, rendered as 16 hex digits.
std::string fnv1a_hex(const std::string& text);

} // namespace galien::eval
