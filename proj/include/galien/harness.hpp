#pragma once

#include "galien/evaluation.hpp"
#include "galien/nnet.hpp"
#include "galien/series.hpp"
#include "galien/training.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace galien::harness {

/// Delay/dimension selection policy for a pipeline run. Auto mode searches
/// delays up to min(tau_cap, lookback / 4) picking the first local minimum
/// of mutual information, then the smallest false-neighbor-converged
/// dimension up to m_cap, and finally clamps m so the embedded window keeps
/// at least two phase points.
struct PsrPolicy {
    bool auto_estimate = true;
    int tau = 1; // fixed-mode values
    int m = 2;
    int tau_cap = 200;
    int m_cap = 10;
};

PsrParams estimate_psr(std::span<const double> normalized, int lookback,
                       const PsrPolicy& policy);

struct ExperimentGrid {
    std::vector<int> lookbacks{96, 192, 336, 672};
    std::vector<int> horizons{12, 24, 48, 96};
    std::vector<std::uint64_t> seeds{2020, 2021, 2022, 2023, 2024};
    std::vector<nn::Variant> variants{nn::Variant::full};
};

struct ExperimentSetup {
    TimeSeries series; // raw values
    std::string dataset_name;
    nn::ModelConfig model;        // m, n_points, d_pred, variant set per cell
    train::TrainConfig train_cfg; // seed set per run
    SplitSpec split;
    PsrPolicy psr;
    int seasonal_period = 96;
    double ridge_lambda = 1e-3;
    /// Stride between training window starts; validation and test windows
    /// always slide by one step.
    int train_stride = 1;
    std::string out_dir; // empty skips the results files
};

/// Trains and evaluates every (lookback, horizon, variant, seed) cell,
/// marks the best seed per cell by test MAE, and, when out_dir is set,
/// writes results.jsonl (one report per line) and results.csv (one row per
/// lookback/horizon with best-of-seed and seed-spread columns per variant).
std::vector<eval::EvalReport> run_experiment(const ExperimentSetup& setup,
                                             const ExperimentGrid& grid);

std::string report_to_json_line(const eval::EvalReport& rep);

void write_results_jsonl(const std::string& path,
                         const std::vector<eval::EvalReport>& reports);

void write_results_csv(const std::string& path, const std::vector<eval::EvalReport>& reports,
                       const std::vector<nn::Variant>& variants);

} // namespace galien::harness
