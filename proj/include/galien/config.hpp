#pragma once

#include "galien/harness.hpp"
#include "galien/nnet.hpp"
#include "galien/series.hpp"
#include "galien/training.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace galien::config {

struct DataSection {
    std::string path;
    std::string column = "0";
    bool has_header = false;
    std::string delimiter = ",";
    std::string missing = "error"; // or "interpolate"
    double step_minutes = 15.0;
    std::string name; // defaults to the file stem

    CsvOptions csv_options() const;
};

struct WindowSection {
    int lookback = 192;
    int horizon = 96;
    int train_stride = 1;
};

struct BaselineSection {
    int seasonal_period = 96;
    double ridge_lambda = 1e-3;
};

struct EvalSection {
    std::vector<int> lookbacks;
    std::vector<int> horizons;
    std::vector<std::uint64_t> seeds{2020, 2021, 2022, 2023, 2024};
    std::vector<std::string> variants{"full"};
};

/// The whole resolved configuration of one pipeline run. Sections mirror the
/// JSON config file; every field has a default except data.path.
struct RunConfig {
    DataSection data;
    SplitSpec split;
    harness::PsrPolicy psr;
    WindowSection window;
    nn::ModelConfig model; // m, n_points, d_pred are derived at run time
    train::TrainConfig train;
    BaselineSection baselines;
    EvalSection eval;
    std::string output;

    /// Cross-field checks; raises ConfigInvalid naming the offending field.
    void validate() const;
};

/// Parses a JSON config file. Unknown keys and wrong types are hard errors
/// naming the field path.
RunConfig load_run_config(const std::string& path);

/// Applies a JSON config text (same strictness) on top of `base`.
void apply_config_json(RunConfig& base, const std::string& text, const std::string& origin);

std::string run_config_to_json(const RunConfig& cfg);

void save_run_config(const RunConfig& cfg, const std::string& path);

} // namespace galien::config
