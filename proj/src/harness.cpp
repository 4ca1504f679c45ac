#include "galien/harness.hpp"

#include "galien/chaos.hpp"
#include "galien/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <utility>

namespace galien::harness {

namespace {

std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return std::string(buf);
}

nlohmann::json baselines_json(const eval::EvalReport& rep) {
    nlohmann::json b = nlohmann::json::object();
    for (const auto& [name, scores] : rep.baselines) {
        b[name] = {{"mae", scores.mae}, {"mape", scores.mape}};
    }
    return b;
}

} // namespace

PsrParams estimate_psr(std::span<const double> normalized, int lookback,
                       const PsrPolicy& policy) {
    if (lookback < 3) raise(Errc::config_invalid, "lookback must be >= 3");
    if (!policy.auto_estimate) {
        if (policy.tau < 1) raise(Errc::config_invalid, "psr tau must be >= 1");
        if (policy.m < 1) raise(Errc::config_invalid, "psr m must be >= 1");
        if ((policy.m - 1) * policy.tau > lookback - 1) {
            raise(Errc::config_invalid,
                  "psr (m - 1) * tau must leave at least one phase point in the window");
        }
        return {policy.tau, policy.m};
    }
    auto half = static_cast<int>(normalized.size() / 2) - 1;
    int tau_max = std::max(1, std::min({policy.tau_cap, lookback / 4, half}));
    MiProfile profile = mi_profile(normalized, tau_max);
    int tau = estimate_delay(profile, DelayRule::first_local_min);
    DimEstimate dim = estimate_dim(normalized, tau, policy.m_cap);
    int m = dim.m;
    if ((m - 1) * tau > lookback - 2) m = std::max(1, 1 + (lookback - 2) / tau);
    return {tau, m};
}

std::vector<eval::EvalReport> run_experiment(const ExperimentSetup& setup,
                                             const ExperimentGrid& grid) {
    if (grid.lookbacks.empty() || grid.horizons.empty() || grid.seeds.empty() ||
        grid.variants.empty()) {
        raise(Errc::config_invalid, "experiment grid has an empty axis");
    }
    if (setup.train_stride < 1) raise(Errc::config_invalid, "train_stride must be >= 1");
    setup.train_cfg.validate();

    SplitResult sp = split(setup.series, setup.split);
    NormStats norm = fit_norm(sp.train.values);
    std::vector<double> train_n = apply_norm(sp.train.values, norm);
    std::vector<double> val_n = apply_norm(sp.val.values, norm);
    std::vector<double> test_n = apply_norm(sp.test.values, norm);

    std::vector<eval::EvalReport> reports;
    for (int lookback : grid.lookbacks) {
        PsrParams params = estimate_psr(train_n, lookback, setup.psr);
        for (int horizon : grid.horizons) {
            auto train_pairs =
                build_windows(train_n, lookback, horizon, params, setup.train_stride);
            auto val_pairs = build_windows(val_n, lookback, horizon, params);
            auto test_pairs = build_windows(test_n, lookback, horizon, params);
            eval::LinearForecaster linear =
                eval::LinearForecaster::fit(train_pairs, setup.ridge_lambda);

            nn::ModelConfig config = setup.model;
            config.m = params.m;
            config.n_points = lookback - (params.m - 1) * params.tau;
            config.d_pred = horizon;

            for (nn::Variant variant : grid.variants) {
                config.variant = variant;
                nlohmann::json cell{{"dataset", setup.dataset_name},
                                    {"lookback", lookback},
                                    {"horizon", horizon},
                                    {"variant", nn::variant_name(variant)},
                                    {"tau", params.tau},
                                    {"m", params.m},
                                    {"d_model", config.d_model},
                                    {"d_ff", config.d_ff},
                                    {"e_layers", config.e_layers},
                                    {"n_heads", config.n_heads},
                                    {"paper_exact_scale", config.paper_exact_scale},
                                    {"paper_exact_eq12", config.paper_exact_eq12},
                                    {"batch_size", setup.train_cfg.batch_size},
                                    {"max_epochs", setup.train_cfg.max_epochs},
                                    {"learning_rate", setup.train_cfg.learning_rate},
                                    {"patience", setup.train_cfg.patience},
                                    {"train_stride", setup.train_stride},
                                    {"split_train", setup.split.train},
                                    {"split_val", setup.split.val}};
                std::string fingerprint = eval::fnv1a_hex(cell.dump());

                std::size_t cell_begin = reports.size();
                for (std::uint64_t seed : grid.seeds) {
                    auto t0 = std::chrono::steady_clock::now();
                    train::TrainConfig cfg = setup.train_cfg;
                    cfg.seed = seed;
                    train::TrainResult tr = train::train(train_pairs, val_pairs, config, cfg);
                    eval::EvalOptions opts;
                    opts.batch_size = cfg.batch_size;
                    opts.seasonal_period = setup.seasonal_period;
                    opts.linear = &linear;
                    opts.dataset = setup.dataset_name;
                    opts.fingerprint = fingerprint;
                    opts.seed = seed;
                    eval::EvalReport rep =
                        eval::evaluate_model(tr.weights, test_pairs, norm, opts);
                    rep.wall_seconds = std::chrono::duration<double>(
                                           std::chrono::steady_clock::now() - t0)
                                           .count();
                    reports.push_back(std::move(rep));
                }
                std::size_t best = cell_begin;
                for (std::size_t i = cell_begin + 1; i < reports.size(); ++i) {
                    if (reports[i].mae < reports[best].mae) best = i;
                }
                reports[best].best_of_seeds = true;
            }
        }
    }

    if (!setup.out_dir.empty()) {
        std::filesystem::create_directories(setup.out_dir);
        write_results_jsonl(setup.out_dir + "/results.jsonl", reports);
        write_results_csv(setup.out_dir + "/results.csv", reports, grid.variants);
    }
    return reports;
}

std::string report_to_json_line(const eval::EvalReport& rep) {
    nlohmann::json j{{"dataset", rep.dataset},
                     {"fingerprint", rep.fingerprint},
                     {"variant", rep.variant},
                     {"lookback", rep.lookback},
                     {"horizon", rep.horizon},
                     {"seed", rep.seed},
                     {"mae", rep.mae},
                     {"mape", rep.mape},
                     {"per_step_mae", rep.per_step_mae},
                     {"baselines", baselines_json(rep)},
                     {"best_of_seeds", rep.best_of_seeds},
                     {"wall_seconds", rep.wall_seconds}};
    return j.dump();
}

void write_results_jsonl(const std::string& path,
                         const std::vector<eval::EvalReport>& reports) {
    std::ofstream out(path);
    if (!out) raise(Errc::io_error, "cannot open " + path + " for writing");
    for (const auto& rep : reports) out << report_to_json_line(rep) << "\n";
    if (!out) raise(Errc::io_error, "write failed for " + path);
}

void write_results_csv(const std::string& path, const std::vector<eval::EvalReport>& reports,
                       const std::vector<nn::Variant>& variants) {
    std::ofstream out(path);
    if (!out) raise(Errc::io_error, "cannot open " + path + " for writing");

    out << "lookback,horizon";
    for (nn::Variant v : variants) {
        std::string n = nn::variant_name(v);
        out << "," << n << "_mae," << n << "_mape," << n << "_mae_mean," << n << "_mae_std";
    }
    out << ",persistence_mae,persistence_mape,seasonal_naive_mae,seasonal_naive_mape,"
           "linear_mae,linear_mape\n";

    std::vector<std::pair<int, int>> cells;
    for (const auto& rep : reports) {
        std::pair<int, int> key{rep.lookback, rep.horizon};
        if (std::find(cells.begin(), cells.end(), key) == cells.end()) cells.push_back(key);
    }
    for (auto [lookback, horizon] : cells) {
        out << lookback << "," << horizon;
        const eval::EvalReport* first_best = nullptr;
        for (nn::Variant v : variants) {
            std::string name = nn::variant_name(v);
            const eval::EvalReport* best = nullptr;
            double sum = 0.0, sumsq = 0.0;
            int count = 0;
            for (const auto& rep : reports) {
                if (rep.lookback != lookback || rep.horizon != horizon ||
                    rep.variant != name) {
                    continue;
                }
                sum += rep.mae;
                sumsq += rep.mae * rep.mae;
                ++count;
                if (rep.best_of_seeds) best = &rep;
            }
            if (best == nullptr || count == 0) {
                out << ",,,,";
                continue;
            }
            if (first_best == nullptr) first_best = best;
            double mean = sum / count;
            double var = std::max(0.0, sumsq / count - mean * mean);
            out << "," << fmt6(best->mae) << "," << fmt6(best->mape) << "," << fmt6(mean)
                << "," << fmt6(std::sqrt(var));
        }
        for (const char* name : {"persistence", "seasonal_naive", "linear"}) {
            if (first_best != nullptr) {
                auto it = first_best->baselines.find(name);
                if (it != first_best->baselines.end()) {
                    out << "," << fmt6(it->second.mae) << "," << fmt6(it->second.mape);
                    continue;
                }
            }
            out << ",,";
        }
        out << "\n";
    }
    if (!out) raise(Errc::io_error, "write failed for " + path);
}

} // namespace galien::harness
