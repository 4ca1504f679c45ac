#include "galien/chaos.hpp"
#include "galien/embedding.hpp"
#include "galien/errors.hpp"
#include "galien/evaluation.hpp"
#include "galien/harness.hpp"
#include "galien/interpret.hpp"
#include "galien/nnet.hpp"
#include "galien/series.hpp"
#include "galien/synth.hpp"
#include "galien/training.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace py = pybind11;

namespace {

galien::ChaosSource source_from_name(const std::string& name) {
    if (name == "lorenz_x") return galien::ChaosSource::lorenz_x;
    if (name == "mackey_glass") return galien::ChaosSource::mackey_glass;
    galien::raise(galien::Errc::config_invalid,
                  "chaos source must be 'lorenz_x' or 'mackey_glass'");
}

galien::nn::Variant variant_from_string(const std::string& name) {
    if (name == "full") return galien::nn::Variant::full;
    if (name == "no_local") return galien::nn::Variant::no_local;
    galien::raise(galien::Errc::config_invalid, "variant must be 'full' or 'no_local'");
}

/// A trained model bundled with everything needed to forecast raw values:
/// normalization statistics and the embedding parameters.
struct Forecaster {
    galien::nn::ModelWeights weights;
    galien::NormStats norm;
    galien::PsrParams psr;
    int lookback = 0;
    int horizon = 0;
    std::vector<std::pair<int, double>> history; // (epoch, val_loss)

    Eigen::VectorXd predict(const Eigen::VectorXd& window) const {
        if (window.size() != lookback) {
            galien::raise(galien::Errc::length_mismatch,
                          "window length " + std::to_string(window.size()) +
                              " differs from the look-back " + std::to_string(lookback));
        }
        std::vector<double> raw(window.data(), window.data() + window.size());
        std::vector<double> normed = galien::apply_norm(raw, norm);
        galien::TrajectoryImage image = galien::trajectory_matrix(normed, psr);
        Eigen::VectorXd out = galien::nn::forward(weights, image);
        std::vector<double> flat(out.data(), out.data() + out.size());
        std::vector<double> denormed = galien::invert_norm(flat, norm);
        return Eigen::Map<Eigen::VectorXd>(denormed.data(), static_cast<long>(denormed.size()));
    }
};

Forecaster train_forecaster(const std::vector<double>& series, int lookback, int horizon,
                            int d_model, int d_ff, int e_layers, int n_heads, int epochs,
                            int batch_size, double learning_rate, std::uint64_t seed,
                            const std::string& variant, int tau, int m, int train_stride) {
    galien::TimeSeries ts;
    ts.values = series;
    galien::validate(ts);
    galien::SplitResult parts = galien::split(ts, galien::SplitSpec{});
    galien::NormStats norm = galien::fit_norm(parts.train.values);
    std::vector<double> train_n = galien::apply_norm(parts.train.values, norm);
    std::vector<double> val_n = galien::apply_norm(parts.val.values, norm);

    galien::harness::PsrPolicy policy;
    if (tau > 0 && m > 0) {
        policy.auto_estimate = false;
        policy.tau = tau;
        policy.m = m;
    }
    galien::PsrParams psr = galien::harness::estimate_psr(train_n, lookback, policy);

    galien::nn::ModelConfig mc;
    mc.d_model = d_model;
    mc.d_ff = d_ff;
    mc.e_layers = e_layers;
    mc.n_heads = n_heads;
    mc.variant = variant_from_string(variant);
    mc.m = psr.m;
    mc.n_points = lookback - (psr.m - 1) * psr.tau;
    mc.d_pred = horizon;
    mc.validate();

    std::vector<galien::WindowPair> train_pairs =
        galien::build_windows(train_n, lookback, horizon, psr, train_stride);
    std::vector<galien::WindowPair> val_pairs =
        galien::build_windows(val_n, lookback, horizon, psr, 1);

    galien::train::TrainConfig tc;
    tc.max_epochs = epochs;
    tc.batch_size = batch_size;
    tc.learning_rate = learning_rate;
    tc.seed = seed;
    galien::train::TrainResult res = galien::train::train(train_pairs, val_pairs, mc, tc);

    Forecaster f;
    f.weights = std::move(res.weights);
    f.norm = norm;
    f.psr = psr;
    f.lookback = lookback;
    f.horizon = horizon;
    for (const auto& e : res.history.epochs) f.history.emplace_back(e.epoch, e.val_loss);
    return f;
}

} // namespace

PYBIND11_MODULE(_galien, mod) {
    mod.doc() = "chaos-aware load forecasting: diagnostics, embedding, and models";

    py::register_exception<galien::Error>(mod, "GalienError");

    mod.def(
        "generate",
        [](std::size_t length, double base, double daily, double weekly, double chaos,
           double noise_std, std::uint64_t seed, const std::string& source) {
            galien::SynthSpec spec;
            spec.length = length;
            spec.base = base;
            spec.daily_amp = daily;
            spec.weekly_amp = weekly;
            spec.chaos_amp = chaos;
            spec.noise_std = noise_std;
            spec.seed = seed;
            spec.chaos_source = source_from_name(source);
            return galien::generate(spec).values;
        },
        py::arg("length") = 10000, py::arg("base") = 1000.0, py::arg("daily") = 300.0,
        py::arg("weekly") = 100.0, py::arg("chaos") = 120.0, py::arg("noise_std") = 10.0,
        py::arg("seed") = 42, py::arg("source") = "lorenz_x",
        "Synthetic load-like series: seasonal sinusoids plus a chaotic term.");

    mod.def(
        "load_series",
        [](const std::string& path, const std::string& column, bool has_header,
           const std::string& delimiter, bool interpolate) {
            galien::CsvOptions opts;
            opts.value_column = column;
            opts.has_header = has_header;
            if (delimiter.size() != 1) {
                galien::raise(galien::Errc::config_invalid,
                              "delimiter must be a single character");
            }
            opts.delimiter = delimiter[0];
            opts.missing = interpolate ? galien::MissingPolicy::linear_interpolate
                                       : galien::MissingPolicy::error;
            return galien::load_csv(path, opts).values;
        },
        py::arg("path"), py::arg("column") = "0", py::arg("has_header") = false,
        py::arg("delimiter") = ",", py::arg("interpolate") = false,
        "One value column from a delimited text file.");

    mod.def(
        "mutual_information",
        [](const std::vector<double>& x, const std::vector<double>& y, int bins) {
            return galien::mutual_information(x, y, bins);
        },
        py::arg("x"), py::arg("y"), py::arg("bins") = 64,
        "Histogram mutual information in nats.");

    mod.def(
        "mi_profile",
        [](const std::vector<double>& ts, int tau_max, int bins) {
            galien::MiProfile p = galien::mi_profile(ts, tau_max, bins);
            return py::make_tuple(p.taus, p.mi);
        },
        py::arg("series"), py::arg("tau_max"), py::arg("bins") = 64,
        "Mutual information against lag: (lags, values).");

    mod.def(
        "estimate_delay",
        [](const std::vector<double>& ts, int tau_max, int bins, const std::string& rule) {
            galien::MiProfile p = galien::mi_profile(ts, tau_max, bins);
            galien::DelayRule r;
            if (rule == "global_min") {
                r = galien::DelayRule::global_min;
            } else if (rule == "first_local_min") {
                r = galien::DelayRule::first_local_min;
            } else {
                galien::raise(galien::Errc::config_invalid,
                              "rule must be 'global_min' or 'first_local_min'");
            }
            return galien::estimate_delay(p, r);
        },
        py::arg("series"), py::arg("tau_max"), py::arg("bins") = 64,
        py::arg("rule") = "global_min", "Embedding delay from the mutual-information profile.");

    mod.def(
        "estimate_dim",
        [](const std::vector<double>& ts, int tau, int m_max, double epsilon,
           double threshold) {
            galien::DimEstimate d = galien::estimate_dim(ts, tau, m_max, epsilon, threshold);
            return py::make_tuple(d.m, d.converged, d.profile.fraction);
        },
        py::arg("series"), py::arg("tau"), py::arg("m_max") = 10, py::arg("epsilon") = 100.0,
        py::arg("threshold") = 0.05,
        "Embedding dimension by false nearest neighbors: (m, converged, fractions).");

    mod.def(
        "wolf_lle",
        [](const std::vector<double>& ts, int tau, int m) {
            galien::WolfParams wp = galien::WolfParams::defaults_for(ts, tau);
            return galien::wolf_lle(ts, {tau, m}, wp);
        },
        py::arg("series"), py::arg("tau"), py::arg("m"),
        "Largest Lyapunov exponent in nats per sample step.");

    mod.def(
        "trajectory_matrix",
        [](const std::vector<double>& window, int tau, int m) {
            return galien::trajectory_matrix(window, {tau, m}).data;
        },
        py::arg("window"), py::arg("tau"), py::arg("m"),
        "Delay-coordinate image: m rows of N = len - (m - 1) * tau phase points.");

    mod.def(
        "patch_matrix",
        [](const std::vector<double>& window, int patch_len, int stride) {
            return galien::patch_matrix(window, patch_len, stride).data;
        },
        py::arg("window"), py::arg("patch_len"), py::arg("stride"),
        "Fixed-length, fixed-stride subseries as rows.");

    mod.def(
        "equivalence_params",
        [](int window_len, int tau, int m) {
            galien::EquivalenceParams eq = galien::equivalence_params(window_len, {tau, m});
            return py::make_tuple(eq.patch_len, eq.stride);
        },
        py::arg("window_len"), py::arg("tau"), py::arg("m"),
        "Patch parameters under which patches equal the delay embedding.");

    mod.def(
        "mae",
        [](const Eigen::VectorXd& truth, const Eigen::VectorXd& pred) {
            return galien::eval::mae(truth, pred);
        },
        py::arg("truth"), py::arg("pred"), "Mean absolute error.");

    mod.def(
        "mape",
        [](const Eigen::VectorXd& truth, const Eigen::VectorXd& pred) {
            return galien::eval::mape(truth, pred);
        },
        py::arg("truth"), py::arg("pred"), "Mean absolute percentage error, as a fraction.");

    py::class_<Forecaster>(mod, "Forecaster",
                           "Trained model plus the statistics needed to forecast raw values.")
        .def("predict", &Forecaster::predict, py::arg("window"),
             "Forecast `horizon` steps from one look-back window of raw values.")
        .def_readonly("lookback", &Forecaster::lookback)
        .def_readonly("horizon", &Forecaster::horizon)
        .def_readonly("history", &Forecaster::history)
        .def_property_readonly("tau", [](const Forecaster& f) { return f.psr.tau; })
        .def_property_readonly("m", [](const Forecaster& f) { return f.psr.m; });

    mod.def("train_forecaster", &train_forecaster, py::arg("series"), py::arg("lookback") = 192,
            py::arg("horizon") = 96, py::arg("d_model") = 64, py::arg("d_ff") = 256,
            py::arg("e_layers") = 2, py::arg("n_heads") = 4, py::arg("epochs") = 10,
            py::arg("batch_size") = 32, py::arg("learning_rate") = 1e-4,
            py::arg("seed") = 2020, py::arg("variant") = "full", py::arg("tau") = 0,
            py::arg("m") = 0, py::arg("train_stride") = 1,
            "Split, normalize, embed, and train on a raw series; tau/m of 0 estimates both.");
}
