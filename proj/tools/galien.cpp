#include "galien/chaos.hpp"
#include "galien/config.hpp"
#include "galien/embedding.hpp"
#include "galien/errors.hpp"
#include "galien/evaluation.hpp"
#include "galien/harness.hpp"
#include "galien/interpret.hpp"
#include "galien/nnet.hpp"
#include "galien/series.hpp"
#include "galien/synth.hpp"
#include "galien/training.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

/// Exclusive marker file guarding an output directory against a second
/// concurrent writer; removed when the command finishes.
class DirLock {
public:
    explicit DirLock(const fs::path& dir) : path_(dir / ".lock") {
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) {
            galien::raise(galien::Errc::io_error, "cannot create directory " + dir.string());
        }
        std::FILE* f = std::fopen(path_.string().c_str(), "wx");
        if (f == nullptr) {
            galien::raise(galien::Errc::io_error,
                          dir.string() + " is locked by another writer (remove " +
                              path_.string() + " if that process is gone)");
        }
        std::fclose(f);
    }
    DirLock(const DirLock&) = delete;
    DirLock& operator=(const DirLock&) = delete;
    ~DirLock() {
        std::error_code ec;
        fs::remove(path_, ec);
    }

private:
    fs::path path_;
};

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return std::string(buf);
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) galien::raise(galien::Errc::io_error, "cannot open " + path.string());
    out << text;
    if (!out) galien::raise(galien::Errc::io_error, "write failed for " + path.string());
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path);
    if (!in) galien::raise(galien::Errc::file_not_found, path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

json parse_json_file(const fs::path& path) {
    json j = json::parse(read_text(path), nullptr, false);
    if (j.is_discarded()) {
        galien::raise(galien::Errc::unparseable_value, path.string() + " is not valid JSON");
    }
    return j;
}

galien::TimeSeries load_series(const galien::config::DataSection& data) {
    if (data.path.empty()) {
        galien::raise(galien::Errc::config_invalid, "config field data.path: is required");
    }
    galien::TimeSeries ts = galien::load_csv(data.path, data.csv_options());
    galien::validate(ts);
    return ts;
}

std::string dataset_name(const galien::config::DataSection& data) {
    if (!data.name.empty()) return data.name;
    return fs::path(data.path).stem().string();
}

void add_data_flags(CLI::App* cmd, galien::config::DataSection& d) {
    cmd->add_option("--data", d.path, "delimited text file with the series");
    cmd->add_option("--column", d.column, "value column: header name or 0-based index");
    cmd->add_flag("--has-header", d.has_header, "treat the first row as a header");
    cmd->add_option("--delimiter", d.delimiter, "field delimiter (one character)");
    cmd->add_option("--missing", d.missing, "missing-cell policy")
        ->check(CLI::IsMember({"error", "interpolate"}));
    cmd->add_option("--step-minutes", d.step_minutes, "sampling interval in minutes");
    cmd->add_option("--name", d.name, "dataset name used in reports");
}

struct RunDir {
    galien::config::RunConfig cfg;
    galien::nn::ModelWeights weights;
    galien::NormStats norm;
    galien::PsrParams psr;
    galien::TimeSeries test_raw;
    std::vector<galien::WindowPair> test_pairs;
    std::optional<galien::eval::LinearForecaster> linear;
    std::string fingerprint;
};

RunDir load_run_dir(const fs::path& dir) {
    RunDir rd;
    std::string cfg_text = read_text(dir / "config.json");
    galien::config::apply_config_json(rd.cfg, cfg_text, (dir / "config.json").string());
    rd.fingerprint = galien::eval::fnv1a_hex(cfg_text);
    rd.weights = galien::nn::load_weights((dir / "weights.bin").string());

    json ns = parse_json_file(dir / "norm_stats.json");
    rd.norm.mean = ns.at("mean").get<double>();
    rd.norm.stddev = ns.at("stddev").get<double>();

    json ps = parse_json_file(dir / "psr.json");
    rd.psr.tau = ps.at("tau").get<int>();
    rd.psr.m = ps.at("m").get<int>();

    rd.test_raw = galien::read_split_csv((dir / "splits" / "test.csv").string());
    std::vector<double> test_n = galien::apply_norm(rd.test_raw.values, rd.norm);
    rd.test_pairs = galien::build_windows(test_n, rd.cfg.window.lookback,
                                          rd.cfg.window.horizon, rd.psr);

    fs::path lin = dir / "baseline_linear.bin";
    if (fs::exists(lin)) {
        rd.linear = galien::eval::LinearForecaster::load(lin.string());
    }
    return rd;
}

galien::harness::ExperimentSetup setup_from_config(const galien::config::RunConfig& cfg,
                                                   galien::TimeSeries series,
                                                   const std::string& out_dir) {
    galien::harness::ExperimentSetup setup;
    setup.series = std::move(series);
    setup.dataset_name = dataset_name(cfg.data);
    setup.model = cfg.model;
    setup.train_cfg = cfg.train;
    setup.split = cfg.split;
    setup.psr = cfg.psr;
    setup.seasonal_period = cfg.baselines.seasonal_period;
    setup.ridge_lambda = cfg.baselines.ridge_lambda;
    setup.train_stride = cfg.window.train_stride;
    setup.out_dir = out_dir;
    return setup;
}

void print_report(const galien::eval::EvalReport& rep, bool verbose) {
    std::cout << "dataset " << rep.dataset << "  L=" << rep.lookback << "  w=" << rep.horizon
              << "  variant=" << rep.variant << "  seed=" << rep.seed << "\n";
    std::cout << "  MAE  " << fmt("%.3f", rep.mae) << "\n";
    std::cout << "  MAPE " << fmt("%.4f", rep.mape) << "\n";
    for (const auto& [name, scores] : rep.baselines) {
        std::cout << "  baseline " << name << ": MAE " << fmt("%.3f", scores.mae) << ", MAPE "
                  << fmt("%.4f", scores.mape) << "\n";
    }
    if (verbose) {
        std::cout << "  per-step MAE:";
        for (double v : rep.per_step_mae) std::cout << " " << fmt("%.3f", v);
        std::cout << "\n";
    }
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
    galien::SynthSpec spec;
    std::string source = "lorenz-x";
    std::string out;
};

void cmd_synth(const SynthArgs& a) {
    galien::SynthSpec spec = a.spec;
    if (a.source == "lorenz-x") {
        spec.chaos_source = galien::ChaosSource::lorenz_x;
    } else if (a.source == "mackey-glass") {
        spec.chaos_source = galien::ChaosSource::mackey_glass;
    } else {
        galien::raise(galien::Errc::config_invalid,
                      "--source must be lorenz-x or mackey-glass");
    }
    galien::TimeSeries ts = galien::generate(spec);
    std::ofstream out(a.out);
    if (!out) galien::raise(galien::Errc::io_error, "cannot open " + a.out);
    char buf[40];
    for (double v : ts.values) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        out << buf << "\n";
    }
    if (!out) galien::raise(galien::Errc::io_error, "write failed for " + a.out);
    std::cout << "wrote " << ts.values.size() << " samples to " << a.out << "\n";
}

// -------------------------------------------------------------- analyze

struct AnalyzeArgs {
    galien::config::DataSection data;
    int tau_max = 0; // 0 = min(200, n / 4)
    int bins = 64;
    int m_max = 10;
    double epsilon = 100.0;
    double threshold = 0.05;
    int evolve = 0; // 0 = default
    bool no_lle = false;
    std::string delay_rule = "global-min";
    std::string out;
};

void cmd_analyze(const AnalyzeArgs& a, bool verbose) {
    galien::TimeSeries ts = load_series(a.data);
    auto n = static_cast<int>(ts.values.size());
    int tau_max = a.tau_max > 0 ? a.tau_max : std::min(200, n / 4);
    tau_max = std::max(1, std::min(tau_max, n / 2 - 1));

    galien::MiProfile profile = galien::mi_profile(ts.values, tau_max, a.bins);
    int tau_global = galien::estimate_delay(profile, galien::DelayRule::global_min);
    int tau_local = galien::estimate_delay(profile, galien::DelayRule::first_local_min);
    int tau = a.delay_rule == "first-local-min" ? tau_local : tau_global;
    galien::DimEstimate dim =
        galien::estimate_dim(ts.values, tau, a.m_max, a.epsilon, a.threshold);

    std::optional<double> lle;
    if (!a.no_lle) {
        galien::WolfParams wp = galien::WolfParams::defaults_for(ts.values, tau);
        if (a.evolve > 0) wp.evolve_steps = a.evolve;
        lle = galien::wolf_lle(ts.values, {tau, dim.m}, wp);
    }

    std::cout << "series " << ts.name << ": " << n << " samples, step "
              << fmt("%g", ts.step_minutes) << " min\n";
    std::cout << "delay tau: " << tau << " (" << a.delay_rule
              << " of mutual information over lags 1.." << tau_max << "; global min "
              << tau_global << ", first local min " << tau_local << ")\n";
    double last_fraction = dim.profile.fraction.empty() ? 1.0 : dim.profile.fraction.back();
    std::cout << "embedding dimension m: " << dim.m << " (false-neighbor fraction "
              << fmt("%.4f", last_fraction) << ", "
              << (dim.converged ? "converged" : "not converged") << ")\n";
    if (lle) {
        double per_hour = *lle * 60.0 / ts.step_minutes;
        std::cout << "largest lyapunov exponent: " << fmt("%.6f", *lle) << " nats/step ("
                  << fmt("%.4f", per_hour) << " nats/hour; positive means divergent"
                  << " neighbours)\n";
    }
    if (verbose) {
        std::cout << "mutual information per lag:";
        for (std::size_t i = 0; i < profile.taus.size(); ++i) {
            std::cout << " " << profile.taus[i] << ":" << fmt("%.4f", profile.mi[i]);
        }
        std::cout << "\n";
    }

    if (!a.out.empty()) {
        json j{{"series", ts.name},
               {"length", n},
               {"step_minutes", ts.step_minutes},
               {"bins", a.bins},
               {"tau_max", tau_max},
               {"delay_rule", a.delay_rule},
               {"tau", tau},
               {"tau_global_min", tau_global},
               {"tau_first_local_min", tau_local},
               {"mi", profile.mi},
               {"fnn_dims", dim.profile.dims},
               {"fnn_fractions", dim.profile.fraction},
               {"m", dim.m},
               {"fnn_converged", dim.converged},
               {"lle", lle ? json(*lle) : json(nullptr)},
               {"lle_per_hour", lle ? json(*lle * 60.0 / ts.step_minutes) : json(nullptr)}};
        write_text(a.out, j.dump(2) + "\n");
        std::cout << "report written to " << a.out << "\n";
    }
}

// ---------------------------------------------------------------- embed

struct EmbedArgs {
    galien::config::DataSection data;
    int tau = 0;
    int m = 0;
    std::size_t start = 0;
    int lookback = 0; // 0 = rest of the series
    std::string out;
};

void cmd_embed(const EmbedArgs& a) {
    galien::TimeSeries ts = load_series(a.data);
    if (a.start >= ts.values.size()) {
        galien::raise(galien::Errc::config_invalid, "--start is past the end of the series");
    }
    auto avail = static_cast<int>(ts.values.size() - a.start);
    int lookback = a.lookback > 0 ? a.lookback : avail;
    if (lookback > avail) {
        galien::raise(galien::Errc::window_too_short,
                      "window extends past the end of the series");
    }
    std::span<const double> window(ts.values.data() + a.start,
                                   static_cast<std::size_t>(lookback));
    galien::TrajectoryImage image = galien::trajectory_matrix(window, {a.tau, a.m});

    fs::path dir(a.out);
    DirLock lock(dir);
    galien::interpret::export_csv(image.data, (dir / "image.csv").string());
    galien::interpret::export_pgm(image.data, (dir / "image.pgm").string());
    json meta{{"tau", a.tau},
              {"m", a.m},
              {"n_points", image.n_points()},
              {"window_start", a.start},
              {"lookback", lookback},
              {"series", ts.name}};
    write_text(dir / "meta.json", meta.dump(2) + "\n");
    std::cout << "embedded " << image.data.rows() << " x " << image.data.cols()
              << " trajectory image into " << a.out << "\n";
}

// ---------------------------------------------------------------- train

void write_history_csv(const fs::path& path, const galien::train::TrainHistory& hist) {
    std::ostringstream out;
    out << "epoch,train_loss,val_loss,seconds\n";
    for (const auto& e : hist.epochs) {
        out << e.epoch << "," << fmt("%.17g", e.train_loss) << "," << fmt("%.17g", e.val_loss)
            << "," << fmt("%.3f", e.seconds) << "\n";
    }
    write_text(path, out.str());
}

void cmd_train(const galien::config::RunConfig& cfg_in, const std::string& out_dir,
               bool verbose) {
    galien::config::RunConfig cfg = cfg_in;
    cfg.output = out_dir;
    cfg.validate();
    if (!fs::exists(cfg.data.path)) {
        galien::raise(galien::Errc::config_invalid,
                      "config field data.path: file not found: " + cfg.data.path);
    }
    galien::TimeSeries series = load_series(cfg.data);

    fs::path dir(out_dir);
    DirLock lock(dir);

    galien::SplitResult sp = galien::split(series, cfg.split);
    galien::NormStats norm = galien::fit_norm(sp.train.values);
    std::vector<double> train_n = galien::apply_norm(sp.train.values, norm);
    std::vector<double> val_n = galien::apply_norm(sp.val.values, norm);
    std::vector<double> test_n = galien::apply_norm(sp.test.values, norm);

    galien::PsrParams psr =
        galien::harness::estimate_psr(train_n, cfg.window.lookback, cfg.psr);
    int n_points = cfg.window.lookback - (psr.m - 1) * psr.tau;

    json psr_json{{"tau", psr.tau},
                  {"m", psr.m},
                  {"n_points", n_points},
                  {"auto", cfg.psr.auto_estimate},
                  {"tau_cap", cfg.psr.tau_cap},
                  {"m_cap", cfg.psr.m_cap}};
    write_text(dir / "psr.json", psr_json.dump(2) + "\n");
    galien::config::save_run_config(cfg, (dir / "config.json").string());
    json norm_json{{"mean", norm.mean}, {"stddev", norm.stddev}};
    write_text(dir / "norm_stats.json", norm_json.dump(2) + "\n");
    fs::create_directories(dir / "splits");
    galien::write_split_csv((dir / "splits" / "test.csv").string(), sp.test, sp.test_offset);

    auto train_pairs = galien::build_windows(train_n, cfg.window.lookback, cfg.window.horizon,
                                             psr, cfg.window.train_stride);
    auto val_pairs =
        galien::build_windows(val_n, cfg.window.lookback, cfg.window.horizon, psr);
    auto test_pairs =
        galien::build_windows(test_n, cfg.window.lookback, cfg.window.horizon, psr);

    galien::eval::LinearForecaster linear =
        galien::eval::LinearForecaster::fit(train_pairs, cfg.baselines.ridge_lambda);
    linear.save((dir / "baseline_linear.bin").string());

    galien::nn::ModelConfig model = cfg.model;
    model.m = psr.m;
    model.n_points = n_points;
    model.d_pred = cfg.window.horizon;

    if (verbose) {
        std::cout << "tau=" << psr.tau << " m=" << psr.m << " n_points=" << n_points
                  << " params=" << galien::nn::count_params(model) << "\n"
                  << "pairs: train=" << train_pairs.size() << " val=" << val_pairs.size()
                  << " test=" << test_pairs.size() << "\n";
    }

    auto t0 = std::chrono::steady_clock::now();
    galien::train::TrainResult result =
        galien::train::train(train_pairs, val_pairs, model, cfg.train);
    double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    galien::nn::save_weights(result.weights, (dir / "weights.bin").string());
    write_history_csv(dir / "history.csv", result.history);
    json summary{{"seed", cfg.train.seed},
                 {"best_epoch", result.history.best_epoch},
                 {"best_val_loss", result.history.best_val_loss},
                 {"stopped_early", result.history.stopped_early},
                 {"epochs_run", result.history.epochs.size()},
                 {"param_count", galien::nn::count_params(model)},
                 {"train_pairs", train_pairs.size()},
                 {"val_pairs", val_pairs.size()},
                 {"test_pairs", test_pairs.size()},
                 {"tau", psr.tau},
                 {"m", psr.m},
                 {"n_points", n_points},
                 {"wall_seconds", wall}};
    write_text(dir / "train_summary.json", summary.dump(2) + "\n");

    std::cout << "trained seed " << cfg.train.seed << ": best epoch "
              << result.history.best_epoch << ", validation MSE "
              << fmt("%.6g", result.history.best_val_loss)
              << (result.history.stopped_early ? " (stopped early)" : "") << "\n";
    std::cout << "run directory: " << out_dir << "\n";
}

// ------------------------------------------------------------- evaluate

void cmd_evaluate_run(const std::string& run, const std::string& out, bool verbose) {
    fs::path run_dir(run);
    RunDir rd = load_run_dir(run_dir);
    galien::eval::EvalOptions opts;
    opts.batch_size = rd.cfg.train.batch_size;
    opts.seasonal_period = rd.cfg.baselines.seasonal_period;
    opts.linear = rd.linear ? &*rd.linear : nullptr;
    opts.dataset = dataset_name(rd.cfg.data);
    opts.fingerprint = rd.fingerprint;
    opts.seed = rd.cfg.train.seed;
    galien::eval::EvalReport rep =
        galien::eval::evaluate_model(rd.weights, rd.test_pairs, rd.norm, opts);
    rep.best_of_seeds = true;

    fs::path out_dir = out.empty() ? run_dir : fs::path(out);
    fs::create_directories(out_dir);
    galien::harness::write_results_jsonl((out_dir / "results.jsonl").string(), {rep});
    galien::harness::write_results_csv((out_dir / "results.csv").string(), {rep},
                                       {rd.weights.config.variant});
    print_report(rep, verbose);
    std::cout << "results written to " << (out_dir / "results.jsonl").string() << "\n";
}

void cmd_evaluate_grid(const galien::config::RunConfig& cfg, const std::string& out,
                       bool verbose) {
    cfg.validate();
    std::string out_dir = !out.empty() ? out : cfg.output;
    if (out_dir.empty()) {
        galien::raise(galien::Errc::config_invalid,
                      "an output directory is required (--out or config output)");
    }
    galien::TimeSeries series = load_series(cfg.data);

    galien::harness::ExperimentGrid grid;
    grid.lookbacks = cfg.eval.lookbacks.empty() ? std::vector<int>{cfg.window.lookback}
                                                : cfg.eval.lookbacks;
    grid.horizons =
        cfg.eval.horizons.empty() ? std::vector<int>{cfg.window.horizon} : cfg.eval.horizons;
    grid.seeds = cfg.eval.seeds;
    grid.variants.clear();
    for (const auto& v : cfg.eval.variants) {
        grid.variants.push_back(galien::nn::variant_from_name(v));
    }

    DirLock lock(out_dir);
    galien::config::save_run_config(cfg, (fs::path(out_dir) / "config.json").string());
    auto reports =
        galien::harness::run_experiment(setup_from_config(cfg, std::move(series), out_dir), grid);
    for (const auto& rep : reports) {
        if (rep.best_of_seeds) print_report(rep, verbose);
    }
    std::cout << reports.size() << " runs; results written to " << out_dir << "\n";
}

// -------------------------------------------------------------- explain

struct ExplainArgs {
    std::string run;
    std::size_t window = 0;
    int target_step = -1;
    bool skip_ram = false;
    std::string out;
};

void cmd_explain(const ExplainArgs& a) {
    fs::path run_dir(a.run);
    RunDir rd = load_run_dir(run_dir);
    if (a.window >= rd.test_pairs.size()) {
        galien::raise(galien::Errc::config_invalid,
                      "--window must be below " + std::to_string(rd.test_pairs.size()));
    }
    const galien::WindowPair& pair = rd.test_pairs[a.window];

    fs::path out_dir = a.out.empty() ? run_dir / "explain" : fs::path(a.out);
    DirLock lock(out_dir);

    galien::interpret::export_csv(pair.image.data, (out_dir / "image.csv").string());
    galien::interpret::export_pgm(pair.image.data, (out_dir / "image.pgm").string());

    auto records = galien::interpret::attention_maps(rd.weights, pair.image);
    for (const auto& rec : records) {
        std::string stem =
            "attention_l" + std::to_string(rec.layer) + "_h" + std::to_string(rec.head);
        galien::interpret::export_csv(rec.a, (out_dir / (stem + ".csv")).string());
        galien::interpret::export_pgm(rec.a, (out_dir / (stem + ".pgm")).string());
    }

    json meta{{"window_index", a.window},
              {"window_start", pair.window_start},
              {"target_step", a.target_step},
              {"attention_records", records.size()}};
    bool with_ram =
        !a.skip_ram && rd.weights.config.variant == galien::nn::Variant::full;
    if (with_ram) {
        galien::interpret::RamMap ram =
            galien::interpret::ram(rd.weights, pair.image, a.target_step);
        galien::interpret::export_csv(ram.map, (out_dir / "ram.csv").string());
        galien::interpret::export_pgm(ram.map, (out_dir / "ram.pgm").string());
        meta["ram_peak"] = ram.peak;
        std::cout << "activation map peak " << fmt("%.6g", ram.peak) << "\n";
    } else if (!a.skip_ram) {
        std::cout << "note: no_local variant has no local branch; skipping the activation map\n";
    }
    write_text(out_dir / "meta.json", meta.dump(2) + "\n");
    std::cout << records.size() << " attention maps"
              << (with_ram ? " and the activation map" : "") << " written to "
              << out_dir.string() << "\n";
}

// --------------------------------------------------------------- ablate

void cmd_ablate(const galien::config::RunConfig& cfg, const std::string& out, bool verbose) {
    cfg.validate();
    std::string out_dir = !out.empty() ? out : cfg.output;
    if (out_dir.empty()) {
        galien::raise(galien::Errc::config_invalid,
                      "an output directory is required (--out or config output)");
    }
    galien::TimeSeries series = load_series(cfg.data);

    galien::harness::ExperimentGrid grid;
    grid.lookbacks = {cfg.window.lookback};
    grid.horizons =
        cfg.eval.horizons.empty() ? std::vector<int>{cfg.window.horizon} : cfg.eval.horizons;
    grid.seeds = cfg.eval.seeds;
    grid.variants = {galien::nn::Variant::full, galien::nn::Variant::no_local};

    DirLock lock(out_dir);
    galien::config::save_run_config(cfg, (fs::path(out_dir) / "config.json").string());
    auto reports =
        galien::harness::run_experiment(setup_from_config(cfg, std::move(series), out_dir), grid);

    std::ostringstream table;
    table << "lookback,horizon,full_mae,no_local_mae,delta_mae,delta_pct\n";
    std::cout << "ablation (best of " << grid.seeds.size() << " seeds per cell):\n";
    for (int horizon : grid.horizons) {
        const galien::eval::EvalReport* full = nullptr;
        const galien::eval::EvalReport* ablated = nullptr;
        for (const auto& rep : reports) {
            if (rep.horizon != horizon || !rep.best_of_seeds) continue;
            if (rep.variant == "full") full = &rep;
            if (rep.variant == "no_local") ablated = &rep;
        }
        if (full == nullptr || ablated == nullptr) continue;
        double delta = ablated->mae - full->mae;
        double pct = delta / ablated->mae * 100.0;
        table << cfg.window.lookback << "," << horizon << "," << fmt("%.6f", full->mae) << ","
              << fmt("%.6f", ablated->mae) << "," << fmt("%.6f", delta) << ","
              << fmt("%.2f", pct) << "\n";
        std::cout << "  L=" << cfg.window.lookback << " w=" << horizon << ": full MAE "
                  << fmt("%.3f", full->mae) << " vs no_local " << fmt("%.3f", ablated->mae)
                  << " (local branch improves by " << fmt("%.2f", pct) << "%)\n";
        if (verbose) {
            print_report(*full, true);
            print_report(*ablated, true);
        }
    }
    write_text(fs::path(out_dir) / "ablation.csv", table.str());
    std::cout << "delta table written to " << (fs::path(out_dir) / "ablation.csv").string()
              << "\n";
}

// ------------------------------------------------------- config plumbing

struct TrainOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<int> lookback, horizon, train_stride;
    std::optional<std::string> variant;
    std::optional<int> epochs, batch_size, patience;
    std::optional<double> lr, clip_norm;
    std::optional<int> d_model, d_ff, e_layers, n_heads;
    std::optional<int> tau, m;
    std::optional<bool> auto_psr;
    std::optional<int> seasonal_period;
    std::optional<double> ridge_lambda;
    bool paper_exact_scale = false;
    bool paper_exact_eq12 = false;
};

void add_train_overrides(CLI::App* cmd, TrainOverrides& o) {
    cmd->add_option("--seed", o.seed, "training seed");
    cmd->add_option("--lookback", o.lookback, "look-back window length L");
    cmd->add_option("--horizon", o.horizon, "forecast horizon w");
    cmd->add_option("--train-stride", o.train_stride, "stride between training windows");
    cmd->add_option("--variant", o.variant, "model variant")
        ->check(CLI::IsMember({"full", "no_local"}));
    cmd->add_option("--epochs", o.epochs, "maximum training epochs");
    cmd->add_option("--batch-size", o.batch_size, "mini-batch size");
    cmd->add_option("--patience", o.patience, "early-stop patience");
    cmd->add_option("--lr", o.lr, "learning rate");
    cmd->add_option("--clip-norm", o.clip_norm, "global gradient-norm cap (0 = off)");
    cmd->add_option("--d-model", o.d_model, "encoder width");
    cmd->add_option("--d-ff", o.d_ff, "feed-forward width");
    cmd->add_option("--e-layers", o.e_layers, "encoder layers");
    cmd->add_option("--n-heads", o.n_heads, "attention heads");
    cmd->add_option("--tau", o.tau, "fixed embedding delay (disables auto)");
    cmd->add_option("--m", o.m, "fixed embedding dimension (disables auto)");
    cmd->add_flag("--auto-psr,!--no-auto-psr", o.auto_psr, "estimate tau and m from the data");
    cmd->add_option("--seasonal-period", o.seasonal_period, "seasonal-naive period");
    cmd->add_option("--ridge-lambda", o.ridge_lambda, "ridge strength of the linear baseline");
    cmd->add_flag("--paper-exact-scale", o.paper_exact_scale,
                  "scale attention logits by sqrt(d_model)");
    cmd->add_flag("--paper-exact-eq12", o.paper_exact_eq12,
                  "head output uses the layer input instead of a value projection");
}

void apply_overrides(galien::config::RunConfig& cfg, const TrainOverrides& o,
                     const galien::config::DataSection& data_flags, CLI::App* cmd) {
    if (cmd->count("--data") > 0) cfg.data.path = data_flags.path;
    if (cmd->count("--column") > 0) cfg.data.column = data_flags.column;
    if (cmd->count("--has-header") > 0) cfg.data.has_header = data_flags.has_header;
    if (cmd->count("--delimiter") > 0) cfg.data.delimiter = data_flags.delimiter;
    if (cmd->count("--missing") > 0) cfg.data.missing = data_flags.missing;
    if (cmd->count("--step-minutes") > 0) cfg.data.step_minutes = data_flags.step_minutes;
    if (cmd->count("--name") > 0) cfg.data.name = data_flags.name;

    if (o.seed) cfg.train.seed = *o.seed;
    if (o.lookback) cfg.window.lookback = *o.lookback;
    if (o.horizon) cfg.window.horizon = *o.horizon;
    if (o.train_stride) cfg.window.train_stride = *o.train_stride;
    if (o.variant) cfg.model.variant = galien::nn::variant_from_name(*o.variant);
    if (o.epochs) cfg.train.max_epochs = *o.epochs;
    if (o.batch_size) cfg.train.batch_size = *o.batch_size;
    if (o.patience) cfg.train.patience = *o.patience;
    if (o.lr) cfg.train.learning_rate = *o.lr;
    if (o.clip_norm) cfg.train.clip_norm = *o.clip_norm;
    if (o.d_model) cfg.model.d_model = *o.d_model;
    if (o.d_ff) cfg.model.d_ff = *o.d_ff;
    if (o.e_layers) cfg.model.e_layers = *o.e_layers;
    if (o.n_heads) cfg.model.n_heads = *o.n_heads;
    if (o.tau) {
        cfg.psr.tau = *o.tau;
        cfg.psr.auto_estimate = false;
    }
    if (o.m) {
        cfg.psr.m = *o.m;
        cfg.psr.auto_estimate = false;
    }
    if (o.auto_psr) cfg.psr.auto_estimate = *o.auto_psr;
    if (o.seasonal_period) cfg.baselines.seasonal_period = *o.seasonal_period;
    if (o.ridge_lambda) cfg.baselines.ridge_lambda = *o.ridge_lambda;
    if (cmd->count("--paper-exact-scale") > 0) cfg.model.paper_exact_scale = true;
    if (cmd->count("--paper-exact-eq12") > 0) cfg.model.paper_exact_eq12 = true;
}

galien::config::RunConfig resolve_config(const std::string& config_path,
                                         const TrainOverrides& o,
                                         const galien::config::DataSection& data_flags,
                                         CLI::App* cmd) {
    galien::config::RunConfig cfg;
    if (!config_path.empty()) cfg = galien::config::load_run_config(config_path);
    apply_overrides(cfg, o, data_flags, cmd);
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"chaos-aware load forecasting pipeline"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("--verbose", verbose, "chatty output");

    // synth
    SynthArgs synth_args;
    auto* synth = app.add_subcommand("synth", "generate a synthetic load-like series");
    synth->add_option("--out", synth_args.out, "output CSV path")->required();
    synth->add_option("--length", synth_args.spec.length, "number of samples");
    synth->add_option("--base", synth_args.spec.base, "base level");
    synth->add_option("--daily", synth_args.spec.daily_amp, "daily sinusoid amplitude");
    synth->add_option("--weekly", synth_args.spec.weekly_amp, "weekly sinusoid amplitude");
    synth->add_option("--chaos", synth_args.spec.chaos_amp, "chaotic component amplitude");
    synth->add_option("--source", synth_args.source, "chaotic source")
        ->check(CLI::IsMember({"lorenz-x", "mackey-glass"}));
    synth->add_option("--noise-std", synth_args.spec.noise_std, "gaussian noise level");
    synth->add_option("--seed", synth_args.spec.seed, "generator seed");
    synth->add_option("--step-minutes", synth_args.spec.step_minutes, "sampling interval");
    synth->callback([&] { cmd_synth(synth_args); });

    // analyze
    AnalyzeArgs analyze_args;
    auto* analyze = app.add_subcommand("analyze", "estimate delay, dimension, and divergence");
    add_data_flags(analyze, analyze_args.data);
    analyze->add_option("--tau-max", analyze_args.tau_max,
                        "largest delay searched (default min(200, n/4))");
    analyze->add_option("--bins", analyze_args.bins, "histogram bins per axis");
    analyze->add_option("--m-max", analyze_args.m_max, "largest dimension tried");
    analyze->add_option("--epsilon", analyze_args.epsilon, "false-neighbor ratio threshold");
    analyze->add_option("--threshold", analyze_args.threshold,
                        "acceptable false-neighbor fraction");
    analyze->add_option("--evolve", analyze_args.evolve, "divergence steps per neighbor");
    analyze->add_option("--delay-rule", analyze_args.delay_rule,
                        "which minimum of the MI profile picks tau")
        ->check(CLI::IsMember({"global-min", "first-local-min"}));
    analyze->add_flag("--no-lle", analyze_args.no_lle, "skip the Lyapunov estimate");
    analyze->add_option("--out", analyze_args.out, "write the report as JSON");
    analyze->callback([&] { cmd_analyze(analyze_args, verbose); });

    // embed
    EmbedArgs embed_args;
    auto* embed = app.add_subcommand("embed", "export one delay-embedded trajectory image");
    add_data_flags(embed, embed_args.data);
    embed->add_option("--tau", embed_args.tau, "embedding delay")->required();
    embed->add_option("--m", embed_args.m, "embedding dimension")->required();
    embed->add_option("--start", embed_args.start, "window start index");
    embed->add_option("--lookback", embed_args.lookback,
                      "window length (default: rest of the series)");
    embed->add_option("--out", embed_args.out, "output directory")->required();
    embed->callback([&] { cmd_embed(embed_args); });

    // train
    std::string train_config, train_out;
    TrainOverrides train_over;
    galien::config::DataSection train_data;
    auto* train = app.add_subcommand("train", "train one model into a run directory");
    train->add_option("--config", train_config, "JSON config file");
    train->add_option("--out", train_out, "run directory");
    add_data_flags(train, train_data);
    add_train_overrides(train, train_over);
    train->callback([&] {
        galien::config::RunConfig cfg =
            resolve_config(train_config, train_over, train_data, train);
        std::string out = !train_out.empty() ? train_out : cfg.output;
        if (out.empty()) {
            galien::raise(galien::Errc::config_invalid,
                          "a run directory is required (--out or config output)");
        }
        cmd_train(cfg, out, verbose);
    });

    // evaluate
    std::string eval_run, eval_config, eval_out;
    TrainOverrides eval_over;
    galien::config::DataSection eval_data;
    auto* evaluate = app.add_subcommand("evaluate",
                                        "evaluate a run directory or sweep a config grid");
    evaluate->add_option("--run", eval_run, "run directory from `train`");
    evaluate->add_option("--config", eval_config, "JSON config file (grid mode)");
    evaluate->add_option("--out", eval_out, "output directory");
    add_data_flags(evaluate, eval_data);
    add_train_overrides(evaluate, eval_over);
    evaluate->callback([&] {
        if (!eval_run.empty()) {
            cmd_evaluate_run(eval_run, eval_out, verbose);
            return;
        }
        if (eval_config.empty() && eval_data.path.empty()) {
            galien::raise(galien::Errc::config_invalid,
                          "evaluate needs --run, or --config/--data for grid mode");
        }
        cmd_evaluate_grid(resolve_config(eval_config, eval_over, eval_data, evaluate),
                          eval_out, verbose);
    });

    // explain
    ExplainArgs explain_args;
    auto* explain = app.add_subcommand("explain",
                                       "export attention and activation maps for one window");
    explain->add_option("--run", explain_args.run, "run directory from `train`")->required();
    explain->add_option("--window", explain_args.window, "test window index");
    explain->add_option("--target-step", explain_args.target_step,
                        "horizon step to attribute (default: sum of all)");
    explain->add_flag("--skip-ram", explain_args.skip_ram, "attention maps only");
    explain->add_option("--out", explain_args.out, "output directory (default run/explain)");
    explain->callback([&] { cmd_explain(explain_args); });

    // ablate
    std::string ablate_config, ablate_out;
    TrainOverrides ablate_over;
    galien::config::DataSection ablate_data;
    auto* ablate = app.add_subcommand("ablate",
                                      "compare the full model against the no_local variant");
    ablate->add_option("--config", ablate_config, "JSON config file");
    ablate->add_option("--out", ablate_out, "output directory");
    add_data_flags(ablate, ablate_data);
    add_train_overrides(ablate, ablate_over);
    ablate->callback([&] {
        cmd_ablate(resolve_config(ablate_config, ablate_over, ablate_data, ablate), ablate_out,
                   verbose);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    } catch (const galien::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return galien::exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}
