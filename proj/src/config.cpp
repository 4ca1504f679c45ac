#include "galien/config.hpp"

#include "galien/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <vector>

namespace galien::config {

namespace {

using nlohmann::json;

[[noreturn]] void bad_field(const std::string& path, const std::string& why) {
    raise(Errc::config_invalid, "config field " + path + ": " + why);
}

template <class T>
T get_as(const json& j, const std::string& path) {
    try {
        return j.get<T>();
    } catch (const json::exception&) {
        bad_field(path, "wrong type");
    }
}

/// Walks one section object, dispatching each known key to a setter and
/// rejecting everything else by name.
class SectionReader {
public:
    SectionReader(const json& j, std::string prefix) : j_(j), prefix_(std::move(prefix)) {
        if (!j.is_object()) bad_field(prefix_, "must be an object");
        for (const auto& item : j.items()) keys_.push_back(item.key());
    }

    template <class T, class S>
    SectionReader& field(const char* key, S& slot) {
        take(key);
        if (j_.contains(key)) slot = static_cast<S>(get_as<T>(j_.at(key), path(key)));
        return *this;
    }

    template <class T, class F>
    SectionReader& with(const char* key, F&& set) {
        take(key);
        if (j_.contains(key)) set(get_as<T>(j_.at(key), path(key)), path(key));
        return *this;
    }

    void finish() const {
        for (const auto& k : keys_) {
            if (!taken_.contains(k)) bad_field(path(k), "unknown key");
        }
    }

    std::string path(const std::string& key) const { return prefix_ + "." + key; }

private:
    void take(const char* key) { taken_.insert(key); }

    const json& j_;
    std::string prefix_;
    std::vector<std::string> keys_;
    std::set<std::string> taken_;
};

void read_data(const json& j, DataSection& s) {
    SectionReader r(j, "data");
    r.field<std::string>("path", s.path)
        .field<std::string>("column", s.column)
        .field<bool>("has_header", s.has_header)
        .with<std::string>("delimiter",
                           [&](const std::string& v, const std::string& p) {
                               if (v.size() != 1) bad_field(p, "must be a single character");
                               s.delimiter = v;
                           })
        .with<std::string>("missing",
                           [&](const std::string& v, const std::string& p) {
                               if (v != "error" && v != "interpolate") {
                                   bad_field(p, "must be 'error' or 'interpolate'");
                               }
                               s.missing = v;
                           })
        .field<double>("step_minutes", s.step_minutes)
        .field<std::string>("name", s.name);
    r.finish();
}

void read_split(const json& j, SplitSpec& s) {
    SectionReader r(j, "split");
    r.field<double>("train", s.train)
        .field<double>("val", s.val)
        .field<double>("test", s.test);
    r.finish();
}

void read_psr(const json& j, harness::PsrPolicy& s) {
    SectionReader r(j, "psr");
    r.field<bool>("auto", s.auto_estimate)
        .field<int>("tau", s.tau)
        .field<int>("m", s.m)
        .field<int>("tau_cap", s.tau_cap)
        .field<int>("m_cap", s.m_cap);
    r.finish();
}

void read_window(const json& j, WindowSection& s) {
    SectionReader r(j, "window");
    r.field<int>("lookback", s.lookback)
        .field<int>("horizon", s.horizon)
        .field<int>("train_stride", s.train_stride);
    r.finish();
}

void read_model(const json& j, nn::ModelConfig& s) {
    SectionReader r(j, "model");
    r.field<int>("d_model", s.d_model)
        .field<int>("d_ff", s.d_ff)
        .field<int>("e_layers", s.e_layers)
        .field<int>("n_heads", s.n_heads)
        .with<std::string>("variant",
                           [&](const std::string& v, const std::string& p) {
                               try {
                                   s.variant = nn::variant_from_name(v);
                               } catch (const Error&) {
                                   bad_field(p, "must be 'full' or 'no_local'");
                               }
                           })
        .field<bool>("paper_exact_scale", s.paper_exact_scale)
        .field<bool>("paper_exact_eq12", s.paper_exact_eq12);
    r.finish();
}

void read_train(const json& j, train::TrainConfig& s) {
    SectionReader r(j, "train");
    r.field<int>("batch_size", s.batch_size)
        .field<int>("max_epochs", s.max_epochs)
        .field<double>("learning_rate", s.learning_rate)
        .field<int>("patience", s.patience)
        .field<std::uint64_t>("seed", s.seed)
        .field<double>("adam_beta1", s.adam_beta1)
        .field<double>("adam_beta2", s.adam_beta2)
        .field<double>("adam_eps", s.adam_eps)
        .field<double>("clip_norm", s.clip_norm);
    r.finish();
}

void read_baselines(const json& j, BaselineSection& s) {
    SectionReader r(j, "baselines");
    r.field<int>("seasonal_period", s.seasonal_period)
        .field<double>("ridge_lambda", s.ridge_lambda);
    r.finish();
}

void read_eval(const json& j, EvalSection& s) {
    SectionReader r(j, "eval");
    r.field<std::vector<int>>("lookbacks", s.lookbacks)
        .field<std::vector<int>>("horizons", s.horizons)
        .field<std::vector<std::uint64_t>>("seeds", s.seeds)
        .with<std::vector<std::string>>(
            "variants", [&](const std::vector<std::string>& v, const std::string& p) {
                for (const auto& name : v) {
                    if (name != "full" && name != "no_local") {
                        bad_field(p, "entries must be 'full' or 'no_local'");
                    }
                }
                s.variants = v;
            });
    r.finish();
}

} // namespace

CsvOptions DataSection::csv_options() const {
    CsvOptions opts;
    opts.value_column = column;
    opts.has_header = has_header;
    opts.delimiter = delimiter.empty() ? ',' : delimiter[0];
    opts.missing =
        missing == "interpolate" ? MissingPolicy::linear_interpolate : MissingPolicy::error;
    opts.step_minutes = step_minutes;
    opts.series_name = name;
    return opts;
}

void RunConfig::validate() const {
    if (data.path.empty()) raise(Errc::config_invalid, "config field data.path: is required");
    if (window.lookback < 3) {
        raise(Errc::config_invalid, "config field window.lookback: must be >= 3");
    }
    if (window.horizon < 1) {
        raise(Errc::config_invalid, "config field window.horizon: must be >= 1");
    }
    if (window.train_stride < 1) {
        raise(Errc::config_invalid, "config field window.train_stride: must be >= 1");
    }
    if (baselines.seasonal_period < 1) {
        raise(Errc::config_invalid, "config field baselines.seasonal_period: must be >= 1");
    }
    if (baselines.ridge_lambda < 0.0) {
        raise(Errc::config_invalid, "config field baselines.ridge_lambda: must be >= 0");
    }
    if (!psr.auto_estimate) {
        if (psr.tau < 1) raise(Errc::config_invalid, "config field psr.tau: must be >= 1");
        if (psr.m < 1) raise(Errc::config_invalid, "config field psr.m: must be >= 1");
    }
    if (psr.tau_cap < 1) raise(Errc::config_invalid, "config field psr.tau_cap: must be >= 1");
    if (psr.m_cap < 1) raise(Errc::config_invalid, "config field psr.m_cap: must be >= 1");
    nn::ModelConfig probe = model;
    probe.m = 1;
    probe.n_points = 1;
    probe.d_pred = 1;
    try {
        probe.validate();
    } catch (const Error& e) {
        raise(Errc::config_invalid, std::string("config section model: ") + e.what());
    }
    try {
        train.validate();
    } catch (const Error& e) {
        raise(Errc::config_invalid, std::string("config section train: ") + e.what());
    }
    double sum = split.train + split.val + split.test;
    bool in_range = split.train > 0 && split.train < 1 && split.val > 0 && split.val < 1 &&
                    split.test > 0 && split.test < 1;
    if (!in_range || std::abs(sum - 1.0) > 1e-9) {
        raise(Errc::config_invalid,
              "config section split: fractions must lie in (0, 1) and sum to 1");
    }
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::config_invalid, "config file not found: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    RunConfig cfg;
    apply_config_json(cfg, buf.str(), path);
    return cfg;
}

void apply_config_json(RunConfig& base, const std::string& text, const std::string& origin) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) {
        raise(Errc::config_invalid, origin + " is not valid JSON");
    }
    if (!j.is_object()) raise(Errc::config_invalid, origin + ": top level must be an object");
    for (const auto& item : j.items()) {
        const std::string& key = item.key();
        const json& sec = item.value();
        if (key == "data") {
            read_data(sec, base.data);
        } else if (key == "split") {
            read_split(sec, base.split);
        } else if (key == "psr") {
            read_psr(sec, base.psr);
        } else if (key == "window") {
            read_window(sec, base.window);
        } else if (key == "model") {
            read_model(sec, base.model);
        } else if (key == "train") {
            read_train(sec, base.train);
        } else if (key == "baselines") {
            read_baselines(sec, base.baselines);
        } else if (key == "eval") {
            read_eval(sec, base.eval);
        } else if (key == "output") {
            base.output = get_as<std::string>(sec, "output");
        } else {
            raise(Errc::config_invalid, "config field " + key + ": unknown section");
        }
    }
}

std::string run_config_to_json(const RunConfig& cfg) {
    json j;
    j["data"] = {{"path", cfg.data.path},
                 {"column", cfg.data.column},
                 {"has_header", cfg.data.has_header},
                 {"delimiter", cfg.data.delimiter},
                 {"missing", cfg.data.missing},
                 {"step_minutes", cfg.data.step_minutes},
                 {"name", cfg.data.name}};
    j["split"] = {{"train", cfg.split.train}, {"val", cfg.split.val}, {"test", cfg.split.test}};
    j["psr"] = {{"auto", cfg.psr.auto_estimate},
                {"tau", cfg.psr.tau},
                {"m", cfg.psr.m},
                {"tau_cap", cfg.psr.tau_cap},
                {"m_cap", cfg.psr.m_cap}};
    j["window"] = {{"lookback", cfg.window.lookback},
                   {"horizon", cfg.window.horizon},
                   {"train_stride", cfg.window.train_stride}};
    j["model"] = {{"d_model", cfg.model.d_model},
                  {"d_ff", cfg.model.d_ff},
                  {"e_layers", cfg.model.e_layers},
                  {"n_heads", cfg.model.n_heads},
                  {"variant", nn::variant_name(cfg.model.variant)},
                  {"paper_exact_scale", cfg.model.paper_exact_scale},
                  {"paper_exact_eq12", cfg.model.paper_exact_eq12}};
    j["train"] = {{"batch_size", cfg.train.batch_size},
                  {"max_epochs", cfg.train.max_epochs},
                  {"learning_rate", cfg.train.learning_rate},
                  {"patience", cfg.train.patience},
                  {"seed", cfg.train.seed},
                  {"adam_beta1", cfg.train.adam_beta1},
                  {"adam_beta2", cfg.train.adam_beta2},
                  {"adam_eps", cfg.train.adam_eps},
                  {"clip_norm", cfg.train.clip_norm}};
    j["baselines"] = {{"seasonal_period", cfg.baselines.seasonal_period},
                      {"ridge_lambda", cfg.baselines.ridge_lambda}};
    j["eval"] = {{"lookbacks", cfg.eval.lookbacks},
                 {"horizons", cfg.eval.horizons},
                 {"seeds", cfg.eval.seeds},
                 {"variants", cfg.eval.variants}};
    j["output"] = cfg.output;
    return j.dump(2) + "\n";
}

void save_run_config(const RunConfig& cfg, const std::string& path) {
    std::ofstream out(path);
    if (!out) raise(Errc::io_error, "cannot open " + path + " for writing");
    out << run_config_to_json(cfg);
    if (!out) raise(Errc::io_error, "write failed for " + path);
}

} // namespace galien::config
