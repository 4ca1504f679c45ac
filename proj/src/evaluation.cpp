#include "galien/evaluation.hpp"

#include "galien/binio.hpp"
#include "galien/errors.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <string>

namespace galien::eval {

namespace {

void check_same_shape(const Matrix& a, const Matrix& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        raise(Errc::length_mismatch, std::string(what) + ": inputs have different shapes");
    }
    if (a.size() == 0) raise(Errc::length_mismatch, std::string(what) + ": inputs are empty");
}

} // namespace

double mae(const Vector& truth, const Vector& pred) {
    return mae(Matrix(truth), Matrix(pred));
}

double mae(const Matrix& truth, const Matrix& pred) {
    check_same_shape(truth, pred, "mae");
    return (truth - pred).cwiseAbs().sum() / static_cast<double>(truth.size());
}

double mape(const Vector& truth, const Vector& pred) {
    return mape(Matrix(truth), Matrix(pred));
}

double mape(const Matrix& truth, const Matrix& pred) {
    check_same_shape(truth, pred, "mape");
    const double* t = truth.data();
    const double* p = pred.data();
    double sum = 0.0;
    for (long i = 0; i < truth.size(); ++i) {
        if (t[i] == 0.0) {
            raise(Errc::zero_truth_value, "mape: truth value at index " + std::to_string(i) +
                                              " is zero");
        }
        sum += std::abs(t[i] - p[i]) / std::abs(t[i]);
    }
    return sum / static_cast<double>(truth.size());
}

Vector per_step_mae(const Matrix& truth, const Matrix& pred) {
    check_same_shape(truth, pred, "per_step_mae");
    return (truth - pred).cwiseAbs().rowwise().mean();
}

Matrix denormalize(const Matrix& values, const NormStats& stats) {
    return (values.array() * stats.stddev + stats.mean).matrix();
}

Matrix predict_pairs(const nn::ModelWeights& w, const std::vector<WindowPair>& pairs,
                     int batch_size) {
    if (pairs.empty()) raise(Errc::config_invalid, "predict_pairs needs at least one pair");
    if (batch_size < 1) raise(Errc::config_invalid, "batch_size must be >= 1");
    std::vector<std::size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Matrix out(w.config.d_pred, static_cast<long>(pairs.size()));
    auto bs = static_cast<std::size_t>(batch_size);
    for (std::size_t at = 0; at < order.size(); at += bs) {
        std::size_t end = std::min(order.size(), at + bs);
        nn::Batch b = nn::make_batch(pairs, order, at, end, w.config);
        nn::ForwardGraph fg = nn::build_forward(w, b);
        out.middleCols(static_cast<long>(at), static_cast<long>(end - at)) =
            fg.g.value(fg.output);
    }
    return out;
}

Vector recover_window(const TrajectoryImage& image) {
    int len = (image.params.m - 1) * image.params.tau + image.n_points();
    std::vector<double> w = window_from_image(image, len);
    return Eigen::Map<const Vector>(w.data(), static_cast<long>(w.size()));
}

Vector persistence_forecast(const Vector& window, int horizon) {
    if (window.size() < 1) raise(Errc::window_too_short, "persistence needs a nonempty window");
    if (horizon < 1) raise(Errc::config_invalid, "horizon must be >= 1");
    return Vector::Constant(horizon, window(window.size() - 1));
}

Vector seasonal_naive_forecast(const Vector& window, int horizon, int period) {
    if (period < 1) raise(Errc::config_invalid, "period must be >= 1");
    if (horizon < 1) raise(Errc::config_invalid, "horizon must be >= 1");
    if (window.size() < period) {
        raise(Errc::window_too_short, "seasonal naive needs at least one full period");
    }
    Vector out(horizon);
    long start = window.size() - period;
    for (int k = 0; k < horizon; ++k) out(k) = window(start + k % period);
    return out;
}

LinearForecaster LinearForecaster::fit(const std::vector<WindowPair>& pairs, double lambda) {
    if (pairs.empty()) raise(Errc::config_invalid, "linear fit needs at least one pair");
    if (lambda < 0.0) raise(Errc::config_invalid, "ridge lambda must be >= 0");
    long lb = pairs.front().window.size();
    long hz = pairs.front().target.size();
    auto s = static_cast<long>(pairs.size());
    Matrix x(s, lb + 1);
    Matrix y(s, hz);
    for (long i = 0; i < s; ++i) {
        const Vector& wv = pairs[static_cast<std::size_t>(i)].window;
        if (wv.size() != lb || pairs[static_cast<std::size_t>(i)].target.size() != hz) {
            raise(Errc::shape_mismatch, "linear fit: inconsistent window or target lengths");
        }
        x.row(i).head(lb) = wv.transpose();
        x(i, lb) = 1.0;
        y.row(i) = pairs[static_cast<std::size_t>(i)].target.transpose();
    }
    Matrix gram = x.transpose() * x;
    gram.diagonal().array() += lambda;
    Eigen::LDLT<Matrix> ldlt(gram);
    bool singular = ldlt.info() != Eigen::Success;
    if (!singular && lambda == 0.0) {
        Vector d = ldlt.vectorD();
        double dmax = d.cwiseAbs().maxCoeff();
        singular = dmax <= 0.0 || d.minCoeff() <= dmax * 1e-12;
    }
    if (singular) {
        raise(Errc::singular_system,
              "linear fit: normal equations are singular (collinear features need lambda > 0)");
    }
    Matrix theta = ldlt.solve(x.transpose() * y); // (lb+1) x hz
    LinearForecaster f;
    f.lookback = static_cast<int>(lb);
    f.horizon = static_cast<int>(hz);
    f.lambda = lambda;
    f.coef = theta.transpose();
    return f;
}

Vector LinearForecaster::predict(const Vector& window) const {
    if (window.size() != lookback) {
        raise(Errc::length_mismatch, "linear predict: window length differs from the fit");
    }
    Vector aug(lookback + 1);
    aug.head(lookback) = window;
    aug(lookback) = 1.0;
    return coef * aug;
}

namespace {
constexpr char kLinMagic[8] = {'G', 'L', 'N', 'L', 'I', 'N', '0', '1'};
}

void LinearForecaster::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(Errc::io_error, "cannot open " + path + " for writing");
    out.write(kLinMagic, 8);
    io::write_u32(out, 1);
    io::write_u64(out, static_cast<std::uint64_t>(lookback));
    io::write_u64(out, static_cast<std::uint64_t>(horizon));
    io::write_f64(out, lambda);
    io::write_matrix(out, coef);
    if (!out) raise(Errc::io_error, "write failed for " + path);
}

LinearForecaster LinearForecaster::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(Errc::file_not_found, path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kLinMagic, 8) != 0) {
        raise(Errc::unparseable_value, path + " is not a linear-baseline file");
    }
    std::uint32_t version = io::read_u32(in);
    if (version != 1) {
        raise(Errc::unparseable_value,
              "unsupported linear-baseline version " + std::to_string(version));
    }
    LinearForecaster f;
    f.lookback = static_cast<int>(io::read_u64(in));
    f.horizon = static_cast<int>(io::read_u64(in));
    f.lambda = io::read_f64(in);
    f.coef = io::read_matrix(in);
    if (f.coef.rows() != f.horizon || f.coef.cols() != f.lookback + 1) {
        raise(Errc::unparseable_value, "linear-baseline file shape mismatch");
    }
    return f;
}

EvalReport evaluate_model(const nn::ModelWeights& w, const std::vector<WindowPair>& pairs,
                          const NormStats& norm, const EvalOptions& opts) {
    auto t0 = std::chrono::steady_clock::now();
    if (pairs.empty()) raise(Errc::config_invalid, "evaluate_model needs at least one pair");
    auto s = static_cast<long>(pairs.size());
    int hz = w.config.d_pred;

    Matrix truth(hz, s);
    for (long i = 0; i < s; ++i) truth.col(i) = pairs[static_cast<std::size_t>(i)].target;
    Matrix truth_dn = denormalize(truth, norm);

    Matrix pred = predict_pairs(w, pairs, opts.batch_size);
    Matrix pred_dn = denormalize(pred, norm);

    EvalReport rep;
    rep.dataset = opts.dataset;
    rep.fingerprint = opts.fingerprint;
    rep.variant = nn::variant_name(w.config.variant);
    rep.lookback = (w.config.m - 1) * pairs.front().image.params.tau + w.config.n_points;
    rep.horizon = hz;
    rep.seed = opts.seed;
    rep.mae = mae(truth_dn, pred_dn);
    rep.mape = mape(truth_dn, pred_dn);
    Vector steps = per_step_mae(truth_dn, pred_dn);
    rep.per_step_mae.assign(steps.data(), steps.data() + steps.size());

    Matrix persist(hz, s);
    Matrix seasonal;
    Matrix linear;
    bool do_seasonal = pairs.front().window.size() >= opts.seasonal_period;
    if (do_seasonal) seasonal.resize(hz, s);
    if (opts.linear != nullptr) linear.resize(hz, s);
    for (long i = 0; i < s; ++i) {
        const Vector& win = pairs[static_cast<std::size_t>(i)].window;
        Vector win_dn = denormalize(win, norm);
        persist.col(i) = persistence_forecast(win_dn, hz);
        if (do_seasonal) {
            seasonal.col(i) = seasonal_naive_forecast(win_dn, hz, opts.seasonal_period);
        }
        if (opts.linear != nullptr) {
            linear.col(i) = denormalize(opts.linear->predict(win), norm);
        }
    }
    rep.baselines["persistence"] = {mae(truth_dn, persist), mape(truth_dn, persist)};
    if (do_seasonal) {
        rep.baselines["seasonal_naive"] = {mae(truth_dn, seasonal), mape(truth_dn, seasonal)};
    }
    if (opts.linear != nullptr) {
        rep.baselines["linear"] = {mae(truth_dn, linear), mape(truth_dn, linear)};
    }
    rep.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rep;
}

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

} // namespace galien::eval
