#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "galien/embedding.hpp"
#include "galien/errors.hpp"
#include "galien/evaluation.hpp"
#include "galien/synth.hpp"
#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using galien::WindowPair;
using galien::eval::Matrix;
using galien::eval::Vector;

namespace {

Vector to_vector(const std::vector<double>& v) {
    return Eigen::Map<const Vector>(v.data(), static_cast<long>(v.size()));
}

/// Pairs whose targets are an exact linear map of the flattened window, for
/// ridge-recovery checks.
std::vector<WindowPair> linear_pairs(int lookback, int horizon, int count,
                                     std::uint64_t seed) {
    oracle::TestRng rng(seed);
    Matrix map(horizon, lookback);
    for (long j = 0; j < map.cols(); ++j) {
        for (long i = 0; i < map.rows(); ++i) map(i, j) = rng.uniform(-0.5, 0.5);
    }
    Vector offset(horizon);
    for (int i = 0; i < horizon; ++i) offset(i) = rng.uniform(-1.0, 1.0);
    std::vector<WindowPair> pairs;
    for (int s = 0; s < count; ++s) {
        std::vector<double> w;
        for (int i = 0; i < lookback; ++i) w.push_back(rng.uniform(-2.0, 2.0));
        WindowPair p;
        p.image = galien::trajectory_matrix(w, {1, 1});
        p.window = to_vector(w);
        p.target = map * to_vector(w) + offset;
        pairs.push_back(p);
    }
    return pairs;
}

} // namespace

TEST_CASE("absolute error on a two-element fixture") {
    Vector truth(2), pred(2);
    truth << 100.0, 200.0;
    pred << 110.0, 190.0;
    CHECK(galien::eval::mae(truth, pred) == 10.0);
    CHECK(galien::eval::mae(truth, truth) == 0.0);
}

TEST_CASE("absolute error matches a loop oracle") {
    oracle::TestRng rng(1);
    std::vector<double> a, b;
    for (int i = 0; i < 1000; ++i) {
        a.push_back(rng.uniform(-100.0, 100.0));
        b.push_back(rng.uniform(-100.0, 100.0));
    }
    CHECK(galien::eval::mae(to_vector(a), to_vector(b)) ==
          doctest::Approx(oracle::mae(a, b)).epsilon(1e-12));
    CHECK_THROWS_AS(galien::eval::mae(to_vector(a), Vector::Zero(3)), galien::Error);
}

TEST_CASE("percentage error is stored as a fraction") {
    Vector truth(2), pred(2);
    truth << 100.0, 200.0;
    pred << 110.0, 190.0;
    CHECK(galien::eval::mape(truth, pred) == doctest::Approx(0.075).epsilon(1e-15));
}

TEST_CASE("percentage error matches a loop oracle") {
    oracle::TestRng rng(2);
    std::vector<double> a, b;
    for (int i = 0; i < 500; ++i) {
        double t = rng.uniform(50.0, 150.0);
        a.push_back(t);
        b.push_back(t + rng.uniform(-10.0, 10.0));
    }
    CHECK(galien::eval::mape(to_vector(a), to_vector(b)) ==
          doctest::Approx(oracle::mape(a, b)).epsilon(1e-12));
}

TEST_CASE("a zero truth entry is a hard error naming its index") {
    Vector truth(3), pred(3);
    truth << 5.0, 0.0, 7.0;
    pred << 5.0, 1.0, 7.0;
    try {
        galien::eval::mape(truth, pred);
        FAIL("expected an error");
    } catch (const galien::Error& e) {
        CHECK(e.code() == galien::Errc::zero_truth_value);
        CHECK(std::string(e.what()).find('1') != std::string::npos);
    }
}

TEST_CASE("per-step errors average over samples") {
    Matrix truth(2, 3), pred(2, 3);
    truth << 1, 2, 3, 4, 5, 6;
    pred << 2, 2, 3, 4, 8, 6;
    Vector steps = galien::eval::per_step_mae(truth, pred);
    REQUIRE(steps.size() == 2);
    CHECK(steps(0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(steps(1) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("scaling both inputs scales the absolute error only") {
    oracle::TestRng rng(3);
    std::vector<double> a, b;
    for (int i = 0; i < 100; ++i) {
        a.push_back(rng.uniform(10.0, 20.0));
        b.push_back(rng.uniform(10.0, 20.0));
    }
    Vector va = to_vector(a), vb = to_vector(b);
    double c = 3.5;
    Vector sa = c * va, sb = c * vb;
    CHECK(galien::eval::mae(sa, sb) ==
          doctest::Approx(c * galien::eval::mae(va, vb)).epsilon(1e-12));
    CHECK(galien::eval::mape(sa, sb) ==
          doctest::Approx(galien::eval::mape(va, vb)).epsilon(1e-12));
}

TEST_CASE("reordering sample columns leaves the metrics unchanged") {
    oracle::TestRng rng(4);
    Matrix truth(4, 10), pred(4, 10);
    for (long j = 0; j < 10; ++j) {
        for (long i = 0; i < 4; ++i) {
            truth(i, j) = rng.uniform(50.0, 100.0);
            pred(i, j) = truth(i, j) + rng.uniform(-5.0, 5.0);
        }
    }
    std::vector<int> perm{7, 2, 9, 0, 4, 1, 8, 3, 6, 5};
    Matrix truth_p(4, 10), pred_p(4, 10);
    for (long j = 0; j < 10; ++j) {
        truth_p.col(j) = truth.col(perm[static_cast<std::size_t>(j)]);
        pred_p.col(j) = pred.col(perm[static_cast<std::size_t>(j)]);
    }
    CHECK(galien::eval::mae(truth, pred) ==
          doctest::Approx(galien::eval::mae(truth_p, pred_p)).epsilon(1e-13));
    CHECK(galien::eval::mape(truth, pred) ==
          doctest::Approx(galien::eval::mape(truth_p, pred_p)).epsilon(1e-13));
}

TEST_CASE("denormalization undoes the z-score") {
    galien::NormStats stats{12.0, 4.0};
    Matrix z(2, 2);
    z << 0.0, 1.0, -1.0, 2.5;
    Matrix x = galien::eval::denormalize(z, stats);
    CHECK(x(0, 0) == 12.0);
    CHECK(x(0, 1) == 16.0);
    CHECK(x(1, 0) == 8.0);
    CHECK(x(1, 1) == 22.0);
}

TEST_CASE("persistence repeats the last observation") {
    Vector window(3);
    window << 480.0, 490.0, 500.0;
    Vector f = galien::eval::persistence_forecast(window, 4);
    REQUIRE(f.size() == 4);
    for (long i = 0; i < 4; ++i) CHECK(f(i) == 500.0);
}

TEST_CASE("seasonal naive copies the last period cyclically") {
    Vector window(8);
    window << 9, 9, 9, 9, 1, 2, 3, 4;
    Vector f = galien::eval::seasonal_naive_forecast(window, 6, 4);
    REQUIRE(f.size() == 6);
    Vector expect(6);
    expect << 1, 2, 3, 4, 1, 2;
    CHECK(f == expect);
    CHECK_THROWS_AS(galien::eval::seasonal_naive_forecast(window, 4, 9), galien::Error);
}

TEST_CASE("window recovery inverts the embedding") {
    oracle::TestRng rng(5);
    std::vector<double> w;
    for (int i = 0; i < 14; ++i) w.push_back(rng.uniform(-1.0, 1.0));
    galien::TrajectoryImage img = galien::trajectory_matrix(w, {3, 4});
    Vector rec = galien::eval::recover_window(img);
    REQUIRE(rec.size() == 14);
    for (int i = 0; i < 14; ++i) CHECK(rec(i) == w[static_cast<std::size_t>(i)]);
}

TEST_CASE("ridge with a tiny penalty recovers an exact linear rule") {
    int lookback = 12, horizon = 4;
    std::vector<WindowPair> pairs = linear_pairs(lookback, horizon, 80, 6);
    auto lf = galien::eval::LinearForecaster::fit(pairs, 1e-6);
    double err_sum = 0.0;
    for (const auto& p : pairs) {
        Vector pred = lf.predict(galien::eval::recover_window(p.image));
        err_sum += galien::eval::mae(p.target, pred);
    }
    CHECK(err_sum / static_cast<double>(pairs.size()) < 1e-6);
}

TEST_CASE("collinear features break only the unpenalized fit") {
    int lookback = 4, horizon = 2;
    std::vector<WindowPair> pairs;
    oracle::TestRng rng(7);
    for (int s = 0; s < 20; ++s) {
        double v = rng.uniform(-1.0, 1.0);
        std::vector<double> w(static_cast<std::size_t>(lookback), v);
        WindowPair p;
        p.image = galien::trajectory_matrix(w, {1, 1});
        p.window = to_vector(w);
        p.target = Vector::Constant(horizon, 2.0 * v);
        pairs.push_back(p);
    }
    CHECK_THROWS_AS(galien::eval::LinearForecaster::fit(pairs, 0.0), galien::Error);
    auto lf = galien::eval::LinearForecaster::fit(pairs, 1e-8);
    CHECK(lf.coef.allFinite());
}

TEST_CASE("the ridge baseline round-trips through its file format") {
    std::vector<WindowPair> pairs = linear_pairs(6, 3, 40, 8);
    auto lf = galien::eval::LinearForecaster::fit(pairs, 1e-4);
    fs::path p = fs::temp_directory_path() / "galien_linear_roundtrip.bin";
    lf.save(p.string());
    auto back = galien::eval::LinearForecaster::load(p.string());
    CHECK(back.lookback == lf.lookback);
    CHECK(back.horizon == lf.horizon);
    CHECK(back.lambda == lf.lambda);
    CHECK(back.coef == lf.coef);
    fs::remove(p);
}

TEST_CASE("persistence cannot beat seasonal naive on a periodic series") {
    galien::SynthSpec spec;
    spec.length = 3000;
    spec.noise_std = 0.5;
    spec.seed = 9;
    std::vector<double> series = galien::generate(spec).values;
    int period = 96;
    int lookback = 2 * period, horizon = period;
    double mae_persist = 0.0, mae_seasonal = 0.0;
    int count = 0;
    for (int start = 0; start + lookback + horizon <= static_cast<int>(series.size());
         start += 37) {
        Vector window(lookback), truth(horizon);
        for (int i = 0; i < lookback; ++i) window(i) = series[static_cast<std::size_t>(start + i)];
        for (int i = 0; i < horizon; ++i) {
            truth(i) = series[static_cast<std::size_t>(start + lookback + i)];
        }
        mae_persist += galien::eval::mae(truth, galien::eval::persistence_forecast(window, horizon));
        mae_seasonal += galien::eval::mae(
            truth, galien::eval::seasonal_naive_forecast(window, horizon, period));
        ++count;
    }
    REQUIRE(count > 10);
    CHECK(mae_persist / count >= mae_seasonal / count);
}

TEST_CASE("model evaluation reports metrics and baselines together") {
    galien::nn::ModelConfig c;
    c.d_model = 8;
    c.d_ff = 16;
    c.e_layers = 1;
    c.n_heads = 2;
    c.m = 2;
    c.n_points = 6;
    c.d_pred = 3;
    galien::nn::ModelWeights w = galien::nn::ModelWeights::init(c, 10);
    oracle::TestRng rng(11);
    std::vector<WindowPair> pairs;
    int lookback = (c.m - 1) * 2 + c.n_points;
    for (int s = 0; s < 9; ++s) {
        std::vector<double> win;
        for (int i = 0; i < lookback; ++i) win.push_back(rng.uniform(0.5, 1.5));
        WindowPair p;
        p.image = galien::trajectory_matrix(win, {2, c.m});
        p.window = to_vector(win);
        p.target = Vector::Constant(c.d_pred, 1.0);
        for (long k = 0; k < p.target.size(); ++k) p.target(k) += rng.uniform(-0.1, 0.1);
        pairs.push_back(p);
    }
    galien::NormStats norm{100.0, 10.0};
    auto lf = galien::eval::LinearForecaster::fit(pairs, 1e-3);
    galien::eval::EvalOptions opts;
    opts.batch_size = 4;
    opts.seasonal_period = 4;
    opts.linear = &lf;
    opts.dataset = "unit";
    opts.fingerprint = "deadbeef";
    opts.seed = 2020;
    auto report = galien::eval::evaluate_model(w, pairs, norm, opts);
    CHECK(report.dataset == "unit");
    CHECK(report.fingerprint == "deadbeef");
    CHECK(report.seed == 2020);
    CHECK(report.mae >= 0.0);
    CHECK(std::isfinite(report.mae));
    CHECK(std::isfinite(report.mape));
    CHECK(report.per_step_mae.size() == static_cast<std::size_t>(c.d_pred));
    REQUIRE(report.baselines.count("persistence") == 1);
    REQUIRE(report.baselines.count("seasonal_naive") == 1);
    REQUIRE(report.baselines.count("linear") == 1);
    for (const auto& [name, scores] : report.baselines) {
        CHECK(std::isfinite(scores.mae));
        CHECK(scores.mae >= 0.0);
    }
}

TEST_CASE("evaluation metrics live in denormalized units") {
    galien::nn::ModelConfig c;
    c.d_model = 8;
    c.d_ff = 16;
    c.e_layers = 1;
    c.n_heads = 2;
    c.m = 1;
    c.n_points = 4;
    c.d_pred = 2;
    galien::nn::ModelWeights w = galien::nn::ModelWeights::zeros(c);
    w.p_b = galien::nn::Matrix::Zero(c.d_pred, 1);
    WindowPair p;
    std::vector<double> win{0.0, 0.0, 0.0, 0.0};
    p.image = galien::trajectory_matrix(win, {1, 1});
    p.window = to_vector(win);
    p.target = Vector::Zero(c.d_pred);
    galien::NormStats norm{50.0, 5.0};
    galien::eval::EvalOptions opts;
    opts.seasonal_period = 1000;
    auto report = galien::eval::evaluate_model(w, {p}, norm, opts);
    CHECK(report.mae == doctest::Approx(0.0).epsilon(1e-12));
    REQUIRE(report.baselines.count("persistence") == 1);
    CHECK(report.baselines.at("persistence").mae == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(report.baselines.count("seasonal_naive") == 0);
}

TEST_CASE("string fingerprints match the published test vectors") {
    CHECK(galien::eval::fnv1a_hex("") == "cbf29ce484222325");
    CHECK(galien::eval::fnv1a_hex("a") == "af63dc4c8601ec8c");
    CHECK(galien::eval::fnv1a_hex("a") != galien::eval::fnv1a_hex("b"));
}
