#include "galien/synth.hpp"

#include "galien/errors.hpp"
#include "galien/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace galien {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kDailyPeriod = 96.0;
constexpr double kWeeklyPeriod = 672.0;

std::array<double, 3> lorenz_rhs(const std::array<double, 3>& s) {
    constexpr double sigma = 10.0;
    constexpr double rho = 28.0;
    constexpr double beta = 8.0 / 3.0;
    return {sigma * (s[1] - s[0]), s[0] * (rho - s[2]) - s[1], s[0] * s[1] - beta * s[2]};
}

std::array<double, 3> rk4_step(const std::array<double, 3>& s, double dt) {
    auto add = [](const std::array<double, 3>& a, const std::array<double, 3>& b, double c) {
        return std::array<double, 3>{a[0] + c * b[0], a[1] + c * b[1], a[2] + c * b[2]};
    };
    auto k1 = lorenz_rhs(s);
    auto k2 = lorenz_rhs(add(s, k1, dt / 2.0));
    auto k3 = lorenz_rhs(add(s, k2, dt / 2.0));
    auto k4 = lorenz_rhs(add(s, k3, dt));
    std::array<double, 3> out;
    for (int i = 0; i < 3; ++i) {
        out[i] = s[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return out;
}

std::vector<double> minmax_unit(std::vector<double> v) {
    auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
    double lo = *lo_it;
    double range = *hi_it - lo;
    if (!(range > 0.0)) raise(Errc::degenerate_series, "chaotic component has zero range");
    for (double& x : v) x = (x - lo) / range;
    return v;
}

} // namespace

std::vector<double> lorenz_x_series(std::size_t n, double dt, std::size_t transient) {
    std::array<double, 3> s{1.0, 1.0, 20.0};
    for (std::size_t i = 0; i < transient; ++i) s = rk4_step(s, dt);
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(s[0]);
        s = rk4_step(s, dt);
    }
    return out;
}

std::vector<double> mackey_glass_series(std::size_t n, double tau, double dt,
                                        std::size_t transient) {
    if (!(tau > 0.0) || !(dt > 0.0)) raise(Errc::invalid_spec, "tau and dt must be positive");
    auto delay_steps = static_cast<std::size_t>(std::ceil(tau / dt)) + 2;
    std::vector<double> hist(delay_steps, 1.2);
    std::size_t head = hist.size(); // absolute index of the next sample to write

    // x(t - tau) by linear interpolation inside the ring buffer; `shift` is
    // measured in steps back from the most recent sample.
    auto delayed = [&](double shift_steps) {
        double back = shift_steps;
        auto lo = static_cast<std::size_t>(std::floor(back));
        double frac = back - static_cast<double>(lo);
        std::size_t i1 = (head - 1 - lo) % hist.size();
        std::size_t i0 = (head - 2 - lo + hist.size()) % hist.size();
        double newest = hist[i1];
        double older = hist[i0];
        return newest + frac * (older - newest);
    };
    auto rhs = [](double x, double xd) { return 0.2 * xd / (1.0 + std::pow(xd, 10.0)) - 0.1 * x; };

    double tau_steps = tau / dt;
    std::vector<double> out;
    out.reserve(n);
    double x = hist.back();
    for (std::size_t step = 0; step < transient + n; ++step) {
        double k1 = rhs(x, delayed(tau_steps));
        double k2 = rhs(x + 0.5 * dt * k1, delayed(tau_steps - 0.5));
        double k3 = rhs(x + 0.5 * dt * k2, delayed(tau_steps - 0.5));
        double k4 = rhs(x + dt * k3, delayed(tau_steps - 1.0));
        x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        hist[head % hist.size()] = x;
        ++head;
        if (step >= transient) out.push_back(x);
    }
    return out;
}

TimeSeries generate(const SynthSpec& spec) {
    if (spec.length < 1) raise(Errc::invalid_spec, "length must be >= 1");
    if (spec.daily_amp < 0.0 || spec.weekly_amp < 0.0 || spec.chaos_amp < 0.0 ||
        spec.noise_std < 0.0) {
        raise(Errc::invalid_spec, "amplitudes and noise_std must be nonnegative");
    }
    if (!(spec.base > spec.daily_amp + spec.weekly_amp + spec.chaos_amp + 6.0 * spec.noise_std)) {
        raise(Errc::invalid_spec,
              "base must exceed daily_amp + weekly_amp + chaos_amp + 6*noise_std");
    }

    std::vector<double> chaos;
    if (spec.chaos_amp > 0.0) {
        std::vector<double> raw = spec.chaos_source == ChaosSource::lorenz_x
                                      ? lorenz_x_series(spec.length)
                                      : mackey_glass_series(spec.length);
        chaos = minmax_unit(std::move(raw));
    }

    Rng rng(spec.seed);
    TimeSeries ts;
    ts.step_minutes = spec.step_minutes;
    ts.name = "synth";
    ts.values.reserve(spec.length);
    for (std::size_t t = 0; t < spec.length; ++t) {
        auto td = static_cast<double>(t);
        double x = spec.base + spec.daily_amp * std::sin(2.0 * kPi * td / kDailyPeriod) +
                   spec.weekly_amp * std::sin(2.0 * kPi * td / kWeeklyPeriod);
        if (spec.chaos_amp > 0.0) x += spec.chaos_amp * chaos[t];
        if (spec.noise_std > 0.0) x += rng.normal(0.0, spec.noise_std);
        ts.values.push_back(x);
    }
    return ts;
}

} // namespace galien
