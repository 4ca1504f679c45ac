#pragma once

#include "galien/series.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace galien {

enum class ChaosSource {
    lorenz_x,
    mackey_glass,
};

/// Recipe for a load-shaped synthetic series: a positive base level, daily
/// and weekly sinusoids (periods 96 and 672 samples at 15-minute steps), a
/// chaotic component scaled into [0, chaos_amp], and Gaussian noise.
struct SynthSpec {
    std::size_t length = 10000;
    double base = 1000.0;
    double daily_amp = 300.0;
    double weekly_amp = 100.0;
    double chaos_amp = 120.0;
    ChaosSource chaos_source = ChaosSource::lorenz_x;
    double noise_std = 10.0;
    std::uint64_t seed = 42;
    double step_minutes = 15.0;
};

/// x(t) = base + daily_amp*sin(2*pi*t/96) + weekly_amp*sin(2*pi*t/672)
///        + chaos_amp*c(t) + noise. The invariant
/// base > daily_amp + weekly_amp + chaos_amp + 6*noise_std keeps the series
/// strictly positive in practice, so relative error metrics stay defined.
TimeSeries generate(const SynthSpec& spec);

/// x-component of the Lorenz system (sigma=10, rho=28, beta=8/3) integrated
/// with fixed-step RK4 at dt, after discarding `transient` steps.
std::vector<double> lorenz_x_series(std::size_t n, double dt = 0.01, std::size_t transient = 10000);

/// Mackey-Glass series dx/dt = 0.2*x(t-tau)/(1+x(t-tau)^10) - 0.1*x(t),
/// integrated with fixed-step RK4 at dt; the delayed term is linearly
/// interpolated from the history buffer.
std::vector<double> mackey_glass_series(std::size_t n, double tau = 17.0, double dt = 0.1,
                                        std::size_t transient = 10000);

} // namespace galien
