#pragma once

#include "galien/embedding.hpp"

#include <span>
#include <vector>

namespace galien {

/// Mutual information of a series against its lagged copy, per lag.
struct MiProfile {
    std::vector<int> taus;
    std::vector<double> mi; // nats, >= 0
    int bins = 64;
};

/// False-nearest-neighbor fractions per embedding dimension.
struct FnnProfile {
    std::vector<int> dims;
    std::vector<double> fraction; // in [0, 1]
    double epsilon = 100.0;
    int theiler = 0;
};

/// Knobs of the Wolf fiducial-trajectory method. Separations are absolute
/// distances in phase space; defaults_for derives them from the scalar range
/// of the series (1e-3 and 0.1 of the range).
struct WolfParams {
    int evolve_steps = 3;
    double min_sep = 0.0;
    double max_sep = 0.0;
    int theiler = 0;
    double max_replacement_angle = 0.3; // radians

    static WolfParams defaults_for(std::span<const double> ts, int tau);
};

struct DimEstimate {
    int m = 0;
    bool converged = false;
    FnnProfile profile; // fractions for every dimension that was evaluated
};

/// Histogram mutual information in nats over a bins x bins equal-width joint
/// histogram spanning each variable's observed range. Exact arithmetic keeps
/// the value nonnegative; tiny negative float residue is clamped to zero.
double mutual_information(std::span<const double> x, std::span<const double> y, int bins);

/// mi[k] = I(x[0..n-tau), x[tau..n)) for tau = 1..tau_max.
MiProfile mi_profile(std::span<const double> ts, int tau_max, int bins = 64);

enum class DelayRule {
    global_min,      // lag of the global minimum
    first_local_min, // first interior lag below both neighbours, else global
};

/// Picks the delay from an MI profile. Ties break toward the smallest lag.
int estimate_delay(const MiProfile& profile, DelayRule rule = DelayRule::global_min);

/// Fraction of embedded points whose nearest neighbor (Theiler-excluded)
/// becomes epsilon-times more distant in squared norm after adding the next
/// delay coordinate. theiler < 0 means "use tau".
double fnn_fraction(std::span<const double> ts, int tau, int m, double epsilon, int theiler);

/// Smallest m in 1..m_max whose FNN fraction drops below threshold. When no
/// dimension qualifies the estimate carries m_max with converged == false.
/// theiler < 0 means "use tau".
DimEstimate estimate_dim(std::span<const double> ts, int tau, int m_max, double epsilon = 100.0,
                         double threshold = 0.05, int theiler = -1);

/// Largest Lyapunov exponent in nats per sample step by Wolf's method:
/// follow the fiducial trajectory, evolve a neighbor, accumulate ln(d'/d),
/// and when the pair drifts out of the separation band replace the neighbor
/// with the candidate of smallest replacement angle inside the band.
double wolf_lle(std::span<const double> ts, PsrParams params, const WolfParams& wp);

} // namespace galien
