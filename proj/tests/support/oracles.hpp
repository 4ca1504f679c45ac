#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <vector>

/// Independent reference implementations used only by tests. Each one is a
/// deliberately naive loop formulation so a disagreement points at the
/// production code, not at a shared subroutine.
namespace oracle {

/// Joint-histogram mutual information in nats by direct double-loop
/// summation over the bins x bins table.
double mutual_information(std::span<const double> x, std::span<const double> y, int bins);

/// Delay embedding element by element: out(j, i) = w[i + j * tau].
Eigen::MatrixXd trajectory_matrix(std::span<const double> w, int tau, int m);

/// Patch rows element by element: out(i, j) = w[j + i * s].
Eigen::MatrixXd patch_matrix(std::span<const double> w, int p, int s);

/// Row offsets by explicit prefix sums of the delay vector.
Eigen::MatrixXd nonuniform_trajectory_matrix(std::span<const double> w,
                                             const std::vector<int>& delays);

/// False-neighbor fraction with an all-pairs nearest-neighbor scan.
double fnn_fraction(std::span<const double> ts, int tau, int m, double epsilon, int theiler);

/// Largest Lyapunov exponent by the Rosenstein method: per-point nearest
/// neighbor outside the Theiler window, mean log divergence over the next
/// `follow` steps, least-squares slope over steps [fit_lo, fit_hi].
double rosenstein_lle(std::span<const double> ts, int tau, int m, int theiler, int follow,
                      int fit_lo, int fit_hi);

/// Zero-padded 3x3 convolution over an h x w image by sliding-window loops;
/// kernels are C x 9 (row di * 3 + dj), result C x (h * w) (column i * w + j).
Eigen::MatrixXd conv3x3(const Eigen::MatrixXd& image, const Eigen::MatrixXd& kernels,
                        const Eigen::MatrixXd& bias);

/// Columnwise softmax via explicit exponential sums (max-shifted).
Eigen::MatrixXd softmax_cols(const Eigen::MatrixXd& a);

/// Columnwise (x - mean) / sqrt(population variance + eps) by scalar loops.
Eigen::MatrixXd norm_cols(const Eigen::MatrixXd& a, double eps);

double mae(std::span<const double> truth, std::span<const double> pred);
double mape(std::span<const double> truth, std::span<const double> pred);
double mse(std::span<const double> a, std::span<const double> b);

/// x-component of a Lorenz-63 trajectory (sigma 10, rho 28, beta 8/3)
/// integrated with classic RK4 from a fixed off-attractor start, after
/// discarding `transient` steps. Independent of the generator under test.
std::vector<double> lorenz_x(std::size_t n, double dt = 0.01, std::size_t transient = 10000);

/// Deterministic xorshift-style doubles in [lo, hi) for test data.
class TestRng {
public:
    explicit TestRng(std::uint64_t seed) : state_(seed ? seed : 1) {}
    std::uint64_t next_u64();
    double uniform(double lo, double hi);
    int uniform_int(int lo, int hi); // inclusive bounds

private:
    std::uint64_t state_;
};

} // namespace oracle
