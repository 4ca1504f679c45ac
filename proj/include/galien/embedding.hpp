#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <span>
#include <vector>

namespace galien {

/// Delay-embedding parameters: tau is the lag in samples, m the embedding
/// dimension (number of delayed coordinates).
struct PsrParams {
    int tau = 1;
    int m = 1;
};

/// Delay-coordinate view of one look-back window, laid out as an image.
/// data(j, i) = window[i + j * tau], so row j is the series shifted by
/// j * tau and column i is one reconstructed phase-space point.
struct TrajectoryImage {
    Eigen::MatrixXd data; // m x N with N = L - (m - 1) * tau
    PsrParams params;

    int n_points() const { return static_cast<int>(data.cols()); }
};

/// Sliding-patch view of a window: row i is the patch starting at i * stride.
struct PatchMatrix {
    Eigen::MatrixXd data; // M x patch_len with M = floor((L - patch_len) / stride) + 1
    int patch_len = 0;
    int stride = 1;
};

/// One supervised example: the embedded look-back window and the horizon
/// of target values that immediately follows it. Both sides are expected to
/// carry normalized values during training. The raw window is kept alongside
/// the image because the image drops samples whenever tau exceeds its width.
struct WindowPair {
    TrajectoryImage image;
    Eigen::VectorXd window;
    Eigen::VectorXd target;
    std::size_t window_start = 0;
};

TrajectoryImage trajectory_matrix(std::span<const double> window, PsrParams params);

PatchMatrix patch_matrix(std::span<const double> window, int patch_len, int stride);

/// The patch parameters under which patch_matrix reproduces
/// trajectory_matrix exactly: stride = tau, patch_len = L - (m - 1) * tau.
struct EquivalenceParams {
    int patch_len = 0;
    int stride = 1;
};
EquivalenceParams equivalence_params(int window_len, PsrParams params);

/// Embedding with per-row gaps: row 0 starts at offset 0 and row j at the
/// prefix sum of delays[0..j-1]. A constant delay vector reproduces the
/// uniform embedding.
Eigen::MatrixXd nonuniform_trajectory_matrix(std::span<const double> window,
                                             const std::vector<int>& delays);

/// Recovers the flat window from its embedded image. Exact whenever tau does
/// not exceed the image width; otherwise some window samples never reach the
/// image and the call reports the first uncovered index.
std::vector<double> window_from_image(const TrajectoryImage& image, int window_len);

/// Cuts (lookback, horizon) pairs from a series at the given start stride.
/// The last admissible start is n - lookback - horizon.
std::vector<WindowPair> build_windows(std::span<const double> series, int lookback, int horizon,
                                      PsrParams params, int start_stride = 1);

} // namespace galien
