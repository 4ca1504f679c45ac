#pragma once

#include "galien/embedding.hpp"
#include "galien/nnet.hpp"

#include <Eigen/Core>

#include <string>
#include <vector>

namespace galien::interpret {

using Matrix = Eigen::MatrixXd;

/// One attention matrix captured during a forward pass. Rows and columns
/// index phase points; every column sums to 1.
struct AttentionRecord {
    int layer = 0;
    int head = 0;
    Matrix a; // N x N
};

/// Regression activation map over the trajectory image: rectified
/// gradient-times-activation of the 1-channel convolution map, min-max
/// scaled to [0, 1]. `peak` is the largest value before scaling; a constant
/// raw map scales to all zeros.
struct RamMap {
    Matrix map; // m x N, entries in [0, 1]
    double peak = 0.0;
};

/// Every attention matrix of one forward pass, layer-major then head.
std::vector<AttentionRecord> attention_maps(const nn::ModelWeights& w,
                                            const TrajectoryImage& image);

/// Gradient attribution of the prediction onto the local feature map.
/// target_step < 0 attributes the sum of all horizon outputs; otherwise the
/// single output at that step.
RamMap ram(const nn::ModelWeights& w, const TrajectoryImage& image, int target_step = -1);

/// Exact values, one row per line, %.17g fields.
void export_csv(const Matrix& values, const std::string& path);

/// Binary 8-bit graymap, min-max scaled; a constant matrix exports as all
/// zeros.
void export_pgm(const Matrix& values, const std::string& path);

Matrix read_matrix_csv(const std::string& path);

} // namespace galien::interpret
