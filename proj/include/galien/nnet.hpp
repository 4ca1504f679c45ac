#pragma once

#include "galien/autodiff.hpp"
#include "galien/embedding.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <string>
#include <vector>

namespace galien::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Shared epsilon of every layer-normalization step, forward and batched.
inline constexpr double kLnEps = 1e-8;

enum class Variant {
    full,     // global transformer branch + local convolution branch
    no_local, // global branch only; predictor input width drops to d_model
};

const char* variant_name(Variant v);
Variant variant_from_name(const std::string& name);

struct ModelConfig {
    int d_model = 512;
    int d_ff = 2048;
    int e_layers = 2;
    int n_heads = 8;
    int m = 5;        // trajectory image rows
    int n_points = 32; // trajectory image columns (N)
    int d_pred = 96;  // forecast horizon
    Variant variant = Variant::full;
    /// Scales attention logits by sqrt(d_model) instead of sqrt(d_head).
    bool paper_exact_scale = false;
    /// Head output X*A instead of V*A; widens the fusion matrix to
    /// d_model x (n_heads * d_model).
    bool paper_exact_eq12 = false;

    int d_head() const { return d_model / n_heads; }
    int fuse_in() const { return paper_exact_eq12 ? n_heads * d_model : d_model; }
    int pred_in() const { return variant == Variant::full ? 2 * d_model : d_model; }

    void validate() const;
    bool operator==(const ModelConfig&) const = default;
};

struct EncoderLayerWeights {
    std::vector<Matrix> wq, wk, wv; // per head, d_head x d_model
    Matrix fuse;                    // d_model x fuse_in
    Matrix ffn_w1, ffn_b1;          // d_ff x d_model, d_ff x 1
    Matrix ffn_w2, ffn_b2;          // d_model x d_ff, d_model x 1
    Matrix ln1_scale, ln1_shift;    // d_model x 1
    Matrix ln2_scale, ln2_shift;
};

struct ModelWeights {
    ModelConfig config;
    Matrix ve_w, ve_b; // d_model x m, d_model x 1
    std::vector<EncoderLayerWeights> layers;
    Matrix w_global; // d_model x d_model
    // local branch, present for the full variant only
    Matrix conv1_w, conv1_b;       // d_model x 1 each
    Matrix conv3_w, conv3_b;       // d_model x 9, d_model x 1
    Matrix compress_w, compress_b; // d_model x 1, 1 x 1
    Matrix w_local;                // d_model x (m * N)
    // predictor; D = pred_in()
    Matrix p_w1;                     // D x D
    Matrix p_ln1_scale, p_ln1_shift; // D x 1
    Matrix p_w2;                     // d_ff x D
    Matrix p_w3;                     // D x d_ff
    Matrix p_ln2_scale, p_ln2_shift; // D x 1
    Matrix p_w4;                     // d_pred x D
    Matrix p_b;                      // d_pred x 1

    /// All-zero tensors (LN scales included); shapes follow the config.
    static ModelWeights zeros(const ModelConfig& config);
    /// Seeded uniform fan-in initialization for affine and conv tensors;
    /// LN scales 1, every bias and LN shift 0.
    static ModelWeights init(const ModelConfig& config, std::uint64_t seed);

    /// Visits every learnable tensor in the fixed registry order used by
    /// initialization, serialization, gradients, and optimizer state.
    template <class F>
    void for_each_tensor(F&& f) {
        visit(*this, f);
    }
    template <class F>
    void for_each_tensor(F&& f) const {
        visit(*this, f);
    }

private:
    template <class Self, class F>
    static void visit(Self& self, F& f) {
        f("ve_w", self.ve_w);
        f("ve_b", self.ve_b);
        for (std::size_t l = 0; l < self.layers.size(); ++l) {
            auto& layer = self.layers[l];
            std::string p = "enc" + std::to_string(l) + ".";
            for (std::size_t h = 0; h < layer.wq.size(); ++h) {
                std::string hs = std::to_string(h);
                f(p + "wq" + hs, layer.wq[h]);
                f(p + "wk" + hs, layer.wk[h]);
                f(p + "wv" + hs, layer.wv[h]);
            }
            f(p + "fuse", layer.fuse);
            f(p + "ffn_w1", layer.ffn_w1);
            f(p + "ffn_b1", layer.ffn_b1);
            f(p + "ffn_w2", layer.ffn_w2);
            f(p + "ffn_b2", layer.ffn_b2);
            f(p + "ln1_scale", layer.ln1_scale);
            f(p + "ln1_shift", layer.ln1_shift);
            f(p + "ln2_scale", layer.ln2_scale);
            f(p + "ln2_shift", layer.ln2_shift);
        }
        f("w_global", self.w_global);
        if (self.config.variant == Variant::full) {
            f("conv1_w", self.conv1_w);
            f("conv1_b", self.conv1_b);
            f("conv3_w", self.conv3_w);
            f("conv3_b", self.conv3_b);
            f("compress_w", self.compress_w);
            f("compress_b", self.compress_b);
            f("w_local", self.w_local);
        }
        f("p_w1", self.p_w1);
        f("p_ln1_scale", self.p_ln1_scale);
        f("p_ln1_shift", self.p_ln1_shift);
        f("p_w2", self.p_w2);
        f("p_w3", self.p_w3);
        f("p_ln2_scale", self.p_ln2_scale);
        f("p_ln2_shift", self.p_ln2_shift);
        f("p_w4", self.p_w4);
        f("p_b", self.p_b);
    }
};

/// Exact learnable scalar count from shape formulas alone.
std::int64_t count_params(const ModelConfig& config);

/// Fixed sinusoidal table: row 2k of column pos holds
/// sin(pos / 10000^(2k/d_model)), row 2k+1 the matching cosine.
Matrix positional_encoding(int d_model, int n);

/// Columnwise (x - mean) / sqrt(var + kLnEps), the normalization step every
/// layer norm applies before its learnable scale and shift.
Matrix layer_norm_normalize(const Matrix& x);

Matrix value_embed(const ModelWeights& w, const Matrix& image);
Matrix multi_head_attention(const ModelWeights& w, int layer, const Matrix& x);
Matrix encoder_layer(const ModelWeights& w, int layer, const Matrix& x);
Vector global_feature(const ModelWeights& w, const Matrix& y);
Vector local_branch(const ModelWeights& w, const Matrix& image);
/// y_l is ignored under the no_local variant; pass an empty vector.
Vector predict_head(const ModelWeights& w, const Vector& y_g, const Vector& y_l);
Vector forward(const ModelWeights& w, const TrajectoryImage& image);

/// One mini-batch in the two layouts the batched graph consumes: columns of
/// `points` are phase points (sample-major blocks of N), columns of `flat`
/// are whole images flattened row-major over (m, N).
struct Batch {
    Matrix points;  // m x (S*N)
    Matrix flat;    // (m*N) x S
    Matrix targets; // d_pred x S
    long size = 0;
};

Batch make_batch(const std::vector<WindowPair>& pairs, const std::vector<std::size_t>& order,
                 std::size_t begin, std::size_t end, const ModelConfig& config);

/// Batched forward graph over S samples. Parameters become graph leaves in
/// registry order; `attention` holds the softmax nodes layer-major then
/// head; `local_map` is the 1-channel convolution output (or -1).
struct ForwardGraph {
    ad::Graph g;
    int output = -1;
    int local_map = -1;
    std::vector<int> attention;
    std::vector<int> layer_input;
    std::vector<std::pair<std::string, int>> params;
    long batch = 0;
};

ForwardGraph build_forward(const ModelWeights& w, const Matrix& points, const Matrix& flat);
ForwardGraph build_forward(const ModelWeights& w, const Batch& batch);

void save_weights(const ModelWeights& w, const std::string& path);
ModelWeights load_weights(const std::string& path);

} // namespace galien::nn
