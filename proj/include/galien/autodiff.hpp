#pragma once

#include <Eigen/Core>

#include <functional>
#include <vector>

namespace galien::ad {

using Matrix = Eigen::MatrixXd;

/// Reverse-mode tape over dense double matrices. Nodes are created in
/// topological order by construction; backward() walks the tape in reverse
/// and accumulates into the gradients of every node that (transitively)
/// depends on a parameter. Inputs never receive gradients unless created
/// with param(), which keeps the heavy convolution input backward off the
/// training path.
///
/// Batched operations follow one convention: a batch of S samples lives in a
/// single matrix as S horizontal blocks of equal width. block_matmul and
/// block_matmul_ta apply per-block products; everything else is either
/// columnwise or elementwise and needs no special casing.
class Graph {
public:
    Graph() = default;
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;
    Graph(Graph&&) = default;
    Graph& operator=(Graph&&) = default;

    int input(Matrix value);
    int param(Matrix value);

    const Matrix& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }

    /// Gradient accumulated by the last backward(). Allocates a zero matrix
    /// for nodes the root never reached.
    const Matrix& grad(int id);

    int add(int a, int b);
    int add_const(int a, const Matrix& c);
    int scale(int a, double s);
    int matmul(int a, int b);
    int matmul_ta(int a, int b); // transpose(A) * B
    int add_col_broadcast(int a, int bias);
    int relu(int a);
    int softmax_cols(int a);
    /// Columnwise (x - mean) / sqrt(var + eps). Population variance.
    int norm_cols(int a, double eps = 1e-8);
    /// out(r, c) = scale(r) * a(r, c) + shift(r); scale/shift are r x 1.
    int affine_rows(int a, int scale, int shift);
    int concat_rows(const std::vector<int>& parts);
    int select_cols(int a, std::vector<long> cols);
    int slice_rows(int a, long start, long count);
    /// Column-major reinterpretation to rows x cols (same element order).
    int reshape(int a, long rows, long cols);
    /// Per block s: out_s = transpose(A_s) * B_s, blocks of `block` columns.
    int block_matmul_ta(int a, int b, long block);
    /// Per block s: out_s = A_s * B_s with A_s (r x block), B_s (block x block).
    int block_matmul(int a, int b, long block);
    /// 3x3 same-padding convolution over a batch of h x w single-channel
    /// images. x: (h*w) x S with row index i*w + j (row-major pixels);
    /// kernels: C x 9 with column index di*3 + dj; bias: C x 1.
    /// Output: C x (S*h*w) with column index s*h*w + i*w + j.
    int conv3x3(int x, int kernels, int bias, long h, long w);
    int sum_all(int a);
    /// Mean squared difference against a constant target, as a 1 x 1 node.
    int mse_against(int a, Matrix target);

    void backward(int root);

    std::size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        Matrix value;
        Matrix grad;
        bool needs_grad = false;
        std::function<void(Graph&)> back;
    };

    int push(Matrix value, bool needs_grad, std::function<void(Graph&)> back);
    bool needs(int id) const { return nodes_[static_cast<std::size_t>(id)].needs_grad; }
    Matrix& val(int id) { return nodes_[static_cast<std::size_t>(id)].value; }
    Matrix& grad_ref(int id);
    bool touched(int id) const { return nodes_[static_cast<std::size_t>(id)].grad.size() > 0; }

    template <class E>
    void accum(int id, const Eigen::MatrixBase<E>& g) {
        grad_ref(id).noalias() += g;
    }

    std::vector<Node> nodes_;
};

} // namespace galien::ad
