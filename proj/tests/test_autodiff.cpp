#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "galien/autodiff.hpp"
#include "galien/errors.hpp"
#include "support/oracles.hpp"

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

using galien::ad::Graph;
using Matrix = Eigen::MatrixXd;

namespace {

Matrix random_matrix(long rows, long cols, std::uint64_t seed, double lo = -1.0,
                     double hi = 1.0) {
    oracle::TestRng rng(seed);
    Matrix m(rows, cols);
    for (long c = 0; c < cols; ++c) {
        for (long r = 0; r < rows; ++r) m(r, c) = rng.uniform(lo, hi);
    }
    return m;
}

/// Keeps every entry at least 0.05 away from zero so the rectifier kink
/// cannot corrupt finite differences.
Matrix random_matrix_off_zero(long rows, long cols, std::uint64_t seed) {
    Matrix m = random_matrix(rows, cols, seed);
    for (long c = 0; c < cols; ++c) {
        for (long r = 0; r < rows; ++r) {
            if (std::abs(m(r, c)) < 0.05) m(r, c) += m(r, c) >= 0.0 ? 0.1 : -0.1;
        }
    }
    return m;
}

using Builder = std::function<int(Graph&, const std::vector<int>&)>;

double loss_value(const Builder& build, const std::vector<Matrix>& leaves) {
    Graph g;
    std::vector<int> ids;
    ids.reserve(leaves.size());
    for (const Matrix& m : leaves) ids.push_back(g.param(m));
    int root = build(g, ids);
    return g.value(root)(0, 0);
}

/// Central finite differences on every entry of every leaf against the
/// reverse-mode gradient of the scalar root the builder produces.
void fd_check(const Builder& build, const std::vector<Matrix>& leaves, double tol = 1e-5,
              double h = 1e-5) {
    Graph g;
    std::vector<int> ids;
    ids.reserve(leaves.size());
    for (const Matrix& m : leaves) ids.push_back(g.param(m));
    int root = build(g, ids);
    g.backward(root);
    for (std::size_t li = 0; li < leaves.size(); ++li) {
        Matrix grad = g.grad(ids[li]);
        REQUIRE(grad.rows() == leaves[li].rows());
        REQUIRE(grad.cols() == leaves[li].cols());
        for (long c = 0; c < leaves[li].cols(); ++c) {
            for (long r = 0; r < leaves[li].rows(); ++r) {
                std::vector<Matrix> pert = leaves;
                pert[li](r, c) += h;
                double up = loss_value(build, pert);
                pert[li](r, c) -= 2.0 * h;
                double down = loss_value(build, pert);
                double fd = (up - down) / (2.0 * h);
                double denom = std::max({std::abs(fd), std::abs(grad(r, c)), 1e-6});
                CHECK(std::abs(fd - grad(r, c)) / denom < tol);
            }
        }
    }
}

} // namespace

TEST_CASE("sum and difference of matrices differentiate to identity flows") {
    Matrix target = random_matrix(3, 4, 100);
    Builder build = [&](Graph& g, const std::vector<int>& ids) {
        return g.mse_against(g.add(ids[0], ids[1]), target);
    };
    std::vector<Matrix> leaves{random_matrix(3, 4, 1), random_matrix(3, 4, 2)};
    Graph g;
    int a = g.param(leaves[0]);
    int b = g.param(leaves[1]);
    CHECK(g.value(g.add(a, b)) == leaves[0] + leaves[1]);
    fd_check(build, leaves);
}

TEST_CASE("constant offset shifts values and passes gradients through") {
    Matrix c = random_matrix(2, 5, 3);
    Matrix target = random_matrix(2, 5, 101);
    Builder build = [&](Graph& g, const std::vector<int>& ids) {
        return g.mse_against(g.add_const(ids[0], c), target);
    };
    std::vector<Matrix> leaves{random_matrix(2, 5, 4)};
    Graph g;
    int a = g.param(leaves[0]);
    CHECK(g.value(g.add_const(a, c)) == leaves[0] + c);
    fd_check(build, leaves);
}

TEST_CASE("scalar scaling differentiates") {
    Matrix target = random_matrix(3, 3, 102);
    Builder build = [&](Graph& g, const std::vector<int>& ids) {
        return g.mse_against(g.scale(ids[0], -2.5), target);
    };
    fd_check(build, {random_matrix(3, 3, 5)});
}

TEST_CASE("matrix product value and gradients") {
    std::vector<Matrix> leaves{random_matrix(3, 4, 6), random_matrix(4, 2, 7)};
    Graph g;
    int a = g.param(leaves[0]);
    int b = g.param(leaves[1]);
    CHECK(g.value(g.matmul(a, b)).isApprox(leaves[0] * leaves[1], 1e-15));
    Matrix target = random_matrix(3, 2, 103);
    fd_check([&](Graph& gg, const std::vector<int>& ids) {
        return gg.mse_against(gg.matmul(ids[0], ids[1]), target);
    }, leaves);
}

TEST_CASE("transposed-left product value and gradients") {
    std::vector<Matrix> leaves{random_matrix(4, 3, 8), random_matrix(4, 2, 9)};
    Graph g;
    int a = g.param(leaves[0]);
    int b = g.param(leaves[1]);
    CHECK(g.value(g.matmul_ta(a, b)).isApprox(leaves[0].transpose() * leaves[1], 1e-15));
    Matrix target = random_matrix(3, 2, 104);
    fd_check([&](Graph& gg, const std::vector<int>& ids) {
        return gg.mse_against(gg.matmul_ta(ids[0], ids[1]), target);
    }, leaves);
}

TEST_CASE("column-broadcast bias adds to every column") {
    std::vector<Matrix> leaves{random_matrix(3, 5, 10), random_matrix(3, 1, 11)};
    Graph g;
    int a = g.param(leaves[0]);
    int b = g.param(leaves[1]);
    Matrix v = g.value(g.add_col_broadcast(a, b));
    for (long j = 0; j < 5; ++j) {
        CHECK(v.col(j) == leaves[0].col(j) + leaves[1].col(0));
    }
    Matrix target = random_matrix(3, 5, 105);
    fd_check([&](Graph& gg, const std::vector<int>& ids) {
        return gg.mse_against(gg.add_col_broadcast(ids[0], ids[1]), target);
    }, leaves);
}

TEST_CASE("rectifier clips negatives and gates gradients") {
    std::vector<Matrix> leaves{random_matrix_off_zero(4, 4, 12)};
    Graph g;
    int a = g.param(leaves[0]);
    Matrix v = g.value(g.relu(a));
    CHECK(v == leaves[0].cwiseMax(0.0));
    Matrix target = random_matrix(4, 4, 106);
    fd_check([&](Graph& gg, const std::vector<int>& ids) {
        return gg.mse_against(gg.relu(ids[0]), target);
    }, leaves);
}

TEST_CASE("columnwise softmax matches the loop oracle and normalizes") {
    std::vector<Matrix> leaves{random_matrix(5, 6, 13, -3.0, 3.0)};
    Graph g;
    int a = g.param(leaves[0]);
    Matrix v = g.value(g.softmax_cols(a));
    CHECK(v.isApprox(oracle::softmax_cols(leaves[0]), 1e-12));
    for (long j = 0; j < v.cols(); ++j) {
        CHECK(v.col(j).sum() == doctest::Approx(1.0).epsilon(1e-12));
    }
    Matrix target = random_matrix(5, 6, 107);
    fd_check([&](Graph& gg, const std::vector<int>& ids) {
        return gg.mse_against(gg.softmax_cols(ids[0]), target);
    }, leaves);
}

TEST_CASE("column normalization matches the loop oracle") {
    std::vector<Matrix> leaves{random_matrix(6, 4, 14, -2.0, 5.0)};
    Graph g;
    int a = g.param(leaves[0]);
    Matrix v = g.value(g.norm_cols(a, 1e-8));
    CHECK(v.isApprox(oracle::norm_cols(leaves[0], 1e-8), 1e-12));
    for (long j = 0; j < v.cols(); ++j) {
        CHECK(std::abs(v.col(j).mean()) < 1e-8);
        double var = v.col(j).squaredNorm() / static_cast<double>(v.rows()) -
                     v.col(j).mean() * v.col(j).mean();
        CHECK(var == doctest::Approx(1.0).epsilon(1e-6));
    }
    Matrix target = random_matrix(6, 4, 108);
    fd_check([&](Graph& gg, const std::vector<int>& ids) {
        return gg.mse_against(gg.norm_cols(ids[0], 1e-8), target);
    }, leaves, 1e-4);
}

TEST_CASE("per-row affine maps value and gradients") {
    std::vector<Matrix> leaves{random_matrix(4, 5, 15), random_matrix(4, 1, 16),
                               random_matrix(4, 1, 17)};
    Graph g;
    int a = g.param(leaves[0]);
    int s = g.param(leaves[1]);
    int t = g.param(leaves[2]);
    Matrix v = g.value(g.affine_rows(a, s, t));
    for (long j = 0; j < 5; ++j) {
        for (long i = 0; i < 4; ++i) {
            CHECK(v(i, j) == doctest::Approx(leaves[0](i, j) * leaves[1](i, 0) +
                                             leaves[2](i, 0)).epsilon(1e-15));
        }
    }
    Matrix target = random_matrix(4, 5, 109);
    fd_check([&](Graph& gg, const std::vector<int>& ids) {
        return gg.mse_against(gg.affine_rows(ids[0], ids[1], ids[2]), target);
    }, leaves);
}

TEST_CASE("row concatenation stacks and splits gradients") {
    std::vector<Matrix> leaves{random_matrix(2, 3, 18), random_matrix(4, 3, 19),
                               random_matrix(1, 3, 20)};
    Graph g;
    std::vector<int> ids{g.param(leaves[0]), g.param(leaves[1]), g.param(leaves[2])};
    Matrix v = g.value(g.concat_rows(ids));
    REQUIRE(v.rows() == 7);
    CHECK(v.topRows(2) == leaves[0]);
    CHECK(v.middleRows(2, 4) == leaves[1]);
    CHECK(v.bottomRows(1) == leaves[2]);
    Matrix target = random_matrix(7, 3, 110);
    fd_check([&](Graph& gg, const std::vector<int>& pids) {
        return gg.mse_against(gg.concat_rows(pids), target);
    }, leaves);
}

TEST_CASE("column selection gathers and scatters") {
    std::vector<Matrix> leaves{random_matrix(3, 6, 21)};
    std::vector<long> cols{4, 0, 4, 2};
    Graph g;
    int a = g.param(leaves[0]);
    Matrix v = g.value(g.select_cols(a, cols));
    REQUIRE(v.cols() == 4);
    for (std::size_t k = 0; k < cols.size(); ++k) {
        CHECK(v.col(static_cast<long>(k)) == leaves[0].col(cols[k]));
    }
    Matrix target = random_matrix(3, 4, 111);
    fd_check([&](Graph& gg, const std::vector<int>& ids) {
        return gg.mse_against(gg.select_cols(ids[0], cols), target);
    }, leaves);
}

TEST_CASE("row slices view and route gradients") {
    std::vector<Matrix> leaves{random_matrix(6, 3, 22)};
    Graph g;
    int a = g.param(leaves[0]);
    Matrix v = g.value(g.slice_rows(a, 2, 3));
    CHECK(v == leaves[0].middleRows(2, 3));
    Matrix target = random_matrix(3, 3, 112);
    fd_check([&](Graph& gg, const std::vector<int>& ids) {
        return gg.mse_against(gg.slice_rows(ids[0], 2, 3), target);
    }, leaves);
}

TEST_CASE("reshape reinterprets storage column-major") {
    std::vector<Matrix> leaves{random_matrix(4, 6, 23)};
    Graph g;
    int a = g.param(leaves[0]);
    Matrix v = g.value(g.reshape(a, 8, 3));
    Matrix expect = Eigen::Map<const Matrix>(leaves[0].data(), 8, 3);
    CHECK(v == expect);
    Matrix target = random_matrix(8, 3, 113);
    fd_check([&](Graph& gg, const std::vector<int>& ids) {
        return gg.mse_against(gg.reshape(ids[0], 8, 3), target);
    }, leaves);
}

TEST_CASE("blockwise transposed product works per column block") {
    long block = 3;
    std::vector<Matrix> leaves{random_matrix(4, 6, 24), random_matrix(4, 6, 25)};
    Graph g;
    int a = g.param(leaves[0]);
    int b = g.param(leaves[1]);
    Matrix v = g.value(g.block_matmul_ta(a, b, block));
    REQUIRE(v.rows() == block);
    REQUIRE(v.cols() == 6);
    for (int s = 0; s < 2; ++s) {
        Matrix expect = leaves[0].middleCols(s * block, block).transpose() *
                        leaves[1].middleCols(s * block, block);
        CHECK(v.middleCols(s * block, block).isApprox(expect, 1e-14));
    }
    Matrix target = random_matrix(3, 6, 114);
    fd_check([&](Graph& gg, const std::vector<int>& ids) {
        return gg.mse_against(gg.block_matmul_ta(ids[0], ids[1], block), target);
    }, leaves);
}

TEST_CASE("blockwise product works per column block") {
    long block = 3;
    std::vector<Matrix> leaves{random_matrix(5, 6, 26), random_matrix(3, 6, 27)};
    Graph g;
    int a = g.param(leaves[0]);
    int b = g.param(leaves[1]);
    Matrix v = g.value(g.block_matmul(a, b, block));
    REQUIRE(v.rows() == 5);
    for (int s = 0; s < 2; ++s) {
        Matrix expect =
            leaves[0].middleCols(s * 3, 3) * leaves[1].middleCols(s * 3, 3);
        CHECK(v.middleCols(s * 3, 3).isApprox(expect, 1e-14));
    }
    Matrix target = random_matrix(5, 6, 115);
    fd_check([&](Graph& gg, const std::vector<int>& ids) {
        return gg.mse_against(gg.block_matmul(ids[0], ids[1], block), target);
    }, leaves);
}

TEST_CASE("padded 3x3 convolution matches the sliding-window oracle") {
    long h = 3;
    long w = 4;
    long channels = 2;
    long samples = 2;
    Matrix image(h * w, samples);
    for (long s = 0; s < samples; ++s) {
        Matrix one = random_matrix(h, w, 28 + static_cast<std::uint64_t>(s));
        for (long i = 0; i < h; ++i) {
            for (long j = 0; j < w; ++j) image(i * w + j, s) = one(i, j);
        }
    }
    std::vector<Matrix> leaves{image, random_matrix(channels, 9, 30),
                               random_matrix(channels, 1, 31)};
    Graph g;
    int x = g.param(leaves[0]);
    int k = g.param(leaves[1]);
    int b = g.param(leaves[2]);
    Matrix v = g.value(g.conv3x3(x, k, b, h, w));
    REQUIRE(v.rows() == channels);
    REQUIRE(v.cols() == samples * h * w);
    for (long s = 0; s < samples; ++s) {
        Matrix one(h, w);
        for (long i = 0; i < h; ++i) {
            for (long j = 0; j < w; ++j) one(i, j) = image(i * w + j, s);
        }
        Matrix expect = oracle::conv3x3(one, leaves[1], leaves[2]);
        CHECK(v.middleCols(s * h * w, h * w).isApprox(expect, 1e-13));
    }
    Matrix target = random_matrix(channels, samples * h * w, 116);
    fd_check([&](Graph& gg, const std::vector<int>& ids) {
        return gg.mse_against(gg.conv3x3(ids[0], ids[1], ids[2], h, w), target);
    }, leaves);
}

TEST_CASE("sum of all entries reduces to a scalar") {
    std::vector<Matrix> leaves{random_matrix(3, 4, 32)};
    Graph g;
    int a = g.param(leaves[0]);
    int s = g.sum_all(a);
    CHECK(g.value(s)(0, 0) == doctest::Approx(leaves[0].sum()).epsilon(1e-14));
    fd_check([&](Graph& gg, const std::vector<int>& ids) {
        return gg.sum_all(ids[0]);
    }, leaves);
}

TEST_CASE("mean squared error against a target") {
    Matrix target = random_matrix(3, 4, 33);
    std::vector<Matrix> leaves{random_matrix(3, 4, 34)};
    Graph g;
    int a = g.param(leaves[0]);
    int l = g.mse_against(a, target);
    double expect = (leaves[0] - target).squaredNorm() / 12.0;
    CHECK(g.value(l)(0, 0) == doctest::Approx(expect).epsilon(1e-14));
    fd_check([&](Graph& gg, const std::vector<int>& ids) {
        return gg.mse_against(ids[0], target);
    }, leaves);
}

TEST_CASE("gradient of an unused leaf is a zero matrix of its shape") {
    Graph g;
    int a = g.param(random_matrix(2, 3, 35));
    int b = g.param(random_matrix(2, 3, 36));
    g.backward(g.mse_against(a, Matrix::Zero(2, 3)));
    const Matrix& gb = g.grad(b);
    CHECK(gb.rows() == 2);
    CHECK(gb.cols() == 3);
    CHECK(gb == Matrix::Zero(2, 3));
}

TEST_CASE("gradients accumulate through a reused node") {
    Matrix x = random_matrix(3, 3, 37);
    std::vector<Matrix> leaves{x};
    Graph g;
    int a = g.param(x);
    int y = g.add(a, a);
    g.backward(g.sum_all(y));
    CHECK(g.grad(a) == Matrix::Constant(3, 3, 2.0));
    Matrix target = random_matrix(3, 3, 117);
    fd_check([&](Graph& gg, const std::vector<int>& ids) {
        int s = gg.add(ids[0], ids[0]);
        return gg.mse_against(gg.matmul(s, ids[0]), target);
    }, leaves, 1e-4);
}

TEST_CASE("shape mismatches are rejected") {
    Graph g;
    int a = g.param(random_matrix(2, 3, 38));
    int b = g.param(random_matrix(3, 2, 39));
    CHECK_THROWS_AS(g.add(a, b), galien::Error);
    CHECK_THROWS_AS(g.matmul(a, a), galien::Error);
}

TEST_CASE("tape survives being moved") {
    Graph g;
    int a = g.param(random_matrix(2, 2, 40));
    int root = g.sum_all(a);
    Graph moved = std::move(g);
    moved.backward(root);
    CHECK(moved.grad(a) == Matrix::Constant(2, 2, 1.0));
}

TEST_CASE("node count tracks construction") {
    Graph g;
    std::size_t before = g.node_count();
    int a = g.param(random_matrix(2, 2, 41));
    g.relu(a);
    CHECK(g.node_count() == before + 2);
}
