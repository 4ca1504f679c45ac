#include "galien/autodiff.hpp"

#include "galien/errors.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace galien::ad {

namespace {

void check(bool ok, const std::string& what) {
    if (!ok) raise(Errc::shape_mismatch, what);
}

} // namespace

int Graph::push(Matrix value, bool needs_grad, std::function<void(Graph&)> back) {
    nodes_.push_back(Node{std::move(value), Matrix(), needs_grad, std::move(back)});
    return static_cast<int>(nodes_.size()) - 1;
}

Matrix& Graph::grad_ref(int id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
    return n.grad;
}

const Matrix& Graph::grad(int id) {
    return grad_ref(id);
}

int Graph::input(Matrix value) {
    return push(std::move(value), false, nullptr);
}

int Graph::param(Matrix value) {
    return push(std::move(value), true, nullptr);
}

int Graph::add(int a, int b) {
    check(value(a).rows() == value(b).rows() && value(a).cols() == value(b).cols(),
          "add: operand shapes differ");
    int id = push(value(a) + value(b), needs(a) || needs(b), nullptr);
    nodes_.back().back = [a, b, id](Graph& gr) {
        const Matrix& g = gr.grad_ref(id);
        if (gr.needs(a)) gr.accum(a, g);
        if (gr.needs(b)) gr.accum(b, g);
    };
    return id;
}

int Graph::add_const(int a, const Matrix& c) {
    check(value(a).rows() == c.rows() && value(a).cols() == c.cols(),
          "add_const: operand shapes differ");
    int id = push(value(a) + c, needs(a), nullptr);
    nodes_.back().back = [a, id](Graph& gr) {
        if (gr.needs(a)) gr.accum(a, gr.grad_ref(id));
    };
    return id;
}

int Graph::scale(int a, double s) {
    int id = push(value(a) * s, needs(a), nullptr);
    nodes_.back().back = [a, s, id](Graph& gr) {
        if (gr.needs(a)) gr.accum(a, gr.grad_ref(id) * s);
    };
    return id;
}

int Graph::matmul(int a, int b) {
    check(value(a).cols() == value(b).rows(), "matmul: inner dimensions differ");
    int id = push(value(a) * value(b), needs(a) || needs(b), nullptr);
    nodes_.back().back = [a, b, id](Graph& gr) {
        const Matrix& g = gr.grad_ref(id);
        if (gr.needs(a)) gr.accum(a, g * gr.value(b).transpose());
        if (gr.needs(b)) gr.accum(b, gr.value(a).transpose() * g);
    };
    return id;
}

int Graph::matmul_ta(int a, int b) {
    check(value(a).rows() == value(b).rows(), "matmul_ta: leading dimensions differ");
    int id = push(value(a).transpose() * value(b), needs(a) || needs(b), nullptr);
    nodes_.back().back = [a, b, id](Graph& gr) {
        const Matrix& g = gr.grad_ref(id);
        if (gr.needs(a)) gr.accum(a, gr.value(b) * g.transpose());
        if (gr.needs(b)) gr.accum(b, gr.value(a) * g);
    };
    return id;
}

int Graph::add_col_broadcast(int a, int bias) {
    check(value(bias).cols() == 1 && value(bias).rows() == value(a).rows(),
          "add_col_broadcast: bias must be rows(a) x 1");
    Matrix v = value(a);
    v.colwise() += Eigen::VectorXd(value(bias).col(0));
    int id = push(std::move(v), needs(a) || needs(bias), nullptr);
    nodes_.back().back = [a, bias, id](Graph& gr) {
        const Matrix& g = gr.grad_ref(id);
        if (gr.needs(a)) gr.accum(a, g);
        if (gr.needs(bias)) gr.accum(bias, g.rowwise().sum());
    };
    return id;
}

int Graph::relu(int a) {
    int id = push(value(a).cwiseMax(0.0), needs(a), nullptr);
    nodes_.back().back = [a, id](Graph& gr) {
        if (!gr.needs(a)) return;
        const Matrix& g = gr.grad_ref(id);
        const Matrix& x = gr.value(a);
        gr.accum(a, (g.array() * (x.array() > 0.0).cast<double>()).matrix());
    };
    return id;
}

int Graph::softmax_cols(int a) {
    Matrix y = value(a);
    for (long c = 0; c < y.cols(); ++c) {
        double mx = y.col(c).maxCoeff();
        y.col(c) = (y.col(c).array() - mx).exp();
        y.col(c) /= y.col(c).sum();
    }
    int id = push(std::move(y), needs(a), nullptr);
    nodes_.back().back = [a, id](Graph& gr) {
        if (!gr.needs(a)) return;
        const Matrix& g = gr.grad_ref(id);
        const Matrix& y = gr.value(id);
        Eigen::RowVectorXd dots = (y.array() * g.array()).colwise().sum();
        gr.accum(a, (y.array() * (g.array().rowwise() - dots.array())).matrix());
    };
    return id;
}

int Graph::norm_cols(int a, double eps) {
    const Matrix& x = value(a);
    Eigen::RowVectorXd mean = x.colwise().mean();
    Matrix centered = x.rowwise() - mean;
    Eigen::RowVectorXd var = centered.array().square().colwise().mean();
    Eigen::RowVectorXd inv_s = (var.array() + eps).sqrt().inverse();
    Matrix y = (centered.array().rowwise() * inv_s.array()).matrix();
    int id = push(std::move(y), needs(a), nullptr);
    nodes_.back().back = [a, id, inv_s](Graph& gr) {
        if (!gr.needs(a)) return;
        const Matrix& g = gr.grad_ref(id);
        const Matrix& y = gr.value(id);
        Eigen::RowVectorXd c1 = g.colwise().mean();
        Eigen::RowVectorXd c2 = (g.array() * y.array()).colwise().mean();
        Matrix dx = (((g.array().rowwise() - c1.array()) -
                      (y.array().rowwise() * c2.array()))
                         .rowwise() *
                     inv_s.array())
                        .matrix();
        gr.accum(a, dx);
    };
    return id;
}

int Graph::affine_rows(int a, int scale, int shift) {
    check(value(scale).cols() == 1 && value(scale).rows() == value(a).rows(),
          "affine_rows: scale must be rows(a) x 1");
    check(value(shift).cols() == 1 && value(shift).rows() == value(a).rows(),
          "affine_rows: shift must be rows(a) x 1");
    Matrix v = ((value(a).array().colwise() * value(scale).col(0).array()).colwise() +
                value(shift).col(0).array())
                   .matrix();
    int id = push(std::move(v), needs(a) || needs(scale) || needs(shift), nullptr);
    nodes_.back().back = [a, scale, shift, id](Graph& gr) {
        const Matrix& g = gr.grad_ref(id);
        if (gr.needs(a)) {
            gr.accum(a, (g.array().colwise() * gr.value(scale).col(0).array()).matrix());
        }
        if (gr.needs(scale)) {
            gr.accum(scale, (g.array() * gr.value(a).array()).rowwise().sum().matrix());
        }
        if (gr.needs(shift)) gr.accum(shift, g.rowwise().sum());
    };
    return id;
}

int Graph::concat_rows(const std::vector<int>& parts) {
    check(!parts.empty(), "concat_rows: no operands");
    long cols = value(parts[0]).cols();
    long rows = 0;
    bool ng = false;
    for (int p : parts) {
        check(value(p).cols() == cols, "concat_rows: column counts differ");
        rows += value(p).rows();
        ng = ng || needs(p);
    }
    Matrix v(rows, cols);
    long at = 0;
    for (int p : parts) {
        v.middleRows(at, value(p).rows()) = value(p);
        at += value(p).rows();
    }
    int id = push(std::move(v), ng, nullptr);
    std::vector<int> ps = parts;
    nodes_.back().back = [ps, id](Graph& gr) {
        const Matrix& g = gr.grad_ref(id);
        long at = 0;
        for (int p : ps) {
            long r = gr.value(p).rows();
            if (gr.needs(p)) gr.accum(p, g.middleRows(at, r));
            at += r;
        }
    };
    return id;
}

int Graph::select_cols(int a, std::vector<long> cols) {
    const Matrix& x = value(a);
    Matrix v(x.rows(), static_cast<long>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) {
        check(cols[k] >= 0 && cols[k] < x.cols(), "select_cols: index out of range");
        v.col(static_cast<long>(k)) = x.col(cols[k]);
    }
    int id = push(std::move(v), needs(a), nullptr);
    nodes_.back().back = [a, cols = std::move(cols), id](Graph& gr) {
        if (!gr.needs(a)) return;
        const Matrix& g = gr.grad_ref(id);
        Matrix& da = gr.grad_ref(a);
        for (std::size_t k = 0; k < cols.size(); ++k) {
            da.col(cols[k]) += g.col(static_cast<long>(k));
        }
    };
    return id;
}

int Graph::slice_rows(int a, long start, long count) {
    check(start >= 0 && count >= 1 && start + count <= value(a).rows(),
          "slice_rows: range out of bounds");
    int id = push(value(a).middleRows(start, count), needs(a), nullptr);
    nodes_.back().back = [a, start, count, id](Graph& gr) {
        if (!gr.needs(a)) return;
        gr.grad_ref(a).middleRows(start, count) += gr.grad_ref(id);
    };
    return id;
}

int Graph::reshape(int a, long rows, long cols) {
    check(rows * cols == value(a).size(), "reshape: element count differs");
    Matrix v = Eigen::Map<const Matrix>(value(a).data(), rows, cols);
    int id = push(std::move(v), needs(a), nullptr);
    nodes_.back().back = [a, id](Graph& gr) {
        if (!gr.needs(a)) return;
        const Matrix& g = gr.grad_ref(id);
        Matrix& da = gr.grad_ref(a);
        da += Eigen::Map<const Matrix>(g.data(), da.rows(), da.cols());
    };
    return id;
}

int Graph::block_matmul_ta(int a, int b, long block) {
    const Matrix& A = value(a);
    const Matrix& B = value(b);
    check(A.rows() == B.rows() && A.cols() == B.cols(), "block_matmul_ta: shapes differ");
    check(block >= 1 && A.cols() % block == 0, "block_matmul_ta: width not a block multiple");
    long nblocks = A.cols() / block;
    Matrix v(block, A.cols());
    for (long s = 0; s < nblocks; ++s) {
        v.middleCols(s * block, block).noalias() =
            A.middleCols(s * block, block).transpose() * B.middleCols(s * block, block);
    }
    int id = push(std::move(v), needs(a) || needs(b), nullptr);
    nodes_.back().back = [a, b, block, nblocks, id](Graph& gr) {
        const Matrix& g = gr.grad_ref(id);
        const Matrix& A = gr.value(a);
        const Matrix& B = gr.value(b);
        if (gr.needs(a)) {
            Matrix& da = gr.grad_ref(a);
            for (long s = 0; s < nblocks; ++s) {
                da.middleCols(s * block, block).noalias() +=
                    B.middleCols(s * block, block) * g.middleCols(s * block, block).transpose();
            }
        }
        if (gr.needs(b)) {
            Matrix& db = gr.grad_ref(b);
            for (long s = 0; s < nblocks; ++s) {
                db.middleCols(s * block, block).noalias() +=
                    A.middleCols(s * block, block) * g.middleCols(s * block, block);
            }
        }
    };
    return id;
}

int Graph::block_matmul(int a, int b, long block) {
    const Matrix& A = value(a);
    const Matrix& B = value(b);
    check(B.rows() == block, "block_matmul: rows(b) must equal block");
    check(A.cols() == B.cols(), "block_matmul: widths differ");
    check(block >= 1 && A.cols() % block == 0, "block_matmul: width not a block multiple");
    long nblocks = A.cols() / block;
    Matrix v(A.rows(), A.cols());
    for (long s = 0; s < nblocks; ++s) {
        v.middleCols(s * block, block).noalias() =
            A.middleCols(s * block, block) * B.middleCols(s * block, block);
    }
    int id = push(std::move(v), needs(a) || needs(b), nullptr);
    nodes_.back().back = [a, b, block, nblocks, id](Graph& gr) {
        const Matrix& g = gr.grad_ref(id);
        const Matrix& A = gr.value(a);
        const Matrix& B = gr.value(b);
        if (gr.needs(a)) {
            Matrix& da = gr.grad_ref(a);
            for (long s = 0; s < nblocks; ++s) {
                da.middleCols(s * block, block).noalias() +=
                    g.middleCols(s * block, block) * B.middleCols(s * block, block).transpose();
            }
        }
        if (gr.needs(b)) {
            Matrix& db = gr.grad_ref(b);
            for (long s = 0; s < nblocks; ++s) {
                db.middleCols(s * block, block).noalias() +=
                    A.middleCols(s * block, block).transpose() * g.middleCols(s * block, block);
            }
        }
    };
    return id;
}

int Graph::conv3x3(int x, int kernels, int bias, long h, long w) {
    const Matrix& X = value(x);
    const Matrix& K = value(kernels);
    const Matrix& B = value(bias);
    check(X.rows() == h * w, "conv3x3: input rows must be h*w");
    check(K.cols() == 9, "conv3x3: kernels must have 9 columns");
    check(B.rows() == K.rows() && B.cols() == 1, "conv3x3: bias must be C x 1");
    long channels = K.rows();
    long batch = X.cols();
    Matrix v(channels, batch * h * w);
#pragma omp parallel for schedule(static)
    for (long s = 0; s < batch; ++s) {
        for (long c = 0; c < channels; ++c) {
            for (long i = 0; i < h; ++i) {
                for (long j = 0; j < w; ++j) {
                    double acc = B(c, 0);
                    for (long di = 0; di < 3; ++di) {
                        long ii = i + di - 1;
                        if (ii < 0 || ii >= h) continue;
                        for (long dj = 0; dj < 3; ++dj) {
                            long jj = j + dj - 1;
                            if (jj < 0 || jj >= w) continue;
                            acc += K(c, di * 3 + dj) * X(ii * w + jj, s);
                        }
                    }
                    v(c, s * h * w + i * w + j) = acc;
                }
            }
        }
    }
    int id = push(std::move(v), needs(x) || needs(kernels) || needs(bias), nullptr);
    nodes_.back().back = [x, kernels, bias, h, w, channels, batch, id](Graph& gr) {
        const Matrix& g = gr.grad_ref(id);
        const Matrix& X = gr.value(x);
        const Matrix& K = gr.value(kernels);
        if (gr.needs(kernels)) {
            Matrix& dk = gr.grad_ref(kernels);
#pragma omp parallel for schedule(static)
            for (long c = 0; c < channels; ++c) {
                for (long s = 0; s < batch; ++s) {
                    for (long i = 0; i < h; ++i) {
                        for (long j = 0; j < w; ++j) {
                            double go = g(c, s * h * w + i * w + j);
                            if (go == 0.0) continue;
                            for (long di = 0; di < 3; ++di) {
                                long ii = i + di - 1;
                                if (ii < 0 || ii >= h) continue;
                                for (long dj = 0; dj < 3; ++dj) {
                                    long jj = j + dj - 1;
                                    if (jj < 0 || jj >= w) continue;
                                    dk(c, di * 3 + dj) += go * X(ii * w + jj, s);
                                }
                            }
                        }
                    }
                }
            }
        }
        if (gr.needs(bias)) {
            Matrix& db = gr.grad_ref(bias);
            for (long c = 0; c < channels; ++c) db(c, 0) += g.row(c).sum();
        }
        if (gr.needs(x)) {
            Matrix& dx = gr.grad_ref(x);
#pragma omp parallel for schedule(static)
            for (long s = 0; s < batch; ++s) {
                for (long c = 0; c < channels; ++c) {
                    for (long i = 0; i < h; ++i) {
                        for (long j = 0; j < w; ++j) {
                            double go = g(c, s * h * w + i * w + j);
                            if (go == 0.0) continue;
                            for (long di = 0; di < 3; ++di) {
                                long ii = i + di - 1;
                                if (ii < 0 || ii >= h) continue;
                                for (long dj = 0; dj < 3; ++dj) {
                                    long jj = j + dj - 1;
                                    if (jj < 0 || jj >= w) continue;
                                    dx(ii * w + jj, s) += K(c, di * 3 + dj) * go;
                                }
                            }
                        }
                    }
                }
            }
        }
    };
    return id;
}

int Graph::sum_all(int a) {
    Matrix v(1, 1);
    v(0, 0) = value(a).sum();
    int id = push(std::move(v), needs(a), nullptr);
    nodes_.back().back = [a, id](Graph& gr) {
        if (!gr.needs(a)) return;
        double g = gr.grad_ref(id)(0, 0);
        gr.grad_ref(a).array() += g;
    };
    return id;
}

int Graph::mse_against(int a, Matrix target) {
    check(value(a).rows() == target.rows() && value(a).cols() == target.cols(),
          "mse_against: target shape differs");
    Matrix diff = value(a) - target;
    Matrix v(1, 1);
    v(0, 0) = diff.array().square().sum() / static_cast<double>(diff.size());
    int id = push(std::move(v), needs(a), nullptr);
    nodes_.back().back = [a, id, target = std::move(target)](Graph& gr) {
        if (!gr.needs(a)) return;
        double g = gr.grad_ref(id)(0, 0);
        double scale = 2.0 * g / static_cast<double>(target.size());
        gr.accum(a, (gr.value(a) - target) * scale);
    };
    return id;
}

void Graph::backward(int root) {
    check(value(root).rows() == 1 && value(root).cols() == 1, "backward: root must be 1 x 1");
    for (Node& n : nodes_) n.grad.resize(0, 0);
    grad_ref(root)(0, 0) = 1.0;
    for (int id = root; id >= 0; --id) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        if (n.back && n.needs_grad && touched(id)) n.back(*this);
    }
}

} // namespace galien::ad
