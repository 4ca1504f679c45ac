#include "support/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace oracle {

namespace {

int bin_of(double v, double lo, double hi, int bins) {
    if (v >= hi) return bins - 1;
    int b = static_cast<int>((v - lo) / (hi - lo) * bins);
    return std::clamp(b, 0, bins - 1);
}

} // namespace

double mutual_information(std::span<const double> x, std::span<const double> y, int bins) {
    const auto n = x.size();
    double xlo = *std::min_element(x.begin(), x.end());
    double xhi = *std::max_element(x.begin(), x.end());
    double ylo = *std::min_element(y.begin(), y.end());
    double yhi = *std::max_element(y.begin(), y.end());
    std::vector<double> joint(static_cast<std::size_t>(bins) * bins, 0.0);
    std::vector<double> px(static_cast<std::size_t>(bins), 0.0);
    std::vector<double> py(static_cast<std::size_t>(bins), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        int bx = bin_of(x[i], xlo, xhi, bins);
        int by = bin_of(y[i], ylo, yhi, bins);
        joint[static_cast<std::size_t>(bx) * bins + by] += 1.0;
        px[static_cast<std::size_t>(bx)] += 1.0;
        py[static_cast<std::size_t>(by)] += 1.0;
    }
    double total = static_cast<double>(n);
    double mi = 0.0;
    for (int a = 0; a < bins; ++a) {
        for (int b = 0; b < bins; ++b) {
            double pab = joint[static_cast<std::size_t>(a) * bins + b] / total;
            if (pab <= 0.0) continue;
            double pa = px[static_cast<std::size_t>(a)] / total;
            double pb = py[static_cast<std::size_t>(b)] / total;
            mi += pab * std::log(pab / (pa * pb));
        }
    }
    return std::max(mi, 0.0);
}

Eigen::MatrixXd trajectory_matrix(std::span<const double> w, int tau, int m) {
    auto len = static_cast<int>(w.size());
    int n = len - (m - 1) * tau;
    Eigen::MatrixXd out(m, n);
    for (int j = 0; j < m; ++j) {
        for (int i = 0; i < n; ++i) {
            out(j, i) = w[static_cast<std::size_t>(i + j * tau)];
        }
    }
    return out;
}

Eigen::MatrixXd patch_matrix(std::span<const double> w, int p, int s) {
    auto len = static_cast<int>(w.size());
    int rows = (len - p) / s + 1;
    Eigen::MatrixXd out(rows, p);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < p; ++j) {
            out(i, j) = w[static_cast<std::size_t>(j + i * s)];
        }
    }
    return out;
}

Eigen::MatrixXd nonuniform_trajectory_matrix(std::span<const double> w,
                                             const std::vector<int>& delays) {
    auto len = static_cast<int>(w.size());
    auto m = static_cast<int>(delays.size()) + 1;
    std::vector<int> offset(static_cast<std::size_t>(m), 0);
    for (int j = 1; j < m; ++j) {
        offset[static_cast<std::size_t>(j)] =
            offset[static_cast<std::size_t>(j - 1)] + delays[static_cast<std::size_t>(j - 1)];
    }
    int n = len - offset.back();
    Eigen::MatrixXd out(m, n);
    for (int j = 0; j < m; ++j) {
        for (int i = 0; i < n; ++i) {
            out(j, i) = w[static_cast<std::size_t>(i + offset[static_cast<std::size_t>(j)])];
        }
    }
    return out;
}

double fnn_fraction(std::span<const double> ts, int tau, int m, double epsilon, int theiler) {
    auto len = static_cast<int>(ts.size());
    int n = len - m * tau; // points embeddable at dimension m + 1
    if (n <= 0) throw std::runtime_error("fnn oracle: series too short");
    int tested = 0;
    int false_count = 0;
    for (int i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        int best_j = -1;
        for (int j = 0; j < n; ++j) {
            if (std::abs(i - j) <= theiler) continue;
            double d2 = 0.0;
            for (int k = 0; k < m; ++k) {
                double diff = ts[static_cast<std::size_t>(i + k * tau)] -
                              ts[static_cast<std::size_t>(j + k * tau)];
                d2 += diff * diff;
            }
            if (d2 < best || (d2 == best && j < best_j)) {
                best = d2;
                best_j = j;
            }
        }
        if (best_j < 0) continue;
        ++tested;
        double lift = ts[static_cast<std::size_t>(i + m * tau)] -
                      ts[static_cast<std::size_t>(best_j + m * tau)];
        double lifted = best + lift * lift;
        if (best == 0.0) {
            if (lifted > 0.0) ++false_count;
        } else if (lifted / best >= epsilon) {
            ++false_count;
        }
    }
    if (tested == 0) throw std::runtime_error("fnn oracle: no testable points");
    return static_cast<double>(false_count) / tested;
}

double rosenstein_lle(std::span<const double> ts, int tau, int m, int theiler, int follow,
                      int fit_lo, int fit_hi) {
    auto len = static_cast<int>(ts.size());
    int n = len - (m - 1) * tau;
    if (n <= follow + 1) throw std::runtime_error("rosenstein oracle: series too short");
    int usable = n - follow;
    // Subsampled reference points keep the all-pairs scan tractable; the
    // neighbor pool stays complete.
    int stride = std::max(1, usable / 4000);
    std::vector<double> log_div(static_cast<std::size_t>(follow + 1), 0.0);
    std::vector<int> counts(static_cast<std::size_t>(follow + 1), 0);
    auto dist2 = [&](int a, int b) {
        double d2 = 0.0;
        for (int k = 0; k < m; ++k) {
            double diff = ts[static_cast<std::size_t>(a + k * tau)] -
                          ts[static_cast<std::size_t>(b + k * tau)];
            d2 += diff * diff;
        }
        return d2;
    };
    for (int i = 0; i < usable; i += stride) {
        double best = std::numeric_limits<double>::infinity();
        int best_j = -1;
        for (int j = 0; j < usable; ++j) {
            if (std::abs(i - j) <= theiler) continue;
            double d2 = dist2(i, j);
            if (d2 > 0.0 && d2 < best) {
                best = d2;
                best_j = j;
            }
        }
        if (best_j < 0) continue;
        for (int s = 0; s <= follow; ++s) {
            double d2 = dist2(i + s, best_j + s);
            if (d2 <= 0.0) continue;
            log_div[static_cast<std::size_t>(s)] += 0.5 * std::log(d2);
            ++counts[static_cast<std::size_t>(s)];
        }
    }
    // Least-squares slope of the mean log-divergence curve over the fit window.
    double sx = 0.0;
    double sy = 0.0;
    double sxx = 0.0;
    double sxy = 0.0;
    int pts = 0;
    for (int s = fit_lo; s <= fit_hi && s <= follow; ++s) {
        if (counts[static_cast<std::size_t>(s)] == 0) continue;
        double y = log_div[static_cast<std::size_t>(s)] / counts[static_cast<std::size_t>(s)];
        sx += s;
        sy += y;
        sxx += static_cast<double>(s) * s;
        sxy += s * y;
        ++pts;
    }
    if (pts < 2) throw std::runtime_error("rosenstein oracle: empty fit window");
    return (pts * sxy - sx * sy) / (pts * sxx - sx * sx);
}

Eigen::MatrixXd conv3x3(const Eigen::MatrixXd& image, const Eigen::MatrixXd& kernels,
                        const Eigen::MatrixXd& bias) {
    auto h = image.rows();
    auto w = image.cols();
    auto channels = kernels.rows();
    Eigen::MatrixXd out(channels, h * w);
    for (long c = 0; c < channels; ++c) {
        for (long i = 0; i < h; ++i) {
            for (long j = 0; j < w; ++j) {
                double acc = bias(c, 0);
                for (int di = -1; di <= 1; ++di) {
                    for (int dj = -1; dj <= 1; ++dj) {
                        long ii = i + di;
                        long jj = j + dj;
                        if (ii < 0 || ii >= h || jj < 0 || jj >= w) continue;
                        acc += kernels(c, (di + 1) * 3 + (dj + 1)) * image(ii, jj);
                    }
                }
                out(c, i * w + j) = acc;
            }
        }
    }
    return out;
}

Eigen::MatrixXd softmax_cols(const Eigen::MatrixXd& a) {
    Eigen::MatrixXd out(a.rows(), a.cols());
    for (long j = 0; j < a.cols(); ++j) {
        double mx = a.col(j).maxCoeff();
        double sum = 0.0;
        for (long i = 0; i < a.rows(); ++i) {
            out(i, j) = std::exp(a(i, j) - mx);
            sum += out(i, j);
        }
        out.col(j) /= sum;
    }
    return out;
}

Eigen::MatrixXd norm_cols(const Eigen::MatrixXd& a, double eps) {
    Eigen::MatrixXd out(a.rows(), a.cols());
    for (long j = 0; j < a.cols(); ++j) {
        double mean = a.col(j).mean();
        double var = 0.0;
        for (long i = 0; i < a.rows(); ++i) {
            var += (a(i, j) - mean) * (a(i, j) - mean);
        }
        var /= static_cast<double>(a.rows());
        double inv = 1.0 / std::sqrt(var + eps);
        for (long i = 0; i < a.rows(); ++i) {
            out(i, j) = (a(i, j) - mean) * inv;
        }
    }
    return out;
}

double mae(std::span<const double> truth, std::span<const double> pred) {
    double acc = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) acc += std::abs(truth[i] - pred[i]);
    return acc / static_cast<double>(truth.size());
}

double mape(std::span<const double> truth, std::span<const double> pred) {
    double acc = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        acc += std::abs(truth[i] - pred[i]) / std::abs(truth[i]);
    }
    return acc / static_cast<double>(truth.size());
}

double mse(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
    return acc / static_cast<double>(a.size());
}

std::vector<double> lorenz_x(std::size_t n, double dt, std::size_t transient) {
    const double sigma = 10.0;
    const double rho = 28.0;
    const double beta = 8.0 / 3.0;
    double x = 1.5;
    double y = -1.5;
    double z = 21.0;
    auto fx = [&](double a, double b) { return sigma * (b - a); };
    auto fy = [&](double a, double b, double c) { return a * (rho - c) - b; };
    auto fz = [&](double a, double b, double c) { return a * b - beta * c; };
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t i = 0; i < transient + n; ++i) {
        double k1x = fx(x, y);
        double k1y = fy(x, y, z);
        double k1z = fz(x, y, z);
        double k2x = fx(x + 0.5 * dt * k1x, y + 0.5 * dt * k1y);
        double k2y = fy(x + 0.5 * dt * k1x, y + 0.5 * dt * k1y, z + 0.5 * dt * k1z);
        double k2z = fz(x + 0.5 * dt * k1x, y + 0.5 * dt * k1y, z + 0.5 * dt * k1z);
        double k3x = fx(x + 0.5 * dt * k2x, y + 0.5 * dt * k2y);
        double k3y = fy(x + 0.5 * dt * k2x, y + 0.5 * dt * k2y, z + 0.5 * dt * k2z);
        double k3z = fz(x + 0.5 * dt * k2x, y + 0.5 * dt * k2y, z + 0.5 * dt * k2z);
        double k4x = fx(x + dt * k3x, y + dt * k3y);
        double k4y = fy(x + dt * k3x, y + dt * k3y, z + dt * k3z);
        double k4z = fz(x + dt * k3x, y + dt * k3y, z + dt * k3z);
        x += dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        y += dt / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
        z += dt / 6.0 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z);
        if (i >= transient) out.push_back(x);
    }
    return out;
}

std::uint64_t TestRng::next_u64() {
    state_ ^= state_ << 13;
    state_ ^= state_ >> 7;
    state_ ^= state_ << 17;
    return state_;
}

double TestRng::uniform(double lo, double hi) {
    double unit = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    return lo + unit * (hi - lo);
}

int TestRng::uniform_int(int lo, int hi) {
    auto span = static_cast<std::uint64_t>(hi - lo + 1);
    return lo + static_cast<int>(next_u64() % span);
}

} // namespace oracle
