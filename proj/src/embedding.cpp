#include "galien/embedding.hpp"

#include "galien/errors.hpp"

#include <string>

namespace galien {

namespace {

void check_psr(PsrParams params) {
    if (params.tau < 1) raise(Errc::invalid_spec, "tau must be >= 1");
    if (params.m < 1) raise(Errc::invalid_spec, "m must be >= 1");
}

} // namespace

TrajectoryImage trajectory_matrix(std::span<const double> window, PsrParams params) {
    check_psr(params);
    auto len = static_cast<long>(window.size());
    long n = len - static_cast<long>(params.m - 1) * params.tau;
    if (n < 1) {
        raise(Errc::window_too_short,
              "window of length " + std::to_string(len) + " cannot host tau=" +
                  std::to_string(params.tau) + ", m=" + std::to_string(params.m));
    }
    TrajectoryImage img;
    img.params = params;
    img.data.resize(params.m, n);
    for (int j = 0; j < params.m; ++j) {
        long off = static_cast<long>(j) * params.tau;
        for (long i = 0; i < n; ++i) img.data(j, i) = window[static_cast<std::size_t>(i + off)];
    }
    return img;
}

PatchMatrix patch_matrix(std::span<const double> window, int patch_len, int stride) {
    if (patch_len < 1) raise(Errc::invalid_spec, "patch_len must be >= 1");
    if (stride < 1) raise(Errc::invalid_spec, "stride must be >= 1");
    auto len = static_cast<long>(window.size());
    if (len < patch_len) {
        raise(Errc::window_too_short, "window of length " + std::to_string(len) +
                                          " is shorter than patch_len " + std::to_string(patch_len));
    }
    long m_rows = (len - patch_len) / stride + 1;
    PatchMatrix pm;
    pm.patch_len = patch_len;
    pm.stride = stride;
    pm.data.resize(m_rows, patch_len);
    for (long i = 0; i < m_rows; ++i) {
        long off = i * stride;
        for (int j = 0; j < patch_len; ++j) pm.data(i, j) = window[static_cast<std::size_t>(off + j)];
    }
    return pm;
}

EquivalenceParams equivalence_params(int window_len, PsrParams params) {
    check_psr(params);
    int n = window_len - (params.m - 1) * params.tau;
    if (n < 1) {
        raise(Errc::window_too_short, "window of length " + std::to_string(window_len) +
                                          " cannot host the requested embedding");
    }
    return EquivalenceParams{n, params.tau};
}

Eigen::MatrixXd nonuniform_trajectory_matrix(std::span<const double> window,
                                             const std::vector<int>& delays) {
    for (int d : delays) {
        if (d < 1) raise(Errc::invalid_spec, "every delay must be >= 1");
    }
    int m = static_cast<int>(delays.size()) + 1;
    long total = 0;
    for (int d : delays) total += d;
    auto len = static_cast<long>(window.size());
    long n = len - total;
    if (n < 1) {
        raise(Errc::window_too_short,
              "window of length " + std::to_string(len) + " cannot host delay sum " +
                  std::to_string(total));
    }
    Eigen::MatrixXd out(m, n);
    long off = 0;
    for (int j = 0; j < m; ++j) {
        if (j > 0) off += delays[static_cast<std::size_t>(j - 1)];
        for (long i = 0; i < n; ++i) out(j, i) = window[static_cast<std::size_t>(i + off)];
    }
    return out;
}

std::vector<double> window_from_image(const TrajectoryImage& image, int window_len) {
    int tau = image.params.tau;
    int m = image.params.m;
    long n = image.data.cols();
    if (static_cast<long>(window_len) != n + static_cast<long>(m - 1) * tau) {
        raise(Errc::length_mismatch, "window_len does not match the image dimensions");
    }
    std::vector<double> w(static_cast<std::size_t>(window_len));
    for (long k = 0; k < window_len; ++k) {
        // Pick the smallest row with k = col + row * tau and 0 <= col < n.
        long row = (k < n) ? 0 : (k - n + tau) / tau;
        long col = k - row * tau;
        if (col < 0) {
            raise(Errc::length_mismatch,
                  "window index " + std::to_string(k) + " is not covered by the image (tau " +
                      std::to_string(tau) + " exceeds width " + std::to_string(n) + ")");
        }
        w[static_cast<std::size_t>(k)] = image.data(row, col);
    }
    return w;
}

std::vector<WindowPair> build_windows(std::span<const double> series, int lookback, int horizon,
                                      PsrParams params, int start_stride) {
    if (lookback < 1 || horizon < 1) raise(Errc::invalid_spec, "lookback and horizon must be >= 1");
    if (start_stride < 1) raise(Errc::invalid_spec, "start_stride must be >= 1");
    auto n = static_cast<long>(series.size());
    long last = n - lookback - horizon;
    if (last < 0) {
        raise(Errc::segment_too_short,
              "segment of length " + std::to_string(n) + " holds no window of lookback " +
                  std::to_string(lookback) + " plus horizon " + std::to_string(horizon));
    }
    std::vector<WindowPair> pairs;
    pairs.reserve(static_cast<std::size_t>(last / start_stride + 1));
    for (long start = 0; start <= last; start += start_stride) {
        WindowPair p;
        p.window_start = static_cast<std::size_t>(start);
        p.image = trajectory_matrix(series.subspan(static_cast<std::size_t>(start),
                                                   static_cast<std::size_t>(lookback)),
                                    params);
        p.window = Eigen::Map<const Eigen::VectorXd>(series.data() + start, lookback);
        p.target.resize(horizon);
        for (int k = 0; k < horizon; ++k) {
            p.target(k) = series[static_cast<std::size_t>(start + lookback + k)];
        }
        pairs.push_back(std::move(p));
    }
    return pairs;
}

} // namespace galien
