#include "galien/interpret.hpp"

#include "galien/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

namespace galien::interpret {

namespace {

nn::ForwardGraph single_forward(const nn::ModelWeights& w, const TrajectoryImage& image) {
    const nn::ModelConfig& cfg = w.config;
    if (image.data.rows() != cfg.m || image.data.cols() != cfg.n_points) {
        raise(Errc::shape_mismatch, "image shape differs from the model config");
    }
    nn::Matrix flat(static_cast<long>(cfg.m) * cfg.n_points, 1);
    for (long i = 0; i < cfg.m; ++i) {
        for (long j = 0; j < cfg.n_points; ++j) {
            flat(i * cfg.n_points + j, 0) = image.data(i, j);
        }
    }
    nn::ForwardGraph fg = nn::build_forward(w, image.data, flat);
    if (!fg.g.value(fg.output).allFinite()) {
        raise(Errc::non_finite_activation, "forward output is not finite");
    }
    return fg;
}

} // namespace

std::vector<AttentionRecord> attention_maps(const nn::ModelWeights& w,
                                            const TrajectoryImage& image) {
    nn::ForwardGraph fg = single_forward(w, image);
    std::vector<AttentionRecord> records;
    records.reserve(fg.attention.size());
    int heads = w.config.n_heads;
    for (std::size_t i = 0; i < fg.attention.size(); ++i) {
        AttentionRecord rec;
        rec.layer = static_cast<int>(i) / heads;
        rec.head = static_cast<int>(i) % heads;
        rec.a = fg.g.value(fg.attention[i]);
        records.push_back(std::move(rec));
    }
    return records;
}

RamMap ram(const nn::ModelWeights& w, const TrajectoryImage& image, int target_step) {
    const nn::ModelConfig& cfg = w.config;
    if (cfg.variant != nn::Variant::full) {
        raise(Errc::variant_has_no_local_branch,
              "activation maps need the local branch of the full variant");
    }
    if (target_step >= cfg.d_pred) {
        raise(Errc::config_invalid, "target step is past the end of the horizon");
    }
    nn::ForwardGraph fg = single_forward(w, image);
    int root = target_step < 0 ? fg.g.sum_all(fg.output)
                               : fg.g.sum_all(fg.g.slice_rows(fg.output, target_step, 1));
    fg.g.backward(root);
    const nn::Matrix& activation = fg.g.value(fg.local_map); // 1 x (m*N)
    const nn::Matrix& gradient = fg.g.grad(fg.local_map);

    RamMap out;
    out.map.resize(cfg.m, cfg.n_points);
    for (long i = 0; i < cfg.m; ++i) {
        for (long j = 0; j < cfg.n_points; ++j) {
            long p = i * cfg.n_points + j;
            out.map(i, j) = std::max(0.0, gradient(0, p) * activation(0, p));
        }
    }
    out.peak = out.map.maxCoeff();
    double lo = out.map.minCoeff();
    double range = out.peak - lo;
    if (range > 0.0) {
        out.map = ((out.map.array() - lo) / range).matrix();
    } else {
        out.map.setZero();
    }
    return out;
}

void export_csv(const Matrix& values, const std::string& path) {
    std::ofstream out(path);
    if (!out) raise(Errc::io_error, "cannot open " + path + " for writing");
    char buf[40];
    for (long r = 0; r < values.rows(); ++r) {
        for (long c = 0; c < values.cols(); ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", values(r, c));
            if (c > 0) out << ',';
            out << buf;
        }
        out << '\n';
    }
    if (!out) raise(Errc::io_error, "write failed for " + path);
}

void export_pgm(const Matrix& values, const std::string& path) {
    if (values.size() == 0) raise(Errc::shape_mismatch, "cannot export an empty matrix");
    if (!values.allFinite()) raise(Errc::non_finite_activation, "matrix is not finite");
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(Errc::io_error, "cannot open " + path + " for writing");
    out << "P5\n" << values.cols() << " " << values.rows() << "\n255\n";
    double lo = values.minCoeff();
    double range = values.maxCoeff() - lo;
    for (long r = 0; r < values.rows(); ++r) {
        for (long c = 0; c < values.cols(); ++c) {
            double v = range > 0.0 ? (values(r, c) - lo) / range : 0.0;
            auto byte = static_cast<unsigned char>(std::lround(v * 255.0));
            out.put(static_cast<char>(byte));
        }
    }
    if (!out) raise(Errc::io_error, "write failed for " + path);
}

Matrix read_matrix_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(Errc::file_not_found, path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::size_t at = 0;
        while (at <= line.size()) {
            std::size_t comma = line.find(',', at);
            std::size_t end = comma == std::string::npos ? line.size() : comma;
            double v = 0.0;
            auto [p, ec] = std::from_chars(line.data() + at, line.data() + end, v);
            if (ec != std::errc() || p != line.data() + end) {
                raise(Errc::unparseable_value,
                      path + ": bad number in row " + std::to_string(rows.size() + 1));
            }
            row.push_back(v);
            if (comma == std::string::npos) break;
            at = comma + 1;
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            raise(Errc::unparseable_value, path + ": ragged rows");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) raise(Errc::unparseable_value, path + ": no rows");
    Matrix out(static_cast<long>(rows.size()), static_cast<long>(rows.front().size()));
    for (long r = 0; r < out.rows(); ++r) {
        for (long c = 0; c < out.cols(); ++c) {
            out(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
        }
    }
    return out;
}

} // namespace galien::interpret
