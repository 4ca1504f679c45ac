#include "galien/nnet.hpp"

#include "galien/binio.hpp"
#include "galien/errors.hpp"
#include "galien/rng.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <utility>

namespace galien::nn {

namespace {

void check_shape(bool ok, const std::string& what) {
    if (!ok) raise(Errc::shape_mismatch, what);
}

Matrix ln_apply(const Matrix& x, const Matrix& scale, const Matrix& shift) {
    Matrix n = layer_norm_normalize(x);
    return ((n.array().colwise() * scale.col(0).array()).colwise() + shift.col(0).array())
        .matrix();
}

} // namespace

const char* variant_name(Variant v) {
    return v == Variant::full ? "full" : "no_local";
}

Variant variant_from_name(const std::string& name) {
    if (name == "full") return Variant::full;
    if (name == "no_local") return Variant::no_local;
    raise(Errc::config_invalid, "unknown variant '" + name + "' (expected full or no_local)");
}

void ModelConfig::validate() const {
    if (d_model < 1) raise(Errc::config_invalid, "d_model must be >= 1");
    if (n_heads < 1) raise(Errc::config_invalid, "n_heads must be >= 1");
    if (d_model % n_heads != 0) raise(Errc::config_invalid, "n_heads must divide d_model");
    if (d_ff < 1) raise(Errc::config_invalid, "d_ff must be >= 1");
    if (e_layers < 1) raise(Errc::config_invalid, "e_layers must be >= 1");
    if (m < 1) raise(Errc::config_invalid, "m must be >= 1");
    if (n_points < 1) raise(Errc::config_invalid, "n_points must be >= 1");
    if (d_pred < 1) raise(Errc::config_invalid, "d_pred must be >= 1");
}

ModelWeights ModelWeights::zeros(const ModelConfig& config) {
    config.validate();
    ModelWeights w;
    w.config = config;
    int dm = config.d_model;
    int dh = config.d_head();
    w.ve_w = Matrix::Zero(dm, config.m);
    w.ve_b = Matrix::Zero(dm, 1);
    w.layers.resize(static_cast<std::size_t>(config.e_layers));
    for (auto& layer : w.layers) {
        layer.wq.assign(static_cast<std::size_t>(config.n_heads), Matrix::Zero(dh, dm));
        layer.wk = layer.wq;
        layer.wv = layer.wq;
        layer.fuse = Matrix::Zero(dm, config.fuse_in());
        layer.ffn_w1 = Matrix::Zero(config.d_ff, dm);
        layer.ffn_b1 = Matrix::Zero(config.d_ff, 1);
        layer.ffn_w2 = Matrix::Zero(dm, config.d_ff);
        layer.ffn_b2 = Matrix::Zero(dm, 1);
        layer.ln1_scale = Matrix::Zero(dm, 1);
        layer.ln1_shift = Matrix::Zero(dm, 1);
        layer.ln2_scale = Matrix::Zero(dm, 1);
        layer.ln2_shift = Matrix::Zero(dm, 1);
    }
    w.w_global = Matrix::Zero(dm, dm);
    if (config.variant == Variant::full) {
        w.conv1_w = Matrix::Zero(dm, 1);
        w.conv1_b = Matrix::Zero(dm, 1);
        w.conv3_w = Matrix::Zero(dm, 9);
        w.conv3_b = Matrix::Zero(dm, 1);
        w.compress_w = Matrix::Zero(dm, 1);
        w.compress_b = Matrix::Zero(1, 1);
        w.w_local = Matrix::Zero(dm, static_cast<long>(config.m) * config.n_points);
    }
    int dp = config.pred_in();
    w.p_w1 = Matrix::Zero(dp, dp);
    w.p_ln1_scale = Matrix::Zero(dp, 1);
    w.p_ln1_shift = Matrix::Zero(dp, 1);
    w.p_w2 = Matrix::Zero(config.d_ff, dp);
    w.p_w3 = Matrix::Zero(dp, config.d_ff);
    w.p_ln2_scale = Matrix::Zero(dp, 1);
    w.p_ln2_shift = Matrix::Zero(dp, 1);
    w.p_w4 = Matrix::Zero(config.d_pred, dp);
    w.p_b = Matrix::Zero(config.d_pred, 1);
    return w;
}

ModelWeights ModelWeights::init(const ModelConfig& config, std::uint64_t seed) {
    ModelWeights w = zeros(config);
    Rng rng(seed);
    // Draw order is the registry order; within a tensor, storage order.
    auto fill = [&rng](Matrix& t, double fan_in) {
        double lim = std::sqrt(6.0 / fan_in);
        double* p = t.data();
        for (long i = 0; i < t.size(); ++i) p[i] = rng.uniform(-lim, lim);
    };
    fill(w.ve_w, config.m);
    for (auto& layer : w.layers) {
        for (int h = 0; h < config.n_heads; ++h) {
            fill(layer.wq[static_cast<std::size_t>(h)], config.d_model);
            fill(layer.wk[static_cast<std::size_t>(h)], config.d_model);
            fill(layer.wv[static_cast<std::size_t>(h)], config.d_model);
        }
        fill(layer.fuse, config.fuse_in());
        fill(layer.ffn_w1, config.d_model);
        fill(layer.ffn_w2, config.d_ff);
        layer.ln1_scale.setOnes();
        layer.ln2_scale.setOnes();
    }
    fill(w.w_global, config.d_model);
    if (config.variant == Variant::full) {
        fill(w.conv1_w, 1.0);
        fill(w.conv3_w, 9.0);
        fill(w.compress_w, config.d_model);
        fill(w.w_local, static_cast<double>(config.m) * config.n_points);
    }
    int dp = config.pred_in();
    fill(w.p_w1, dp);
    w.p_ln1_scale.setOnes();
    fill(w.p_w2, dp);
    fill(w.p_w3, config.d_ff);
    w.p_ln2_scale.setOnes();
    fill(w.p_w4, dp);
    return w;
}

std::int64_t count_params(const ModelConfig& config) {
    config.validate();
    auto dm = static_cast<std::int64_t>(config.d_model);
    auto dff = static_cast<std::int64_t>(config.d_ff);
    auto dh = static_cast<std::int64_t>(config.d_head());
    auto heads = static_cast<std::int64_t>(config.n_heads);
    std::int64_t total = dm * config.m + dm; // value embedding
    std::int64_t per_layer = 3 * heads * dh * dm + dm * config.fuse_in() +
                             (dff * dm + dff) + (dm * dff + dm) + 4 * dm;
    total += per_layer * config.e_layers;
    total += dm * dm; // global feature map
    if (config.variant == Variant::full) {
        total += 2 * dm;                                          // 1x1 conv
        total += 9 * dm + dm;                                     // 3x3 conv
        total += dm + 1;                                          // channel compression
        total += dm * static_cast<std::int64_t>(config.m) * config.n_points; // w_local
    }
    auto dp = static_cast<std::int64_t>(config.pred_in());
    total += dp * dp + 2 * dp;           // W1 + first norm pair
    total += dff * dp + dp * dff + 2 * dp; // W2, W3, second norm pair
    total += config.d_pred * dp + config.d_pred; // W4 + bias
    return total;
}

Matrix positional_encoding(int d_model, int n) {
    Matrix pe(d_model, n);
    for (int pos = 0; pos < n; ++pos) {
        for (int r = 0; r < d_model; ++r) {
            int k = r / 2;
            double angle = pos / std::pow(10000.0, 2.0 * k / d_model);
            pe(r, pos) = (r % 2 == 0) ? std::sin(angle) : std::cos(angle);
        }
    }
    return pe;
}

Matrix layer_norm_normalize(const Matrix& x) {
    Eigen::RowVectorXd mean = x.colwise().mean();
    Matrix centered = x.rowwise() - mean;
    Eigen::RowVectorXd var = centered.array().square().colwise().mean();
    Eigen::RowVectorXd inv_s = (var.array() + kLnEps).sqrt().inverse();
    return (centered.array().rowwise() * inv_s.array()).matrix();
}

Matrix value_embed(const ModelWeights& w, const Matrix& image) {
    check_shape(image.rows() == w.config.m, "value_embed: image rows differ from config m");
    Matrix out = w.ve_w * image;
    out.colwise() += Eigen::VectorXd(w.ve_b.col(0));
    return out;
}

Matrix multi_head_attention(const ModelWeights& w, int layer, const Matrix& x) {
    const ModelConfig& cfg = w.config;
    check_shape(x.rows() == cfg.d_model, "attention: input rows differ from d_model");
    check_shape(layer >= 0 && layer < cfg.e_layers, "attention: layer index out of range");
    const EncoderLayerWeights& lw = w.layers[static_cast<std::size_t>(layer)];
    long n = x.cols();
    double scale = 1.0 / std::sqrt(static_cast<double>(cfg.paper_exact_scale ? cfg.d_model
                                                                             : cfg.d_head()));
    Matrix concat(cfg.fuse_in(), n);
    long at = 0;
    for (int h = 0; h < cfg.n_heads; ++h) {
        const Matrix& wq = lw.wq[static_cast<std::size_t>(h)];
        const Matrix& wk = lw.wk[static_cast<std::size_t>(h)];
        const Matrix& wv = lw.wv[static_cast<std::size_t>(h)];
        Matrix q = wq * x;
        Matrix k = wk * x;
        Matrix scores = (k.transpose() * q) * scale;
        for (long c = 0; c < n; ++c) {
            double mx = scores.col(c).maxCoeff();
            scores.col(c) = (scores.col(c).array() - mx).exp();
            scores.col(c) /= scores.col(c).sum();
        }
        Matrix head = cfg.paper_exact_eq12 ? Matrix(x * scores) : Matrix((wv * x) * scores);
        concat.middleRows(at, head.rows()) = head;
        at += head.rows();
    }
    Matrix out = lw.fuse * concat;
    if (!out.allFinite()) raise(Errc::non_finite_activation, "attention output is not finite");
    return out;
}

Matrix encoder_layer(const ModelWeights& w, int layer, const Matrix& x) {
    const EncoderLayerWeights& lw = w.layers[static_cast<std::size_t>(layer)];
    Matrix attn = multi_head_attention(w, layer, x);
    Matrix z = ln_apply(x + attn, lw.ln1_scale, lw.ln1_shift);
    Matrix inner = lw.ffn_w1 * z;
    inner.colwise() += Eigen::VectorXd(lw.ffn_b1.col(0));
    inner = inner.cwiseMax(0.0);
    Matrix ffn = lw.ffn_w2 * inner;
    ffn.colwise() += Eigen::VectorXd(lw.ffn_b2.col(0));
    return ln_apply(z + ffn, lw.ln2_scale, lw.ln2_shift);
}

Vector global_feature(const ModelWeights& w, const Matrix& y) {
    check_shape(y.rows() == w.config.d_model && y.cols() >= 1,
                "global_feature: unexpected input shape");
    return w.w_global * y.col(y.cols() - 1);
}

Vector local_branch(const ModelWeights& w, const Matrix& image) {
    const ModelConfig& cfg = w.config;
    if (cfg.variant != Variant::full) {
        raise(Errc::variant_has_no_local_branch, "local_branch requires the full variant");
    }
    check_shape(image.rows() == cfg.m && image.cols() == cfg.n_points,
                "local_branch: image shape differs from config");
    long h = cfg.m;
    long n = cfg.n_points;
    long dm = cfg.d_model;
    // Pixel p = i*N + j, row-major over (m, N); feature maps are C x (m*N).
    Matrix pi1(dm, h * n);
    for (long c = 0; c < dm; ++c) {
        for (long i = 0; i < h; ++i) {
            for (long j = 0; j < n; ++j) {
                double acc = w.conv1_w(c, 0) * image(i, j) + w.conv1_b(c, 0) + w.conv3_b(c, 0);
                for (long di = 0; di < 3; ++di) {
                    long ii = i + di - 1;
                    if (ii < 0 || ii >= h) continue;
                    for (long dj = 0; dj < 3; ++dj) {
                        long jj = j + dj - 1;
                        if (jj < 0 || jj >= n) continue;
                        acc += w.conv3_w(c, di * 3 + dj) * image(ii, jj);
                    }
                }
                pi1(c, i * n + j) = acc;
            }
        }
    }
    Matrix pi2 = pi1.cwiseMax(0.0);
    Eigen::RowVectorXd pi3 = (w.compress_w.col(0).transpose() * pi2).array() + w.compress_b(0, 0);
    return w.w_local * pi3.transpose();
}

Vector predict_head(const ModelWeights& w, const Vector& y_g, const Vector& y_l) {
    const ModelConfig& cfg = w.config;
    Vector y;
    if (cfg.variant == Variant::full) {
        check_shape(y_g.size() == cfg.d_model && y_l.size() == cfg.d_model,
                    "predict_head: feature lengths differ from d_model");
        y.resize(2 * cfg.d_model);
        y << y_g, y_l;
    } else {
        check_shape(y_g.size() == cfg.d_model, "predict_head: feature length differs from d_model");
        y = y_g;
    }
    Matrix y1 = ln_apply(y + w.p_w1 * y, w.p_ln1_scale, w.p_ln1_shift);
    Matrix hidden = (w.p_w2 * y1).cwiseMax(0.0);
    Matrix y2 = ln_apply(y1 + w.p_w3 * hidden, w.p_ln2_scale, w.p_ln2_shift);
    return w.p_w4 * y2.col(0) + w.p_b.col(0);
}

Vector forward(const ModelWeights& w, const TrajectoryImage& image) {
    const ModelConfig& cfg = w.config;
    check_shape(image.data.rows() == cfg.m && image.data.cols() == cfg.n_points,
                "forward: image shape differs from config");
    Matrix x = value_embed(w, image.data) + positional_encoding(cfg.d_model, cfg.n_points);
    for (int l = 0; l < cfg.e_layers; ++l) x = encoder_layer(w, l, x);
    Vector y_g = global_feature(w, x);
    Vector y_l;
    if (cfg.variant == Variant::full) y_l = local_branch(w, image.data);
    Vector out = predict_head(w, y_g, y_l);
    if (!out.allFinite()) raise(Errc::non_finite_activation, "forward output is not finite");
    return out;
}

Batch make_batch(const std::vector<WindowPair>& pairs, const std::vector<std::size_t>& order,
                 std::size_t begin, std::size_t end, const ModelConfig& config) {
    check_shape(begin < end && end <= order.size(), "make_batch: bad index range");
    long n = config.n_points;
    long m = config.m;
    auto size = static_cast<long>(end - begin);
    Batch b;
    b.size = size;
    b.points.resize(m, size * n);
    b.flat.resize(m * n, size);
    b.targets.resize(config.d_pred, size);
    for (long s = 0; s < size; ++s) {
        const WindowPair& p = pairs[order[begin + static_cast<std::size_t>(s)]];
        check_shape(p.image.data.rows() == m && p.image.data.cols() == n,
                    "make_batch: image shape differs from config");
        check_shape(p.target.size() == config.d_pred,
                    "make_batch: target length differs from d_pred");
        b.points.middleCols(s * n, n) = p.image.data;
        for (long i = 0; i < m; ++i) {
            for (long j = 0; j < n; ++j) b.flat(i * n + j, s) = p.image.data(i, j);
        }
        b.targets.col(s) = p.target;
    }
    return b;
}

ForwardGraph build_forward(const ModelWeights& w, const Matrix& points, const Matrix& flat) {
    const ModelConfig& cfg = w.config;
    cfg.validate();
    long n = cfg.n_points;
    check_shape(points.rows() == cfg.m && points.cols() % n == 0,
                "build_forward: points must be m x (S*N)");
    long batch = points.cols() / n;
    if (cfg.variant == Variant::full) {
        check_shape(flat.rows() == static_cast<long>(cfg.m) * n && flat.cols() == batch,
                    "build_forward: flat must be (m*N) x S");
    }

    ForwardGraph fg;
    ad::Graph& g = fg.g;
    fg.batch = batch;

    std::vector<std::pair<std::string, int>> params;
    w.for_each_tensor([&](const std::string& name, const Matrix& t) {
        params.emplace_back(name, g.param(t));
    });
    auto pid = [&](const std::string& name) {
        for (const auto& [n_, id] : params) {
            if (n_ == name) return id;
        }
        raise(Errc::shape_mismatch, "unknown parameter '" + name + "'");
    };
    fg.params = params;

    // Global branch: embed phase points, add the positional table per sample.
    int x = g.input(points);
    int ve = g.add_col_broadcast(g.matmul(pid("ve_w"), x), pid("ve_b"));
    Matrix pe = positional_encoding(cfg.d_model, static_cast<int>(n));
    Matrix pe_tiled(cfg.d_model, batch * n);
    for (long s = 0; s < batch; ++s) pe_tiled.middleCols(s * n, n) = pe;
    int cur = g.add_const(ve, pe_tiled);

    double scale = 1.0 / std::sqrt(static_cast<double>(cfg.paper_exact_scale ? cfg.d_model
                                                                             : cfg.d_head()));
    for (int l = 0; l < cfg.e_layers; ++l) {
        fg.layer_input.push_back(cur);
        std::string p = "enc" + std::to_string(l) + ".";
        std::vector<int> heads;
        for (int h = 0; h < cfg.n_heads; ++h) {
            std::string hs = std::to_string(h);
            int q = g.matmul(pid(p + "wq" + hs), cur);
            int k = g.matmul(pid(p + "wk" + hs), cur);
            int scores = g.scale(g.block_matmul_ta(k, q, n), scale);
            int a = g.softmax_cols(scores);
            fg.attention.push_back(a);
            int head = cfg.paper_exact_eq12
                           ? g.block_matmul(cur, a, n)
                           : g.block_matmul(g.matmul(pid(p + "wv" + hs), cur), a, n);
            heads.push_back(head);
        }
        int concat = static_cast<int>(heads.size()) == 1 ? heads[0] : g.concat_rows(heads);
        int attn = g.matmul(pid(p + "fuse"), concat);
        int z = g.affine_rows(g.norm_cols(g.add(cur, attn), kLnEps), pid(p + "ln1_scale"),
                              pid(p + "ln1_shift"));
        int inner = g.relu(g.add_col_broadcast(g.matmul(pid(p + "ffn_w1"), z), pid(p + "ffn_b1")));
        int ffn = g.add_col_broadcast(g.matmul(pid(p + "ffn_w2"), inner), pid(p + "ffn_b2"));
        cur = g.affine_rows(g.norm_cols(g.add(z, ffn), kLnEps), pid(p + "ln2_scale"),
                            pid(p + "ln2_shift"));
    }

    std::vector<long> last_cols(static_cast<std::size_t>(batch));
    for (long s = 0; s < batch; ++s) last_cols[static_cast<std::size_t>(s)] = s * n + n - 1;
    int y_g = g.matmul(pid("w_global"), g.select_cols(cur, std::move(last_cols)));

    int y = y_g;
    if (cfg.variant == Variant::full) {
        long hw = static_cast<long>(cfg.m) * n;
        int xf = g.input(flat);
        int row = g.reshape(xf, 1, batch * hw);
        int c1 = g.add_col_broadcast(g.matmul(pid("conv1_w"), row), pid("conv1_b"));
        int c3 = g.conv3x3(xf, pid("conv3_w"), pid("conv3_b"), cfg.m, n);
        int pi2 = g.relu(g.add(c1, c3));
        int pi3 = g.add_col_broadcast(g.matmul_ta(pid("compress_w"), pi2), pid("compress_b"));
        fg.local_map = pi3;
        int y_l = g.matmul(pid("w_local"), g.reshape(pi3, hw, batch));
        y = g.concat_rows({y_g, y_l});
    }

    int y1 = g.affine_rows(g.norm_cols(g.add(y, g.matmul(pid("p_w1"), y)), kLnEps),
                           pid("p_ln1_scale"), pid("p_ln1_shift"));
    int hidden = g.relu(g.matmul(pid("p_w2"), y1));
    int y2 = g.affine_rows(g.norm_cols(g.add(y1, g.matmul(pid("p_w3"), hidden)), kLnEps),
                           pid("p_ln2_scale"), pid("p_ln2_shift"));
    fg.output = g.add_col_broadcast(g.matmul(pid("p_w4"), y2), pid("p_b"));
    return fg;
}

ForwardGraph build_forward(const ModelWeights& w, const Batch& batch) {
    return build_forward(w, batch.points, batch.flat);
}

namespace {

void to_json(nlohmann::json& j, const ModelConfig& c) {
    j = nlohmann::json{{"d_model", c.d_model},
                       {"d_ff", c.d_ff},
                       {"e_layers", c.e_layers},
                       {"n_heads", c.n_heads},
                       {"m", c.m},
                       {"n_points", c.n_points},
                       {"d_pred", c.d_pred},
                       {"variant", variant_name(c.variant)},
                       {"paper_exact_scale", c.paper_exact_scale},
                       {"paper_exact_eq12", c.paper_exact_eq12}};
}

ModelConfig config_from_json(const nlohmann::json& j) try {
    ModelConfig c;
    c.d_model = j.at("d_model").get<int>();
    c.d_ff = j.at("d_ff").get<int>();
    c.e_layers = j.at("e_layers").get<int>();
    c.n_heads = j.at("n_heads").get<int>();
    c.m = j.at("m").get<int>();
    c.n_points = j.at("n_points").get<int>();
    c.d_pred = j.at("d_pred").get<int>();
    c.variant = variant_from_name(j.at("variant").get<std::string>());
    c.paper_exact_scale = j.at("paper_exact_scale").get<bool>();
    c.paper_exact_eq12 = j.at("paper_exact_eq12").get<bool>();
    return c;
} catch (const nlohmann::json::exception& e) {
    raise(Errc::unparseable_value, std::string("bad weight file config header: ") + e.what());
}

constexpr char kMagic[8] = {'G', 'L', 'N', 'W', 'G', 'T', '0', '1'};
constexpr std::uint32_t kVersion = 1;

using io::read_f64;
using io::read_u32;
using io::read_u64;
using io::write_f64;
using io::write_u32;
using io::write_u64;

} // namespace

void save_weights(const ModelWeights& w, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(Errc::io_error, "cannot open " + path + " for writing");
    out.write(kMagic, 8);
    write_u32(out, kVersion);
    nlohmann::json header;
    to_json(header["config"], w.config);
    header["flatten_order"] = "row-major(m,N)";
    std::string hs = header.dump();
    write_u32(out, static_cast<std::uint32_t>(hs.size()));
    out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    std::uint64_t count = 0;
    w.for_each_tensor([&](const std::string&, const Matrix&) { ++count; });
    write_u64(out, count);
    w.for_each_tensor([&](const std::string& name, const Matrix& t) {
        write_u32(out, static_cast<std::uint32_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_u64(out, static_cast<std::uint64_t>(t.rows()));
        write_u64(out, static_cast<std::uint64_t>(t.cols()));
        const double* p = t.data();
        for (long i = 0; i < t.size(); ++i) write_f64(out, p[i]);
    });
    if (!out) raise(Errc::io_error, "write failed for " + path);
}

ModelWeights load_weights(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(Errc::file_not_found, path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0) {
        raise(Errc::unparseable_value, path + " is not a weight file");
    }
    std::uint32_t version = read_u32(in);
    if (version != kVersion) {
        raise(Errc::unparseable_value,
              "unsupported weight file version " + std::to_string(version));
    }
    std::uint32_t hlen = read_u32(in);
    std::string hs(hlen, '\0');
    in.read(hs.data(), hlen);
    if (!in) raise(Errc::io_error, "weight file truncated");
    nlohmann::json header = nlohmann::json::parse(hs, nullptr, false);
    if (header.is_discarded()) raise(Errc::unparseable_value, "corrupt weight file header");
    ModelConfig cfg = config_from_json(header.at("config"));
    ModelWeights w = ModelWeights::zeros(cfg);
    std::uint64_t count = read_u64(in);
    std::uint64_t seen = 0;
    w.for_each_tensor([&](const std::string& name, Matrix& t) {
        std::uint32_t nlen = read_u32(in);
        std::string fname(nlen, '\0');
        in.read(fname.data(), nlen);
        if (!in) raise(Errc::io_error, "weight file truncated");
        if (fname != name) {
            raise(Errc::unparseable_value,
                  "weight file tensor order mismatch: expected " + name + ", found " + fname);
        }
        auto rows = static_cast<long>(read_u64(in));
        auto cols = static_cast<long>(read_u64(in));
        if (rows != t.rows() || cols != t.cols()) {
            raise(Errc::shape_mismatch, "tensor " + name + " has unexpected shape in file");
        }
        double* p = t.data();
        for (long i = 0; i < t.size(); ++i) p[i] = read_f64(in);
        ++seen;
    });
    if (seen != count) raise(Errc::unparseable_value, "weight file tensor count mismatch");
    return w;
}

} // namespace galien::nn
