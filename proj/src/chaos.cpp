#include "galien/chaos.hpp"

#include "galien/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace galien {

namespace {

struct Range {
    double lo;
    double width;
};

Range value_range(std::span<const double> x) {
    auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
    double lo = *lo_it;
    double width = *hi_it - lo;
    if (!(width > 0.0)) raise(Errc::degenerate_series, "series has zero range");
    return {lo, width};
}

int bin_of(double v, const Range& r, int bins) {
    auto b = static_cast<int>((v - r.lo) / r.width * static_cast<double>(bins));
    return std::min(b, bins - 1);
}

/// Nearest-neighbor tree over fixed-dimension points with an index-window
/// exclusion. Ties on distance resolve toward the smaller point index, the
/// same rule a linear scan with strict `<` would apply.
class KdTree {
public:
    KdTree(const double* pts, long count, int dim) : pts_(pts), dim_(dim) {
        order_.resize(static_cast<std::size_t>(count));
        std::iota(order_.begin(), order_.end(), 0L);
        nodes_.reserve(order_.size());
        root_ = build(0, count, 0);
    }

    /// Smallest (distance^2, index) neighbor of q with |index - center| >
    /// theiler and index < limit. center < 0 disables the exclusion.
    long nearest(const double* q, long center, long theiler, long limit, double* best_d2) const {
        long best = -1;
        double d2 = std::numeric_limits<double>::infinity();
        search(root_, q, center, theiler, limit, &best, &d2);
        if (best_d2 != nullptr) *best_d2 = d2;
        return best;
    }

    /// Appends every admissible index with distance in [r_lo, r_hi].
    void range(const double* q, double r_lo, double r_hi, long center, long theiler, long limit,
               std::vector<long>* out) const {
        range_search(root_, q, r_lo * r_lo, r_hi * r_hi, center, theiler, limit, out);
    }

private:
    struct Node {
        long point = -1;
        int axis = 0;
        long left = -1;
        long right = -1;
    };

    long build(long begin, long end, int depth) {
        if (begin >= end) return -1;
        int axis = depth % dim_;
        long mid = begin + (end - begin) / 2;
        std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                         [&](long a, long b) {
                             double va = pts_[a * dim_ + axis];
                             double vb = pts_[b * dim_ + axis];
                             return va < vb || (va == vb && a < b);
                         });
        auto id = static_cast<long>(nodes_.size());
        nodes_.push_back(Node{order_[static_cast<std::size_t>(mid)], axis, -1, -1});
        long left = build(begin, mid, depth + 1);
        long right = build(mid + 1, end, depth + 1);
        nodes_[static_cast<std::size_t>(id)].left = left;
        nodes_[static_cast<std::size_t>(id)].right = right;
        return id;
    }

    bool admissible(long idx, long center, long theiler, long limit) const {
        if (idx >= limit) return false;
        if (center >= 0 && std::labs(idx - center) <= theiler) return false;
        return true;
    }

    double dist2(const double* q, long idx) const {
        const double* p = pts_ + idx * dim_;
        double s = 0.0;
        for (int k = 0; k < dim_; ++k) {
            double d = q[k] - p[k];
            s += d * d;
        }
        return s;
    }

    void search(long node_id, const double* q, long center, long theiler, long limit, long* best,
                double* best_d2) const {
        if (node_id < 0) return;
        const Node& node = nodes_[static_cast<std::size_t>(node_id)];
        if (admissible(node.point, center, theiler, limit)) {
            double d2 = dist2(q, node.point);
            if (d2 < *best_d2 || (d2 == *best_d2 && node.point < *best)) {
                *best_d2 = d2;
                *best = node.point;
            }
        }
        double diff = q[node.axis] - pts_[node.point * dim_ + node.axis];
        long near = diff <= 0.0 ? node.left : node.right;
        long far = diff <= 0.0 ? node.right : node.left;
        search(near, q, center, theiler, limit, best, best_d2);
        if (diff * diff <= *best_d2) {
            search(far, q, center, theiler, limit, best, best_d2);
        }
    }

    void range_search(long node_id, const double* q, double lo2, double hi2, long center,
                      long theiler, long limit, std::vector<long>* out) const {
        if (node_id < 0) return;
        const Node& node = nodes_[static_cast<std::size_t>(node_id)];
        if (admissible(node.point, center, theiler, limit)) {
            double d2 = dist2(q, node.point);
            if (d2 >= lo2 && d2 <= hi2) out->push_back(node.point);
        }
        double diff = q[node.axis] - pts_[node.point * dim_ + node.axis];
        if (diff <= 0.0 || diff * diff <= hi2) range_search(node.left, q, lo2, hi2, center, theiler, limit, out);
        if (diff >= 0.0 || diff * diff <= hi2) range_search(node.right, q, lo2, hi2, center, theiler, limit, out);
    }

    const double* pts_;
    int dim_;
    std::vector<long> order_;
    std::vector<Node> nodes_;
    long root_ = -1;
};

/// Embeds ts into `count` points of dimension `dim` at lag tau, row-major
/// per point: out[i*dim + j] = ts[i + j*tau].
std::vector<double> embed_points(std::span<const double> ts, int tau, int dim, long count) {
    std::vector<double> pts(static_cast<std::size_t>(count) * static_cast<std::size_t>(dim));
    for (long i = 0; i < count; ++i) {
        for (int j = 0; j < dim; ++j) {
            pts[static_cast<std::size_t>(i * dim + j)] =
                ts[static_cast<std::size_t>(i + static_cast<long>(j) * tau)];
        }
    }
    return pts;
}

} // namespace

double mutual_information(std::span<const double> x, std::span<const double> y, int bins) {
    if (x.size() != y.size()) {
        raise(Errc::length_mismatch, "mutual information needs equally long series");
    }
    if (x.size() < 2) raise(Errc::series_too_short, "need at least 2 samples");
    if (bins < 2) raise(Errc::invalid_spec, "bins must be >= 2");

    Range rx = value_range(x);
    Range ry = value_range(y);
    auto n = static_cast<long>(x.size());
    std::vector<long> joint(static_cast<std::size_t>(bins) * static_cast<std::size_t>(bins), 0);
    std::vector<long> mx(static_cast<std::size_t>(bins), 0);
    std::vector<long> my(static_cast<std::size_t>(bins), 0);
    for (long i = 0; i < n; ++i) {
        int bx = bin_of(x[static_cast<std::size_t>(i)], rx, bins);
        int by = bin_of(y[static_cast<std::size_t>(i)], ry, bins);
        ++joint[static_cast<std::size_t>(bx * bins + by)];
        ++mx[static_cast<std::size_t>(bx)];
        ++my[static_cast<std::size_t>(by)];
    }
    double total = static_cast<double>(n);
    std::vector<double> terms;
    terms.reserve(static_cast<std::size_t>(n));
    for (int bx = 0; bx < bins; ++bx) {
        for (int by = 0; by < bins; ++by) {
            long c = joint[static_cast<std::size_t>(bx * bins + by)];
            if (c == 0) continue;
            double pxy = static_cast<double>(c) / total;
            double denom = static_cast<double>(mx[static_cast<std::size_t>(bx)]) *
                           static_cast<double>(my[static_cast<std::size_t>(by)]) / (total * total);
            terms.push_back(pxy * std::log(pxy / denom));
        }
    }
    // Summing in sorted order makes the result independent of which argument
    // came first: swapping x and y permutes the terms but not their values.
    std::sort(terms.begin(), terms.end());
    double info = std::accumulate(terms.begin(), terms.end(), 0.0);
    return info < 0.0 ? 0.0 : info;
}

MiProfile mi_profile(std::span<const double> ts, int tau_max, int bins) {
    auto n = static_cast<long>(ts.size());
    if (tau_max < 1) raise(Errc::invalid_spec, "tau_max must be >= 1");
    if (static_cast<long>(tau_max) * 2 >= n) {
        raise(Errc::series_too_short,
              "tau_max " + std::to_string(tau_max) + " needs a series longer than " +
                  std::to_string(2 * tau_max));
    }
    MiProfile profile;
    profile.bins = bins;
    profile.taus.reserve(static_cast<std::size_t>(tau_max));
    profile.mi.reserve(static_cast<std::size_t>(tau_max));
    for (int tau = 1; tau <= tau_max; ++tau) {
        auto len = static_cast<std::size_t>(n - tau);
        profile.taus.push_back(tau);
        profile.mi.push_back(
            mutual_information(ts.first(len), ts.subspan(static_cast<std::size_t>(tau)), bins));
    }
    return profile;
}

int estimate_delay(const MiProfile& profile, DelayRule rule) {
    if (profile.mi.empty()) raise(Errc::invalid_spec, "empty MI profile");
    std::size_t n = profile.mi.size();
    if (rule == DelayRule::first_local_min && n >= 3) {
        for (std::size_t k = 1; k + 1 < n; ++k) {
            if (profile.mi[k] < profile.mi[k - 1] && profile.mi[k] < profile.mi[k + 1]) {
                return profile.taus[k];
            }
        }
    }
    std::size_t best = 0;
    for (std::size_t k = 1; k < n; ++k) {
        if (profile.mi[k] < profile.mi[best]) best = k;
    }
    return profile.taus[best];
}

double fnn_fraction(std::span<const double> ts, int tau, int m, double epsilon, int theiler) {
    if (tau < 1 || m < 1) raise(Errc::invalid_spec, "tau and m must be >= 1");
    if (!(epsilon > 0.0)) raise(Errc::invalid_spec, "epsilon must be positive");
    if (theiler < 0) theiler = tau;
    auto n = static_cast<long>(ts.size());
    long count = n - static_cast<long>(m) * tau; // points that can be lifted to m+1
    if (count < 2) {
        raise(Errc::series_too_short,
              "series of length " + std::to_string(n) + " cannot embed at dimension " +
                  std::to_string(m + 1));
    }

    std::vector<double> pts = embed_points(ts, tau, m, count);
    KdTree tree(pts.data(), count, m);

    long tested = 0;
    long false_count = 0;
#pragma omp parallel for schedule(static) reduction(+ : tested, false_count)
    for (long i = 0; i < count; ++i) {
        double r2m = 0.0;
        long j = tree.nearest(pts.data() + i * m, i, theiler, count, &r2m);
        if (j < 0) continue;
        ++tested;
        double lift = ts[static_cast<std::size_t>(i + static_cast<long>(m) * tau)] -
                      ts[static_cast<std::size_t>(j + static_cast<long>(m) * tau)];
        double r2m1 = r2m + lift * lift;
        // A coincident pair that separates after the lift is false by
        // convention; a pair coincident in both dimensions is not.
        bool is_false = r2m == 0.0 ? r2m1 > 0.0 : r2m1 / r2m >= epsilon;
        if (is_false) ++false_count;
    }
    if (tested == 0) {
        raise(Errc::no_valid_neighbor, "Theiler window excludes every candidate neighbor");
    }
    return static_cast<double>(false_count) / static_cast<double>(tested);
}

DimEstimate estimate_dim(std::span<const double> ts, int tau, int m_max, double epsilon,
                         double threshold, int theiler) {
    if (m_max < 2) raise(Errc::invalid_spec, "m_max must be >= 2");
    if (theiler < 0) theiler = tau;
    DimEstimate est;
    est.profile.epsilon = epsilon;
    est.profile.theiler = theiler;
    for (int m = 1; m <= m_max; ++m) {
        double f = fnn_fraction(ts, tau, m, epsilon, theiler);
        est.profile.dims.push_back(m);
        est.profile.fraction.push_back(f);
        if (f < threshold) {
            est.m = m;
            est.converged = true;
            return est;
        }
    }
    est.m = m_max;
    est.converged = false;
    return est;
}

WolfParams WolfParams::defaults_for(std::span<const double> ts, int tau) {
    Range r = value_range(ts);
    WolfParams wp;
    wp.evolve_steps = 3;
    wp.min_sep = 1e-3 * r.width;
    wp.max_sep = 0.1 * r.width;
    wp.theiler = tau;
    wp.max_replacement_angle = 0.3;
    return wp;
}

double wolf_lle(std::span<const double> ts, PsrParams params, const WolfParams& wp) {
    if (wp.evolve_steps < 1) raise(Errc::invalid_spec, "evolve_steps must be >= 1");
    if (!(wp.min_sep > 0.0) || !(wp.max_sep > wp.min_sep)) {
        raise(Errc::invalid_spec, "need 0 < min_sep < max_sep");
    }
    value_range(ts); // rejects constant input before any embedding work

    auto n = static_cast<long>(ts.size());
    long count = n - static_cast<long>(params.m - 1) * params.tau;
    if (count < 10L * wp.evolve_steps) {
        raise(Errc::series_too_short, "embedded trajectory needs at least 10*evolve_steps points");
    }

    int dim = params.m;
    std::vector<double> pts = embed_points(ts, params.tau, dim, count);
    KdTree tree(pts.data(), count, dim);
    auto point = [&](long i) { return pts.data() + i * dim; };
    auto dist = [&](long a, long b) {
        double s = 0.0;
        for (int k = 0; k < dim; ++k) {
            double d = point(a)[k] - point(b)[k];
            s += d * d;
        }
        return std::sqrt(s);
    };

    long limit = count - wp.evolve_steps; // exclusive bound on evolvable indices
    long fiducial = 0;

    // Initial neighbor: nearest evolvable point outside the Theiler window
    // and at least min_sep away (closer pairs are noise-dominated).
    auto nearest_outside = [&](long center) {
        long best = -1;
        double best_d2 = std::numeric_limits<double>::infinity();
        std::vector<long> cand;
        tree.range(point(center), wp.min_sep, std::numeric_limits<double>::max(), center,
                   wp.theiler, limit, &cand);
        for (long k : cand) {
            double d2 = 0.0;
            for (int q = 0; q < dim; ++q) {
                double d = point(center)[q] - point(k)[q];
                d2 += d * d;
            }
            if (d2 < best_d2 || (d2 == best_d2 && k < best)) {
                best_d2 = d2;
                best = k;
            }
        }
        return best;
    };

    long neighbor = nearest_outside(fiducial);
    if (neighbor < 0) raise(Errc::no_valid_neighbor, "no admissible starting neighbor");

    double total_log = 0.0;
    long total_steps = 0;
    std::vector<long> cand;
    while (fiducial < limit && neighbor < limit) {
        double d0 = dist(fiducial, neighbor);
        fiducial += wp.evolve_steps;
        neighbor += wp.evolve_steps;
        double d1 = dist(fiducial, neighbor);
        if (d0 > 0.0 && d1 > 0.0) {
            total_log += std::log(d1 / d0);
            total_steps += wp.evolve_steps;
        }
        if (fiducial >= limit) break;

        // Track the same pair while its separation stays inside the band;
        // growth keeps compounding there and that is what the exponent
        // measures. Only a pair that leaves the band gets replaced.
        if (neighbor < limit && d1 > 0.0 && d1 <= wp.max_sep) continue;

        // Replacement: the smallest-angle candidate inside the separation
        // band, falling back to the plain nearest point when none fits.
        cand.clear();
        tree.range(point(fiducial), wp.min_sep, wp.max_sep, fiducial, wp.theiler, limit, &cand);
        long replacement = -1;
        if (d1 > 0.0 && !cand.empty()) {
            double best_angle = std::numeric_limits<double>::infinity();
            for (long k : cand) {
                double dot = 0.0;
                double norm2 = 0.0;
                for (int q = 0; q < dim; ++q) {
                    double u = point(k)[q] - point(fiducial)[q];
                    double v = point(neighbor)[q] - point(fiducial)[q];
                    dot += u * v;
                    norm2 += u * u;
                }
                double norm = std::sqrt(norm2);
                if (!(norm > 0.0)) continue;
                double c = std::clamp(dot / (norm * d1), -1.0, 1.0);
                double angle = std::acos(c);
                if (angle < best_angle || (angle == best_angle && k < replacement)) {
                    best_angle = angle;
                    replacement = k;
                }
            }
            if (replacement >= 0 && best_angle > wp.max_replacement_angle) replacement = -1;
        }
        if (replacement >= 0) {
            neighbor = replacement;
        } else {
            neighbor = nearest_outside(fiducial);
            if (neighbor < 0) break;
        }
    }
    if (total_steps == 0) {
        raise(Errc::no_valid_neighbor, "no neighbor pair survived long enough to measure");
    }
    return total_log / static_cast<double>(total_steps);
}

} // namespace galien
