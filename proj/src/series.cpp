#include "galien/series.hpp"

#include "galien/errors.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace galien {

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

bool is_missing_token(const std::string& cell) {
    if (cell.empty()) return true;
    std::string l = lower(cell);
    return l == "nan" || l == "na" || l == "null";
}

std::vector<std::string> split_row(const std::string& line, char delim) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, delim)) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == delim) cells.push_back("");
    return cells;
}

/// Parses a cell as double. Returns false for missing tokens; throws for
/// garbage that is neither a number nor a missing marker.
bool parse_cell(const std::string& cell, std::size_t row, double* out) {
    if (is_missing_token(cell)) return false;
    const char* first = cell.data();
    const char* last = first + cell.size();
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last) {
        raise(Errc::unparseable_value,
              "row " + std::to_string(row) + ": cannot parse '" + cell + "' as a number");
    }
    if (!std::isfinite(v)) return false; // written-out inf/nan counts as missing
    *out = v;
    return true;
}

void fill_gaps(std::vector<double>& values, std::vector<bool>& present, MissingPolicy policy) {
    std::size_t n = values.size();
    std::size_t first = 0;
    while (first < n && !present[first]) ++first;
    if (first == n) raise(Errc::degenerate_series, "no finite values in column");
    std::size_t last = n - 1;
    while (!present[last]) --last;

    bool any_gap = first > 0 || last < n - 1;
    for (std::size_t i = first; i <= last && !any_gap; ++i) any_gap = !present[i];
    if (!any_gap) return;

    if (policy == MissingPolicy::error) {
        std::size_t where = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!present[i]) { where = i; break; }
        }
        raise(Errc::unparseable_value, "missing value at row offset " + std::to_string(where) +
                                           " with missing policy 'error'");
    }
    if (first > 0 || last < n - 1) {
        raise(Errc::leading_or_trailing_gap,
              "missing values at the series boundary cannot be interpolated");
    }
    std::size_t i = first;
    while (i <= last) {
        if (present[i]) { ++i; continue; }
        std::size_t lo = i - 1; // present by construction
        std::size_t hi = i;
        while (!present[hi]) ++hi;
        double step = (values[hi] - values[lo]) / static_cast<double>(hi - lo);
        for (std::size_t k = lo + 1; k < hi; ++k) {
            values[k] = values[lo] + step * static_cast<double>(k - lo);
            present[k] = true;
        }
        i = hi + 1;
    }
}

} // namespace

TimeSeries load_csv(const std::string& path, const CsvOptions& opts) {
    std::ifstream in(path);
    if (!in) raise(Errc::file_not_found, path);

    std::string line;
    std::vector<std::string> header;
    std::size_t row = 0;
    if (opts.has_header) {
        if (!std::getline(in, line)) raise(Errc::series_too_short, path + ": empty file");
        header = split_row(line, opts.delimiter);
        ++row;
    }

    // Resolve the column: a header name when one exists, otherwise an index.
    std::size_t col = 0;
    bool resolved = false;
    if (opts.has_header) {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == opts.value_column) {
                col = i;
                resolved = true;
                break;
            }
        }
    }
    if (!resolved) {
        const std::string& c = opts.value_column;
        bool digits = !c.empty() && std::all_of(c.begin(), c.end(), [](unsigned char ch) {
            return std::isdigit(ch) != 0;
        });
        if (!digits) {
            raise(Errc::column_missing, path + ": no column named '" + opts.value_column + "'");
        }
        col = static_cast<std::size_t>(std::stoul(c));
    }

    std::vector<double> values;
    std::vector<bool> present;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) {
            // A blank row is a sample with no value, handled by the missing policy.
            values.push_back(0.0);
            present.push_back(false);
            continue;
        }
        std::vector<std::string> cells = split_row(line, opts.delimiter);
        if (col >= cells.size()) {
            raise(Errc::column_missing,
                  path + ": row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                      " cells, need column " + std::to_string(col));
        }
        double v = 0.0;
        bool ok = parse_cell(cells[col], row, &v);
        values.push_back(ok ? v : 0.0);
        present.push_back(ok);
    }
    if (values.empty()) raise(Errc::series_too_short, path + ": no data rows");

    fill_gaps(values, present, opts.missing);

    TimeSeries ts;
    ts.values = std::move(values);
    ts.step_minutes = opts.step_minutes;
    ts.name = opts.series_name.empty() ? std::filesystem::path(path).stem().string()
                                       : opts.series_name;
    validate(ts);
    return ts;
}

void write_split_csv(const std::string& path, const TimeSeries& ts, std::size_t start_index) {
    std::ofstream out(path);
    if (!out) raise(Errc::io_error, "cannot open " + path + " for writing");
    out << "index,value\n";
    char buf[64];
    for (std::size_t i = 0; i < ts.values.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", start_index + i, ts.values[i]);
        out << buf;
    }
    if (!out) raise(Errc::io_error, "write failed for " + path);
}

TimeSeries read_split_csv(const std::string& path) {
    CsvOptions opts;
    opts.value_column = "value";
    opts.has_header = true;
    return load_csv(path, opts);
}

void validate(const TimeSeries& ts) {
    if (ts.values.empty()) raise(Errc::series_too_short, "series is empty");
    if (!(ts.step_minutes > 0.0)) {
        raise(Errc::invalid_spec, "step_minutes must be positive");
    }
    for (std::size_t i = 0; i < ts.values.size(); ++i) {
        if (!std::isfinite(ts.values[i])) {
            raise(Errc::unparseable_value,
                  "non-finite value at index " + std::to_string(i));
        }
    }
}

SplitResult split(const TimeSeries& ts, const SplitSpec& spec) {
    auto check_frac = [](double f, const char* which) {
        if (!(f > 0.0 && f < 1.0)) {
            raise(Errc::config_invalid,
                  std::string("split fraction '") + which + "' must lie in (0, 1)");
        }
    };
    check_frac(spec.train, "train");
    check_frac(spec.val, "val");
    check_frac(spec.test, "test");
    if (std::abs(spec.train + spec.val + spec.test - 1.0) > 1e-9) {
        raise(Errc::config_invalid, "split fractions must sum to 1");
    }

    std::size_t n = ts.values.size();
    auto train_n = static_cast<std::size_t>(std::floor(static_cast<double>(n) * spec.train));
    auto val_n = static_cast<std::size_t>(std::floor(static_cast<double>(n) * spec.val));
    if (train_n == 0 || val_n == 0 || train_n + val_n >= n) {
        raise(Errc::segment_too_short,
              "series of length " + std::to_string(n) + " leaves an empty split segment");
    }

    auto cut = [&](std::size_t begin, std::size_t count) {
        TimeSeries seg;
        seg.values.assign(ts.values.begin() + static_cast<std::ptrdiff_t>(begin),
                          ts.values.begin() + static_cast<std::ptrdiff_t>(begin + count));
        seg.step_minutes = ts.step_minutes;
        seg.name = ts.name;
        return seg;
    };

    SplitResult r;
    r.train = cut(0, train_n);
    r.val = cut(train_n, val_n);
    r.test = cut(train_n + val_n, n - train_n - val_n);
    r.val_offset = train_n;
    r.test_offset = train_n + val_n;
    return r;
}

NormStats fit_norm(std::span<const double> values) {
    if (values.empty()) raise(Errc::series_too_short, "cannot fit normalization on empty data");
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(values.size());
    double sd = std::sqrt(var);
    if (!(sd > 0.0)) {
        raise(Errc::degenerate_series, "constant segment has zero standard deviation");
    }
    return NormStats{mean, sd};
}

std::vector<double> apply_norm(std::span<const double> values, const NormStats& stats) {
    std::vector<double> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = (values[i] - stats.mean) / stats.stddev;
    return out;
}

std::vector<double> invert_norm(std::span<const double> values, const NormStats& stats) {
    std::vector<double> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = values[i] * stats.stddev + stats.mean;
    return out;
}

} // namespace galien
