#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace galien {

/// Evenly sampled univariate series. `step_minutes` is the sampling interval;
/// 15-minute resolution gives 96 samples per day and 672 per week.
struct TimeSeries {
    std::vector<double> values;
    double step_minutes = 15.0;
    std::optional<std::string> origin; // timestamp of values[0], if known
    std::string name;

    std::size_t size() const { return values.size(); }
};

/// Z-score parameters. `stddev` is the population standard deviation of the
/// fitting segment; fitting a constant segment is an error.
struct NormStats {
    double mean = 0.0;
    double stddev = 1.0;
};

/// Chronological split fractions. Each must lie in (0, 1) and they must sum
/// to 1. Train and validation sizes are floored, the test segment takes the
/// remainder, and the three segments stay contiguous and in order.
struct SplitSpec {
    double train = 0.7;
    double val = 0.1;
    double test = 0.2;
};

struct SplitResult {
    TimeSeries train;
    TimeSeries val;
    TimeSeries test;
    std::size_t val_offset = 0;  // index of val[0] in the source series
    std::size_t test_offset = 0; // index of test[0] in the source series
};

enum class MissingPolicy {
    error,              // any missing cell aborts the load
    linear_interpolate, // interior gaps are filled linearly
};

struct CsvOptions {
    std::string value_column = "0"; // header name, or 0-based index as digits
    bool has_header = false;
    char delimiter = ',';
    MissingPolicy missing = MissingPolicy::error;
    double step_minutes = 15.0;
    std::string series_name; // defaults to the file stem
};

/// Reads one value column from a delimited text file. Empty cells and cells
/// spelled nan/na/null (any case) count as missing; under the interpolate
/// policy interior runs are filled linearly between their finite neighbours,
/// while missing values at either end are never invented.
TimeSeries load_csv(const std::string& path, const CsvOptions& opts = {});

/// Writes `index,value` rows. `start_index` is the absolute position of
/// values[0] in the series the segment was cut from.
void write_split_csv(const std::string& path, const TimeSeries& ts, std::size_t start_index);

/// Reads a file produced by write_split_csv.
TimeSeries read_split_csv(const std::string& path);

void validate(const TimeSeries& ts);

SplitResult split(const TimeSeries& ts, const SplitSpec& spec);

/// Population mean / standard deviation of the segment. Call on the training
/// segment only; validation and test must reuse the training statistics.
NormStats fit_norm(std::span<const double> values);

std::vector<double> apply_norm(std::span<const double> values, const NormStats& stats);
std::vector<double> invert_norm(std::span<const double> values, const NormStats& stats);

} // namespace galien
