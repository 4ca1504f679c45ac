#pragma once

#include <stdexcept>
#include <string>

namespace galien {

/// Error kinds raised across the library. The CLI maps each kind to an
/// exit-code category: config (2), data (3), numeric (4).
enum class Errc {
    // configuration
    config_invalid,
    invalid_spec,
    // data / input
    file_not_found,
    column_missing,
    unparseable_value,
    leading_or_trailing_gap,
    segment_too_short,
    series_too_short,
    window_too_short,
    length_mismatch,
    shape_mismatch,
    zero_truth_value,
    io_error,
    // numeric
    degenerate_series,
    no_valid_neighbor,
    non_finite_activation,
    non_finite_loss,
    singular_system,
    variant_has_no_local_branch,
};

const char* errc_name(Errc c);

/// 2 = config error, 3 = data error, 4 = numeric failure.
int exit_code_for(Errc c);

class Error : public std::runtime_error {
public:
    Error(Errc c, const std::string& msg)
        : std::runtime_error(std::string(errc_name(c)) + ": " + msg), code_(c) {}

    Errc code() const { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void raise(Errc c, const std::string& msg) {
    throw Error(c, msg);
}

} // namespace galien
