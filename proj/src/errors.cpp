#include "galien/errors.hpp"

namespace galien {

const char* errc_name(Errc c) {
    switch (c) {
    case Errc::config_invalid: return "ConfigInvalid";
    case Errc::invalid_spec: return "InvalidSpec";
    case Errc::file_not_found: return "FileNotFound";
    case Errc::column_missing: return "ColumnMissing";
    case Errc::unparseable_value: return "UnparseableValue";
    case Errc::leading_or_trailing_gap: return "LeadingOrTrailingGap";
    case Errc::segment_too_short: return "SegmentTooShort";
    case Errc::series_too_short: return "SeriesTooShort";
    case Errc::window_too_short: return "WindowTooShort";
    case Errc::length_mismatch: return "LengthMismatch";
    case Errc::shape_mismatch: return "ShapeMismatch";
    case Errc::zero_truth_value: return "ZeroTruthValue";
    case Errc::io_error: return "IoError";
    case Errc::degenerate_series: return "DegenerateSeries";
    case Errc::no_valid_neighbor: return "NoValidNeighbor";
    case Errc::non_finite_activation: return "NonFiniteActivation";
    case Errc::non_finite_loss: return "NonFiniteLoss";
    case Errc::singular_system: return "SingularSystem";
    case Errc::variant_has_no_local_branch: return "VariantHasNoLocalBranch";
    }
    return "UnknownError";
}

int exit_code_for(Errc c) {
    switch (c) {
    case Errc::config_invalid:
    case Errc::invalid_spec:
        return 2;
    case Errc::file_not_found:
    case Errc::column_missing:
    case Errc::unparseable_value:
    case Errc::leading_or_trailing_gap:
    case Errc::segment_too_short:
    case Errc::series_too_short:
    case Errc::window_too_short:
    case Errc::length_mismatch:
    case Errc::shape_mismatch:
    case Errc::zero_truth_value:
    case Errc::io_error:
        return 3;
    case Errc::degenerate_series:
    case Errc::no_valid_neighbor:
    case Errc::non_finite_activation:
    case Errc::non_finite_loss:
    case Errc::singular_system:
    case Errc::variant_has_no_local_branch:
        return 4;
    }
    return 1;
}

} // namespace galien
