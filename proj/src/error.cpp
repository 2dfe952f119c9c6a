#include "roadscope/error.hpp"

namespace roadscope {

const char* errc_name(Errc c) {
    switch (c) {
        case Errc::malformed_input: return "MalformedInput";
        case Errc::empty_result: return "EmptyResult";
        case Errc::latitude_band: return "LatitudeBand";
        case Errc::out_of_footprint: return "OutOfFootprint";
        case Errc::missing_metadata: return "MissingMetadata";
        case Errc::size_mismatch: return "SizeMismatch";
        case Errc::rotated_transform: return "RotatedTransform";
        case Errc::digest_mismatch: return "DigestMismatch";
        case Errc::out_of_bounds: return "OutOfBounds";
        case Errc::insufficient_class: return "InsufficientClass";
        case Errc::io_error: return "IoError";
        case Errc::schema_error: return "SchemaError";
        case Errc::shape_mismatch: return "ShapeMismatch";
        case Errc::non_finite: return "NonFinite";
        case Errc::label_out_of_range: return "LabelOutOfRange";
        case Errc::version_mismatch: return "VersionMismatch";
        case Errc::backend_unavailable: return "BackendUnavailable";
        case Errc::protocol_error: return "ProtocolError";
        case Errc::dimension_mismatch: return "DimensionMismatch";
        case Errc::architecture_unsupported: return "ArchitectureUnsupported";
        case Errc::empty_matrix: return "EmptyMatrix";
        case Errc::config_infeasible: return "ConfigInfeasible";
        case Errc::usage: return "Usage";
        case Errc::internal: return "Internal";
    }
    return "Unknown";
}

int exit_code_for(Errc c) {
    switch (c) {
        case Errc::usage:
            return 1;
        case Errc::internal:
        case Errc::non_finite:
        case Errc::shape_mismatch:
            return 3;
        default:
            return 2;
    }
}

}  // namespace roadscope
