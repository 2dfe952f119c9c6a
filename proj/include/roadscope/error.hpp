#pragma once

#include <stdexcept>
#include <string>

namespace roadscope {

// Error taxonomy shared by all modules. Each code maps onto one of the
// CLI exit classes: usage (1), data (2), internal (3).
enum class Errc {
    malformed_input,
    empty_result,
    latitude_band,
    out_of_footprint,
    missing_metadata,
    size_mismatch,
    rotated_transform,
    digest_mismatch,
    out_of_bounds,
    insufficient_class,
    io_error,
    schema_error,
    shape_mismatch,
    non_finite,
    label_out_of_range,
    version_mismatch,
    backend_unavailable,
    protocol_error,
    dimension_mismatch,
    architecture_unsupported,
    empty_matrix,
    config_infeasible,
    usage,
    internal,
};

const char* errc_name(Errc c);

class Error : public std::runtime_error {
  public:
    Error(Errc code, const std::string& msg)
        : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}

    Errc code() const { return code_; }

  private:
    Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& msg) { throw Error(code, msg); }

// 1 = usage error, 2 = data error, 3 = internal error.
int exit_code_for(Errc c);

}  // namespace roadscope
