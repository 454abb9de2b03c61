#pragma once

#include <stdexcept>
#include <string>

namespace crlkit {

/// Thrown when operand shapes do not conform.
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Thrown for invalid configuration or malformed input files.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Thrown when a computation produces or encounters non-finite values.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Thrown on unreadable, truncated or corrupt files.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class View { X, Y };

inline View other_view(View v) { return v == View::X ? View::Y : View::X; }

inline std::string view_name(View v) { return v == View::X ? "x" : "y"; }

}  // namespace crlkit
