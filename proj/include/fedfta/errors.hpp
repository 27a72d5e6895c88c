#pragma once

#include <stdexcept>
#include <string>

namespace fedfta {

// Length/shape disagreement between combinable values.
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// NaN/Inf produced or encountered where finite values are required.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Precondition violation on an argument value.
struct ArgumentError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Malformed or unreadable input file.
struct IngestionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Federation protocol violation (unknown client, failed round).
struct ProtocolError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace fedfta
