#pragma once

#include <stdexcept>
#include <string>

namespace fairkit {

// Error hierarchy mapped to CLI exit codes:
//   ValidationError -> 1, IoError -> 2, InternalError -> 3.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad user input: schema violations, out-of-range values, inconsistent configs.
struct ValidationError : Error {
    using Error::Error;
};

// Filesystem and stream failures.
struct IoError : Error {
    using Error::Error;
};

// Broken internal invariants; indicates a bug, not bad input.
struct InternalError : Error {
    using Error::Error;
};

}  // namespace fairkit
