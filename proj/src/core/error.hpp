#pragma once

#include <stdexcept>
#include <string>

namespace dcn {

// Error taxonomy mirrored by the C API status codes.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad configuration: invalid network/loss/training settings, mismatched
// palettes, out-of-range condition indices.
struct ConfigError : Error {
    using Error::Error;
};

// Bad runtime input: shape mismatches, values outside the declared range.
struct InputError : Error {
    using Error::Error;
};

// Filesystem / file-format failures.
struct IoError : Error {
    using Error::Error;
};

// Non-finite values encountered during training.
struct NumericError : Error {
    using Error::Error;
};

} // namespace dcn
