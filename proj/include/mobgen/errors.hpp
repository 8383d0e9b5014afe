#pragma once

#include <stdexcept>
#include <string>

namespace mobgen {

/// Base class of all recoverable mobgen errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Input file could not be read or decoded.
struct ParseError : Error {
    using Error::Error;
};

/// Input decoded fine but violates the expected schema.
struct SchemaError : Error {
    using Error::Error;
};

/// Caller passed an out-of-contract argument.
struct ArgumentError : Error {
    using Error::Error;
};

/// An input yields a model with nothing in it (no buildings, no roads, ...).
struct EmptyModelError : Error {
    using Error::Error;
};

/// A calibration fit failed to converge or was handed degenerate data.
struct FitError : Error {
    using Error::Error;
};

/// A persisted model artifact (bundle, matrix, grid) is unusable.
struct ModelLoadError : Error {
    using Error::Error;
};

/// Every candidate of a choice set has zero probability.
struct DegenerateChoiceError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

} // namespace mobgen
