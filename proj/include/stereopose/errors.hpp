#pragma once

#include <stdexcept>
#include <string>

namespace stereopose {

// Base for everything thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Argument violates a documented precondition (non-positive depth, bad
// window size, k out of range, non-orthonormal rotation, ...).
struct InvalidInputError : Error {
    using Error::Error;
};

// Point has z <= 0 in the camera frame.
struct BehindCameraError : InvalidInputError {
    using InvalidInputError::InvalidInputError;
};

// Fewer usable measurements than the solver's minimum.
struct InsufficientDataError : Error {
    using Error::Error;
};

// Measurements exist but span a degenerate configuration (collinear
// points, coincident bearings).
struct DegenerateConfigError : Error {
    using Error::Error;
};

// Malformed or inconsistent on-disk scene data; message carries file and
// key context.
struct ParseError : Error {
    using Error::Error;
};

// Feature archive failed a checksum or was truncated.
struct CorruptionError : Error {
    using Error::Error;
};

// Feature archive declares an unknown version, tag or dtype.
struct VersionError : Error {
    using Error::Error;
};

// Strategy/input mismatch or invalid run configuration.
struct ConfigError : Error {
    using Error::Error;
};

// Scene sampling could not satisfy the placement constraints.
struct GenerationError : Error {
    using Error::Error;
};

// Non-finite values encountered during optimization.
struct NumericError : Error {
    using Error::Error;
};

}  // namespace stereopose
