#pragma once

#include <stdexcept>
#include <string>

namespace eora {

// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Incompatible or non-conforming shapes (non-square, mismatched matmul, ...).
struct DimensionError : Error {
    using Error::Error;
};

// Invalid data content: non-finite entries, empty batches, asymmetry.
struct ValidationError : Error {
    using Error::Error;
};

// Out-of-range algorithm parameters (N:M settings, bit widths, floors).
struct ParameterError : Error {
    using Error::Error;
};

// Requested rank outside [1, min(rows, cols)].
struct RankError : Error {
    using Error::Error;
};

// Malformed tensor container or manifest (bad magic, version, truncation).
struct FormatError : Error {
    using Error::Error;
};

// Calibration data carries no usable eigenspace (all-zero mean activation).
struct DegenerateCalibrationError : Error {
    using Error::Error;
};

// Invalid pipeline configuration (unknown fields, bad values).
struct ConfigError : Error {
    using Error::Error;
};

// Filesystem failures (missing files, unreadable/unwritable paths).
struct IoError : Error {
    using Error::Error;
};

// Numerical failure inside a solver (non-convergence).
struct NumericError : Error {
    using Error::Error;
};

} // namespace eora
