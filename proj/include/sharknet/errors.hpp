#pragma once

#include <stdexcept>
#include <string>

namespace sharknet {

// Base type for every error the library raises on purpose.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Tensor shapes or dimensions do not line up.
struct ShapeError : Error {
    using Error::Error;
};

// A scalar argument or label is out of its admissible range.
struct ArgumentError : Error {
    using Error::Error;
};

// A run or model configuration is inconsistent.
struct ConfigError : Error {
    using Error::Error;
};

// Input data (manifest rows, image files) is malformed.
struct DataError : Error {
    using Error::Error;
};

// File-level failures: missing files, bad checkpoints, short reads.
struct IoError : Error {
    using Error::Error;
};

// Numeric failure during training (NaN gradients and friends).
struct TrainError : Error {
    using Error::Error;
};

}  // namespace sharknet
