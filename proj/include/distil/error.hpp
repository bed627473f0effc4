#pragma once

#include <stdexcept>
#include <string>

namespace distil {

// Precondition / API misuse (wrong call, invalid argument combination).
struct ContractError : std::runtime_error {
    explicit ContractError(const std::string& msg)
        : std::runtime_error("contract: " + msg) {}
};

// Tensor dimension mismatches. Messages name both shapes.
struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg)
        : std::runtime_error("shape: " + msg) {}
};

// Malformed input data (out-of-range ids, bad tags, ragged files).
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg)
        : std::runtime_error("data: " + msg) {}
};

// Missing or unreadable/unwritable files.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg)
        : std::runtime_error("io: " + msg) {}
};

// Corrupt or incompatible checkpoint files.
struct CheckpointError : std::runtime_error {
    explicit CheckpointError(const std::string& msg)
        : std::runtime_error("checkpoint: " + msg) {}
};

// Numeric failure during a training run (NaN loss and friends).
struct TrainingError : std::runtime_error {
    explicit TrainingError(const std::string& msg)
        : std::runtime_error("training: " + msg) {}
};

}  // namespace distil
