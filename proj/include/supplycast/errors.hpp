#pragma once

#include <stdexcept>
#include <string>

namespace supplycast {

/// Incompatible tensor or vector dimensions.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed or inconsistent input data (files, snapshots, configs).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A metric whose denominator is zero over the evaluated index set.
class DegenerateDataset : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Training produced a non-finite loss.
class TrainingDiverged : public std::runtime_error {
public:
    TrainingDiverged(std::string snapshot_id, const std::string& what)
        : std::runtime_error(what), snapshot_id_(std::move(snapshot_id)) {}

    const std::string& snapshot_id() const noexcept { return snapshot_id_; }

private:
    std::string snapshot_id_;
};

}  // namespace supplycast
