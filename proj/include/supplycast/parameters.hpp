#pragma once

#include <cstddef>
#include <random>
#include <string>
#include <vector>

#include "supplycast/autodiff/tape.hpp"

namespace supplycast {

/// Named, ordered collection of learnable tensors. Layers refer to their
/// weights by index so one set can be bound to any number of tapes.
class ParameterSet {
public:
    std::size_t add(std::string name, ad::Tensor value);

    std::size_t size() const noexcept { return values_.size(); }
    std::size_t scalar_count() const noexcept;
    const std::string& name(std::size_t i) const { return names_.at(i); }
    const ad::Tensor& value(std::size_t i) const { return values_.at(i); }
    ad::Tensor& value(std::size_t i) { return values_.at(i); }
    std::vector<ad::Tensor>& values() noexcept { return values_; }
    const std::vector<ad::Tensor>& values() const noexcept { return values_; }

    /// One tape variable per parameter; trainable=false binds constants,
    /// which skips gradient bookkeeping during inference.
    std::vector<ad::Var> bind(ad::Tape& tape, bool trainable = true) const;

    friend bool operator==(const ParameterSet&, const ParameterSet&) = default;

private:
    std::vector<std::string> names_;
    std::vector<ad::Tensor> values_;
};

/// Uniform in +-sqrt(6 / (fan_in + fan_out)).
ad::Tensor glorot_uniform(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng);

}  // namespace supplycast
