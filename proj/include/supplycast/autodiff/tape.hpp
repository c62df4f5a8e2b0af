#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <vector>

#include "supplycast/autodiff/tensor.hpp"

namespace supplycast::ad {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; only valid while the
/// tape is alive.
class Var {
public:
    Var() = default;

    const Tensor& value() const;
    std::size_t rows() const { return value().rows(); }
    std::size_t cols() const { return value().cols(); }
    bool requires_grad() const;

    Tape* tape() const noexcept { return tape_; }
    std::size_t id() const noexcept { return id_; }
    bool valid() const noexcept { return tape_ != nullptr; }

private:
    friend class Tape;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

/// Reverse-mode computation record. Nodes are appended in evaluation order,
/// so the node list is always topologically sorted.
class Tape {
public:
    /// Called during backward with the tape and the id of the node whose
    /// output gradient is complete.
    using Backward = std::function<void(Tape&, std::size_t)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Tensor value);
    Var variable(Tensor value);

    /// Appends an op result. The backward rule is kept only when one of the
    /// inputs needs a gradient.
    Var record(Tensor value, std::initializer_list<Var> inputs, Backward backward);
    Var record(Tensor value, const std::vector<Var>& inputs, Backward backward);

    const Tensor& value(std::size_t id) const { return nodes_[id].value; }
    bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

    /// Gradient accumulator of a node, allocated as zeros on first use.
    Tensor& grad_buffer(std::size_t id);
    /// Accumulated gradient of v, zeros when nothing flowed into it.
    Tensor grad(Var v) const;

    /// Seeds d(output)/d(output) = 1 and runs every recorded rule in reverse.
    /// Throws ShapeError when output is not 1 x 1.
    void backward(Var output);
    void zero_grad();

    std::size_t size() const noexcept { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        Backward backward;
        bool requires_grad = false;
        bool has_grad = false;
    };

    Var push(Tensor value, bool requires_grad, Backward backward);

    std::vector<Node> nodes_;
};

inline const Tensor& Var::value() const { return tape_->value(id_); }
inline bool Var::requires_grad() const { return tape_->requires_grad(id_); }

}  // namespace supplycast::ad
