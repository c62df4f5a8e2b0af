#include "supplycast/autodiff/tape.hpp"

#include "supplycast/errors.hpp"

namespace supplycast::ad {

Var Tape::push(Tensor value, bool requires_grad, Backward backward) {
    nodes_.push_back(Node{std::move(value), Tensor{}, requires_grad ? std::move(backward) : Backward{},
                          requires_grad, false});
    return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) { return push(std::move(value), false, {}); }

Var Tape::variable(Tensor value) { return push(std::move(value), true, {}); }

Var Tape::record(Tensor value, std::initializer_list<Var> inputs, Backward backward) {
    bool needs = false;
    for (const auto& in : inputs) needs = needs || nodes_[in.id()].requires_grad;
    return push(std::move(value), needs, std::move(backward));
}

Var Tape::record(Tensor value, const std::vector<Var>& inputs, Backward backward) {
    bool needs = false;
    for (const auto& in : inputs) needs = needs || nodes_[in.id()].requires_grad;
    return push(std::move(value), needs, std::move(backward));
}

Tensor& Tape::grad_buffer(std::size_t id) {
    auto& node = nodes_[id];
    if (!node.has_grad) {
        node.grad = Tensor(node.value.rows(), node.value.cols(), 0.0);
        node.has_grad = true;
    }
    return node.grad;
}

Tensor Tape::grad(Var v) const {
    const auto& node = nodes_[v.id()];
    if (!node.has_grad) return Tensor(node.value.rows(), node.value.cols(), 0.0);
    return node.grad;
}

void Tape::zero_grad() {
    for (auto& node : nodes_) {
        node.grad = Tensor{};
        node.has_grad = false;
    }
}

void Tape::backward(Var output) {
    if (output.tape() != this) throw std::invalid_argument("backward: variable belongs to another tape");
    const auto& out = nodes_[output.id()].value;
    if (out.rows() != 1 || out.cols() != 1) {
        throw ShapeError("backward needs a scalar output, got shape " + out.shape_string());
    }
    zero_grad();
    grad_buffer(output.id())[0] = 1.0;
    for (std::size_t i = output.id() + 1; i-- > 0;) {
        auto& node = nodes_[i];
        if (node.has_grad && node.backward) node.backward(*this, i);
    }
}

}  // namespace supplycast::ad
