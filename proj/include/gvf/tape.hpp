#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gvf/tensor.hpp"

namespace gvf::ad {

// Reverse-mode tape. Nodes are appended in evaluation order, which is by
// construction a topological order, so backward() is a single reverse sweep.
class Tape {
public:
    using Var = int;

    struct Node {
        Tensor value;
        Tensor grad;
        std::vector<Var> inputs;
        std::function<void(Tape&, Node&)> backward;
        std::string name;
        bool needs_grad = false;
    };

    Var leaf(Tensor value, bool needs_grad, std::string name = "leaf") {
        Node n;
        n.value = std::move(value);
        n.needs_grad = needs_grad;
        n.name = std::move(name);
        nodes_.push_back(std::move(n));
        return static_cast<Var>(nodes_.size() - 1);
    }

    Var op(Tensor value, std::vector<Var> inputs,
           std::function<void(Tape&, Node&)> backward, std::string name) {
        Node n;
        n.value = std::move(value);
        n.inputs = std::move(inputs);
        n.backward = std::move(backward);
        n.name = std::move(name);
        for (Var in : n.inputs)
            if (nodes_[in].needs_grad) { n.needs_grad = true; break; }
        nodes_.push_back(std::move(n));
        return static_cast<Var>(nodes_.size() - 1);
    }

    const Tensor& value(Var v) const { return nodes_[v].value; }
    const Tensor& grad(Var v) const { return nodes_[v].grad; }
    Tensor& grad_mut(Var v) { return nodes_[v].grad; }
    const Node& node(Var v) const { return nodes_[v]; }
    std::size_t node_count() const { return nodes_.size(); }

    // Seeds the scalar output with `seed` and sweeps the tape in reverse.
    void backward(Var output, double seed = 1.0) {
        if (value(output).size() != 1)
            throw std::invalid_argument("backward: output node '" +
                                        nodes_[output].name + "' is not scalar");
        for (auto& n : nodes_) {
            n.grad = Tensor(n.value.shape());
        }
        nodes_[output].grad[0] = seed;
        for (int i = output; i >= 0; --i) {
            Node& n = nodes_[i];
            if (n.backward && n.needs_grad) n.backward(*this, n);
        }
    }

    void accumulate(Var v, std::size_t flat_index, double g) {
        nodes_[v].grad[flat_index] += g;
    }

private:
    std::vector<Node> nodes_;
};

}  // namespace gvf::ad
