#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "attnfuse/tensor.hpp"

namespace attnfuse {

/// Handle to a value recorded on a Tape.
struct Var {
    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();
    std::size_t id = npos;
    bool valid() const noexcept { return id != npos; }
};

/// Reverse-mode tape. Every op appends one node holding its forward value and
/// a backward rule that scatters the node's gradient into its inputs. Nodes
/// that do not depend on a leaf skip backward entirely.
template <class T>
class Tape {
public:
    using TensorT = BasicTensor<T>;
    using BackwardFn = std::function<void(Tape&, std::size_t)>;

    Tape() = default;

    Var constant(TensorT value) { return push(std::move(value), false, {}); }
    Var leaf(TensorT value) { return push(std::move(value), true, {}); }

    Var emplace(TensorT value, bool requires_grad, BackwardFn backward) {
        return push(std::move(value), requires_grad, requires_grad ? std::move(backward) : BackwardFn{});
    }

    const TensorT& value(Var v) const { return nodes_.at(v.id).value; }
    bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
    std::size_t size() const noexcept { return nodes_.size(); }

    /// Gradient accumulated for `v`; zeros when backward never reached it.
    TensorT grad(Var v) const {
        const Node& n = nodes_.at(v.id);
        if (n.grad.empty() && !n.value.empty()) return TensorT(n.value.shape());
        return n.grad;
    }

    const TensorT& grad_of(std::size_t id) const { return nodes_[id].grad; }

    TensorT& grad_mut(std::size_t id) {
        Node& n = nodes_[id];
        if (n.grad.size() != n.value.size() || n.grad.empty()) n.grad = TensorT(n.value.shape());
        return n.grad;
    }

    void backward(Var loss) {
        Node& root = nodes_.at(loss.id);
        if (root.value.size() != 1) {
            throw DimensionError("backward expects a scalar, got shape " + shape_string(root.value.shape()));
        }
        if (!root.requires_grad) return;
        grad_mut(loss.id)[0] = T{1};
        for (std::size_t i = loss.id + 1; i-- > 0;) {
            Node& n = nodes_[i];
            if (!n.requires_grad || !n.backward || n.grad.empty()) continue;
            n.backward(*this, i);
        }
    }

private:
    struct Node {
        TensorT value;
        TensorT grad;
        bool requires_grad = false;
        BackwardFn backward;
    };

    Var push(TensorT value, bool requires_grad, BackwardFn backward) {
        nodes_.push_back(Node{std::move(value), TensorT{}, requires_grad, std::move(backward)});
        return Var{nodes_.size() - 1};
    }

    std::vector<Node> nodes_;
};

}  // namespace attnfuse
