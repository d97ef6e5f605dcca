#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "sharknet/errors.hpp"
#include "sharknet/tensor.hpp"

namespace sharknet {

// Reverse-mode tape. Ops append nodes in execution order, which is a valid
// topological order by construction; backward() walks the list once in
// reverse, so a tensor feeding several consumers accumulates the sum of all
// branch gradients. With recording off the ops run forward-only.
// The tape owns its outputs until clear(); the training loop clears it
// after every optimizer step.
template <typename T>
class GraphT {
public:
    bool recording() const { return recording_; }
    void set_recording(bool on) { recording_ = on; }

    // backward_fn reads output->grad and accumulates into input grads.
    // Call only for outputs that carry gradient (requires_grad).
    int record(TensorPtrT<T> output, std::function<void()> backward_fn, std::string op_name) {
        nodes_.push_back(Node{std::move(output), std::move(backward_fn), std::move(op_name)});
        int id = static_cast<int>(nodes_.size()) - 1;
        nodes_.back().output->node = id;
        return id;
    }

    std::size_t size() const { return nodes_.size(); }

    void backward(const TensorPtrT<T>& loss) {
        if (!loss->is_scalar()) {
            throw ArgumentError("backward requires a scalar loss, got shape " + shape_str(loss->shape));
        }
        loss->ensure_grad();
        loss->grad[0] = T(1);
        for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
            // Nodes off the loss path never get a gradient and are skipped.
            if (!it->output->grad.empty()) it->backward_fn();
        }
    }

    void clear() { nodes_.clear(); }

private:
    struct Node {
        TensorPtrT<T> output;
        std::function<void()> backward_fn;
        std::string op;
    };
    std::vector<Node> nodes_;
    bool recording_ = true;
};

using Graph = GraphT<float>;

// Scoped recording switch, used around validation/inference passes.
template <typename T>
class NoGradT {
public:
    explicit NoGradT(GraphT<T>& g) : g_(g), prev_(g.recording()) { g_.set_recording(false); }
    ~NoGradT() { g_.set_recording(prev_); }
    NoGradT(const NoGradT&) = delete;
    NoGradT& operator=(const NoGradT&) = delete;

private:
    GraphT<T>& g_;
    bool prev_;
};

using NoGrad = NoGradT<float>;

}  // namespace sharknet
