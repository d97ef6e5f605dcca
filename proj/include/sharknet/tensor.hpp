#pragma once

#include <cstdint>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "sharknet/errors.hpp"
#include "sharknet/rng.hpp"

namespace sharknet {

using Shape = std::vector<std::int64_t>;

inline std::int64_t shape_numel(const Shape& shape) {
    std::int64_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

inline std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << "x";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

// Dense row-major n-dimensional array. Element type is float for all
// training paths; a double instantiation exists for gradient checking.
// `grad` is allocated lazily and always mirrors `data` in length.
// `node` links the tensor to the op that produced it on a Graph tape.
template <typename T>
struct TensorT {
    Shape shape;
    std::vector<T> data;
    std::vector<T> grad;
    bool requires_grad = false;
    int node = -1;

    TensorT() = default;

    explicit TensorT(Shape s, T fill = T(0)) : shape(std::move(s)) {
        validate_shape();
        data.assign(static_cast<std::size_t>(shape_numel(shape)), fill);
    }

    TensorT(Shape s, std::vector<T> values) : shape(std::move(s)), data(std::move(values)) {
        validate_shape();
        if (static_cast<std::int64_t>(data.size()) != shape_numel(shape)) {
            throw ShapeError("tensor data length " + std::to_string(data.size()) +
                             " does not match shape " + shape_str(shape));
        }
    }

    std::int64_t numel() const { return static_cast<std::int64_t>(data.size()); }
    std::int64_t dim(std::size_t i) const { return shape.at(i); }
    std::size_t ndim() const { return shape.size(); }

    bool is_scalar() const { return numel() == 1; }
    T scalar() const {
        if (!is_scalar()) {
            throw ArgumentError("expected scalar tensor, got shape " + shape_str(shape));
        }
        return data[0];
    }

    void ensure_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), T(0));
    }
    void zero_grad() {
        grad.assign(data.size(), T(0));
    }

private:
    void validate_shape() const {
        for (auto d : shape) {
            if (d < 1) {
                throw ShapeError("shape entries must be >= 1, got " + shape_str(shape));
            }
        }
    }
};

template <typename T>
using TensorPtrT = std::shared_ptr<TensorT<T>>;

using Tensor = TensorT<float>;
using TensorPtr = TensorPtrT<float>;

template <typename T>
TensorPtrT<T> make_tensor(Shape shape, T fill = T(0)) {
    return std::make_shared<TensorT<T>>(std::move(shape), fill);
}

template <typename T>
TensorPtrT<T> make_tensor(Shape shape, std::vector<T> values) {
    return std::make_shared<TensorT<T>>(std::move(shape), std::move(values));
}

// Fan-based uniform init (Glorot): U(-a, a) with a = sqrt(6 / (fan_in + fan_out)).
template <typename T>
TensorPtrT<T> glorot_uniform(Shape shape, std::int64_t fan_in, std::int64_t fan_out, Rng& rng) {
    auto t = make_tensor<T>(std::move(shape));
    double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (auto& v : t->data) v = static_cast<T>(rng.uniform(-a, a));
    return t;
}

template <typename T>
TensorPtrT<T> randn(Shape shape, Rng& rng, double stddev = 1.0) {
    auto t = make_tensor<T>(std::move(shape));
    for (auto& v : t->data) v = static_cast<T>(rng.normal() * stddev);
    return t;
}

}  // namespace sharknet
