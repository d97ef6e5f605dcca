#pragma once

// Differentiable tensor operations. Every op validates shapes, computes the
// forward result through the kernels, and (when the tape is recording and
// some input carries gradient) registers a backward rule that accumulates
// into input grads. Stochastic ops take an explicit Rng.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "sharknet/graph.hpp"
#include "sharknet/kernels.hpp"
#include "sharknet/rng.hpp"
#include "sharknet/tensor.hpp"

namespace sharknet::ops {

namespace detail {

template <typename T>
bool tracked(GraphT<T>& g, std::initializer_list<TensorPtrT<T>> inputs) {
    if (!g.recording()) return false;
    for (const auto& in : inputs) {
        if (in->requires_grad) return true;
    }
    return false;
}

template <typename T>
void add_into(std::vector<T>& dst, const std::vector<T>& src) {
    const std::int64_t n = static_cast<std::int64_t>(dst.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) dst[i] += src[i];
}

}  // namespace detail

// ---------------------------------------------------------------------------
// matmul: a[M x K] * b[K x N] -> [M x N]

template <typename T>
TensorPtrT<T> matmul(GraphT<T>& g, const TensorPtrT<T>& a, const TensorPtrT<T>& b) {
    if (a->ndim() != 2 || b->ndim() != 2 || a->dim(1) != b->dim(0)) {
        throw ShapeError("matmul: incompatible shapes " + shape_str(a->shape) + " and " +
                         shape_str(b->shape));
    }
    const std::int64_t M = a->dim(0), K = a->dim(1), N = b->dim(1);
    auto out = make_tensor<T>({M, N});
    kernels::matmul(a->data.data(), b->data.data(), out->data.data(), M, K, N);

    if (detail::tracked(g, {a, b})) {
        out->requires_grad = true;
        g.record(out, [a, b, out, M, K, N] {
            if (a->requires_grad) {
                a->ensure_grad();
                std::vector<T> da(static_cast<std::size_t>(M * K));
                kernels::matmul_nt(out->grad.data(), b->data.data(), da.data(), M, N, K);
                detail::add_into(a->grad, da);
            }
            if (b->requires_grad) {
                b->ensure_grad();
                std::vector<T> db(static_cast<std::size_t>(K * N));
                kernels::matmul_tn(a->data.data(), out->grad.data(), db.data(), M, K, N);
                detail::add_into(b->grad, db);
            }
        }, "matmul");
    }
    return out;
}

// ---------------------------------------------------------------------------
// add_rowvec: x[N x P] + b[P] broadcast over rows (dense-layer bias)

template <typename T>
TensorPtrT<T> add_rowvec(GraphT<T>& g, const TensorPtrT<T>& x, const TensorPtrT<T>& b) {
    if (x->ndim() != 2 || b->ndim() != 1 || x->dim(1) != b->dim(0)) {
        throw ShapeError("add_rowvec: incompatible shapes " + shape_str(x->shape) + " and " +
                         shape_str(b->shape));
    }
    const std::int64_t N = x->dim(0), P = x->dim(1);
    auto out = make_tensor<T>(x->shape);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < N; ++i) {
        for (std::int64_t p = 0; p < P; ++p) {
            out->data[i * P + p] = x->data[i * P + p] + b->data[p];
        }
    }
    if (detail::tracked(g, {x, b})) {
        out->requires_grad = true;
        g.record(out, [x, b, out, N, P] {
            if (x->requires_grad) {
                x->ensure_grad();
                detail::add_into(x->grad, out->grad);
            }
            if (b->requires_grad) {
                b->ensure_grad();
                for (std::int64_t i = 0; i < N; ++i) {
                    for (std::int64_t p = 0; p < P; ++p) {
                        b->grad[p] += out->grad[i * P + p];
                    }
                }
            }
        }, "add_rowvec");
    }
    return out;
}

// ---------------------------------------------------------------------------
// conv2d: input[N x H x W x C] (*) kernel[kh x kw x C x F] + bias[F],
// valid padding, cross-correlation. Forward is im2col + matmul; the direct
// nested-loop version lives in kernels::serial for testing.

template <typename T>
TensorPtrT<T> conv2d(GraphT<T>& g, const TensorPtrT<T>& input, const TensorPtrT<T>& kernel,
                     const TensorPtrT<T>& bias, std::int64_t stride) {
    if (stride < 1) {
        throw ArgumentError("conv2d: stride must be positive, got " + std::to_string(stride));
    }
    if (input->ndim() != 4 || kernel->ndim() != 4) {
        throw ShapeError("conv2d: expected 4-d input and kernel, got " + shape_str(input->shape) +
                         " and " + shape_str(kernel->shape));
    }
    const std::int64_t N = input->dim(0), H = input->dim(1), W = input->dim(2), C = input->dim(3);
    const std::int64_t kh = kernel->dim(0), kw = kernel->dim(1), F = kernel->dim(3);
    if (kernel->dim(2) != C) {
        throw ShapeError("conv2d: kernel channels " + shape_str(kernel->shape) +
                         " do not match input " + shape_str(input->shape));
    }
    if (kh > H || kw > W) {
        throw ShapeError("conv2d: kernel " + shape_str(kernel->shape) + " larger than input " +
                         shape_str(input->shape));
    }
    if (bias->numel() != F) {
        throw ShapeError("conv2d: bias " + shape_str(bias->shape) + " does not match filters " +
                         std::to_string(F));
    }
    const std::int64_t outH = (H - kh) / stride + 1;
    const std::int64_t outW = (W - kw) / stride + 1;
    const std::int64_t P = kh * kw * C;
    const std::int64_t rows_per_img = outH * outW;
    const std::int64_t M = N * rows_per_img;

    std::vector<T> col(static_cast<std::size_t>(M * P));
#pragma omp parallel for schedule(static)
    for (std::int64_t n = 0; n < N; ++n) {
        kernels::im2col(input->data.data() + n * H * W * C, col.data() + n * rows_per_img * P,
                        H, W, C, kh, kw, stride, outH, outW);
    }

    auto out = make_tensor<T>({N, outH, outW, F});
    kernels::matmul(col.data(), kernel->data.data(), out->data.data(), M, P, F);
#pragma omp parallel for schedule(static)
    for (std::int64_t r = 0; r < M; ++r) {
        for (std::int64_t f = 0; f < F; ++f) {
            out->data[r * F + f] += bias->data[f];
        }
    }

    if (detail::tracked(g, {input, kernel, bias})) {
        out->requires_grad = true;
        g.record(out, [input, kernel, bias, out, N, H, W, C, kh, kw, F, stride, outH, outW, P,
                       rows_per_img, M] {
            const T* dout = out->grad.data();
            if (kernel->requires_grad || input->requires_grad) {
                // col is rebuilt rather than kept from the forward pass.
                std::vector<T> col(static_cast<std::size_t>(M * P));
#pragma omp parallel for schedule(static)
                for (std::int64_t n = 0; n < N; ++n) {
                    kernels::im2col(input->data.data() + n * H * W * C,
                                    col.data() + n * rows_per_img * P, H, W, C, kh, kw, stride,
                                    outH, outW);
                }
                if (kernel->requires_grad) {
                    kernel->ensure_grad();
                    std::vector<T> dk(static_cast<std::size_t>(P * F));
                    kernels::matmul_tn(col.data(), dout, dk.data(), M, P, F);
                    detail::add_into(kernel->grad, dk);
                }
                if (input->requires_grad) {
                    input->ensure_grad();
                    std::vector<T> dcol(static_cast<std::size_t>(M * P));
                    kernels::matmul_nt(dout, kernel->data.data(), dcol.data(), M, F, P);
#pragma omp parallel for schedule(static)
                    for (std::int64_t n = 0; n < N; ++n) {
                        kernels::col2im_add(dcol.data() + n * rows_per_img * P,
                                            input->grad.data() + n * H * W * C, H, W, C, kh, kw,
                                            stride, outH, outW);
                    }
                }
            }
            if (bias->requires_grad) {
                bias->ensure_grad();
#pragma omp parallel for schedule(static)
                for (std::int64_t f = 0; f < F; ++f) {
                    T acc = T(0);
                    for (std::int64_t r = 0; r < M; ++r) acc += dout[r * F + f];
                    bias->grad[f] += acc;
                }
            }
        }, "conv2d");
    }
    return out;
}

// ---------------------------------------------------------------------------
// maxpool2d: per-window max over input[N x H x W x C]. Gradient routes to
// the first maximal element of each window in row-major order.

template <typename T>
TensorPtrT<T> maxpool2d(GraphT<T>& g, const TensorPtrT<T>& input, std::int64_t pool,
                        std::int64_t stride) {
    if (pool < 1 || stride < 1) {
        throw ArgumentError("maxpool2d: pool and stride must be positive");
    }
    if (input->ndim() != 4) {
        throw ShapeError("maxpool2d: expected 4-d input, got " + shape_str(input->shape));
    }
    const std::int64_t N = input->dim(0), H = input->dim(1), W = input->dim(2), C = input->dim(3);
    if (pool > H || pool > W) {
        throw ShapeError("maxpool2d: pool " + std::to_string(pool) + " exceeds spatial extent of " +
                         shape_str(input->shape));
    }
    const std::int64_t outH = (H - pool) / stride + 1;
    const std::int64_t outW = (W - pool) / stride + 1;
    auto out = make_tensor<T>({N, outH, outW, C});
    auto argmax = std::make_shared<std::vector<std::int64_t>>(
        static_cast<std::size_t>(N * outH * outW * C));
#pragma omp parallel for schedule(static)
    for (std::int64_t n = 0; n < N; ++n) {
        kernels::maxpool_forward(input->data.data() + n * H * W * C,
                                 out->data.data() + n * outH * outW * C,
                                 argmax->data() + n * outH * outW * C, H, W, C, pool, stride,
                                 outH, outW);
    }
    if (detail::tracked(g, {input})) {
        out->requires_grad = true;
        g.record(out, [input, out, argmax, N, H, W, C, outH, outW] {
            input->ensure_grad();
            const std::int64_t per_out = outH * outW * C;
#pragma omp parallel for schedule(static)
            for (std::int64_t n = 0; n < N; ++n) {
                T* din = input->grad.data() + n * H * W * C;
                const T* dout = out->grad.data() + n * per_out;
                const std::int64_t* am = argmax->data() + n * per_out;
                for (std::int64_t o = 0; o < per_out; ++o) {
                    din[am[o]] += dout[o];
                }
            }
        }, "maxpool2d");
    }
    return out;
}

// ---------------------------------------------------------------------------
// relu

template <typename T>
TensorPtrT<T> relu(GraphT<T>& g, const TensorPtrT<T>& x) {
    auto out = make_tensor<T>(x->shape);
    const std::int64_t n = x->numel();
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        out->data[i] = x->data[i] > T(0) ? x->data[i] : T(0);
    }
    if (detail::tracked(g, {x})) {
        out->requires_grad = true;
        g.record(out, [x, out, n] {
            x->ensure_grad();
#pragma omp parallel for schedule(static)
            for (std::int64_t i = 0; i < n; ++i) {
                if (x->data[i] > T(0)) x->grad[i] += out->grad[i];
            }
        }, "relu");
    }
    return out;
}

// ---------------------------------------------------------------------------
// softmax over the last axis of x[N x K], max-subtracted for stability

template <typename T>
TensorPtrT<T> softmax(GraphT<T>& g, const TensorPtrT<T>& x) {
    if (x->ndim() != 2) {
        throw ShapeError("softmax: expected 2-d input, got " + shape_str(x->shape));
    }
    const std::int64_t N = x->dim(0), K = x->dim(1);
    auto out = make_tensor<T>(x->shape);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < N; ++i) {
        const T* row = x->data.data() + i * K;
        T* orow = out->data.data() + i * K;
        T m = row[0];
        for (std::int64_t k = 1; k < K; ++k) m = std::max(m, row[k]);
        T sum = T(0);
        for (std::int64_t k = 0; k < K; ++k) {
            orow[k] = std::exp(row[k] - m);
            sum += orow[k];
        }
        for (std::int64_t k = 0; k < K; ++k) orow[k] /= sum;
    }
    if (detail::tracked(g, {x})) {
        out->requires_grad = true;
        g.record(out, [x, out, N, K] {
            x->ensure_grad();
#pragma omp parallel for schedule(static)
            for (std::int64_t i = 0; i < N; ++i) {
                const T* s = out->data.data() + i * K;
                const T* go = out->grad.data() + i * K;
                T dot = T(0);
                for (std::int64_t k = 0; k < K; ++k) dot += go[k] * s[k];
                T* gx = x->grad.data() + i * K;
                for (std::int64_t k = 0; k < K; ++k) gx[k] += s[k] * (go[k] - dot);
            }
        }, "softmax");
    }
    return out;
}

// ---------------------------------------------------------------------------
// flatten: [N x ...] -> [N x P]

template <typename T>
TensorPtrT<T> flatten(GraphT<T>& g, const TensorPtrT<T>& x) {
    if (x->ndim() < 1) {
        throw ShapeError("flatten: input needs a batch dimension");
    }
    const std::int64_t N = x->dim(0);
    const std::int64_t P = x->numel() / N;
    auto out = make_tensor<T>({N, P}, x->data);
    if (detail::tracked(g, {x})) {
        out->requires_grad = true;
        g.record(out, [x, out] {
            x->ensure_grad();
            detail::add_into(x->grad, out->grad);
        }, "flatten");
    }
    return out;
}

// ---------------------------------------------------------------------------
// dropout (inverted): training mode zeroes each element with probability
// `rate` and scales survivors by 1/(1-rate); inference mode is the identity.
// The mask is drawn sequentially from the given generator.

template <typename T>
TensorPtrT<T> dropout(GraphT<T>& g, const TensorPtrT<T>& x, double rate, bool training, Rng& rng) {
    if (rate < 0.0 || rate >= 1.0) {
        throw ArgumentError("dropout: rate must be in [0,1), got " + std::to_string(rate));
    }
    if (!training || rate == 0.0) {
        auto out = make_tensor<T>(x->shape, x->data);
        if (detail::tracked(g, {x})) {
            out->requires_grad = true;
            g.record(out, [x, out] {
                x->ensure_grad();
                detail::add_into(x->grad, out->grad);
            }, "dropout");
        }
        return out;
    }
    const std::int64_t n = x->numel();
    const T inv = static_cast<T>(1.0 / (1.0 - rate));
    auto mask = std::make_shared<std::vector<T>>(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
        (*mask)[i] = (rng.uniform() < rate) ? T(0) : inv;
    }
    auto out = make_tensor<T>(x->shape);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        out->data[i] = x->data[i] * (*mask)[i];
    }
    if (detail::tracked(g, {x})) {
        out->requires_grad = true;
        g.record(out, [x, out, mask, n] {
            x->ensure_grad();
#pragma omp parallel for schedule(static)
            for (std::int64_t i = 0; i < n; ++i) {
                x->grad[i] += out->grad[i] * (*mask)[i];
            }
        }, "dropout");
    }
    return out;
}

// ---------------------------------------------------------------------------
// sparse categorical cross-entropy, mean-reduced over the batch.
// loss = mean_i ( logsumexp(logits_i) - logits_i[label_i] );
// d loss / d logits = (softmax(logits) - onehot) / N.

template <typename T>
TensorPtrT<T> sparse_ce_loss(GraphT<T>& g, const TensorPtrT<T>& logits,
                             const std::vector<int>& labels) {
    if (logits->ndim() != 2) {
        throw ShapeError("sparse_ce_loss: expected 2-d logits, got " + shape_str(logits->shape));
    }
    const std::int64_t N = logits->dim(0), K = logits->dim(1);
    if (static_cast<std::int64_t>(labels.size()) != N) {
        throw ArgumentError("sparse_ce_loss: " + std::to_string(labels.size()) + " labels for " +
                            std::to_string(N) + " rows");
    }
    for (std::int64_t i = 0; i < N; ++i) {
        if (labels[i] < 0 || labels[i] >= K) {
            throw ArgumentError("sparse_ce_loss: label " + std::to_string(labels[i]) +
                                " out of range [0," + std::to_string(K) + ") at row " +
                                std::to_string(i));
        }
    }
    double total = 0.0;
    for (std::int64_t i = 0; i < N; ++i) {
        const T* row = logits->data.data() + i * K;
        T m = row[0];
        for (std::int64_t k = 1; k < K; ++k) m = std::max(m, row[k]);
        double sum = 0.0;
        for (std::int64_t k = 0; k < K; ++k) sum += std::exp(static_cast<double>(row[k] - m));
        total += static_cast<double>(m) + std::log(sum) - static_cast<double>(row[labels[i]]);
    }
    auto out = make_tensor<T>({1}, std::vector<T>{static_cast<T>(total / static_cast<double>(N))});
    if (detail::tracked(g, {logits})) {
        out->requires_grad = true;
        auto labels_copy = std::make_shared<std::vector<int>>(labels);
        g.record(out, [logits, out, labels_copy, N, K] {
            logits->ensure_grad();
            const T go = out->grad[0];
#pragma omp parallel for schedule(static)
            for (std::int64_t i = 0; i < N; ++i) {
                const T* row = logits->data.data() + i * K;
                T* grow = logits->grad.data() + i * K;
                T m = row[0];
                for (std::int64_t k = 1; k < K; ++k) m = std::max(m, row[k]);
                T sum = T(0);
                for (std::int64_t k = 0; k < K; ++k) sum += std::exp(row[k] - m);
                const T scale = go / static_cast<T>(N);
                for (std::int64_t k = 0; k < K; ++k) {
                    T s = std::exp(row[k] - m) / sum;
                    grow[k] += scale * (s - (k == (*labels_copy)[i] ? T(1) : T(0)));
                }
            }
        }, "sparse_ce_loss");
    }
    return out;
}

// ---------------------------------------------------------------------------
// small arithmetic ops (sum / add / mul / pick), used by losses and tests

template <typename T>
TensorPtrT<T> sum(GraphT<T>& g, const TensorPtrT<T>& x) {
    double total = 0.0;
    for (auto v : x->data) total += static_cast<double>(v);
    auto out = make_tensor<T>({1}, std::vector<T>{static_cast<T>(total)});
    if (detail::tracked(g, {x})) {
        out->requires_grad = true;
        g.record(out, [x, out] {
            x->ensure_grad();
            const T go = out->grad[0];
            for (auto& v : x->grad) v += go;
        }, "sum");
    }
    return out;
}

template <typename T>
TensorPtrT<T> add(GraphT<T>& g, const TensorPtrT<T>& a, const TensorPtrT<T>& b) {
    if (a->shape != b->shape) {
        throw ShapeError("add: shape mismatch " + shape_str(a->shape) + " vs " +
                         shape_str(b->shape));
    }
    auto out = make_tensor<T>(a->shape);
    const std::int64_t n = a->numel();
    for (std::int64_t i = 0; i < n; ++i) out->data[i] = a->data[i] + b->data[i];
    if (detail::tracked(g, {a, b})) {
        out->requires_grad = true;
        g.record(out, [a, b, out] {
            if (a->requires_grad) {
                a->ensure_grad();
                detail::add_into(a->grad, out->grad);
            }
            if (b->requires_grad) {
                b->ensure_grad();
                detail::add_into(b->grad, out->grad);
            }
        }, "add");
    }
    return out;
}

template <typename T>
TensorPtrT<T> mul(GraphT<T>& g, const TensorPtrT<T>& a, const TensorPtrT<T>& b) {
    if (a->shape != b->shape) {
        throw ShapeError("mul: shape mismatch " + shape_str(a->shape) + " vs " +
                         shape_str(b->shape));
    }
    auto out = make_tensor<T>(a->shape);
    const std::int64_t n = a->numel();
    for (std::int64_t i = 0; i < n; ++i) out->data[i] = a->data[i] * b->data[i];
    if (detail::tracked(g, {a, b})) {
        out->requires_grad = true;
        g.record(out, [a, b, out, n] {
            if (a->requires_grad) {
                a->ensure_grad();
                for (std::int64_t i = 0; i < n; ++i) a->grad[i] += out->grad[i] * b->data[i];
            }
            if (b->requires_grad) {
                b->ensure_grad();
                for (std::int64_t i = 0; i < n; ++i) b->grad[i] += out->grad[i] * a->data[i];
            }
        }, "mul");
    }
    return out;
}

// Scalar view of one element, for explaining a single class output.
template <typename T>
TensorPtrT<T> pick(GraphT<T>& g, const TensorPtrT<T>& x, std::int64_t flat_index) {
    if (flat_index < 0 || flat_index >= x->numel()) {
        throw ArgumentError("pick: index " + std::to_string(flat_index) + " out of range for " +
                            shape_str(x->shape));
    }
    auto out = make_tensor<T>({1}, std::vector<T>{x->data[flat_index]});
    if (detail::tracked(g, {x})) {
        out->requires_grad = true;
        g.record(out, [x, out, flat_index] {
            x->ensure_grad();
            x->grad[flat_index] += out->grad[0];
        }, "pick");
    }
    return out;
}

}  // namespace sharknet::ops
