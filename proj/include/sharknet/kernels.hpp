#pragma once

// Numeric inner loops. The default entry points are OpenMP-parallel over
// independent output rows/elements with a fixed inner reduction order, so
// results are bit-identical for any thread count. kernels::serial holds
// naive nested-loop references kept for testing and benchmarking; the
// conv2d there is the direct convolution the im2col path is checked
// against.

#include <algorithm>
#include <cstdint>
#include <limits>

namespace sharknet::kernels {

// c[M x N] = a[M x K] * b[K x N]
template <typename T>
void matmul(const T* a, const T* b, T* c, std::int64_t M, std::int64_t K, std::int64_t N) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < M; ++i) {
        T* crow = c + i * N;
        std::fill(crow, crow + N, T(0));
        const T* arow = a + i * K;
        for (std::int64_t k = 0; k < K; ++k) {
            const T aik = arow[k];
            const T* brow = b + k * N;
            for (std::int64_t n = 0; n < N; ++n) {
                crow[n] += aik * brow[n];
            }
        }
    }
}

// c[K x N] = a^T[K x M] * b[M x N], a given as [M x K]
template <typename T>
void matmul_tn(const T* a, const T* b, T* c, std::int64_t M, std::int64_t K, std::int64_t N) {
#pragma omp parallel for schedule(static)
    for (std::int64_t k = 0; k < K; ++k) {
        T* crow = c + k * N;
        std::fill(crow, crow + N, T(0));
        for (std::int64_t m = 0; m < M; ++m) {
            const T amk = a[m * K + k];
            const T* brow = b + m * N;
            for (std::int64_t n = 0; n < N; ++n) {
                crow[n] += amk * brow[n];
            }
        }
    }
}

// c[M x N] = a[M x K] * b^T[K x N], b given as [N x K]
template <typename T>
void matmul_nt(const T* a, const T* b, T* c, std::int64_t M, std::int64_t K, std::int64_t N) {
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < M; ++i) {
        const T* arow = a + i * K;
        T* crow = c + i * N;
        for (std::int64_t n = 0; n < N; ++n) {
            const T* brow = b + n * K;
            T acc = T(0);
            for (std::int64_t k = 0; k < K; ++k) {
                acc += arow[k] * brow[k];
            }
            crow[n] = acc;
        }
    }
}

// Unrolls one NHWC image into rows of kh*kw*C patch values (valid padding).
// col is [outH*outW x kh*kw*C].
template <typename T>
void im2col(const T* img, T* col, std::int64_t H, std::int64_t W, std::int64_t C,
            std::int64_t kh, std::int64_t kw, std::int64_t stride,
            std::int64_t outH, std::int64_t outW) {
    const std::int64_t patch = kh * kw * C;
    for (std::int64_t oy = 0; oy < outH; ++oy) {
        for (std::int64_t ox = 0; ox < outW; ++ox) {
            T* row = col + (oy * outW + ox) * patch;
            const std::int64_t iy0 = oy * stride, ix0 = ox * stride;
            for (std::int64_t ky = 0; ky < kh; ++ky) {
                const T* src = img + ((iy0 + ky) * W + ix0) * C;
                std::copy(src, src + kw * C, row + ky * kw * C);
            }
        }
    }
}

// Adjoint of im2col: gathers col gradients back onto the image. Iterates
// over input pixels so every destination is written once (no races).
template <typename T>
void col2im_add(const T* col, T* img, std::int64_t H, std::int64_t W, std::int64_t C,
                std::int64_t kh, std::int64_t kw, std::int64_t stride,
                std::int64_t outH, std::int64_t outW) {
    const std::int64_t patch = kh * kw * C;
    for (std::int64_t y = 0; y < H; ++y) {
        for (std::int64_t x = 0; x < W; ++x) {
            for (std::int64_t c = 0; c < C; ++c) {
                T acc = T(0);
                for (std::int64_t ky = 0; ky < kh; ++ky) {
                    const std::int64_t ry = y - ky;
                    if (ry < 0 || ry % stride != 0) continue;
                    const std::int64_t oy = ry / stride;
                    if (oy >= outH) continue;
                    for (std::int64_t kx = 0; kx < kw; ++kx) {
                        const std::int64_t rx = x - kx;
                        if (rx < 0 || rx % stride != 0) continue;
                        const std::int64_t ox = rx / stride;
                        if (ox >= outW) continue;
                        acc += col[(oy * outW + ox) * patch + (ky * kw + kx) * C + c];
                    }
                }
                img[(y * W + x) * C + c] += acc;
            }
        }
    }
}

// Per-window max over one NHWC image; records the argmax flat offset
// (first maximum in row-major window order) for the backward pass.
template <typename T>
void maxpool_forward(const T* img, T* out, std::int64_t* argmax, std::int64_t H, std::int64_t W,
                     std::int64_t C, std::int64_t pool, std::int64_t stride, std::int64_t outH,
                     std::int64_t outW) {
    for (std::int64_t oy = 0; oy < outH; ++oy) {
        for (std::int64_t ox = 0; ox < outW; ++ox) {
            for (std::int64_t c = 0; c < C; ++c) {
                T best = -std::numeric_limits<T>::infinity();
                std::int64_t best_at = -1;
                for (std::int64_t ky = 0; ky < pool; ++ky) {
                    for (std::int64_t kx = 0; kx < pool; ++kx) {
                        const std::int64_t at = ((oy * stride + ky) * W + ox * stride + kx) * C + c;
                        if (img[at] > best) {
                            best = img[at];
                            best_at = at;
                        }
                    }
                }
                const std::int64_t o = (oy * outW + ox) * C + c;
                out[o] = best;
                argmax[o] = best_at;
            }
        }
    }
}

namespace serial {

template <typename T>
void matmul(const T* a, const T* b, T* c, std::int64_t M, std::int64_t K, std::int64_t N) {
    for (std::int64_t i = 0; i < M; ++i) {
        for (std::int64_t n = 0; n < N; ++n) {
            T acc = T(0);
            for (std::int64_t k = 0; k < K; ++k) {
                acc += a[i * K + k] * b[k * N + n];
            }
            c[i * N + n] = acc;
        }
    }
}

// Direct nested-loop cross-correlation over one NHWC image, valid padding.
template <typename T>
void conv2d(const T* img, const T* kernel, const T* bias, T* out, std::int64_t H, std::int64_t W,
            std::int64_t C, std::int64_t kh, std::int64_t kw, std::int64_t F, std::int64_t stride,
            std::int64_t outH, std::int64_t outW) {
    for (std::int64_t oy = 0; oy < outH; ++oy) {
        for (std::int64_t ox = 0; ox < outW; ++ox) {
            for (std::int64_t f = 0; f < F; ++f) {
                T acc = bias ? bias[f] : T(0);
                for (std::int64_t ky = 0; ky < kh; ++ky) {
                    for (std::int64_t kx = 0; kx < kw; ++kx) {
                        for (std::int64_t c = 0; c < C; ++c) {
                            acc += img[((oy * stride + ky) * W + ox * stride + kx) * C + c] *
                                   kernel[((ky * kw + kx) * C + c) * F + f];
                        }
                    }
                }
                out[(oy * outW + ox) * F + f] = acc;
            }
        }
    }
}

template <typename T>
void maxpool2d(const T* img, T* out, std::int64_t H, std::int64_t W, std::int64_t C,
               std::int64_t pool, std::int64_t stride, std::int64_t outH, std::int64_t outW) {
    for (std::int64_t oy = 0; oy < outH; ++oy) {
        for (std::int64_t ox = 0; ox < outW; ++ox) {
            for (std::int64_t c = 0; c < C; ++c) {
                T best = -std::numeric_limits<T>::infinity();
                for (std::int64_t ky = 0; ky < pool; ++ky) {
                    for (std::int64_t kx = 0; kx < pool; ++kx) {
                        best = std::max(best, img[((oy * stride + ky) * W + ox * stride + kx) * C + c]);
                    }
                }
                out[(oy * outW + ox) * C + c] = best;
            }
        }
    }
}

}  // namespace serial

}  // namespace sharknet::kernels
