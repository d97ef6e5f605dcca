#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

namespace sharknet {

// Counter-based generator (Philox4x32-10, Salmon et al. 2011).
// State is (key, counter); every draw advances the counter, so streams can
// be split by deriving a new key without sharing mutable state. All
// stochastic operations in the library take one of these explicitly.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          counter_{0, 0, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)} {}

    // Derives an independent stream. Deterministic: the same (parent, label)
    // always yields the same child, and distinct labels yield distinct keys.
    Rng split(std::uint64_t label) const {
        std::uint64_t seed = (static_cast<std::uint64_t>(key_[1]) << 32) | key_[0];
        std::uint64_t stream = (static_cast<std::uint64_t>(counter_[3]) << 32) | counter_[2];
        return Rng(mix64(seed ^ mix64(label + 0x9E3779B97F4A7C15ull)), mix64(stream + label + 1));
    }

    std::uint32_t next_u32() {
        if (buf_pos_ == 4) {
            refill();
        }
        return buf_[buf_pos_++];
    }

    std::uint64_t next_u64() {
        std::uint64_t hi = next_u32();
        return (hi << 32) | next_u32();
    }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    float uniform_float() { return static_cast<float>(next_u32() >> 8) * 0x1.0p-24f; }

    // Unbiased integer in [0, n).
    std::uint32_t uniform_int(std::uint32_t n) {
        if (n <= 1) return 0;
        std::uint32_t limit = UINT32_MAX - UINT32_MAX % n;
        std::uint32_t v;
        do {
            v = next_u32();
        } while (v >= limit);
        return v % n;
    }

    // Standard normal via Box-Muller; pairs are cached.
    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double u1 = 0.0;
        while (u1 <= 0.0) u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(a);
        have_cached_ = true;
        return r * std::cos(a);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = uniform_int(static_cast<std::uint32_t>(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    static std::uint64_t mix64(std::uint64_t x) {
        // SplitMix64 finalizer.
        x += 0x9E3779B97F4A7C15ull;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
        return x ^ (x >> 31);
    }

    static std::pair<std::uint32_t, std::uint32_t> mulhilo(std::uint32_t a, std::uint32_t b) {
        std::uint64_t p = static_cast<std::uint64_t>(a) * b;
        return {static_cast<std::uint32_t>(p >> 32), static_cast<std::uint32_t>(p)};
    }

    void refill() {
        std::array<std::uint32_t, 4> x = counter_;
        std::uint32_t k0 = key_[0], k1 = key_[1];
        for (int round = 0; round < 10; ++round) {
            auto [hi0, lo0] = mulhilo(0xD2511F53u, x[0]);
            auto [hi1, lo1] = mulhilo(0xCD9E8D57u, x[2]);
            x = {hi1 ^ x[1] ^ k0, lo1, hi0 ^ x[3] ^ k1, lo0};
            k0 += 0x9E3779B9u;
            k1 += 0xBB67AE85u;
        }
        buf_ = x;
        buf_pos_ = 0;
        if (++counter_[0] == 0 && ++counter_[1] == 0) {
            ++counter_[2];  // 128-bit counter; stream words overflow last
        }
    }

    std::array<std::uint32_t, 2> key_;
    std::array<std::uint32_t, 4> counter_;
    std::array<std::uint32_t, 4> buf_{};
    int buf_pos_ = 4;
    bool have_cached_ = false;
    double cached_ = 0.0;
};

}  // namespace sharknet
