#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "stimpute/tensor.hpp"

namespace stimpute {

/// Deterministic random source. Wraps std::mt19937_64 (whose output sequence
/// is fixed by the standard) and hand-rolls the distributions so draws are
/// identical across platforms and standard libraries.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(mix(seed)) {}

    /// Derives an independent stream from (seed, purpose, index). Streams for
    /// different purposes or indices never share state, which keeps parallel
    /// ensemble sampling reproducible.
    static Rng stream(uint64_t seed, std::string_view purpose, uint64_t index = 0);

    uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1).
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Uniform integer in [lo, hi] inclusive, rejection sampled (no modulo bias).
    int64_t uniform_int(int64_t lo, int64_t hi);

    bool bernoulli(double p) { return uniform01() < p; }

    /// Standard normal via Box-Muller (two draws per pair, second cached).
    double normal();

    void fill_normal(Tensor& t, double stddev = 1.0);
    void fill_uniform(Tensor& t, double lo, double hi);

private:
    static uint64_t mix(uint64_t x);  // splitmix64 finalizer

    std::mt19937_64 engine_;
    double cached_normal_ = 0.0;
    bool has_cached_ = false;
};

}  // namespace stimpute
