#pragma once

#include <cstdint>
#include <random>

namespace spstop {

/// SplitMix64 finalizer; maps a (seed, stream) pair to an independent seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Seedable generator with bit-reproducible output on every platform:
/// std::mt19937_64 (fully specified by the standard) plus hand-written
/// conversions, since the standard distributions are implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }
    /// Uniform on [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
    bool bernoulli(double p) { return uniform01() < p; }
    /// Unbiased integer in [0, bound). bound must be > 0.
    std::uint64_t below(std::uint64_t bound);
    /// Independent generator for sub-stream `stream`.
    Rng split(std::uint64_t stream) { return Rng(derive_seed(engine_(), stream)); }

private:
    std::mt19937_64 engine_;
};

}  // namespace spstop
