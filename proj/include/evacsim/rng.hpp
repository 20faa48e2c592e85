#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace evacsim {

/// Seeded random stream with platform-independent draws.
///
/// The standard distributions are implementation-defined, so all conversions
/// from raw engine output are done here to keep event logs bit-identical
/// across toolchains.
class RngStream {
public:
    RngStream() : RngStream(0) {}
    explicit RngStream(std::uint64_t seed) : engine_(seed) {}

    /// Derives an independent stream for a named subsystem.
    static RngStream split(std::uint64_t seed, std::string_view label);

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n);

    bool bernoulli(double p) { return p >= 1.0 || (p > 0.0 && uniform() < p); }

    template <typename T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::swap(items[i - 1], items[below(i)]);
        }
    }

private:
    std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace evacsim
