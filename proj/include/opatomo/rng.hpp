#pragma once

#include <cstdint>
#include <random>

namespace opatomo {

/// Mixes a 64-bit value (splitmix64 finalizer).
std::uint64_t mix64(std::uint64_t value) noexcept;

/// Seed for stream `index` derived from a master seed. Streams with different
/// indices are statistically independent; the mapping is stable across
/// platforms so published results can be replayed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept;

/// Owned random stream: one engine plus the distributions drawn from it.
/// Concurrent tasks must each own a distinct stream.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : engine_(seed) {}
    RngStream(std::uint64_t master, std::uint64_t index) : engine_(derive_seed(master, index)) {}

    double normal() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

} // namespace opatomo
