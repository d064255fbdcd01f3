#pragma once

#include <cstdint>
#include <random>

namespace tailar {

/// Mixes a master seed with a stream index into an independent sub-seed
/// (splitmix64 finalizer). Used to give every chain / run its own stream.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept;

/**
 * @brief A single random stream.
 *
 * Owns its engine and normal-distribution cache, so two streams built from
 * the same seed produce identical sequences. Not thread-safe; give every
 * concurrent consumer its own stream.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform draw on the open interval (0, 1).
    double uniform() noexcept;

    /// Standard normal draw.
    double normal() { return normal_(engine_); }

    /// Uniform integer on [lo, hi].
    std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) {
        return std::uniform_int_distribution<std::uint64_t>(lo, hi)(engine_);
    }

    std::mt19937_64& engine() noexcept { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace tailar
