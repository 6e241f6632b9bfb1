#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "bvlab/matrix.hpp"

namespace bvlab {

/// Seedable xoshiro256** generator.
///
/// The 256-bit state is expanded from the 64-bit seed with splitmix64
/// (increment 0x9E3779B97F4A7C15, mixers 0xBF58476D1CE4E5B9 and
/// 0x94D049BB133111EB). Uniform doubles use the top 53 bits of each draw.
/// Normals use the Box-Muller transform and consume two draws each pair.
///
/// split(stream) derives a child seed from (seed, stream) alone, so a child
/// never depends on how far the parent has advanced and the parent is not
/// advanced by splitting.
class RngState {
public:
    explicit RngState(std::uint64_t seed = 0);

    std::uint64_t seed() const noexcept { return seed_; }
    /// Number of 64-bit words drawn so far.
    std::uint64_t position() const noexcept { return position_; }

    std::uint64_t next_u64() noexcept;
    /// Uniform on [0, 1).
    double uniform01() noexcept;
    /// Uniform integer on [0, bound), bound > 0, unbiased.
    std::uint64_t uniform_below(std::uint64_t bound) noexcept;
    double standard_normal() noexcept;

    RngState split(std::uint64_t stream) const noexcept;

    friend bool operator==(const RngState&, const RngState&) = default;

private:
    std::uint64_t seed_;
    std::uint64_t position_ = 0;
    std::array<std::uint64_t, 4> s_{};
};

std::uint64_t splitmix64(std::uint64_t& state) noexcept;

enum class Distribution { uniform01, standard_normal };

/// i.i.d. samples in row-major order. Normal draws are generated in
/// Box-Muller pairs, so a matrix uses ceil(size/2) pairs.
Matrix sample(RngState& rng, Distribution dist, std::size_t rows, std::size_t cols);

/// Fisher-Yates permutation of 0..n-1.
std::vector<std::size_t> permutation(RngState& rng, std::size_t n);

} // namespace bvlab
