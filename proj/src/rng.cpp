#include "bvlab/rng.hpp"

#include <cmath>
#include <numbers>

#include "bvlab/error.hpp"

namespace bvlab {

namespace {

constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

// Mixes the parent seed with the stream id; distinct from the state expansion
// so that split(s).seed() never collides with a plain RngState(seed + s).
constexpr std::uint64_t kSplitSalt = 0xD1B54A32D192ED03ULL;

} // namespace

std::uint64_t splitmix64(std::uint64_t& state) noexcept {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

RngState::RngState(std::uint64_t seed) : seed_(seed) {
    std::uint64_t sm = seed;
    for (auto& word : s_) word = splitmix64(sm);
}

std::uint64_t RngState::next_u64() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    ++position_;
    return result;
}

double RngState::uniform01() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

std::uint64_t RngState::uniform_below(std::uint64_t bound) noexcept {
    // Lemire's nearly-divisionless rejection method.
    unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
        const std::uint64_t threshold = (0 - bound) % bound;
        while (low < threshold) {
            m = static_cast<unsigned __int128>(next_u64()) * bound;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

double RngState::standard_normal() noexcept {
    const double u1 = 1.0 - uniform01(); // (0, 1]
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

RngState RngState::split(std::uint64_t stream) const noexcept {
    std::uint64_t sm = seed_ ^ kSplitSalt;
    const std::uint64_t a = splitmix64(sm);
    sm = a ^ (stream * 0x9E3779B97F4A7C15ULL + 0x632BE59BD9B4E019ULL);
    return RngState(splitmix64(sm));
}

Matrix sample(RngState& rng, Distribution dist, std::size_t rows, std::size_t cols) {
    if (rows == 0 || cols == 0) throw ArgumentError("sample: rows and cols must be >= 1");
    Matrix out(rows, cols);
    auto d = out.data();
    if (dist == Distribution::uniform01) {
        for (double& v : d) v = rng.uniform01();
        return out;
    }
    std::size_t i = 0;
    while (i < d.size()) {
        const double u1 = 1.0 - rng.uniform01();
        const double u2 = rng.uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        d[i++] = r * std::cos(theta);
        if (i < d.size()) d[i++] = r * std::sin(theta);
    }
    return out;
}

std::vector<std::size_t> permutation(RngState& rng, std::size_t n) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = n; i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.uniform_below(i));
        std::swap(idx[i - 1], idx[j]);
    }
    return idx;
}

} // namespace bvlab
