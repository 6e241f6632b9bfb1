#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>

#include "bvlab/matrix.hpp"
#include "bvlab/nn.hpp"
#include "bvlab/rng.hpp"

namespace bvlab::data {

inline constexpr std::size_t kFactorDim = 4;
inline constexpr std::size_t kObservationDim = 14;

enum class GeneratorKind { linear, nonlinear };

const char* kind_name(GeneratorKind k) noexcept;
GeneratorKind parse_kind(const std::string& s);

/// Linear generator: X = Y W with W (4 x 14). Non-linear: X = net(Y).
using GeneratorParams = std::variant<Matrix, nn::Mlp>;

struct FactorDataset {
    Matrix y; // n x 4, entries in [0, 1]
    Matrix x; // n x 14
    GeneratorKind kind = GeneratorKind::linear;
    GeneratorParams params;
    std::uint64_t seed = 0;

    std::size_t size() const noexcept { return y.rows(); }
    FactorDataset subset(std::span<const std::size_t> rows) const;

    friend bool operator==(const FactorDataset&, const FactorDataset&) = default;
};

/// Applies the stored generator to factor rows.
Matrix regenerate(const GeneratorParams& params, const Matrix& y);

/// Y ~ U[0,1]^(n x 4), W ~ N(0,1)^(4 x 14), X = Y W.
FactorDataset gen_linear(const RngState& rng, std::size_t n);

/// Y ~ U[0,1]^(n x 4); X from an untrained 4 -> 14 -> 14 -> 14 tanh network
/// with N(0, 1/fan_in) weights and N(0, 1/fan_in) biases.
FactorDataset gen_nonlinear(const RngState& rng, std::size_t n);

FactorDataset generate(GeneratorKind kind, std::uint64_t seed, std::size_t n);

struct SplitDataset {
    FactorDataset train;
    FactorDataset test;
    double ratio = 0.9;
};

/// Shuffled row-disjoint split with round(ratio * n) training rows.
SplitDataset split(const FactorDataset& ds, double ratio, const RngState& rng);

/// CSV with a leading "# " metadata line (kind, seed, hex generator params)
/// and header y0..y3,x0..x13. Values are printed with 17 significant digits.
void save(const FactorDataset& ds, const std::filesystem::path& path);
std::string to_csv(const FactorDataset& ds);
FactorDataset load(const std::filesystem::path& path);
FactorDataset from_csv(const std::string& text);

} // namespace bvlab::data
