#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bvlab/betavae.hpp"
#include "bvlab/matrix.hpp"

namespace bvlab::analysis {

/// Mean test-set KL (nats) above which a latent counts as active.
inline constexpr double kDefaultActiveThreshold = 0.02;

struct ActivationReport {
    std::vector<double> kl;
    std::vector<std::size_t> active;
    double threshold = kDefaultActiveThreshold;
};

ActivationReport activation_from_kl(std::vector<double> kl, double threshold);
ActivationReport detect_active(const vae::VaeModel& model, const Matrix& data,
                               double threshold = kDefaultActiveThreshold);

/// Pearson r of every (a column, b column) pair. Entries involving a
/// constant column are std::nullopt.
struct CorrelationGrid {
    std::vector<std::string> row_labels;
    std::vector<std::string> col_labels;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::optional<double>> values;

    std::optional<double> at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
    /// Largest defined |r|, 0 if none.
    double max_abs() const;
};

/// Treats a column as constant when its spread is below 1e-12 of its scale.
bool is_constant(std::span<const double> v);

std::vector<std::string> numbered_labels(const std::string& prefix, std::size_t n);

CorrelationGrid corr_grid(const Matrix& a, const Matrix& b, std::vector<std::string> row_labels = {},
                          std::vector<std::string> col_labels = {});

/// Row index i is assigned column assignment[i] (or -1). Maximizes the total
/// weight over injective assignments.
std::vector<long> hungarian_max(const Matrix& weights);

struct MatchPair {
    std::size_t latent;
    std::size_t component;
    double score; // |r|
};

struct MatchingResult {
    std::vector<MatchPair> pairs; // ordered by latent index
    double mean_score = 0.0;
    std::vector<std::size_t> unmatched_latents;
    std::vector<std::size_t> unmatched_components;
};

/// Maximum-weight assignment of the active latent columns to component
/// columns on |pearson r|; undefined correlations weigh 0.
MatchingResult match_components(const Matrix& latents, const Matrix& components, std::span<const std::size_t> active);

/// Mean matched |r| against the PCA scores of `data` with k = |active|.
double pca_likeness(const Matrix& latents, const Matrix& data, std::span<const std::size_t> active);
/// Mean matched |r| against the ground-truth factors.
double ica_likeness(const Matrix& latents, const Matrix& factors, std::span<const std::size_t> active);

} // namespace bvlab::analysis
