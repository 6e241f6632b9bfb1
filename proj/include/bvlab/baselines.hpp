#pragma once

#include <cstddef>
#include <vector>

#include "bvlab/matrix.hpp"
#include "bvlab/rng.hpp"

namespace bvlab::baselines {

/// Relative eigenvalue cutoff (fraction of the largest) for numerical rank.
inline constexpr double kRankTolerance = 1e-8;

struct PcaResult {
    std::vector<double> mean;
    Matrix components; // k x d, orthonormal rows, descending variance
    std::vector<double> eigenvalues;
};

PcaResult pca_fit(const Matrix& x, std::size_t k);
/// (x - mean) projected onto the components: n x k scores.
Matrix pca_transform(const PcaResult& pca, const Matrix& x);
/// scores * components + mean.
Matrix pca_inverse_transform(const PcaResult& pca, const Matrix& scores);

std::size_t numerical_rank(const std::vector<double>& eigenvalues_desc, double rel_tol = kRankTolerance);

struct Whitening {
    std::vector<double> mean;
    Matrix matrix; // k x d; z = (x - mean) * matrix^T
};

struct WhitenResult {
    Matrix z;
    Whitening whitening;
};

/// Projects onto the top-k principal axes scaled to unit variance. Throws
/// RankError when the covariance has numerical rank below k.
WhitenResult whiten(const Matrix& x, std::size_t k);
Matrix apply_whitening(const Whitening& w, const Matrix& x);

struct IcaOptions {
    std::size_t max_iter = 500;
    double tol = 1e-6;
};

struct IcaResult {
    Whitening whitening;
    Matrix unmixing; // k x k, rows orthonormal
    std::size_t k = 0;
    bool converged = false;
    std::size_t iterations = 0;
};

/// Symmetric fixed-point FastICA with the log-cosh (tanh) contrast. The
/// initial unmixing matrix is drawn from `rng`. Hitting max_iter returns a
/// result with converged = false.
IcaResult fastica_fit(const Matrix& x, std::size_t k, RngState& rng, const IcaOptions& options = {});
/// Estimated sources, n x k.
Matrix ica_transform(const IcaResult& ica, const Matrix& x);

/// (W W^T)^{-1/2} W
Matrix symmetric_decorrelation(const Matrix& w);

} // namespace bvlab::baselines
