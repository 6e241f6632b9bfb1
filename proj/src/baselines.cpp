#include "bvlab/baselines.hpp"

#include <cmath>

#include "bvlab/error.hpp"
#include "bvlab/linalg.hpp"

namespace bvlab::baselines {

PcaResult pca_fit(const Matrix& x, std::size_t k) {
    if (k < 1 || k > x.cols())
        throw ArgumentError("pca_fit: k=" + std::to_string(k) + " outside [1, " + std::to_string(x.cols()) + "]");
    const Matrix cov = covariance(x);
    const EigResult eig = eig_sym(cov);
    PcaResult r;
    r.mean = column_means(x);
    r.components = Matrix(k, x.cols());
    r.eigenvalues.assign(eig.eigenvalues.begin(), eig.eigenvalues.begin() + static_cast<std::ptrdiff_t>(k));
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < x.cols(); ++j) r.components(i, j) = eig.eigenvectors(j, i);
    return r;
}

Matrix pca_transform(const PcaResult& pca, const Matrix& x) {
    if (x.cols() != pca.components.cols())
        throw ShapeError("pca_transform: fitted on " + std::to_string(pca.components.cols()) + " columns, got " +
                         x.shape_str());
    return matmul_nt(center_columns(x, pca.mean), pca.components);
}

Matrix pca_inverse_transform(const PcaResult& pca, const Matrix& scores) {
    if (scores.cols() != pca.components.rows())
        throw ShapeError("pca_inverse_transform: expected " + std::to_string(pca.components.rows()) + " score columns");
    Matrix x = matmul(scores, pca.components);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        auto row = x.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) row[c] += pca.mean[c];
    }
    return x;
}

std::size_t numerical_rank(const std::vector<double>& eigenvalues_desc, double rel_tol) {
    if (eigenvalues_desc.empty() || eigenvalues_desc.front() <= 0.0) return 0;
    const double cutoff = rel_tol * eigenvalues_desc.front();
    std::size_t rank = 0;
    for (double l : eigenvalues_desc)
        if (l > cutoff) ++rank;
    return rank;
}

WhitenResult whiten(const Matrix& x, std::size_t k) {
    if (k < 1 || k > x.cols())
        throw ArgumentError("whiten: k=" + std::to_string(k) + " outside [1, " + std::to_string(x.cols()) + "]");
    const EigResult eig = eig_sym(covariance(x));
    const std::size_t rank = numerical_rank(eig.eigenvalues);
    if (k > rank) throw RankError(k, rank);

    WhitenResult r;
    r.whitening.mean = column_means(x);
    r.whitening.matrix = Matrix(k, x.cols());
    for (std::size_t i = 0; i < k; ++i) {
        const double s = 1.0 / std::sqrt(eig.eigenvalues[i]);
        for (std::size_t j = 0; j < x.cols(); ++j) r.whitening.matrix(i, j) = s * eig.eigenvectors(j, i);
    }
    r.z = apply_whitening(r.whitening, x);
    return r;
}

Matrix apply_whitening(const Whitening& w, const Matrix& x) {
    if (x.cols() != w.matrix.cols())
        throw ShapeError("whitening expects " + std::to_string(w.matrix.cols()) + " columns, got " + x.shape_str());
    return matmul_nt(center_columns(x, w.mean), w.matrix);
}

Matrix symmetric_decorrelation(const Matrix& w) {
    const Matrix wwt = matmul_nt(w, w);
    const EigResult e = eig_sym(wwt, 1e-8 * (1.0 + max_abs(wwt)));
    const std::size_t k = w.rows();
    Matrix inv_sqrt(k, k);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) {
            double s = 0.0;
            for (std::size_t p = 0; p < k; ++p)
                s += e.eigenvectors(i, p) * e.eigenvectors(j, p) / std::sqrt(std::max(e.eigenvalues[p], 1e-300));
            inv_sqrt(i, j) = s;
        }
    return matmul(inv_sqrt, w);
}

IcaResult fastica_fit(const Matrix& x, std::size_t k, RngState& rng, const IcaOptions& options) {
    if (options.max_iter == 0) throw ArgumentError("fastica_fit: max_iter must be positive");
    WhitenResult white = whiten(x, k);
    const Matrix& z = white.z;
    const std::size_t n = z.rows();
    const double inv_n = 1.0 / static_cast<double>(n);

    IcaResult r;
    r.whitening = std::move(white.whitening);
    r.k = k;
    Matrix w = symmetric_decorrelation(sample(rng, Distribution::standard_normal, k, k));

    for (std::size_t it = 1; it <= options.max_iter; ++it) {
        Matrix proj = matmul_nt(z, w); // n x k
        std::vector<double> mean_deriv(k, 0.0);
        for (std::size_t row = 0; row < n; ++row) {
            auto p = proj.row(row);
            for (std::size_t c = 0; c < k; ++c) {
                const double t = std::tanh(p[c]);
                p[c] = t;
                mean_deriv[c] += 1.0 - t * t;
            }
        }
        Matrix w_new = matmul_tn(proj, z); // k x k: E[g(w^T z) z^T]
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < k; ++j) w_new(i, j) = w_new(i, j) * inv_n - mean_deriv[i] * inv_n * w(i, j);
        w_new = symmetric_decorrelation(w_new);

        double change = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < k; ++j) dot += w_new(i, j) * w(i, j);
            change = std::max(change, std::abs(std::abs(dot) - 1.0));
        }
        w = std::move(w_new);
        r.iterations = it;
        if (change < options.tol) {
            r.converged = true;
            break;
        }
    }
    r.unmixing = std::move(w);
    return r;
}

Matrix ica_transform(const IcaResult& ica, const Matrix& x) {
    return matmul_nt(apply_whitening(ica.whitening, x), ica.unmixing);
}

} // namespace bvlab::baselines
