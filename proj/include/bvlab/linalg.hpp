#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "bvlab/matrix.hpp"

namespace bvlab {

Matrix matmul(const Matrix& a, const Matrix& b);
/// a^T * b without materializing the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
/// a * b^T.
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);

Matrix add(const Matrix& a, const Matrix& b);
Matrix subtract(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);
double max_abs(const Matrix& a);
double max_abs_diff(const Matrix& a, const Matrix& b);

std::vector<double> column_means(const Matrix& x);
Matrix center_columns(const Matrix& x, std::span<const double> means);

/// Sample covariance (divisor rows - 1) of the columns of x.
Matrix covariance(const Matrix& x);

struct EigResult {
    std::vector<double> eigenvalues; // descending
    Matrix eigenvectors;             // column i pairs with eigenvalues[i]
};

/// Symmetric eigendecomposition by cyclic Jacobi rotations. Each eigenvector
/// is signed so that its largest-magnitude entry is positive.
EigResult eig_sym(const Matrix& a, double symmetry_tol = 1e-10);

double mean(std::span<const double> v);
double variance(std::span<const double> v); // divisor n - 1

/// Pearson correlation. Throws UndefinedCorrelationError when either vector
/// has zero variance.
double pearson(std::span<const double> u, std::span<const double> v);

/// Solve min ||a x - b|| for each column of b (normal equations via eig_sym).
Matrix least_squares(const Matrix& a, const Matrix& b);

} // namespace bvlab
