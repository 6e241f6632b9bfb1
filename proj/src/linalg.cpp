#include "bvlab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "bvlab/error.hpp"
#include "bvlab/kernels.hpp"

namespace bvlab {

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw ShapeError("matmul: cannot multiply " + a.shape_str() + " by " + b.shape_str());
    Matrix c(a.rows(), b.cols());
    kernels::active().gemm_nn(a.rows(), a.cols(), b.cols(), a.data().data(), b.data().data(), c.data().data());
    return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows())
        throw ShapeError("matmul_tn: cannot multiply transpose of " + a.shape_str() + " by " + b.shape_str());
    Matrix c(a.cols(), b.cols());
    kernels::active().gemm_tn(a.cols(), a.rows(), b.cols(), a.data().data(), b.data().data(), c.data().data());
    return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols())
        throw ShapeError("matmul_nt: cannot multiply " + a.shape_str() + " by transpose of " + b.shape_str());
    return matmul(a, transpose(b));
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t r = 0; r < a.rows(); ++r)
        for (std::size_t c = 0; c < a.cols(); ++c) t(c, r) = a(r, c);
    return t;
}

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
}

} // namespace

Matrix add(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "add");
    Matrix out = a;
    kernels::active().axpy(out.size(), 1.0, b.data().data(), out.data().data());
    return out;
}

Matrix subtract(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "subtract");
    Matrix out = a;
    auto o = out.data();
    auto bd = b.data();
    for (std::size_t i = 0; i < o.size(); ++i) o[i] -= bd[i];
    return out;
}

Matrix scale(const Matrix& a, double s) {
    Matrix out = a;
    for (double& v : out.data()) v *= s;
    return out;
}

double max_abs(const Matrix& a) {
    double m = 0.0;
    for (double v : a.data()) m = std::max(m, std::abs(v));
    return m;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    require_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

std::vector<double> column_means(const Matrix& x) {
    std::vector<double> means(x.cols(), 0.0);
    if (x.rows() == 0) return means;
    kernels::active().col_sum(x.rows(), x.cols(), x.data().data(), means.data());
    for (double& m : means) m /= static_cast<double>(x.rows());
    return means;
}

Matrix center_columns(const Matrix& x, std::span<const double> means) {
    if (means.size() != x.cols()) throw ShapeError("center_columns: mean length does not match " + x.shape_str());
    Matrix out = x;
    for (std::size_t r = 0; r < out.rows(); ++r) {
        auto row = out.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) row[c] -= means[c];
    }
    return out;
}

Matrix covariance(const Matrix& x) {
    if (x.rows() < 2)
        throw InsufficientDataError("covariance needs at least 2 rows, got " + std::to_string(x.rows()));
    const auto means = column_means(x);
    const Matrix centered = center_columns(x, means);
    Matrix cov = matmul_tn(centered, centered);
    const double denom = static_cast<double>(x.rows() - 1);
    for (double& v : cov.data()) v /= denom;
    return cov;
}

EigResult eig_sym(const Matrix& input, double symmetry_tol) {
    if (input.rows() != input.cols()) throw ShapeError("eig_sym: matrix " + input.shape_str() + " is not square");
    const std::size_t n = input.rows();
    double asym = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) asym = std::max(asym, std::abs(input(i, j) - input(j, i)));
    if (asym > symmetry_tol) throw SymmetryError(asym);

    Matrix a = input;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) a(i, j) = a(j, i) = 0.5 * (input(i, j) + input(j, i));
    Matrix v = Matrix::identity(n);

    double total = 0.0;
    for (double x : a.data()) total += x * x;
    const double tiny = std::numeric_limits<double>::min();

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += a(i, j) * a(i, j);
        if (off <= 1e-32 * total || off < tiny) break;

        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) < tiny) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a(k, p);
                    const double akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a(p, k);
                    const double aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p);
                    const double vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

    EigResult out;
    out.eigenvalues.resize(n);
    out.eigenvectors = Matrix(n, n);
    for (std::size_t c = 0; c < n; ++c) {
        const std::size_t src = order[c];
        out.eigenvalues[c] = a(src, src);
        std::size_t arg = 0;
        for (std::size_t k = 1; k < n; ++k)
            if (std::abs(v(k, src)) > std::abs(v(arg, src))) arg = k;
        const double sign = v(arg, src) < 0.0 ? -1.0 : 1.0;
        for (std::size_t k = 0; k < n; ++k) out.eigenvectors(k, c) = sign * v(k, src);
    }
    return out;
}

double mean(std::span<const double> v) {
    if (v.empty()) throw InsufficientDataError("mean of empty vector");
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double variance(std::span<const double> v) {
    if (v.size() < 2) throw InsufficientDataError("variance needs at least 2 values");
    const double m = mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

double pearson(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size())
        throw ShapeError("pearson: length mismatch " + std::to_string(u.size()) + " vs " + std::to_string(v.size()));
    if (u.size() < 2) throw InsufficientDataError("pearson needs at least 2 values");
    const double mu = mean(u);
    const double mv = mean(v);
    double suv = 0.0, suu = 0.0, svv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double du = u[i] - mu;
        const double dv = v[i] - mv;
        suv += du * dv;
        suu += du * du;
        svv += dv * dv;
    }
    const bool u_const = std::all_of(u.begin(), u.end(), [&](double x) { return x == u[0]; });
    const bool v_const = std::all_of(v.begin(), v.end(), [&](double x) { return x == v[0]; });
    if (u_const || v_const || suu == 0.0 || svv == 0.0)
        throw UndefinedCorrelationError("pearson: correlation undefined for a constant vector");
    return std::clamp(suv / std::sqrt(suu * svv), -1.0, 1.0);
}

Matrix least_squares(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) throw ShapeError("least_squares: " + a.shape_str() + " vs " + b.shape_str());
    const Matrix ata = matmul_tn(a, a);
    const Matrix atb = matmul_tn(a, b);
    const EigResult e = eig_sym(ata, 1e-6 * (1.0 + max_abs(ata)));
    const double cutoff = 1e-13 * std::max(e.eigenvalues.front(), 0.0);
    // x = V diag(1/lambda) V^T A^T b, dropping null directions
    Matrix vt_atb = matmul_tn(e.eigenvectors, atb);
    for (std::size_t i = 0; i < vt_atb.rows(); ++i) {
        const double lam = e.eigenvalues[i];
        const double inv = lam > cutoff ? 1.0 / lam : 0.0;
        for (double& x : vt_atb.row(i)) x *= inv;
    }
    return matmul(e.eigenvectors, vt_atb);
}

} // namespace bvlab
