#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bvlab/error.hpp"
#include "bvlab/linalg.hpp"
#include "bvlab/matrix.hpp"
#include "bvlab/rng.hpp"
#include "bvlab/textio.hpp"
#include "test_util.hpp"

using namespace bvlab;
using bvlab::testutil::random_normal;
using bvlab::testutil::random_symmetric;
using bvlab::testutil::random_uniform;

TEST(Matrix, ShapeAndAccess) {
    Matrix m{{1, 2, 3}, {4, 5, 6}};
    EXPECT_EQ(m.rows(), 2u);
    EXPECT_EQ(m.cols(), 3u);
    EXPECT_EQ(m(1, 2), 6.0);
    EXPECT_EQ(m.col(1), (std::vector<double>{2, 5}));
    EXPECT_EQ(m.take_cols(std::vector<std::size_t>{2, 0}), (Matrix{{3, 1}, {6, 4}}));
    EXPECT_EQ(m.take_rows(std::vector<std::size_t>{1}), (Matrix{{4, 5, 6}}));
    EXPECT_EQ(m.block_cols(1, 2), (Matrix{{2, 3}, {5, 6}}));
    EXPECT_THROW(Matrix(2, 2, std::vector<double>{1, 2, 3}), ShapeError);
    EXPECT_THROW((Matrix{{1, 2}, {3}}), ShapeError);
}

TEST(Matmul, IdentityLeavesMatrixUnchanged) {
    Matrix a{{1.5, -2}, {3, 4.25}};
    EXPECT_EQ(matmul(Matrix::identity(2), a), a);
}

TEST(Matmul, HandArithmetic) {
    EXPECT_EQ(matmul(Matrix{{1, 2}, {3, 4}}, Matrix{{0}, {1}}), (Matrix{{2}, {4}}));
}

TEST(Matmul, FactorTimesWeightShape) {
    const Matrix y = random_uniform(1, 10000, 4);
    const Matrix w = random_normal(2, 4, 14);
    const Matrix x = matmul(y, w);
    EXPECT_EQ(x.rows(), 10000u);
    EXPECT_EQ(x.cols(), 14u);
}

TEST(Matmul, ShapeErrorNamesBothShapes) {
    try {
        matmul(Matrix(2, 3), Matrix(2, 3));
        FAIL() << "expected ShapeError";
    } catch (const ShapeError& e) {
        const std::string what = e.what();
        EXPECT_NE(what.find("2x3"), std::string::npos) << what;
        EXPECT_GE(std::count(what.begin(), what.end(), 'x'), 2);
    }
}

TEST(Matmul, TransposedVariantsAgree) {
    const Matrix a = random_normal(3, 7, 5);
    const Matrix b = random_normal(4, 7, 6);
    const Matrix c = random_normal(5, 9, 5);
    EXPECT_LT(max_abs_diff(matmul_tn(a, b), matmul(transpose(a), b)), 1e-12);
    EXPECT_LT(max_abs_diff(matmul_nt(a, c), matmul(a, transpose(c))), 1e-12);
}

TEST(Covariance, ConstantColumnsGiveZeroMatrix) {
    Matrix x(50, 3, 2.5);
    EXPECT_EQ(covariance(x), Matrix(3, 3, 0.0));
}

TEST(Covariance, PerfectlyCorrelatedColumnsAreRankOne) {
    Matrix x(100, 2);
    RngState rng(7);
    for (std::size_t i = 0; i < 100; ++i) {
        x(i, 0) = rng.standard_normal();
        x(i, 1) = 3.0 * x(i, 0) - 1.0;
    }
    const auto c = covariance(x);
    EXPECT_DOUBLE_EQ(c(0, 1), c(1, 0));
    const auto eig = eig_sym(c);
    EXPECT_LT(std::abs(eig.eigenvalues[1]), 1e-12 * eig.eigenvalues[0]);
}

TEST(Covariance, UniformFactorsNearOneTwelfthIdentity) {
    const Matrix y = random_uniform(11, 10000, 4);
    const Matrix c = covariance(y);
    // Brute-force double sum as an independent oracle.
    for (std::size_t a = 0; a < 4; ++a) {
        for (std::size_t b = 0; b < 4; ++b) {
            double ma = 0, mb = 0;
            for (std::size_t i = 0; i < y.rows(); ++i) ma += y(i, a), mb += y(i, b);
            ma /= y.rows(), mb /= y.rows();
            double s = 0;
            for (std::size_t i = 0; i < y.rows(); ++i) s += (y(i, a) - ma) * (y(i, b) - mb);
            EXPECT_NEAR(c(a, b), s / (y.rows() - 1), 1e-12);
            EXPECT_NEAR(c(a, b), a == b ? 1.0 / 12.0 : 0.0, 0.01);
        }
    }
}

TEST(Covariance, NeedsTwoRows) { EXPECT_THROW(covariance(Matrix(1, 3)), InsufficientDataError); }

TEST(EigSym, DiagonalIsAxisAligned) {
    const auto r = eig_sym(Matrix{{3, 0}, {0, 1}});
    EXPECT_EQ(r.eigenvalues, (std::vector<double>{3, 1}));
    EXPECT_EQ(r.eigenvectors, Matrix::identity(2));
}

TEST(EigSym, TwoByTwoCharacteristicPolynomial) {
    const auto r = eig_sym(Matrix{{2, 1}, {1, 2}});
    EXPECT_NEAR(r.eigenvalues[0], 3.0, 1e-14);
    EXPECT_NEAR(r.eigenvalues[1], 1.0, 1e-14);
}

TEST(EigSym, RandomRoundTrip14) {
    const Matrix a = random_symmetric(21, 14);
    const auto r = eig_sym(a);
    Matrix vd = r.eigenvectors;
    for (std::size_t i = 0; i < 14; ++i)
        for (std::size_t j = 0; j < 14; ++j) vd(i, j) *= r.eigenvalues[j];
    EXPECT_LT(max_abs_diff(matmul_nt(vd, r.eigenvectors), a), 1e-8);
    for (std::size_t j = 0; j < 14; ++j) {
        const auto v = r.eigenvectors.col(j);
        const Matrix av = matmul(a, Matrix::column(v));
        for (std::size_t i = 0; i < 14; ++i) EXPECT_NEAR(av(i, 0), r.eigenvalues[j] * v[i], 1e-8);
    }
}

TEST(EigSym, SignConventionLargestEntryPositive) {
    const auto r = eig_sym(random_symmetric(5, 8));
    for (std::size_t j = 0; j < 8; ++j) {
        const auto v = r.eigenvectors.col(j);
        const auto it = std::max_element(v.begin(), v.end(), [](double p, double q) { return std::abs(p) < std::abs(q); });
        EXPECT_GT(*it, 0.0);
    }
}

TEST(EigSym, RejectsAsymmetricInput) {
    try {
        eig_sym(Matrix{{1, 2}, {2.5, 1}});
        FAIL() << "expected SymmetryError";
    } catch (const SymmetryError& e) {
        EXPECT_DOUBLE_EQ(e.max_asymmetry(), 0.5);
    }
    EXPECT_THROW(eig_sym(Matrix(2, 3)), ShapeError);
}

TEST(Pearson, SelfAndNegation) {
    const auto u = random_normal(3, 200, 1).col(0);
    std::vector<double> neg(u.size());
    std::transform(u.begin(), u.end(), neg.begin(), [](double v) { return -v; });
    EXPECT_NEAR(pearson(u, u), 1.0, 1e-15);
    EXPECT_NEAR(pearson(u, neg), -1.0, 1e-15);
}

TEST(Pearson, IndependentNoiseIsSmall) {
    const auto u = random_uniform(8, 10000, 1).col(0);
    const auto v = random_uniform(9, 10000, 1).col(0);
    EXPECT_LT(std::abs(pearson(u, v)), 0.05);
}

TEST(Pearson, Errors) {
    std::vector<double> c(5, 1.0), u{1, 2, 3, 4, 5};
    EXPECT_THROW(pearson(c, u), UndefinedCorrelationError);
    EXPECT_THROW(pearson(u, std::vector<double>{1, 2}), ShapeError);
    EXPECT_THROW(pearson(std::vector<double>{1}, std::vector<double>{2}), InsufficientDataError);
}

TEST(Sample, DeterministicFromSameState) {
    RngState a(42), b(42);
    EXPECT_EQ(sample(a, Distribution::standard_normal, 3, 5), sample(b, Distribution::standard_normal, 3, 5));
    EXPECT_EQ(a, b);
}

TEST(Sample, UniformMeanAndNormalVariance) {
    RngState rng(5);
    const auto u = sample(rng, Distribution::uniform01, 10000, 1).col(0);
    const double mu = mean(u);
    EXPECT_GE(mu, 0.49);
    EXPECT_LE(mu, 0.51);
    for (double v : u) {
        EXPECT_GE(v, 0.0);
        EXPECT_LT(v, 1.0);
    }
    const auto n = sample(rng, Distribution::standard_normal, 10000, 1).col(0);
    const double var = variance(n);
    EXPECT_GE(var, 0.95);
    EXPECT_LE(var, 1.05);
}

TEST(Sample, RejectsZeroDims) {
    RngState rng(1);
    EXPECT_THROW(sample(rng, Distribution::uniform01, 0, 3), ArgumentError);
}

TEST(Rng, KnownSplitmixSequence) {
    // Reference values of splitmix64 seeded with 0.
    std::uint64_t s = 0;
    EXPECT_EQ(splitmix64(s), 0xE220A8397B1DCDAFull);
    EXPECT_EQ(splitmix64(s), 0x6E789E6AA1B965F4ull);
}

TEST(Rng, SplitIndependentOfParentPosition) {
    RngState parent(9);
    const RngState before = parent.split(3);
    for (int i = 0; i < 10; ++i) parent.next_u64();
    EXPECT_EQ(parent.split(3), before);
    EXPECT_NE(parent.split(4).next_u64(), RngState(9).split(3).next_u64());
}

TEST(Rng, UniformBelowStaysInRange) {
    RngState rng(1);
    std::vector<int> counts(7, 0);
    for (int i = 0; i < 7000; ++i) {
        const auto v = rng.uniform_below(7);
        ASSERT_LT(v, 7u);
        ++counts[v];
    }
    for (int c : counts) EXPECT_GT(c, 850);
}

TEST(Rng, PermutationIsAPermutation) {
    RngState rng(3);
    auto p = permutation(rng, 100);
    std::sort(p.begin(), p.end());
    std::vector<std::size_t> id(100);
    std::iota(id.begin(), id.end(), 0);
    EXPECT_EQ(p, id);
}

TEST(LeastSquares, RecoversExactLinearMap) {
    const Matrix a = random_normal(4, 30, 3);
    const Matrix w = random_normal(5, 3, 2);
    EXPECT_LT(max_abs_diff(least_squares(a, matmul(a, w)), w), 1e-10);
}

TEST(TextIo, HexRoundTripAndParsing) {
    for (double v : {0.0, -1.5, 1.0 / 3.0, 6.02214076e23, 5e-324}) EXPECT_EQ(textio::parse_double(textio::hex(v)), v);
    EXPECT_THROW(textio::parse_double("1.5x"), ArgumentError);
    EXPECT_THROW(textio::parse_u64("-3"), ArgumentError);
    EXPECT_EQ(textio::trim("  a b \t"), "a b");
    EXPECT_EQ(textio::split("a,b,,c", ','), (std::vector<std::string>{"a", "b", "", "c"}));
}
