#include <gtest/gtest.h>

#include <Eigen/Dense>

#include "asymlora/errors.h"
#include "asymlora/random.h"
#include "asymlora/similarity.h"
#include "asymlora/stiefel.h"

using namespace asymlora;

TEST(SampleStiefel, ColumnFrameIsOrthonormal) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto f = sample_stiefel(4, 2, Orientation::column_orthonormal, seed);
    EXPECT_EQ(f.matrix().rows(), 4);
    EXPECT_EQ(f.matrix().cols(), 2);
    EXPECT_LT((f.matrix().transpose() * f.matrix() - Matrix::Identity(2, 2)).norm(), 1e-12);
    EXPECT_EQ(f.rank(), 2);
    EXPECT_EQ(f.ambient_dim(), 4);
  }
}

TEST(SampleStiefel, SquareRowFrameIsOrthogonal) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto f = sample_stiefel(3, 3, Orientation::row_orthonormal, seed);
    EXPECT_NEAR(std::abs(f.matrix().determinant()), 1.0, 1e-10);
    EXPECT_LT((f.matrix() * f.matrix().transpose() - Matrix::Identity(3, 3)).norm(), 1e-12);
  }
}

TEST(SampleStiefel, RowFrameShape) {
  const auto q = sample_stiefel(3, 10, Orientation::row_orthonormal, 5);
  EXPECT_EQ(q.matrix().rows(), 3);
  EXPECT_EQ(q.matrix().cols(), 10);
  EXPECT_EQ(q.rank(), 3);
  EXPECT_EQ(q.ambient_dim(), 10);
  EXPECT_LT(q.orthonormality_residual(), 1e-12);
}

TEST(SampleStiefel, ProjectorExpectationIsScaledIdentity) {
  // Haar invariance gives E[Q^T Q] = (r/d) I.
  const Index d = 8, r = 2;
  const Matrix g = Rng(1).gaussian(d, d);
  const Matrix m = g + g.transpose();
  const Matrix spd = m * m.transpose();  // positive trace keeps the relative check meaningful
  double total = 0.0;
  const int draws = 10000;
  for (int s = 0; s < draws; ++s) {
    const auto q = sample_stiefel(r, d, Orientation::row_orthonormal, derive_seed(77, s));
    total += (q.matrix().transpose() * q.matrix() * spd).trace();
  }
  const double expected = static_cast<double>(r) / d * spd.trace();
  EXPECT_NEAR(total / draws, expected, 0.02 * expected);
}

TEST(SampleStiefel, FirstCoordinateIsSymmetric) {
  // The sign correction removes the bias QR leaves on the leading column.
  double total = 0.0;
  const int draws = 4000;
  for (int s = 0; s < draws; ++s) {
    total += sample_stiefel(6, 2, Orientation::column_orthonormal, derive_seed(5, s)).matrix()(0, 0);
  }
  EXPECT_NEAR(total / draws, 0.0, 4.0 * std::sqrt(1.0 / 6.0 / draws));
}

TEST(SampleStiefel, Deterministic) {
  const auto a = sample_stiefel(12, 5, Orientation::column_orthonormal, 9);
  const auto b = sample_stiefel(12, 5, Orientation::column_orthonormal, 9);
  EXPECT_EQ(a.matrix(), b.matrix());
  const auto c = sample_stiefel(12, 5, Orientation::column_orthonormal, 10);
  EXPECT_NE(a.matrix(), c.matrix());
}

TEST(SampleStiefel, RowFrameIsTransposedColumnFrame) {
  const auto col = sample_stiefel(9, 3, Orientation::column_orthonormal, 4);
  const auto row = sample_stiefel(3, 9, Orientation::row_orthonormal, 4);
  EXPECT_EQ(Matrix(col.matrix().transpose()), row.matrix());
}

TEST(SampleStiefel, RejectsOversizedFrames) {
  EXPECT_THROW(sample_stiefel(2, 4, Orientation::column_orthonormal, 1), DimensionError);
  EXPECT_THROW(sample_stiefel(4, 2, Orientation::row_orthonormal, 1), DimensionError);
  EXPECT_THROW(sample_stiefel(0, 2, Orientation::row_orthonormal, 1), DimensionError);
}

TEST(OrthonormalFrame, RejectsNonOrthonormalData) {
  Matrix m(2, 3);
  m << 1, 0, 0, 0.5, 0.5, 0;
  EXPECT_THROW(OrthonormalFrame(m, Orientation::row_orthonormal), ValidationError);
  EXPECT_THROW(OrthonormalFrame(Matrix(), Orientation::row_orthonormal), DimensionError);
}

TEST(OrthonormalFrame, IdentityAndTranspose) {
  const auto id = OrthonormalFrame::identity(4, Orientation::column_orthonormal);
  EXPECT_EQ(id.matrix(), Matrix::Identity(4, 4));
  const auto q = sample_stiefel(2, 5, Orientation::row_orthonormal, 3);
  const auto t = q.transposed();
  EXPECT_EQ(t.orientation(), Orientation::column_orthonormal);
  EXPECT_EQ(t.rank(), 2);
  EXPECT_EQ(t.ambient_dim(), 5);
}

TEST(RandomLowRank, RankTwoUnitNorm) {
  const Matrix delta = random_low_rank(8, 8, 2, 1.0, 21);
  Eigen::JacobiSVD<Matrix> svd(delta);
  EXPECT_LT(svd.singularValues()(2), 1e-10);
  EXPECT_GT(svd.singularValues()(1), 1e-6);
  EXPECT_NEAR(delta.norm(), 1.0, 1e-10);
}

TEST(RandomLowRank, FullRankScaled) {
  const Matrix delta = random_low_rank(4, 4, 4, 2.0, 22);
  Eigen::JacobiSVD<Matrix> svd(delta);
  EXPECT_GT(svd.singularValues()(3), 1e-8);
  EXPECT_NEAR(delta.norm(), 2.0, 1e-10);
}

TEST(RandomLowRank, DistinctSeedsGiveDistinctSubspaces) {
  const Matrix a = random_low_rank(64, 64, 2, 1.0, 1);
  const Matrix b = random_low_rank(64, 64, 2, 1.0, 2);
  EXPECT_LT(cca_similarity(a, b, Side::row_space), 0.9);
  EXPECT_EQ(random_low_rank(6, 5, 2, 1.0, 3), random_low_rank(6, 5, 2, 1.0, 3));
}

TEST(RandomLowRank, RejectsBadArguments) {
  EXPECT_THROW(random_low_rank(4, 4, 5, 1.0, 1), DimensionError);
  EXPECT_THROW(random_low_rank(4, 4, 0, 1.0, 1), DimensionError);
  EXPECT_THROW(random_low_rank(4, 4, 2, 0.0, 1), ValidationError);
}
