#include <gtest/gtest.h>

#include <cmath>

#include "vqcount/fcm.hpp"
#include "vqcount/random.hpp"

using namespace vqcount;

namespace {

Codebook make_codebook(const Mat& vectors) {
  Codebook cb;
  cb.vectors = vectors;
  cb.used_count = Vec::Zero(vectors.rows());
  cb.total_count = 0.0;
  return cb;
}

}  // namespace

TEST(Membership, EqualDistancesGiveUniform) {
  // four unit vectors, query at the origin: all distances 1
  Mat v = Mat::Identity(4, 4);
  Codebook cb = make_codebook(v);
  Vec f = membership(cb, Vec::Zero(4));
  for (int k = 0; k < 4; ++k) EXPECT_DOUBLE_EQ(f(k), 0.25);
}

TEST(Membership, InverseSquareWeighting) {
  // distances 1 and 2 -> (1, 1/4) / (5/4) = (0.8, 0.2)
  Mat v(2, 1);
  v << 1.0, 4.0;
  Codebook cb = make_codebook(v);
  Vec f = membership(cb, Vec::Constant(1, 2.0));
  EXPECT_NEAR(f(0), 0.8, 1e-12);
  EXPECT_NEAR(f(1), 0.2, 1e-12);
}

TEST(Membership, ZeroDistanceTakesFullMembership) {
  Mat v(3, 2);
  v << 0, 0, 1, 1, 2, 2;
  Codebook cb = make_codebook(v);
  Vec q(2);
  q << 1, 1;
  Vec f = membership(cb, q);
  EXPECT_DOUBLE_EQ(f(0), 0.0);
  EXPECT_DOUBLE_EQ(f(1), 1.0);
  EXPECT_DOUBLE_EQ(f(2), 0.0);
}

TEST(Membership, ZeroDistanceTiesSplitEqually) {
  Mat v(3, 1);
  v << 5.0, 5.0, 7.0;
  Codebook cb = make_codebook(v);
  Vec f = membership(cb, Vec::Constant(1, 5.0));
  EXPECT_DOUBLE_EQ(f(0), 0.5);
  EXPECT_DOUBLE_EQ(f(1), 0.5);
  EXPECT_DOUBLE_EQ(f(2), 0.0);
}

// Spec invariant: sum_k f_k = 1 +/- 1e-9 over >= 1000 randomized draws.
TEST(Membership, NormalizationProperty) {
  RandomStream rng(555);
  for (int trial = 0; trial < 1000; ++trial) {
    int n = 2 + rng.uniform_int(31);
    int dim = 1 + rng.uniform_int(8);
    Codebook cb = make_codebook(rng.normal_mat(n, dim));
    Vec q = rng.normal_mat(dim, 1).col(0);
    Vec f = membership(cb, q);
    EXPECT_NEAR(f.sum(), 1.0, 1e-9);
    EXPECT_GE(f.minCoeff(), 0.0);
  }
}

TEST(StepSize, ZeroUseRate) {
  EXPECT_NEAR(step_size(0.0, 256, 0.99), std::exp(-1e-3), 1e-15);
}

TEST(StepSize, FullUseRateUnderflowsToZero) {
  // exponent -256000 - 1e-3 is far below double range
  EXPECT_DOUBLE_EQ(step_size(1.0, 256, 0.99), 0.0);
}

TEST(StepSize, StrictlyDecreasingWhereRepresentable) {
  // N=4, eps=0.5 keeps the exponent within [-80, -1e-3]; no underflow
  double prev = step_size(0.0, 4, 0.5);
  for (int i = 1; i <= 1000; ++i) {
    double r = static_cast<double>(i) / 1000.0;
    double cur = step_size(r, 4, 0.5);
    EXPECT_LT(cur, prev) << "r=" << r;
    prev = cur;
  }
}

TEST(FcmUpdate, FrozenWhenAllStepsUnderflow) {
  RandomStream rng(7);
  Codebook cb = make_codebook(rng.normal_mat(8, 3));
  // heavy uniform usage makes every alpha underflow at N=8, eps=0.99
  cb.used_count = Vec::Constant(8, 100.0);
  cb.total_count = 800.0;
  Mat before = cb.vectors;
  Mat batch = rng.normal_mat(16, 3);
  std::vector<int> labels(16, 0);
  fcm_update(cb, batch, labels);
  EXPECT_TRUE((cb.vectors.array() == before.array()).all());
}

TEST(FcmUpdate, SingleVectorConvexCombination) {
  Mat v(1, 2);
  v << 0.0, 0.0;
  Codebook cb = make_codebook(v);
  Mat z(1, 2);
  z << 2.0, -4.0;
  std::vector<int> labels{0};
  double alpha = step_size(0.0, 1, kUsageDecay);
  fcm_update(cb, z, labels);
  EXPECT_NEAR(cb.vectors(0, 0), alpha * 2.0, 1e-12);
  EXPECT_NEAR(cb.vectors(0, 1), alpha * -4.0, 1e-12);
  EXPECT_DOUBLE_EQ(cb.used_count(0), 1.0);
  EXPECT_DOUBLE_EQ(cb.total_count, 1.0);
}

TEST(FcmUpdate, EmptyBatchIsNoOp) {
  RandomStream rng(8);
  Codebook cb = make_codebook(rng.normal_mat(4, 2));
  Mat before = cb.vectors;
  fcm_update(cb, Mat(0, 2), {});
  EXPECT_TRUE((cb.vectors.array() == before.array()).all());
  EXPECT_DOUBLE_EQ(cb.total_count, 0.0);
}

// Invariant: each vector's update is a convex combination of itself and
// membership-weighted means of the batch, so it stays in the convex hull of
// {old vector} union the batch's bounding box.
TEST(FcmUpdate, StaysInConvexHull) {
  RandomStream rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    int n = 2 + rng.uniform_int(6);
    int dim = 1 + rng.uniform_int(3);
    Codebook cb = make_codebook(rng.uniform_mat(n, dim, -5, 5));
    Mat before = cb.vectors;
    Mat batch = rng.uniform_mat(12, dim, -1, 1);
    std::vector<int> labels(12);
    for (int i = 0; i < 12; ++i) labels[i] = nearest_vector(cb, batch.row(i).transpose());
    fcm_update(cb, batch, labels);
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < dim; ++j) {
        double lo = std::min(before(k, j), -1.0) - 1e-12;
        double hi = std::max(before(k, j), 1.0) + 1e-12;
        EXPECT_GE(cb.vectors(k, j), lo);
        EXPECT_LE(cb.vectors(k, j), hi);
      }
  }
}

TEST(FcmUpdate, RecoversFourGaussianMeans) {
  RandomStream rng(2024);
  Mat means(4, 2);
  means << 5, 5, -5, 5, -5, -5, 5, -5;
  const double sigma = 0.3;

  Codebook cb = make_codebook(rng.normal_mat(4, 2, 0.0, 0.5));
  for (int round = 0; round < 500; ++round) {
    Mat batch(32, 2);
    for (int i = 0; i < 32; ++i) {
      int c = rng.uniform_int(4);
      batch(i, 0) = means(c, 0) + sigma * rng.normal();
      batch(i, 1) = means(c, 1) + sigma * rng.normal();
    }
    std::vector<int> labels(32);
    for (int i = 0; i < 32; ++i) labels[i] = nearest_vector(cb, batch.row(i).transpose());
    fcm_update(cb, batch, labels);
  }

  // every vector within 3 sigma of a distinct cluster mean
  std::vector<bool> taken(4, false);
  for (int k = 0; k < 4; ++k) {
    int best = -1;
    double best_d = 1e18;
    for (int c = 0; c < 4; ++c) {
      double d = (cb.vectors.row(k) - means.row(c)).norm();
      if (d < best_d) {
        best_d = d;
        best = c;
      }
    }
    EXPECT_LE(best_d, 3.0 * sigma) << "vector " << k;
    EXPECT_FALSE(taken[best]) << "two vectors claimed cluster " << best;
    taken[best] = true;
  }
}

TEST(Usage, DecayThenIncrementKeepsRatesNormalized) {
  RandomStream rng(3);
  Codebook cb = make_codebook(rng.normal_mat(4, 2));
  for (int round = 0; round < 20; ++round) {
    std::vector<int> sel;
    for (int i = 0; i < 10; ++i) sel.push_back(rng.uniform_int(4));
    record_usage(cb, sel);
    double sum_rates = 0.0;
    for (int k = 0; k < 4; ++k) sum_rates += cb.use_rate(k);
    EXPECT_NEAR(sum_rates, 1.0, 1e-9);
    EXPECT_NEAR(cb.used_count.sum(), cb.total_count, 1e-9);
  }
}
