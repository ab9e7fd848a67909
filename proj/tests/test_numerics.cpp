#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "latent_embed/numerics.hpp"
#include "latent_embed/rng.hpp"

namespace latent_embed {
namespace {

Vec vec(std::initializer_list<double> values) {
  Vec v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index k = 0;
  for (double x : values) v[k++] = x;
  return v;
}

Vec random_vec(Rng& rng, Eigen::Index n, double scale = 1.0) {
  Vec v(n);
  for (Eigen::Index k = 0; k < n; ++k) v[k] = scale * rng.normal();
  return v;
}

TEST(Relu, ZeroIsFixedPoint) { EXPECT_EQ(Vec(relu(vec({0, 0, 0}))), vec({0, 0, 0})); }

TEST(Relu, ClampsNegatives) { EXPECT_EQ(Vec(relu(vec({-1, 2, -3}))), vec({0, 2, 0})); }

TEST(Relu, StrictNegativeClamp) { EXPECT_EQ(Vec(relu(vec({1e-12, -1e-12}))), vec({1e-12, 0})); }

TEST(Relu, Idempotent) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec x = random_vec(rng, 7);
    const Vec once = relu(x);
    EXPECT_EQ(Vec(relu(once)), once);
  }
}

TEST(SoftmaxTemp, ConstantScoresAreUniform) {
  for (double c : {-5.0, 0.0, 3.25, 100.0}) {
    const Vec g = softmax_temp(vec({c, c, c}), 0.25);
    for (Eigen::Index k = 0; k < 3; ++k) EXPECT_NEAR(g[k], 1.0 / 3.0, 1e-15);
  }
}

TEST(SoftmaxTemp, ClosedFormTwoScores) {
  const Vec g = softmax_temp(vec({0.25, 0.0}), 0.25);
  const double e = std::exp(1.0);
  EXPECT_NEAR(g[0], e / (e + 1.0), 1e-15);
  EXPECT_NEAR(g[1], 1.0 / (e + 1.0), 1e-15);
}

TEST(SoftmaxTemp, LowTemperatureConcentrates) {
  const Vec g = softmax_temp(vec({10.0, 0.0}), 0.01);
  EXPECT_GT(g[0], 1.0 - 1e-12);
}

TEST(SoftmaxTemp, RejectsNonPositiveTemperature) {
  for (double tau : {0.0, -1.0}) {
    try {
      softmax_temp(vec({1.0, 2.0}), tau);
      FAIL() << "expected an error";
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::InvalidHyperparameter);
    }
  }
}

TEST(SoftmaxTemp, NoOverflowForLargeScores) {
  const Vec g = softmax_temp(vec({1000.0, 999.0}), 0.25);
  EXPECT_TRUE(g.allFinite());
  EXPECT_NEAR(g.sum(), 1.0, 1e-12);
}

TEST(SoftmaxTemp, SumsToOneAndShiftInvariant) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index n = 1 + rng.uniform_int(0, 9);
    const Vec s = random_vec(rng, n, 3.0);
    const double tau = rng.uniform(0.05, 4.0);
    const double shift = rng.uniform(-50.0, 50.0);
    const Vec a = softmax_temp(s, tau);
    const Vec b = softmax_temp(Vec(s.array() + shift), tau);
    EXPECT_NEAR(a.sum(), 1.0, 1e-12);
    EXPECT_TRUE((a.array() > 0.0).all() && (a.array() <= 1.0).all());
    EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(SoftmaxTemp, HighTemperatureApproachesUniform) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index n = 2 + rng.uniform_int(0, 6);
    Vec s(n);
    for (Eigen::Index k = 0; k < n; ++k) s[k] = rng.uniform(-1.0, 1.0);
    const Vec g = softmax_temp(s, 1e9);
    EXPECT_LT((g.array() - 1.0 / static_cast<double>(n)).abs().maxCoeff(), 1e-6);
  }
}

TEST(MeanPool, Singleton) {
  const std::vector<Vec> v{vec({1, 2})};
  EXPECT_EQ(mean_pool(v), vec({1, 2}));
}

TEST(MeanPool, Symmetric) {
  const std::vector<Vec> v{vec({1, 0}), vec({0, 1})};
  EXPECT_EQ(mean_pool(v), vec({0.5, 0.5}));
}

TEST(MeanPool, ThreeVectors) {
  const std::vector<Vec> v{vec({2, 4}), vec({4, 8}), vec({0, 0})};
  EXPECT_EQ(mean_pool(v), vec({2, 4}));
}

TEST(MeanPool, RejectsEmptyAndMismatchedInput) {
  EXPECT_THROW(mean_pool(std::vector<Vec>{}), Error);
  EXPECT_THROW(mean_pool(std::vector<Vec>{vec({1, 2}), vec({1})}), ShapeError);
}

TEST(MeanPool, PermutationInvariantWithinRounding) {
  Rng rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Vec> v;
    const int n = 1 + static_cast<int>(rng.uniform_int(0, 8));
    for (int k = 0; k < n; ++k) v.push_back(random_vec(rng, 6));
    std::vector<Vec> shuffled = v;
    for (int k = n - 1; k > 0; --k) std::swap(shuffled[static_cast<std::size_t>(k)], shuffled[static_cast<std::size_t>(rng.uniform_int(0, k))]);
    EXPECT_LT((mean_pool(v) - mean_pool(shuffled)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(MatvecConcat, IdentityAndShapeErrors) {
  EXPECT_EQ(matvec(Mat::Identity(2, 2), vec({3, 4})), vec({3, 4}));
  try {
    matvec(Mat::Identity(2, 3), vec({3, 4}));
    FAIL() << "expected a shape error";
  } catch (const ShapeError& e) {
    EXPECT_EQ(e.expected(), 3);
    EXPECT_EQ(e.actual(), 2);
  }
  EXPECT_EQ(concat(vec({1}), vec({2, 3}), vec({4})), vec({1, 2, 3, 4}));
  const std::vector<Vec> parts{vec({1, 2}), vec({3})};
  EXPECT_EQ(concat(std::span<const Vec>(parts)), vec({1, 2, 3}));
}

TEST(Gate, EndpointsAreExact) {
  const Vec u = vec({-0.0, 1.5, -2.25});
  const Vec v = vec({7.0, -3.0, 0.1});
  const Vec at0 = gate(0.0, u, v);
  const Vec at1 = gate(1.0, u, v);
  for (Eigen::Index k = 0; k < 3; ++k) {
    EXPECT_EQ(std::signbit(at0[k]), std::signbit(u[k]));
    EXPECT_EQ(at0[k], u[k]);
    EXPECT_EQ(at1[k], v[k]);
  }
}

TEST(Gate, SameInputsAreFixedPoint) {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec u = random_vec(rng, 5);
    const double a = rng.uniform();
    EXPECT_LT((gate(a, u, u) - u).cwiseAbs().maxCoeff(), 1e-15 * std::max(1.0, u.cwiseAbs().maxCoeff()));
  }
  EXPECT_THROW(gate(0.5, vec({1, 2}), vec({1})), ShapeError);
}

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int k = 0; k < 1000; ++k) {
    EXPECT_EQ(a.uniform(), b.uniform());
    EXPECT_EQ(a.normal(), b.normal());
  }
}

TEST(Rng, UniformIntCoversRange) {
  Rng rng(9);
  std::vector<int> hits(5, 0);
  for (int k = 0; k < 5000; ++k) ++hits[static_cast<std::size_t>(rng.uniform_int(0, 4))];
  for (int h : hits) EXPECT_GT(h, 800);
}

}  // namespace
}  // namespace latent_embed
