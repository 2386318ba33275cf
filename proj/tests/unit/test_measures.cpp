#include <gtest/gtest.h>

#include <cmath>

#include "swgf/error.hpp"
#include "swgf/measures.hpp"
#include "swgf/rng.hpp"

namespace swgf {
namespace {

Vector v2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

ParticleMeasure cloud2(std::initializer_list<std::pair<double, double>> pts) {
  std::vector<double> c;
  for (auto [a, b] : pts) {
    c.push_back(a);
    c.push_back(b);
  }
  return ParticleMeasure(2, c);
}

ParticleMeasure random_cloud(std::size_t n, std::size_t d, std::uint64_t seed, double scale = 1.0) {
  CounterRng rng(seed, StreamPurpose::kTest);
  std::vector<double> c(n * d);
  for (auto& x : c) x = scale * rng.normal();
  return ParticleMeasure(d, c);
}

TEST(ParticleMeasure, RejectsNonFiniteAndBadShapes) {
  EXPECT_THROW(ParticleMeasure(2, {1.0, NAN}), Error);
  EXPECT_THROW(ParticleMeasure(2, {1.0, INFINITY}), Error);
  EXPECT_THROW(ParticleMeasure(2, {1.0, 2.0, 3.0}), Error);
  EXPECT_THROW(ParticleMeasure(0, {}), Error);
  EXPECT_THROW(ParticleMeasure(1, {}), Error);
}

TEST(ParticleMeasure, DiracAndSubset) {
  const auto d = ParticleMeasure::dirac(v2(3, 7), 4);
  EXPECT_EQ(d.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(d.point_vector(i), v2(3, 7));
  const auto m = cloud2({{0, 0}, {1, 1}, {2, 2}});
  const std::vector<std::size_t> idx = {2, 0};
  EXPECT_EQ(m.subset(idx), cloud2({{2, 2}, {0, 0}}));
}

TEST(Pushforward, Examples) {
  const auto m = cloud2({{1, 2}, {3, 4}});
  EXPECT_EQ(pushforward(m, [](const Vector& x) { return x; }), m);
  EXPECT_EQ(pushforward(cloud2({{1, 0}}), [](const Vector& x) { return Vector(-x); }), cloud2({{-1, 0}}));
  const auto half = pushforward(cloud2({{0, 0}, {2, 2}}), [](const Vector& x) { return Vector(x / 2 + v2(1, 1)); });
  EXPECT_EQ(half, cloud2({{1, 1}, {2, 2}}));
}

TEST(Pushforward, NamesOffendingParticle) {
  const auto m = cloud2({{1, 1}, {0, 1}, {2, 2}});
  try {
    pushforward(m, [](const Vector& x) { return Vector(x.cwiseInverse()); });
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("particle 1"), std::string::npos) << e.what();
  }
}

TEST(Pushforward, IdentityComposeAndAffineMean) {
  const auto m = random_cloud(200, 3, 5);
  EXPECT_EQ(pushforward(m, [](const Vector& x) { return x; }, 3), m);
  auto f = [](const Vector& x) { return Vector(2.0 * x + Vector::Ones(3)); };
  auto g = [](const Vector& x) { return Vector(x.cwiseProduct(x)); };
  EXPECT_EQ(pushforward(pushforward(m, f), g), pushforward(m, [&](const Vector& x) { return g(f(x)); }));

  Matrix a(3, 3);
  a << 1, 2, 0, -1, 0.5, 3, 0, 0, 2;
  const Vector b = Vector::LinSpaced(3, -1, 1);
  const Vector lhs = mean(pushforward(m, [&](const Vector& x) { return Vector(a * x + b); }));
  const Vector rhs = a * mean(m) + b;
  EXPECT_LE((lhs - rhs).norm(), 1e-10 * std::max(1.0, rhs.norm()));
}

TEST(Pushforward, WorkerCountDoesNotChangeResult) {
  const auto m = random_cloud(1001, 2, 9);
  auto f = [](const Vector& x) { return Vector(x.array().sin()); };
  EXPECT_EQ(pushforward(m, f, 1), pushforward(m, f, 7));
}

TEST(Moments, MeanExamples) {
  EXPECT_EQ(mean(cloud2({{0, 0}, {2, 2}})), v2(1, 1));
  EXPECT_EQ(mean(ParticleMeasure(1, {5.0}))[0], 5.0);
  EXPECT_EQ(mean(cloud2({{1, 0}, {0, 1}, {-1, 0}, {0, -1}})), v2(0, 0));
}

TEST(Moments, CovarianceExamples) {
  EXPECT_EQ(covariance(cloud2({{3, 7}})), Matrix::Zero(2, 2));
  EXPECT_DOUBLE_EQ(covariance(ParticleMeasure(1, {-1.0, 1.0}))(0, 0), 1.0);
  Matrix expected(2, 2);
  expected << 0.25, 0.25, 0.25, 0.25;
  EXPECT_LE((covariance(cloud2({{0, 0}, {1, 1}})) - expected).norm(), 1e-15);
}

TEST(Moments, VarianceOfSumExamples) {
  EXPECT_EQ(variance_of_sum(cloud2({{4, -2}})), 0.0);
  EXPECT_DOUBLE_EQ(variance_of_sum(cloud2({{0, 0}, {1, 1}})), 1.0);
  EXPECT_EQ(variance_of_sum(cloud2({{1, -1}, {-1, 1}})), 0.0);
}

TEST(Moments, VarianceOfSumMatchesQuadraticForm) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto m = random_cloud(50, 3, s);
    const Vector one = Vector::Ones(3);
    const double q = one.dot(covariance(m) * one);
    const double v = variance_of_sum(m);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(std::abs(v - q), 1e-10 * std::max(1.0, q));
  }
}

TEST(Moments, CovarianceIsSymmetricPsd) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Matrix c = covariance(random_cloud(7, 4, s + 100));
    EXPECT_EQ(c, c.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(c);
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-12);
  }
}

TEST(Percentile, NearestRank) {
  std::vector<double> c;
  for (int i = 10; i >= 1; --i) c.push_back(i);
  const ParticleMeasure m(1, c);
  auto g = [](const Vector& x) { return x[0]; };
  EXPECT_EQ(percentile(m, g, 0.9), 9.0);
  EXPECT_EQ(percentile(m, g, 0.1), 1.0);
  EXPECT_EQ(percentile(m, g, 0.0), 1.0);
  EXPECT_EQ(percentile(m, g, 1.0), 10.0);
  EXPECT_EQ(percentile(m, g, 0.55), 6.0);
  EXPECT_EQ(percentile(ParticleMeasure(1, {3.5}), g, 0.37), 3.5);
}

TEST(Percentile, MonotoneInP) {
  const auto m = random_cloud(101, 2, 4);
  auto g = [](const Vector& x) { return x.squaredNorm(); };
  double prev = -INFINITY;
  for (int i = 0; i <= 100; ++i) {
    const double q = percentile(m, g, i / 100.0);
    EXPECT_GE(q, prev);
    prev = q;
  }
}

TEST(InitUniformBox, DegenerateBox) {
  const auto m = init_uniform_box(v2(0.3, 0.3), v2(0.3, 0.3), 10, 1);
  for (std::size_t i = 0; i < m.size(); ++i) EXPECT_EQ(m.point_vector(i), v2(0.3, 0.3));
}

TEST(InitUniformBox, MomentsAndBounds) {
  const double hi = 8.0 / 60.0;
  const double sigma = hi / std::sqrt(12.0);
  for (std::uint64_t seed : {0ULL, 1ULL, 77ULL}) {
    const auto m = init_uniform_box(Vector::Zero(2), Vector::Constant(2, hi), 1000, seed);
    for (double v : m.coords()) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, hi);
    }
    const Vector mu = mean(m);
    for (int j = 0; j < 2; ++j) EXPECT_LE(std::abs(mu[j] - 4.0 / 60.0), 4.0 * sigma / std::sqrt(1000.0));
  }
}

TEST(InitUniformBox, DeterministicAndValidated) {
  const auto a = init_uniform_box(v2(-1, 0), v2(1, 2), 64, 42);
  const auto b = init_uniform_box(v2(-1, 0), v2(1, 2), 64, 42);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, init_uniform_box(v2(-1, 0), v2(1, 2), 64, 43));
  EXPECT_THROW(init_uniform_box(v2(1, 0), v2(0, 1), 5, 0), Error);
  EXPECT_THROW(init_uniform_box(v2(0, 0), v2(1, 1), 0, 0), Error);
}

TEST(L2Norm, Definition) {
  const auto m = cloud2({{3, 4}, {0, 0}});
  EXPECT_DOUBLE_EQ(l2_norm(m, [](const Vector& x) { return x.norm(); }), std::sqrt(12.5));
}

}  // namespace
}  // namespace swgf
