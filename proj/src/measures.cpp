#include "swgf/measures.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "swgf/error.hpp"
#include "swgf/parallel.hpp"
#include "swgf/rng.hpp"

namespace swgf {

ParticleMeasure::ParticleMeasure(std::size_t dim, std::vector<double> coords) : dim_(dim), coords_(std::move(coords)) {
  require(dim_ >= 1, "particle measure: dimension must be at least 1");
  require(!coords_.empty(), "particle measure: needs at least one particle");
  require(coords_.size() % dim_ == 0, "particle measure: coordinate count is not a multiple of the dimension");
  for (std::size_t k = 0; k < coords_.size(); ++k) {
    if (!std::isfinite(coords_[k]))
      fail(ErrorKind::kInvalidArgument,
           "particle measure: non-finite coordinate at particle " + std::to_string(k / dim_));
  }
}

ParticleMeasure ParticleMeasure::from_points(std::span<const Vector> points) {
  require(!points.empty(), "particle measure: needs at least one particle");
  const auto dim = static_cast<std::size_t>(points.front().size());
  std::vector<double> coords;
  coords.reserve(points.size() * dim);
  for (const Vector& p : points) {
    require(static_cast<std::size_t>(p.size()) == dim, "particle measure: points of different dimension");
    coords.insert(coords.end(), p.data(), p.data() + dim);
  }
  return ParticleMeasure(dim, std::move(coords));
}

ParticleMeasure ParticleMeasure::dirac(const Vector& x, std::size_t copies) {
  require(copies >= 1, "dirac: copies must be at least 1");
  std::vector<double> coords;
  coords.reserve(copies * x.size());
  for (std::size_t i = 0; i < copies; ++i) coords.insert(coords.end(), x.data(), x.data() + x.size());
  return ParticleMeasure(static_cast<std::size_t>(x.size()), std::move(coords));
}

Vector ParticleMeasure::point_vector(std::size_t i) const {
  return Eigen::Map<const Vector>(coords_.data() + i * dim_, static_cast<Eigen::Index>(dim_));
}

ParticleMeasure ParticleMeasure::subset(std::span<const std::size_t> indices) const {
  std::vector<double> coords;
  coords.reserve(indices.size() * dim_);
  for (std::size_t i : indices) {
    require(i < size(), "subset: particle index out of range");
    auto p = point(i);
    coords.insert(coords.end(), p.begin(), p.end());
  }
  return ParticleMeasure(dim_, std::move(coords));
}

ParticleMeasure pushforward(const ParticleMeasure& m, const PointMap& f, unsigned workers) {
  const std::size_t n = m.size();
  const std::size_t d = m.dim();
  std::vector<double> out(n * d);
  parallel_for(n, workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const Vector y = f(m.point_vector(i));
      if (static_cast<std::size_t>(y.size()) != d)
        fail(ErrorKind::kInvalidArgument, "pushforward: map changed the dimension at particle " + std::to_string(i));
      if (!y.allFinite())
        fail(ErrorKind::kInvalidArgument, "pushforward: invalid map, non-finite output at particle " + std::to_string(i));
      std::copy(y.data(), y.data() + d, out.begin() + static_cast<std::ptrdiff_t>(i * d));
    }
  });
  return ParticleMeasure(d, std::move(out));
}

Vector mean(const ParticleMeasure& m) {
  const std::size_t d = m.dim();
  Vector sum = Vector::Zero(static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < m.size(); ++i) {
    auto p = m.point(i);
    for (std::size_t j = 0; j < d; ++j) sum[static_cast<Eigen::Index>(j)] += p[j];
  }
  return sum / static_cast<double>(m.size());
}

Matrix covariance(const ParticleMeasure& m) {
  const auto d = static_cast<Eigen::Index>(m.dim());
  const Vector mu = mean(m);
  Matrix cov = Matrix::Zero(d, d);
  for (std::size_t i = 0; i < m.size(); ++i) {
    const Vector c = m.point_vector(i) - mu;
    cov.noalias() += c * c.transpose();
  }
  cov /= static_cast<double>(m.size());
  return 0.5 * (cov + cov.transpose());
}

double variance_of_sum(const ParticleMeasure& m) {
  const std::size_t n = m.size();
  std::vector<double> s(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto p = m.point(i);
    double acc = 0.0;
    for (double v : p) acc += v;
    s[i] = acc;
    total += acc;
  }
  const double avg = total / static_cast<double>(n);
  double var = 0.0;
  for (double v : s) var += (v - avg) * (v - avg);
  return var / static_cast<double>(n);
}

double nearest_rank(std::vector<double> values, double p) {
  require(!values.empty(), "percentile: empty sample");
  require(p >= 0.0 && p <= 1.0, "percentile: p must lie in [0, 1]");
  const auto n = values.size();
  // The small offset keeps p*N that is an integer up to rounding (0.9*10) on
  // that integer.
  auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(n) - 1e-9));
  rank = std::clamp<std::size_t>(rank, 1, n);
  auto nth = values.begin() + static_cast<std::ptrdiff_t>(rank - 1);
  std::nth_element(values.begin(), nth, values.end());
  return *nth;
}

double percentile(const ParticleMeasure& m, const ScalarMap& g, double p) {
  std::vector<double> values(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) values[i] = g(m.point_vector(i));
  return nearest_rank(std::move(values), p);
}

ParticleMeasure init_uniform_box(const Vector& lo, const Vector& hi, std::size_t n, std::uint64_t seed) {
  require(lo.size() == hi.size() && lo.size() >= 1, "init_uniform_box: lo and hi must have the same positive dimension");
  require(n >= 1, "init_uniform_box: need at least one particle");
  for (Eigen::Index j = 0; j < lo.size(); ++j) {
    if (!(lo[j] <= hi[j]))
      fail(ErrorKind::kInvalidArgument, "init_uniform_box: invalid box, lo > hi in coordinate " + std::to_string(j));
  }
  const auto d = static_cast<std::size_t>(lo.size());
  std::vector<double> coords(n * d);
  for (std::size_t i = 0; i < n; ++i) {
    CounterRng rng(seed, StreamPurpose::kInit, i);
    for (std::size_t j = 0; j < d; ++j) {
      const auto e = static_cast<Eigen::Index>(j);
      coords[i * d + j] = lo[e] + (hi[e] - lo[e]) * rng.uniform();
    }
  }
  return ParticleMeasure(d, std::move(coords));
}

double l2_norm(const ParticleMeasure& m, const ScalarMap& phi) {
  double acc = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double v = phi(m.point_vector(i));
    acc += v * v;
  }
  return std::sqrt(acc / static_cast<double>(m.size()));
}

}  // namespace swgf
