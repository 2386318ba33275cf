#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace swgf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Equal-weight empirical probability measure (1/N) sum_i delta_{x_i} on R^d.
///
/// Points are stored row-major (particle i occupies coords[i*d, (i+1)*d)).
/// Every coordinate is finite and the measure is immutable once built.
class ParticleMeasure {
 public:
  /// Throws kInvalidArgument if dim == 0, coords is empty or not a multiple of
  /// dim, or any coordinate is non-finite.
  ParticleMeasure(std::size_t dim, std::vector<double> coords);

  static ParticleMeasure from_points(std::span<const Vector> points);

  /// `copies` identical particles at x (a Dirac measure with N = copies).
  static ParticleMeasure dirac(const Vector& x, std::size_t copies = 1);

  std::size_t size() const { return coords_.size() / dim_; }
  std::size_t dim() const { return dim_; }

  std::span<const double> point(std::size_t i) const { return {coords_.data() + i * dim_, dim_}; }
  Vector point_vector(std::size_t i) const;

  std::span<const double> coords() const { return coords_; }

  /// Particles with the given indices, in the given order.
  ParticleMeasure subset(std::span<const std::size_t> indices) const;

  friend bool operator==(const ParticleMeasure&, const ParticleMeasure&) = default;

 private:
  std::size_t dim_;
  std::vector<double> coords_;
};

using PointMap = std::function<Vector(const Vector&)>;
using ScalarMap = std::function<double(const Vector&)>;

/// (f)_# m: applies f to every particle, order preserved. A non-finite output
/// raises kInvalidArgument naming the particle index.
ParticleMeasure pushforward(const ParticleMeasure& m, const PointMap& f, unsigned workers = 1);

Vector mean(const ParticleMeasure& m);

/// Population covariance (divisor N).
Matrix covariance(const ParticleMeasure& m);

/// Population variance of s(x) = x_1 + ... + x_d.
double variance_of_sum(const ParticleMeasure& m);

/// Nearest-rank p-quantile of {g(x_i)}: the ceil(p*N)-th smallest value
/// (1-based); p = 0 gives the minimum.
double percentile(const ParticleMeasure& m, const ScalarMap& g, double p);

/// Nearest-rank quantile of an unsorted sample (copied and partially sorted).
double nearest_rank(std::vector<double> values, double p);

/// N i.i.d. uniform draws in the box [lo, hi]; reproducible per seed.
ParticleMeasure init_uniform_box(const Vector& lo, const Vector& hi, std::size_t n, std::uint64_t seed);

/// Empirical L2 norm sqrt((1/N) sum phi(x_i)^2).
double l2_norm(const ParticleMeasure& m, const ScalarMap& phi);

}  // namespace swgf
