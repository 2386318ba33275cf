#include "swgf/functionals.hpp"

#include <cmath>
#include <string>

#include "swgf/error.hpp"
#include "swgf/parallel.hpp"
#include "swgf/simd/kernels.hpp"

namespace swgf {

GradientField::GradientField(AffineField affine)
    : rule_([a = affine.a, c = affine.c](const Vector& theta) -> Vector { return a * theta - c; }),
      affine_(std::move(affine)) {}

std::vector<double> GradientField::evaluate(const ParticleMeasure& m, unsigned workers) const {
  const std::size_t n = m.size();
  const std::size_t d = m.dim();
  std::vector<double> out(n * d);
  if (affine_) {
    require(static_cast<std::size_t>(affine_->c.size()) == d, "gradient field: dimension mismatch");
    // Row-major copy of A for the kernel (Eigen stores column-major).
    std::vector<double> a(d * d);
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t j = 0; j < d; ++j)
        a[r * d + j] = affine_->a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j));
    const auto& kernels = simd::active_kernels();
    const std::span<const double> c(affine_->c.data(), d);
    parallel_for(n, workers, [&](std::size_t begin, std::size_t end) {
      kernels.affine_field(m.coords().subspan(begin * d, (end - begin) * d), a, c,
                           std::span<double>(out).subspan(begin * d, (end - begin) * d));
    });
    return out;
  }
  parallel_for(n, workers, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const Vector g = rule_(m.point_vector(i));
      require(static_cast<std::size_t>(g.size()) == d, "gradient field: dimension mismatch");
      std::copy(g.data(), g.data() + d, out.begin() + static_cast<std::ptrdiff_t>(i * d));
    }
  });
  return out;
}

StreamingLSObjective::StreamingLSObjective(Matrix w_, double rho_, std::optional<Vector> theta_star_, double sigma_w2_)
    : w(std::move(w_)), rho(rho_), theta_star(std::move(theta_star_)), sigma_w2(sigma_w2_) {
  require(w.rows() >= 1 && w.rows() == w.cols(), "objective: W must be a nonempty square matrix");
  require(w.allFinite(), "objective: W must be finite");
  require(std::isfinite(rho) && rho >= 0.0, "objective: rho must be finite and nonnegative");
  require(std::isfinite(sigma_w2) && sigma_w2 >= 0.0, "objective: sigma_w2 must be finite and nonnegative");
  if (theta_star)
    require(theta_star->size() == w.rows() && theta_star->allFinite(), "objective: theta_star dimension mismatch");
  const Eigen::JacobiSVD<Matrix> svd(w);
  sigma_max_ = svd.singularValues().maxCoeff();
  sigma_min_ = svd.singularValues().minCoeff();
  if (!(sigma_min_ > 1e-12 * std::max(1.0, sigma_max_)))
    fail(ErrorKind::kNumerical, "objective: process matrix W must be invertible (smallest singular value " +
                                    std::to_string(sigma_min_) + ")");
}

GradientField exact_gradient(const StreamingLSObjective& obj, const ParticleMeasure& m) {
  if (!obj.theta_star)
    fail(ErrorKind::kInvalidArgument, "exact_gradient: theta_star is unknown, only stochastic gradients are available");
  require(m.dim() == obj.dim(), "exact_gradient: dimension mismatch");
  const auto d = static_cast<Eigen::Index>(obj.dim());
  const Matrix wtw = obj.w.transpose() * obj.w;
  AffineField field{wtw + obj.rho * Matrix::Identity(d, d), wtw * *obj.theta_star + obj.rho * mean(m)};
  return GradientField(std::move(field));
}

Vector stochastic_gradient(const StreamingLSObjective& obj, const Vector& theta, const Vector& y_hat,
                           const Vector& mu_mean) {
  const auto d = static_cast<Eigen::Index>(obj.dim());
  if (theta.size() != d || y_hat.size() != d || mu_mean.size() != d)
    fail(ErrorKind::kInvalidArgument, "stochastic_gradient: dimension mismatch");
  require(y_hat.allFinite(), "stochastic_gradient: observation must be finite");
  return obj.w.transpose() * (obj.w * theta - y_hat) + obj.rho * (theta - mu_mean);
}

GradientField stochastic_gradient_field(const StreamingLSObjective& obj, const Vector& y_hat, const Vector& mu_mean) {
  const auto d = static_cast<Eigen::Index>(obj.dim());
  if (y_hat.size() != d || mu_mean.size() != d)
    fail(ErrorKind::kInvalidArgument, "stochastic_gradient: dimension mismatch");
  require(y_hat.allFinite(), "stochastic_gradient: observation must be finite");
  // Same value as stochastic_gradient, regrouped as (W^T W + rho I) theta - (W^T y + rho mean).
  AffineField field{obj.w.transpose() * obj.w + obj.rho * Matrix::Identity(d, d),
                    obj.w.transpose() * y_hat + obj.rho * mu_mean};
  return GradientField(std::move(field));
}

Vector perturbed_gradient(const Vector& base, double noise_std, CounterRng& stream) {
  require(noise_std >= 0.0, "perturbed_gradient: noise_std must be nonnegative");
  if (noise_std == 0.0) return base;
  Vector out = base;
  for (Eigen::Index j = 0; j < out.size(); ++j) out[j] += noise_std * stream.normal();
  return out;
}

double evaluate_objective(const StreamingLSObjective& obj, const ParticleMeasure& m) {
  if (!obj.theta_star) fail(ErrorKind::kInvalidArgument, "evaluate_objective: theta_star is unknown");
  require(m.dim() == obj.dim(), "evaluate_objective: dimension mismatch");
  double data = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) data += (obj.w * (m.point_vector(i) - *obj.theta_star)).squaredNorm();
  data /= static_cast<double>(m.size());
  return 0.5 * data + 0.5 * obj.sigma_w2 + 0.5 * obj.rho * variance_of_sum(m);
}

GradientField generic_gradient_expected_value(std::function<Vector(const Vector&)> v_grad) {
  return GradientField(std::move(v_grad));
}

GradientField generic_gradient_variance(const ParticleMeasure& m, std::size_t i) {
  if (i >= m.dim())
    fail(ErrorKind::kInvalidArgument, "generic_gradient_variance: coordinate " + std::to_string(i) +
                                          " out of range for dimension " + std::to_string(m.dim()));
  const double centre = mean(m)[static_cast<Eigen::Index>(i)];
  const auto d = static_cast<Eigen::Index>(m.dim());
  const auto idx = static_cast<Eigen::Index>(i);
  return GradientField([centre, d, idx](const Vector& theta) -> Vector {
    Vector g = Vector::Zero(d);
    g[idx] = 2.0 * (theta[idx] - centre);
    return g;
  });
}

}  // namespace swgf
