#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "swgf/measures.hpp"
#include "swgf/rng.hpp"

namespace swgf {

/// Field theta -> A theta - c. All gradients of the streaming least-squares
/// objective have this form, which lets the flow evaluate them with the SIMD
/// kernels.
struct AffineField {
  Matrix a;
  Vector c;
};

/// Vector field on R^d representing a Wasserstein gradient. It captures any
/// measure statistics it needs (e.g. the mean) when it is built.
class GradientField {
 public:
  explicit GradientField(std::function<Vector(const Vector&)> rule) : rule_(std::move(rule)) {}
  explicit GradientField(AffineField affine);

  Vector operator()(const Vector& theta) const { return rule_(theta); }

  const std::optional<AffineField>& affine() const { return affine_; }

  /// Values at every particle, row-major N x d.
  std::vector<double> evaluate(const ParticleMeasure& m, unsigned workers = 1) const;

 private:
  std::function<Vector(const Vector&)> rule_;
  std::optional<AffineField> affine_;
};

/// Streaming least-squares estimation functional
///   J(mu) = 1/2 E_mu E_w |W theta* + w - W theta|^2 + rho/2 Var_mu[theta_1 + ... + theta_d]
/// for observations y = W theta* + w with zero-mean noise w.
///
/// sigma_w2 is the total noise second moment E|w|^2 (summed over coordinates).
/// theta_star is only known in simulation; without it the exact gradient and
/// the objective value are unavailable and only stochastic gradients can be
/// formed.
struct StreamingLSObjective {
  Matrix w;
  double rho = 0.0;
  std::optional<Vector> theta_star;
  double sigma_w2 = 0.0;

  StreamingLSObjective(Matrix w, double rho, std::optional<Vector> theta_star, double sigma_w2);

  std::size_t dim() const { return static_cast<std::size_t>(w.rows()); }
  double sigma_min() const { return sigma_min_; }
  double sigma_max() const { return sigma_max_; }

 private:
  double sigma_min_ = 0.0;
  double sigma_max_ = 0.0;
};

/// W^T W (theta - theta*) + rho (theta - E_mu[theta]), with E_mu[theta]
/// frozen at call time.
GradientField exact_gradient(const StreamingLSObjective& obj, const ParticleMeasure& m);

/// Unbiased single-observation estimate W^T (W theta - y_hat) + rho (theta - mu_mean).
Vector stochastic_gradient(const StreamingLSObjective& obj, const Vector& theta, const Vector& y_hat,
                           const Vector& mu_mean);

/// The stochastic gradient as a field over all particles for one observation.
GradientField stochastic_gradient_field(const StreamingLSObjective& obj, const Vector& y_hat, const Vector& mu_mean);

/// base + z with z_j ~ N(0, noise_std^2) i.i.d. drawn from `stream`.
Vector perturbed_gradient(const Vector& base, double noise_std, CounterRng& stream);

/// J(m) = 1/2 E_m |W (theta - theta*)|^2 + sigma_w2 / 2 + rho/2 variance_of_sum(m).
double evaluate_objective(const StreamingLSObjective& obj, const ParticleMeasure& m);

/// Gradient of mu -> E_mu[V] is grad V.
GradientField generic_gradient_expected_value(std::function<Vector(const Vector&)> v_grad);

/// Gradient of mu -> Var_mu[x_i] is 2 (x_i - E_mu[x_i]) e_i.
GradientField generic_gradient_variance(const ParticleMeasure& m, std::size_t i);

}  // namespace swgf
