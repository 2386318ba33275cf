#pragma once

#include <span>
#include <string>
#include <variant>

#include "swgf/measures.hpp"

namespace swgf {

/// Closed convex set with a closed-form Euclidean projection.
class ConvexSet {
 public:
  struct Box {
    Vector lo, hi;
  };
  struct NonnegOrthant {
    std::size_t dim;
  };
  /// {x : a^T x <= b}
  struct Halfspace {
    Vector a;
    double b;
  };
  struct Ball {
    Vector center;
    double radius;
  };
  struct Whole {
    std::size_t dim;
  };
  using Variant = std::variant<Box, NonnegOrthant, Halfspace, Ball, Whole>;

  static ConvexSet box(Vector lo, Vector hi);
  static ConvexSet nonneg_orthant(std::size_t dim);
  static ConvexSet halfspace(Vector a, double b);
  static ConvexSet ball(Vector center, double radius);
  static ConvexSet whole(std::size_t dim);

  std::size_t dim() const;
  const Variant& variant() const { return set_; }

  /// Tag used in configuration files: box, nonneg_orthant, halfspace, ball, all.
  std::string kind() const;

  /// Membership up to an absolute slack `tol` on the defining inequalities.
  bool contains(std::span<const double> x, double tol = 1e-12) const;

  /// Nearest point of the set; points already inside are returned unchanged.
  Vector project_point(const Vector& x) const;

  /// Projects row-major points in place, using the SIMD kernels where the set
  /// is separable per coordinate (orthant, box).
  void project_coords(std::span<double> coords) const;

 private:
  explicit ConvexSet(Variant v) : set_(std::move(v)) {}
  void project_in_place(std::span<double> x) const;

  Variant set_;
};

/// Wasserstein projection onto measures supported in S, realized by
/// projecting each particle.
ParticleMeasure project_measure(const ConvexSet& set, const ParticleMeasure& m);

}  // namespace swgf
