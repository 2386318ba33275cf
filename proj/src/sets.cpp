#include "swgf/sets.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "swgf/error.hpp"
#include "swgf/simd/kernels.hpp"

namespace swgf {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

// Points violating a constraint by no more than a few ulps of the involved
// magnitudes count as inside. This makes projection exactly idempotent even
// though the projected point of a ball or halfspace is only accurate to
// rounding.
constexpr double kRoundingSlack = 8.0 * std::numeric_limits<double>::epsilon();

}  // namespace

ConvexSet ConvexSet::box(Vector lo, Vector hi) {
  require(lo.size() >= 1 && lo.size() == hi.size(), "box: lo and hi must have the same positive dimension");
  require(lo.allFinite() && hi.allFinite(), "box: bounds must be finite");
  require((lo.array() <= hi.array()).all(), "box: lo must not exceed hi");
  return ConvexSet(Box{std::move(lo), std::move(hi)});
}

ConvexSet ConvexSet::nonneg_orthant(std::size_t dim) {
  require(dim >= 1, "nonneg_orthant: dimension must be at least 1");
  return ConvexSet(NonnegOrthant{dim});
}

ConvexSet ConvexSet::halfspace(Vector a, double b) {
  require(a.size() >= 1 && a.allFinite() && std::isfinite(b), "halfspace: finite normal and offset required");
  require(a.squaredNorm() > 0.0, "halfspace: normal vector must be nonzero");
  return ConvexSet(Halfspace{std::move(a), b});
}

ConvexSet ConvexSet::ball(Vector center, double radius) {
  require(center.size() >= 1 && center.allFinite(), "ball: finite center required");
  require(std::isfinite(radius) && radius >= 0.0, "ball: radius must be finite and nonnegative");
  return ConvexSet(Ball{std::move(center), radius});
}

ConvexSet ConvexSet::whole(std::size_t dim) {
  require(dim >= 1, "all: dimension must be at least 1");
  return ConvexSet(Whole{dim});
}

std::size_t ConvexSet::dim() const {
  return std::visit(overloaded{
                        [](const Box& s) { return static_cast<std::size_t>(s.lo.size()); },
                        [](const NonnegOrthant& s) { return s.dim; },
                        [](const Halfspace& s) { return static_cast<std::size_t>(s.a.size()); },
                        [](const Ball& s) { return static_cast<std::size_t>(s.center.size()); },
                        [](const Whole& s) { return s.dim; },
                    },
                    set_);
}

std::string ConvexSet::kind() const {
  return std::visit(overloaded{
                        [](const Box&) { return std::string("box"); },
                        [](const NonnegOrthant&) { return std::string("nonneg_orthant"); },
                        [](const Halfspace&) { return std::string("halfspace"); },
                        [](const Ball&) { return std::string("ball"); },
                        [](const Whole&) { return std::string("all"); },
                    },
                    set_);
}

bool ConvexSet::contains(std::span<const double> x, double tol) const {
  if (x.size() != dim()) return false;
  const Eigen::Map<const Vector> v(x.data(), static_cast<Eigen::Index>(x.size()));
  return std::visit(overloaded{
                        [&](const Box& s) {
                          return ((v - s.lo).array() >= -tol).all() && ((s.hi - v).array() >= -tol).all();
                        },
                        [&](const NonnegOrthant&) { return (v.array() >= -tol).all(); },
                        [&](const Halfspace& s) { return s.a.dot(v) - s.b <= tol; },
                        [&](const Ball& s) { return (v - s.center).norm() <= s.radius + tol; },
                        [&](const Whole&) { return true; },
                    },
                    set_);
}

void ConvexSet::project_in_place(std::span<double> x) const {
  Eigen::Map<Vector> v(x.data(), static_cast<Eigen::Index>(x.size()));
  std::visit(overloaded{
                 [&](const Box& s) {
                   for (Eigen::Index j = 0; j < v.size(); ++j) {
                     double r = s.lo[j] > v[j] ? s.lo[j] : v[j];
                     v[j] = s.hi[j] < r ? s.hi[j] : r;
                   }
                 },
                 [&](const NonnegOrthant&) {
                   for (Eigen::Index j = 0; j < v.size(); ++j) v[j] = 0.0 > v[j] ? 0.0 : v[j];
                 },
                 [&](const Halfspace& s) {
                   // A far point can land just outside the slack after one
                   // correction; a few more make the result a fixed point.
                   for (int pass = 0; pass < 8; ++pass) {
                     const double excess = s.a.dot(v) - s.b;
                     const double scale = (s.a.array() * v.array()).abs().sum() + std::abs(s.b);
                     if (excess <= kRoundingSlack * scale) return;
                     v -= (excess / s.a.squaredNorm()) * s.a;
                   }
                 },
                 [&](const Ball& s) {
                   const Vector offset = v - s.center;
                   const double dist = offset.norm();
                   if (dist <= s.radius * (1.0 + kRoundingSlack)) return;
                   v = s.center + (s.radius / dist) * offset;
                 },
                 [&](const Whole&) {},
             },
             set_);
}

Vector ConvexSet::project_point(const Vector& x) const {
  if (static_cast<std::size_t>(x.size()) != dim())
    fail(ErrorKind::kInvalidArgument, "project_point: dimension mismatch (point " + std::to_string(x.size()) +
                                          ", set " + std::to_string(dim()) + ")");
  Vector y = x;
  project_in_place({y.data(), static_cast<std::size_t>(y.size())});
  return y;
}

void ConvexSet::project_coords(std::span<double> coords) const {
  const std::size_t d = dim();
  require(coords.size() % d == 0, "project_coords: coordinate count is not a multiple of the set dimension");
  const auto& kernels = simd::active_kernels();
  if (std::holds_alternative<NonnegOrthant>(set_)) {
    kernels.clamp_lower_zero(coords);
  } else if (const auto* box = std::get_if<Box>(&set_)) {
    kernels.clamp_box(coords, {box->lo.data(), d}, {box->hi.data(), d});
  } else if (!std::holds_alternative<Whole>(set_)) {
    for (std::size_t k = 0; k < coords.size(); k += d) project_in_place(coords.subspan(k, d));
  }
}

ParticleMeasure project_measure(const ConvexSet& set, const ParticleMeasure& m) {
  if (m.dim() != set.dim())
    fail(ErrorKind::kInvalidArgument, "project_measure: dimension mismatch (measure " + std::to_string(m.dim()) +
                                          ", set " + std::to_string(set.dim()) + ")");
  std::vector<double> coords(m.coords().begin(), m.coords().end());
  set.project_coords(coords);
  return ParticleMeasure(m.dim(), std::move(coords));
}

}  // namespace swgf
