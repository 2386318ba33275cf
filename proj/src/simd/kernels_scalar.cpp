#include "swgf/simd/kernels.hpp"

namespace swgf::simd::detail {
namespace {

void sub_scaled(std::span<const double> x, std::span<const double> g, double tau, std::span<double> out) {
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = x[k] - tau * g[k];
}

void clamp_lower_zero(std::span<double> v) {
  for (double& e : v) e = 0.0 > e ? 0.0 : e;
}

void clamp_box(std::span<double> v, std::span<const double> lo, std::span<const double> hi) {
  const std::size_t dim = lo.size();
  for (std::size_t k = 0; k < v.size(); ++k) {
    const std::size_t j = k % dim;
    double r = lo[j] > v[k] ? lo[j] : v[k];
    v[k] = hi[j] < r ? hi[j] : r;
  }
}

void affine_field(std::span<const double> x, std::span<const double> a, std::span<const double> c,
                  std::span<double> out) {
  const std::size_t dim = c.size();
  const std::size_t n = x.size() / dim;
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = x.data() + i * dim;
    for (std::size_t r = 0; r < dim; ++r) {
      const double* row = a.data() + r * dim;
      double acc = row[0] * xi[0];
      for (std::size_t j = 1; j < dim; ++j) acc = acc + row[j] * xi[j];
      out[i * dim + r] = acc - c[r];
    }
  }
}

void sq_dist_row(std::span<const double> xi, std::span<const double> y_soa, std::span<double> out) {
  const std::size_t n = out.size();
  for (std::size_t j = 0; j < n; ++j) {
    const double diff = xi[0] - y_soa[j];
    out[j] = diff * diff;
  }
  for (std::size_t k = 1; k < xi.size(); ++k) {
    const double* plane = y_soa.data() + k * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double diff = xi[k] - plane[j];
      out[j] = out[j] + diff * diff;
    }
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{Isa::kScalar, &sub_scaled, &clamp_lower_zero, &clamp_box, &affine_field, &sq_dist_row};
  return table;
}

}  // namespace swgf::simd::detail
