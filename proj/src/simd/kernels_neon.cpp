// AArch64 only. NEON is part of the base ISA there, so no runtime check is needed.

#include <arm_neon.h>

#include "swgf/simd/kernels.hpp"

namespace swgf::simd::detail {
namespace {

void sub_scaled(std::span<const double> x, std::span<const double> g, double tau, std::span<double> out) {
  const std::size_t n = out.size();
  const float64x2_t vtau = vdupq_n_f64(tau);
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) {
    vst1q_f64(out.data() + k, vsubq_f64(vld1q_f64(x.data() + k), vmulq_f64(vtau, vld1q_f64(g.data() + k))));
  }
  for (; k < n; ++k) out[k] = x[k] - tau * g[k];
}

// vmaxq_f64 differs from the reference on signed zeros, so select explicitly.
inline float64x2_t select_greater(float64x2_t bound, float64x2_t v) {
  return vbslq_f64(vcgtq_f64(bound, v), bound, v);
}

inline float64x2_t select_less(float64x2_t bound, float64x2_t v) {
  return vbslq_f64(vcltq_f64(bound, v), bound, v);
}

void clamp_lower_zero(std::span<double> v) {
  const std::size_t n = v.size();
  const float64x2_t zero = vdupq_n_f64(0.0);
  std::size_t k = 0;
  for (; k + 2 <= n; k += 2) vst1q_f64(v.data() + k, select_greater(zero, vld1q_f64(v.data() + k)));
  for (; k < n; ++k) v[k] = 0.0 > v[k] ? 0.0 : v[k];
}

void clamp_box(std::span<double> v, std::span<const double> lo, std::span<const double> hi) {
  const std::size_t dim = lo.size();
  const std::size_t n = v.size();
  std::size_t k = 0;
  if (2 % dim == 0) {
    const double lo2[2] = {lo[0], lo[1 % dim]};
    const double hi2[2] = {hi[0], hi[1 % dim]};
    const float64x2_t vlo = vld1q_f64(lo2);
    const float64x2_t vhi = vld1q_f64(hi2);
    for (; k + 2 <= n; k += 2) {
      vst1q_f64(v.data() + k, select_less(vhi, select_greater(vlo, vld1q_f64(v.data() + k))));
    }
  }
  for (; k < n; ++k) {
    const std::size_t j = k % dim;
    double r = lo[j] > v[k] ? lo[j] : v[k];
    v[k] = hi[j] < r ? hi[j] : r;
  }
}

void affine_field(std::span<const double> x, std::span<const double> a, std::span<const double> c,
                  std::span<double> out) {
  if (c.size() != 2) {
    scalar_table().affine_field(x, a, c, out);
    return;
  }
  const double col0_init[2] = {a[0], a[2]};
  const double col1_init[2] = {a[1], a[3]};
  const float64x2_t col0 = vld1q_f64(col0_init);
  const float64x2_t col1 = vld1q_f64(col1_init);
  const float64x2_t vc = vld1q_f64(c.data());
  for (std::size_t k = 0; k + 2 <= x.size(); k += 2) {
    const float64x2_t first = vdupq_n_f64(x[k]);
    const float64x2_t second = vdupq_n_f64(x[k + 1]);
    const float64x2_t acc = vaddq_f64(vmulq_f64(col0, first), vmulq_f64(col1, second));
    vst1q_f64(out.data() + k, vsubq_f64(acc, vc));
  }
}

void sq_dist_row(std::span<const double> xi, std::span<const double> y_soa, std::span<double> out) {
  const std::size_t n = out.size();
  for (std::size_t k = 0; k < xi.size(); ++k) {
    const double* plane = y_soa.data() + k * n;
    const float64x2_t vx = vdupq_n_f64(xi[k]);
    std::size_t j = 0;
    for (; j + 2 <= n; j += 2) {
      const float64x2_t diff = vsubq_f64(vx, vld1q_f64(plane + j));
      const float64x2_t sq = vmulq_f64(diff, diff);
      vst1q_f64(out.data() + j, k == 0 ? sq : vaddq_f64(vld1q_f64(out.data() + j), sq));
    }
    for (; j < n; ++j) {
      const double diff = xi[k] - plane[j];
      out[j] = k == 0 ? diff * diff : out[j] + diff * diff;
    }
  }
}

}  // namespace

const KernelTable* neon_table() {
  static const KernelTable table{Isa::kNeon, &sub_scaled, &clamp_lower_zero, &clamp_box, &affine_field, &sq_dist_row};
  return &table;
}

}  // namespace swgf::simd::detail
