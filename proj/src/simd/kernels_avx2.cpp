// Compiled with -mavx2 (and without -mfma); only called after a runtime CPU check.

#include <immintrin.h>

#include "swgf/simd/kernels.hpp"

namespace swgf::simd::detail {
namespace {

void sub_scaled(std::span<const double> x, std::span<const double> g, double tau, std::span<double> out) {
  const std::size_t n = out.size();
  const __m256d vtau = _mm256_set1_pd(tau);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d vx = _mm256_loadu_pd(x.data() + k);
    const __m256d vg = _mm256_loadu_pd(g.data() + k);
    _mm256_storeu_pd(out.data() + k, _mm256_sub_pd(vx, _mm256_mul_pd(vtau, vg)));
  }
  for (; k < n; ++k) out[k] = x[k] - tau * g[k];
}

// _mm256_max_pd(a, b) is exactly (a > b ? a : b), matching the scalar reference
// for signed zeros and NaN.
void clamp_lower_zero(std::span<double> v) {
  const std::size_t n = v.size();
  const __m256d zero = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    _mm256_storeu_pd(v.data() + k, _mm256_max_pd(zero, _mm256_loadu_pd(v.data() + k)));
  }
  for (; k < n; ++k) v[k] = 0.0 > v[k] ? 0.0 : v[k];
}

void clamp_box(std::span<double> v, std::span<const double> lo, std::span<const double> hi) {
  const std::size_t dim = lo.size();
  const std::size_t n = v.size();
  std::size_t k = 0;
  if (4 % dim == 0) {
    double lo4[4], hi4[4];
    for (std::size_t j = 0; j < 4; ++j) {
      lo4[j] = lo[j % dim];
      hi4[j] = hi[j % dim];
    }
    const __m256d vlo = _mm256_loadu_pd(lo4);
    const __m256d vhi = _mm256_loadu_pd(hi4);
    for (; k + 4 <= n; k += 4) {
      const __m256d r = _mm256_max_pd(vlo, _mm256_loadu_pd(v.data() + k));
      _mm256_storeu_pd(v.data() + k, _mm256_min_pd(vhi, r));
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
  const std::size_t dim = c.size();
  if (dim != 2) {
    scalar_table().affine_field(x, a, c, out);
    return;
  }
  // Two 2-D particles per register: [x0 y0 x1 y1].
  const std::size_t n = x.size();
  const __m256d col0 = _mm256_setr_pd(a[0], a[2], a[0], a[2]);
  const __m256d col1 = _mm256_setr_pd(a[1], a[3], a[1], a[3]);
  const __m256d vc = _mm256_setr_pd(c[0], c[1], c[0], c[1]);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d v = _mm256_loadu_pd(x.data() + k);
    const __m256d first = _mm256_unpacklo_pd(v, v);   // [x0 x0 x1 x1]
    const __m256d second = _mm256_unpackhi_pd(v, v);  // [y0 y0 y1 y1]
    const __m256d acc = _mm256_add_pd(_mm256_mul_pd(col0, first), _mm256_mul_pd(col1, second));
    _mm256_storeu_pd(out.data() + k, _mm256_sub_pd(acc, vc));
  }
  if (k < n) scalar_table().affine_field(x.subspan(k), a, c, out.subspan(k));
}

void sq_dist_row(std::span<const double> xi, std::span<const double> y_soa, std::span<double> out) {
  const std::size_t n = out.size();
  for (std::size_t k = 0; k < xi.size(); ++k) {
    const double* plane = y_soa.data() + k * n;
    const __m256d vx = _mm256_set1_pd(xi[k]);
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
      const __m256d diff = _mm256_sub_pd(vx, _mm256_loadu_pd(plane + j));
      const __m256d sq = _mm256_mul_pd(diff, diff);
      _mm256_storeu_pd(out.data() + j, k == 0 ? sq : _mm256_add_pd(_mm256_loadu_pd(out.data() + j), sq));
    }
    for (; j < n; ++j) {
      const double diff = xi[k] - plane[j];
      out[j] = k == 0 ? diff * diff : out[j] + diff * diff;
    }
  }
}

}  // namespace

const KernelTable* avx2_table() {
  static const KernelTable table{Isa::kAvx2, &sub_scaled, &clamp_lower_zero, &clamp_box, &affine_field, &sq_dist_row};
  return &table;
}

}  // namespace swgf::simd::detail
