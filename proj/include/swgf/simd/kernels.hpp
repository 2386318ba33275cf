#pragma once

// Data-parallel inner loops of the particle flow and the transport cost
// matrix. Every kernel exists as a scalar reference and as SIMD variants;
// the variants use only elementwise IEEE operations in the same order as the
// reference (no FMA, no reassociated reductions), so all backends produce
// bit-identical results. The active backend is chosen at runtime.

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>

namespace swgf::simd {

enum class Isa { kScalar, kAvx2, kNeon };

struct KernelTable {
  Isa isa;

  /// out[k] = x[k] - tau * g[k]
  void (*sub_scaled)(std::span<const double> x, std::span<const double> g, double tau, std::span<double> out);

  /// v[k] = (0 > v[k]) ? 0 : v[k]
  void (*clamp_lower_zero)(std::span<double> v);

  /// Row-major points of dimension lo.size(); each coordinate clamped to [lo, hi].
  void (*clamp_box)(std::span<double> v, std::span<const double> lo, std::span<const double> hi);

  /// out_i = A x_i - c for row-major points x_i of dimension c.size();
  /// A is dim x dim row-major.
  void (*affine_field)(std::span<const double> x, std::span<const double> a, std::span<const double> c,
                       std::span<double> out);

  /// out[j] = sum_k (xi[k] - y_soa[k * out.size() + j])^2, accumulated over k
  /// in increasing order. y_soa holds the target cloud one coordinate plane
  /// after another.
  void (*sq_dist_row)(std::span<const double> xi, std::span<const double> y_soa, std::span<double> out);
};

std::string_view isa_name(Isa isa);
std::optional<Isa> parse_isa(std::string_view name);

/// True when the backend is compiled in and the running CPU supports it.
bool isa_supported(Isa isa);

/// Kernel table of a specific backend; throws if unsupported.
const KernelTable& kernels_for(Isa isa);

/// Best supported backend, unless overridden by set_isa_override() or by the
/// SWGF_ISA environment variable ("scalar", "avx2", "neon").
const KernelTable& active_kernels();

void set_isa_override(std::optional<Isa> isa);

namespace detail {
const KernelTable& scalar_table();
const KernelTable* avx2_table();  // nullptr when not compiled in
const KernelTable* neon_table();  // nullptr when not compiled in
}  // namespace detail

}  // namespace swgf::simd
