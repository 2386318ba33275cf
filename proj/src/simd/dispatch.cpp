#include <atomic>
#include <cstdlib>
#include <string>

#include "swgf/error.hpp"
#include "swgf/simd/kernels.hpp"

namespace swgf::simd {

namespace detail {
#if !defined(SWGF_HAVE_AVX2)
const KernelTable* avx2_table() { return nullptr; }
#endif
#if !defined(SWGF_HAVE_NEON)
const KernelTable* neon_table() { return nullptr; }
#endif
}  // namespace detail

namespace {

// -1 means "no override".
std::atomic<int> g_override{-1};

bool cpu_has_avx2() {
#if defined(SWGF_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Isa best_supported() {
  if (isa_supported(Isa::kAvx2)) return Isa::kAvx2;
  if (isa_supported(Isa::kNeon)) return Isa::kNeon;
  return Isa::kScalar;
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
    case Isa::kNeon:
      return "neon";
  }
  return "unknown";
}

std::optional<Isa> parse_isa(std::string_view name) {
  for (Isa isa : {Isa::kScalar, Isa::kAvx2, Isa::kNeon})
    if (isa_name(isa) == name) return isa;
  return std::nullopt;
}

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return true;
    case Isa::kAvx2:
      return detail::avx2_table() != nullptr && cpu_has_avx2();
    case Isa::kNeon:
      return detail::neon_table() != nullptr;
  }
  return false;
}

const KernelTable& kernels_for(Isa isa) {
  if (!isa_supported(isa))
    fail(ErrorKind::kInvalidArgument, "SIMD backend '" + std::string(isa_name(isa)) + "' is not available on this CPU");
  switch (isa) {
    case Isa::kAvx2:
      return *detail::avx2_table();
    case Isa::kNeon:
      return *detail::neon_table();
    case Isa::kScalar:
      break;
  }
  return detail::scalar_table();
}

const KernelTable& active_kernels() {
  const int forced = g_override.load(std::memory_order_relaxed);
  if (forced >= 0) return kernels_for(static_cast<Isa>(forced));
  static const Isa from_env = [] {
    if (const char* env = std::getenv("SWGF_ISA")) {
      if (auto isa = parse_isa(env); isa && isa_supported(*isa)) return *isa;
    }
    return best_supported();
  }();
  return kernels_for(from_env);
}

void set_isa_override(std::optional<Isa> isa) {
  if (isa) kernels_for(*isa);  // validates
  g_override.store(isa ? static_cast<int>(*isa) : -1, std::memory_order_relaxed);
}

}  // namespace swgf::simd
