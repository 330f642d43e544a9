#include <cstdlib>
#include <string_view>

#include "veriscribe/simd/kernels.hpp"

namespace veriscribe::simd {

namespace {

bool cpu_has_avx2() {
#if defined(VERISCRIBE_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

const KernelTable& select_kernels() {
  if (const char* forced = std::getenv("VERISCRIBE_SIMD"); forced && std::string_view(forced) == "scalar") {
    return detail::kScalarKernels;
  }
  if (const KernelTable* avx2 = kernels_for(Isa::Avx2)) return *avx2;
  return detail::kScalarKernels;
}

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::Scalar:
      return "scalar";
    case Isa::Avx2:
      return "avx2";
  }
  return "unknown";
}

const KernelTable* kernels_for(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return &detail::kScalarKernels;
    case Isa::Avx2:
#if defined(VERISCRIBE_HAVE_AVX2)
      if (cpu_has_avx2()) return &detail::kAvx2Kernels;
#endif
      return nullptr;
  }
  return nullptr;
}

const KernelTable& active_kernels() {
  static const KernelTable& table = select_kernels();
  return table;
}

}  // namespace veriscribe::simd
