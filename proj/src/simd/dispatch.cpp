#include <cstdlib>
#include <string_view>

#include "spadcam/simd/kernels.hpp"

namespace spadcam::simd {
namespace {

bool cpu_has_avx2() {
#if defined(SPADCAM_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

const KernelTable& select() {
  const char* env = std::getenv("SPADCAM_SIMD");
  const std::string_view want = env ? env : "";
  if (want == "scalar") return scalar_kernels();
  if (const KernelTable* t = kernels_for(Isa::avx2)) return *t;
  return scalar_kernels();
}

}  // namespace

const KernelTable* kernels_for(Isa isa) {
  switch (isa) {
    case Isa::scalar:
      return &scalar_kernels();
    case Isa::avx2:
#if defined(SPADCAM_HAVE_AVX2)
      if (cpu_has_avx2()) return &avx2_kernels();
#endif
      return nullptr;
  }
  return nullptr;
}

const KernelTable& kernels() {
  static const KernelTable& table = select();
  return table;
}

}  // namespace spadcam::simd
