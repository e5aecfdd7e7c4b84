#include <cstdlib>
#include <string_view>

#include "bnblab/simd.hpp"

namespace bnblab::simd {

bool cpu_has_avx2() {
#if defined(BNBLAB_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

namespace {

const KernelTable& select_table() {
  if (const char* env = std::getenv("BNBLAB_SIMD"); env && std::string_view(env) == "scalar")
    return scalar_kernels();
#if defined(BNBLAB_HAVE_AVX2)
  if (cpu_has_avx2()) return avx2_kernels();
#endif
  return scalar_kernels();
}

}  // namespace

const KernelTable& active() {
  static const KernelTable& table = select_table();
  return table;
}

}  // namespace bnblab::simd
