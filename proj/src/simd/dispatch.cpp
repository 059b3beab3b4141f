#include <atomic>
#include <cstdlib>
#include <string_view>

#include "fdl/simd/kernels.hpp"

namespace fdl::simd {

#if defined(FDL_HAVE_AVX2)
const KernelTable& avx2_table();
#endif

const KernelTable* avx2_kernels() {
#if defined(FDL_HAVE_AVX2)
  static const bool supported = __builtin_cpu_supports("avx2");
  return supported ? &avx2_table() : nullptr;
#else
  return nullptr;
#endif
}

namespace {

const KernelTable* initial_table() {
  if (const char* env = std::getenv("FDL_SIMD")) {
    const std::string_view want(env);
    if (want == "scalar") return &scalar_kernels();
    if (want == "avx2" && avx2_kernels()) return avx2_kernels();
  }
  if (const KernelTable* t = avx2_kernels()) return t;
  return &scalar_kernels();
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{initial_table()};
  return table;
}

}  // namespace

const KernelTable& active_kernels() { return *current().load(std::memory_order_acquire); }

bool select_kernels(std::string_view name) {
  const KernelTable* t = nullptr;
  if (name == "scalar") t = &scalar_kernels();
  if (name == "avx2") t = avx2_kernels();
  if (!t) return false;
  current().store(t, std::memory_order_release);
  return true;
}

}  // namespace fdl::simd
