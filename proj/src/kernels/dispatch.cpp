#include <atomic>
#include <cstdlib>
#include <string_view>

#include "exactmrf/kernels.hpp"

namespace exactmrf::kernels {

#if defined(EXACTMRF_BUILD_AVX2)
const KernelSet& avx2_kernels();
#endif

namespace {

bool cpu_has_avx2() {
#if defined(EXACTMRF_BUILD_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelSet* initial() {
  const char* env = std::getenv("EXACTMRF_SIMD");
  if (env != nullptr && std::string_view(env) == "scalar") return &scalar();
  if (const KernelSet* v = avx2()) return v;
  return &scalar();
}

std::atomic<const KernelSet*>& current() {
  static std::atomic<const KernelSet*> set{initial()};
  return set;
}

}  // namespace

const KernelSet* avx2() {
#if defined(EXACTMRF_BUILD_AVX2)
  static const bool supported = cpu_has_avx2();
  return supported ? &avx2_kernels() : nullptr;
#else
  return nullptr;
#endif
}

const KernelSet& active() { return *current().load(std::memory_order_acquire); }

bool select(std::string_view name) {
  const KernelSet* set = nullptr;
  if (name == "scalar")
    set = &scalar();
  else if (name == "avx2")
    set = avx2();
  if (set == nullptr) return false;
  current().store(set, std::memory_order_release);
  return true;
}

}  // namespace exactmrf::kernels
