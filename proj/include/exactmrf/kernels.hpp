#pragma once

// Log-domain array kernels used by the dynamic-programming inner loops.
//
// Every kernel has a scalar reference implementation and, on x86-64 builds
// with AVX2+FMA support, a vectorized variant. The active set is chosen at
// first use from CPUID; EXACTMRF_SIMD=scalar forces the reference kernels.
// Inputs are natural logs with -inf standing for exact zero; the kernels
// never produce NaN from -inf inputs.

#include <cstddef>
#include <span>
#include <string_view>

namespace exactmrf::kernels {

// One addend of shifted_lse: contributes log_weight + in[i - offset].
struct ShiftTerm {
  std::ptrdiff_t offset;
  double log_weight;
};

struct KernelSet {
  std::string_view name;

  // out[i] = log sum_t exp(terms[t].log_weight + in[i - terms[t].offset])
  // for i in [0, len). `in` must be readable at every shifted index.
  void (*shifted_lse)(double* out, const double* in, std::size_t len, const ShiftTerm* terms,
                      std::size_t num_terms);

  // log sum_i exp(a[i] + b[i]); -inf when every product is zero.
  double (*lse_dot)(const double* a, const double* b, std::size_t len);

  // Elementwise exp(x) for x <= 0 (results below 1e-308 flush to zero) and
  // log1p(x) for x >= 0; exposed for equivalence testing.
  void (*exp_nonpositive)(const double* x, double* out, std::size_t len);
  void (*log1p_nonnegative)(const double* x, double* out, std::size_t len);
};

const KernelSet& scalar();
// nullptr when the build or the CPU lacks AVX2+FMA.
const KernelSet* avx2();
const KernelSet& active();
// Overrides the active set ("scalar" or "avx2"); returns false if unavailable.
bool select(std::string_view name);

}  // namespace exactmrf::kernels
