#include <cmath>
#include <limits>

#include "exactmrf/kernels.hpp"

namespace exactmrf::kernels {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void shifted_lse_scalar(double* out, const double* in, std::size_t len, const ShiftTerm* terms,
                        std::size_t num_terms) {
  for (std::size_t i = 0; i < len; ++i) {
    double hi = kNegInf;
    std::size_t arg = 0;
    for (std::size_t t = 0; t < num_terms; ++t) {
      double v = terms[t].log_weight + in[static_cast<std::ptrdiff_t>(i) - terms[t].offset];
      if (v > hi) {
        hi = v;
        arg = t;
      }
    }
    if (hi == kNegInf) {
      out[i] = kNegInf;
      continue;
    }
    double rest = 0.0;
    for (std::size_t t = 0; t < num_terms; ++t) {
      if (t == arg) continue;
      rest += std::exp(terms[t].log_weight + in[static_cast<std::ptrdiff_t>(i) - terms[t].offset] - hi);
    }
    out[i] = hi + std::log1p(rest);
  }
}

double lse_dot_scalar(const double* a, const double* b, std::size_t len) {
  double hi = kNegInf;
  for (std::size_t i = 0; i < len; ++i) hi = std::max(hi, a[i] + b[i]);
  if (hi == kNegInf) return kNegInf;
  double sum = 0.0;
  for (std::size_t i = 0; i < len; ++i) sum += std::exp(a[i] + b[i] - hi);
  return hi + std::log(sum);
}

void exp_nonpositive_scalar(const double* x, double* out, std::size_t len) {
  for (std::size_t i = 0; i < len; ++i) out[i] = x[i] < -708.0 ? 0.0 : std::exp(x[i]);
}

void log1p_nonnegative_scalar(const double* x, double* out, std::size_t len) {
  for (std::size_t i = 0; i < len; ++i) out[i] = std::log1p(x[i]);
}

}  // namespace

const KernelSet& scalar() {
  static const KernelSet set{"scalar", shifted_lse_scalar, lse_dot_scalar, exp_nonpositive_scalar,
                             log1p_nonnegative_scalar};
  return set;
}

}  // namespace exactmrf::kernels
