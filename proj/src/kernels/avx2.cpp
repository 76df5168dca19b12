// AVX2+FMA variants of the log-domain kernels. Compiled with -mavx2 -mfma;
// only reached after dispatch has confirmed CPU support.

#include <immintrin.h>

#include <cmath>
#include <limits>

#include "exactmrf/kernels.hpp"

namespace exactmrf::kernels {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline __m256d polevl(__m256d x, const double* c, int degree) {
  __m256d r = _mm256_set1_pd(c[0]);
  for (int i = 1; i <= degree; ++i) r = _mm256_fmadd_pd(r, x, _mm256_set1_pd(c[i]));
  return r;
}

// Leading coefficient 1 implied.
inline __m256d p1evl(__m256d x, const double* c, int degree) {
  __m256d r = _mm256_add_pd(x, _mm256_set1_pd(c[0]));
  for (int i = 1; i < degree; ++i) r = _mm256_fmadd_pd(r, x, _mm256_set1_pd(c[i]));
  return r;
}

// exp(x) for x <= 0; lanes below -708 (including -inf) return 0.
// Range reduction x = n ln2 + r with a two-part ln2, then the classic
// Pade form 1 + 2 r P(r^2) / (Q(r^2) - r P(r^2)).
inline __m256d exp_nonpositive_pd(__m256d x) {
  static constexpr double P[] = {1.26177193074810590878E-4, 3.02994407707441961300E-2,
                                 9.99999999999999999910E-1};
  static constexpr double Q[] = {3.00198505138664455042E-6, 2.52448340349684104192E-3,
                                 2.27265548208155028766E-1, 2.00000000000000000009E0};
  const __m256d lo = _mm256_set1_pd(-708.0);
  __m256d underflow = _mm256_cmp_pd(x, lo, _CMP_LT_OQ);
  __m256d xc = _mm256_max_pd(x, lo);
  __m256d n = _mm256_round_pd(_mm256_mul_pd(xc, _mm256_set1_pd(1.4426950408889634073599)),
                              _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(6.93145751953125E-1), xc);
  r = _mm256_fnmadd_pd(n, _mm256_set1_pd(1.42860682030941723212E-6), r);
  __m256d rr = _mm256_mul_pd(r, r);
  __m256d px = _mm256_mul_pd(r, polevl(rr, P, 2));
  __m256d qx = polevl(rr, Q, 3);
  __m256d e = _mm256_div_pd(px, _mm256_sub_pd(qx, px));
  e = _mm256_fmadd_pd(_mm256_set1_pd(2.0), e, _mm256_set1_pd(1.0));
  __m256i ni = _mm256_cvtepi32_epi64(_mm256_cvtpd_epi32(n));
  __m256i bits = _mm256_slli_epi64(_mm256_add_epi64(ni, _mm256_set1_epi64x(1023)), 52);
  e = _mm256_mul_pd(e, _mm256_castsi256_pd(bits));
  return _mm256_blendv_pd(e, _mm256_setzero_pd(), underflow);
}

// log(u) for finite normal u > 0.
inline __m256d log_positive_pd(__m256d u) {
  static constexpr double P[] = {1.01875663804580931796E-4, 4.97494994976747001425E-1, 4.70579119878881725854E0,
                                 1.44989225341610930846E1,  1.79368678507819816313E1,  7.70838733755885391666E0};
  static constexpr double Q[] = {1.12873587189167450590E1, 4.52279145837532221105E1, 8.29875266912776603211E1, 7.11544750618563894466E1,
                                 2.31251620126765340583E1};
  __m256i bits = _mm256_castpd_si256(u);
  __m256i expo = _mm256_srli_epi64(bits, 52);
  __m256d e = _mm256_sub_pd(
      _mm256_castsi256_pd(_mm256_or_si256(expo, _mm256_castpd_si256(_mm256_set1_pd(4503599627370496.0)))),
      _mm256_set1_pd(4503599627370496.0 + 1022.0));
  __m256i mant_bits = _mm256_or_si256(_mm256_and_si256(bits, _mm256_set1_epi64x(0x000FFFFFFFFFFFFFLL)),
                                      _mm256_set1_epi64x(0x3FE0000000000000LL));
  __m256d m = _mm256_castsi256_pd(mant_bits);
  __m256d small = _mm256_cmp_pd(m, _mm256_set1_pd(0.70710678118654752440), _CMP_LT_OQ);
  e = _mm256_sub_pd(e, _mm256_and_pd(small, _mm256_set1_pd(1.0)));
  __m256d x = _mm256_sub_pd(_mm256_add_pd(m, _mm256_and_pd(small, m)), _mm256_set1_pd(1.0));
  __m256d z = _mm256_mul_pd(x, x);
  __m256d y = _mm256_mul_pd(x, _mm256_div_pd(_mm256_mul_pd(z, polevl(x, P, 5)), p1evl(x, Q, 5)));
  y = _mm256_fnmadd_pd(e, _mm256_set1_pd(2.121944400546905827679E-4), y);
  y = _mm256_fnmadd_pd(_mm256_set1_pd(0.5), z, y);
  z = _mm256_add_pd(x, y);
  return _mm256_fmadd_pd(e, _mm256_set1_pd(0.693359375), z);
}

inline __m256d log1p_nonnegative_pd(__m256d s) {
  const __m256d one = _mm256_set1_pd(1.0);
  __m256d u = _mm256_add_pd(one, s);
  __m256d c = _mm256_div_pd(_mm256_sub_pd(s, _mm256_sub_pd(u, one)), u);
  return _mm256_add_pd(log_positive_pd(u), c);
}

inline double hmax(__m256d v) {
  __m128d m = _mm_max_pd(_mm256_castpd256_pd128(v), _mm256_extractf128_pd(v, 1));
  return std::max(_mm_cvtsd_f64(m), _mm_cvtsd_f64(_mm_unpackhi_pd(m, m)));
}

inline double hsum(__m256d v) {
  __m128d s = _mm_add_pd(_mm256_castpd256_pd128(v), _mm256_extractf128_pd(v, 1));
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

void shifted_lse_avx2(double* out, const double* in, std::size_t len, const ShiftTerm* terms,
                      std::size_t num_terms) {
  constexpr std::size_t kMaxTerms = 16;
  if (num_terms > kMaxTerms) {
    scalar().shifted_lse(out, in, len, terms, num_terms);
    return;
  }
  const __m256d neg_inf = _mm256_set1_pd(kNegInf);
  __m256d weight[kMaxTerms];
  for (std::size_t t = 0; t < num_terms; ++t) weight[t] = _mm256_set1_pd(terms[t].log_weight);

  std::size_t i = 0;
  __m256d v[kMaxTerms];
  for (; i + 4 <= len; i += 4) {
    __m256d hi = neg_inf;
    for (std::size_t t = 0; t < num_terms; ++t) {
      v[t] = _mm256_add_pd(weight[t], _mm256_loadu_pd(in + static_cast<std::ptrdiff_t>(i) - terms[t].offset));
      hi = _mm256_max_pd(hi, v[t]);
    }
    __m256d finite = _mm256_cmp_pd(hi, neg_inf, _CMP_NEQ_OQ);
    __m256d base = _mm256_and_pd(hi, finite);
    __m256d taken = _mm256_setzero_pd();
    __m256d rest = _mm256_setzero_pd();
    for (std::size_t t = 0; t < num_terms; ++t) {
      __m256d is_max = _mm256_andnot_pd(taken, _mm256_and_pd(_mm256_cmp_pd(v[t], hi, _CMP_EQ_OQ), finite));
      taken = _mm256_or_pd(taken, is_max);
      __m256d ex = exp_nonpositive_pd(_mm256_sub_pd(v[t], base));
      rest = _mm256_add_pd(rest, _mm256_andnot_pd(is_max, ex));
    }
    __m256d r = _mm256_add_pd(base, log1p_nonnegative_pd(rest));
    _mm256_storeu_pd(out + i, _mm256_blendv_pd(neg_inf, r, finite));
  }
  if (i < len) scalar().shifted_lse(out + i, in + i, len - i, terms, num_terms);
}

double lse_dot_avx2(const double* a, const double* b, std::size_t len) {
  const __m256d neg_inf = _mm256_set1_pd(kNegInf);
  __m256d hi0 = neg_inf, hi1 = neg_inf;
  std::size_t i = 0;
  for (; i + 8 <= len; i += 8) {
    hi0 = _mm256_max_pd(hi0, _mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    hi1 = _mm256_max_pd(hi1, _mm256_add_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4)));
  }
  double hi = hmax(_mm256_max_pd(hi0, hi1));
  for (std::size_t j = i; j < len; ++j) hi = std::max(hi, a[j] + b[j]);
  if (hi == kNegInf) return kNegInf;

  const __m256d shift = _mm256_set1_pd(hi);
  __m256d s0 = _mm256_setzero_pd(), s1 = _mm256_setzero_pd();
  for (i = 0; i + 8 <= len; i += 8) {
    __m256d x0 = _mm256_sub_pd(_mm256_add_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)), shift);
    __m256d x1 = _mm256_sub_pd(_mm256_add_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4)), shift);
    s0 = _mm256_add_pd(s0, exp_nonpositive_pd(x0));
    s1 = _mm256_add_pd(s1, exp_nonpositive_pd(x1));
  }
  double sum = hsum(_mm256_add_pd(s0, s1));
  for (std::size_t j = i; j < len; ++j) sum += std::exp(a[j] + b[j] - hi);
  return hi + std::log(sum);
}

void exp_nonpositive_avx2(const double* x, double* out, std::size_t len) {
  std::size_t i = 0;
  for (; i + 4 <= len; i += 4) _mm256_storeu_pd(out + i, exp_nonpositive_pd(_mm256_loadu_pd(x + i)));
  if (i < len) scalar().exp_nonpositive(x + i, out + i, len - i);
}

void log1p_nonnegative_avx2(const double* x, double* out, std::size_t len) {
  std::size_t i = 0;
  for (; i + 4 <= len; i += 4) _mm256_storeu_pd(out + i, log1p_nonnegative_pd(_mm256_loadu_pd(x + i)));
  if (i < len) scalar().log1p_nonnegative(x + i, out + i, len - i);
}

}  // namespace

const KernelSet& avx2_kernels() {
  static const KernelSet set{"avx2", shifted_lse_avx2, lse_dot_avx2, exp_nonpositive_avx2, log1p_nonnegative_avx2};
  return set;
}

}  // namespace exactmrf::kernels
