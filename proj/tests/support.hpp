#pragma once

// Shared helpers for the test binaries: a small deterministic generator for
// property tests, model builders and comparison utilities.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <string>
#include <vector>

#include "exactmrf/model.hpp"
#include "exactmrf/numerics.hpp"
#include "exactmrf/report.hpp"

namespace testing {

using namespace exactmrf;

// splitmix64; independent of the library's generators.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  // Uniform in [lo, hi].
  std::size_t range(std::size_t lo, std::size_t hi) { return lo + next() % (hi - lo + 1); }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }
  bool coin(double p = 0.5) { return uniform() < p; }

 private:
  std::uint64_t state_;
};

inline Matrix<ExactRational> rationals(std::size_t rows, std::size_t cols, std::initializer_list<const char*> values) {
  Matrix<ExactRational> m(rows, cols);
  std::size_t i = 0;
  for (const char* v : values) m.data[i++] = ExactRational::from_decimal(v);
  return m;
}

inline ModelSpec complete_model(int K, std::size_t n, std::initializer_list<const char*> g,
                                std::initializer_list<const char*> q, NumericMode mode = NumericMode::LogFloat) {
  return make_model(GraphFamily::Complete, K, n, 0, rationals(K, K, g), rationals(n, K, q), mode);
}

inline ModelSpec bipartite_model(int K, std::size_t n1, std::size_t n2, std::initializer_list<const char*> g,
                                 std::initializer_list<const char*> q, NumericMode mode = NumericMode::LogFloat) {
  return make_model(GraphFamily::CompleteBipartite, K, n1, n2, rationals(K, K, g), rationals(n1 + n2, K, q), mode);
}

// Binary complete model in canonical form: g = [[1, alpha], [alpha, 1]],
// q_i = (beta_i, 1).
inline ModelSpec canonical_binary(const std::string& alpha, const std::vector<std::string>& beta,
                                  NumericMode mode = NumericMode::LogFloat) {
  const std::size_t n = beta.size();
  Matrix<ExactRational> g(2, 2, ExactRational(1));
  g(0, 1) = g(1, 0) = ExactRational::from_decimal(alpha);
  Matrix<ExactRational> q(n, 2, ExactRational(1));
  for (std::size_t i = 0; i < n; ++i) q(i, 0) = ExactRational::from_decimal(beta[i]);
  return make_model(GraphFamily::Complete, 2, n, 0, std::move(g), std::move(q), mode);
}

// Every weight equal to one.
inline ModelSpec uniform_model(GraphFamily family, int K, std::size_t n1, std::size_t n2 = 0,
                               NumericMode mode = NumericMode::LogFloat) {
  return random_model(family, K, n1, n2, WeightRange{1.0, 1.0}, 0, mode);
}

// g replaced by all ones (independent field).
inline ModelSpec decoupled(ModelSpec spec) {
  const auto K = static_cast<std::size_t>(spec.labels);
  Matrix<ExactRational> g(K, K, ExactRational(1));
  return make_model(spec.family, spec.labels, spec.n1, spec.n2, std::move(g), *spec.exact_q, spec.mode);
}

inline double rel_diff(double a, double b) {
  if (a == b) return 0.0;
  return std::abs(a - b) / std::max(std::abs(a), std::abs(b));
}

// Largest absolute entrywise difference; NaN in either operand counts as
// infinite unless both are NaN.
inline double max_abs_diff(const Matrix<double>& a, const Matrix<double>& b) {
  if (a.rows != b.rows || a.cols != b.cols) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double x = a.data[i], y = b.data[i];
    if (std::isnan(x) && std::isnan(y)) continue;
    if (std::isnan(x) || std::isnan(y)) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, std::abs(x - y));
  }
  return worst;
}

// Relative difference of two positive log-domain values, measured on the
// linear scale: |exp(a - b) - 1|.
inline double log_rel_diff(double log_a, double log_b) {
  if (log_a == log_b) return 0.0;
  if (!std::isfinite(log_a) || !std::isfinite(log_b)) return std::numeric_limits<double>::infinity();
  return std::abs(std::expm1(log_a - log_b));
}

inline ExactRational factorial(std::size_t n) {
  mpz_class f = 1;
  for (std::size_t i = 2; i <= n; ++i) f *= static_cast<unsigned long>(i);
  return ExactRational(mpq_class(f));
}

inline ExactRational multinomial(const std::vector<std::size_t>& counts) {
  std::size_t total = 0;
  for (auto c : counts) total += c;
  ExactRational r = factorial(total);
  for (auto c : counts) r = r / factorial(c);
  return r;
}

}  // namespace testing
