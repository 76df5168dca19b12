#include "exactmrf/oracle.hpp"

#include <algorithm>
#include <limits>
#include <optional>
#include <type_traits>
#include <stdexcept>

#include "exactmrf/errors.hpp"

namespace exactmrf {

namespace {

void check_cap(const ModelSpec& spec, const OracleOptions& options) {
  require_valid(spec);
  const std::uint64_t count = labelling_count(spec);
  if (count > options.cap)
    throw TooLarge("enumeration needs " + (count == UINT64_MAX ? std::string("more than 2^64") : std::to_string(count)) +
                   " labellings; cap is " + std::to_string(options.cap));
}

template <class V>
V labelling_weight(const ModelSpec& spec, const std::vector<int>& x) {
  const Matrix<V>& g = spec.g<V>();
  const Matrix<V>& q = spec.q<V>();
  const std::size_t N = x.size();
  V w = one_of<V>();
  for (std::size_t i = 0; i < N; ++i) w *= q(i, static_cast<std::size_t>(x[i]));
  if (spec.family == GraphFamily::Complete) {
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t j = i + 1; j < N; ++j) w *= g(static_cast<std::size_t>(x[i]), static_cast<std::size_t>(x[j]));
  } else {
    for (std::size_t i = 0; i < spec.n1; ++i)
      for (std::size_t j = spec.n1; j < N; ++j) w *= g(static_cast<std::size_t>(x[i]), static_cast<std::size_t>(x[j]));
  }
  return w;
}

// Exact weights scaled to integers: each q row by the lcm of its
// denominators, g as a whole by the lcm of its own. Every labelling weight is
// then an integer, equal to the true weight times the same constant `scale`.
struct IntegerWeights {
  Matrix<mpz_class> g, q;
  mpz_class scale;
};

mpz_class lcm_of_denominators(std::span<const ExactRational> values) {
  mpz_class d = 1;
  for (const auto& v : values) mpz_lcm(d.get_mpz_t(), d.get_mpz_t(), v.raw().get_den_mpz_t());
  return d;
}

Matrix<mpz_class> scaled(std::span<const ExactRational> values, std::size_t rows, std::size_t cols,
                         const std::vector<mpz_class>& row_scale) {
  Matrix<mpz_class> out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      const mpq_class& v = values[r * cols + c].raw();
      out(r, c) = v.get_num() * (row_scale[r] / v.get_den());
    }
  return out;
}

IntegerWeights integer_weights(const ModelSpec& spec) {
  const auto& g = spec.g<ExactRational>();
  const auto& q = spec.q<ExactRational>();
  const std::size_t N = spec.num_vertices();
  const mpz_class dg = lcm_of_denominators(g.data);
  std::vector<mpz_class> dq(N);
  for (std::size_t i = 0; i < N; ++i) dq[i] = lcm_of_denominators(q.row(i));
  IntegerWeights w{scaled(g.data, g.rows, g.cols, std::vector<mpz_class>(g.rows, dg)), scaled(q.data, q.rows, q.cols, dq), 1};
  const unsigned long edges =
      spec.family == GraphFamily::Complete ? N * (N - 1) / 2 : static_cast<unsigned long>(spec.n1 * spec.n2);
  mpz_pow_ui(w.scale.get_mpz_t(), dg.get_mpz_t(), edges);
  for (const auto& d : dq) w.scale *= d;
  return w;
}

mpz_class integer_weight(const ModelSpec& spec, const IntegerWeights& iw, const std::vector<int>& x) {
  const std::size_t N = x.size();
  mpz_class w = 1;
  for (std::size_t i = 0; i < N; ++i) w *= iw.q(i, static_cast<std::size_t>(x[i]));
  const std::size_t first_b = spec.family == GraphFamily::Complete ? 0 : spec.n1;
  const std::size_t last_a = spec.family == GraphFamily::Complete ? N : spec.n1;
  for (std::size_t i = 0; i < last_a; ++i)
    for (std::size_t j = std::max(first_b, i + 1); j < N; ++j)
      w *= iw.g(static_cast<std::size_t>(x[i]), static_cast<std::size_t>(x[j]));
  return w;
}

// Calls fn(labelling) for all K^N labellings, last vertex fastest.
template <class Fn>
void enumerate(std::size_t N, int K, Fn&& fn) {
  std::vector<int> x(N, 0);
  while (true) {
    fn(static_cast<const std::vector<int>&>(x));
    std::size_t d = N;
    while (d > 0) {
      if (++x[d - 1] < K) break;
      x[d - 1] = 0;
      --d;
    }
    if (d == 0) return;
  }
}

template <class V>
MarginalReport brute(const ModelSpec& spec, std::span<const std::pair<std::size_t, std::size_t>> pairs) {
  const std::size_t N = spec.num_vertices();
  const auto K = static_cast<std::size_t>(spec.labels);
  for (const auto& [i, j] : pairs)
    if (i >= N || j >= N || i == j) throw std::out_of_range("invalid vertex pair");

  // Exact sums are accumulated as scaled integers.
  using Acc = std::conditional_t<std::is_same_v<V, ExactRational>, mpz_class, V>;
  std::optional<IntegerWeights> iw;
  if constexpr (std::is_same_v<V, ExactRational>) iw = integer_weights(spec);
  Acc Z_acc{};
  Matrix<Acc> unary(N, K, Acc{});
  std::vector<Matrix<Acc>> pair_sums(pairs.size(), Matrix<Acc>(K, K, Acc{}));
  enumerate(N, spec.labels, [&](const std::vector<int>& x) {
    Acc w;
    if constexpr (std::is_same_v<V, ExactRational>) {
      w = integer_weight(spec, *iw, x);
      if (sgn(w) == 0) return;
    } else {
      w = labelling_weight<V>(spec, x);
      if (is_zero(w)) return;
    }
    Z_acc += w;
    for (std::size_t i = 0; i < N; ++i) unary(i, static_cast<std::size_t>(x[i])) += w;
    for (std::size_t p = 0; p < pairs.size(); ++p)
      pair_sums[p](static_cast<std::size_t>(x[pairs[p].first]), static_cast<std::size_t>(x[pairs[p].second])) += w;
  });
  V Z;
  if constexpr (std::is_same_v<V, ExactRational>)
    Z = ExactRational(mpq_class(Z_acc, iw->scale));
  else
    Z = Z_acc;

  MarginalReport r;
  r.mode = std::is_same_v<V, LogValue> ? NumericMode::LogFloat : NumericMode::ExactRational;
  r.log_Z = log_of(Z);
  r.diagnostics.digits_lost.assign(N, 0.0);
  r.diagnostics.fallback.assign(N, false);
  r.diagnostics.zero_partition = is_zero(Z);
  r.diagnostics.kernels = "oracle";
  const double nan = std::numeric_limits<double>::quiet_NaN();
  r.unary = Matrix<double>(N, K, nan);
  if constexpr (std::is_same_v<V, ExactRational>) {
    r.Z_exact = Z;
    r.unary_exact = Matrix<ExactRational>(N, K);
  }

  auto normalize = [&](const Acc& s, double& out, ExactRational* exact) {
    if (is_zero(Z)) return;
    if constexpr (std::is_same_v<V, LogValue>) {
      out = s.is_zero() ? 0.0 : std::exp(s.log() - Z.log());
    } else {
      ExactRational p(mpq_class(s, Z_acc));
      out = p.to_double();
      *exact = std::move(p);
    }
  };
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t k = 0; k < K; ++k)
      normalize(unary(i, k), r.unary(i, k), r.unary_exact ? &(*r.unary_exact)(i, k) : nullptr);
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    PairTable t;
    t.i = pairs[p].first;
    t.j = pairs[p].second;
    t.probabilities = Matrix<double>(K, K, nan);
    if constexpr (std::is_same_v<V, ExactRational>) t.exact = Matrix<ExactRational>(K, K);
    for (std::size_t a = 0; a < K; ++a)
      for (std::size_t b = 0; b < K; ++b)
        normalize(pair_sums[p](a, b), t.probabilities(a, b), t.exact ? &(*t.exact)(a, b) : nullptr);
    r.pairwise.push_back(std::move(t));
  }
  return r;
}

}  // namespace

std::uint64_t labelling_count(const ModelSpec& spec) {
  std::uint64_t count = 1;
  const auto K = static_cast<std::uint64_t>(spec.labels);
  for (std::size_t i = 0; i < spec.num_vertices(); ++i) {
    if (count > UINT64_MAX / K) return UINT64_MAX;
    count *= K;
  }
  return count;
}

template <class V>
V brute_partition(const ModelSpec& spec, const OracleOptions& options) {
  check_cap(spec, options);
  if constexpr (std::is_same_v<V, ExactRational>) {
    const IntegerWeights iw = integer_weights(spec);
    mpz_class Z = 0;
    enumerate(spec.num_vertices(), spec.labels, [&](const std::vector<int>& x) { Z += integer_weight(spec, iw, x); });
    return ExactRational(mpq_class(Z, iw.scale));
  } else {
    V Z;
    enumerate(spec.num_vertices(), spec.labels, [&](const std::vector<int>& x) { Z += labelling_weight<V>(spec, x); });
    return Z;
  }
}

template LogValue brute_partition<LogValue>(const ModelSpec&, const OracleOptions&);
template ExactRational brute_partition<ExactRational>(const ModelSpec&, const OracleOptions&);

MarginalReport brute_marginals(const ModelSpec& spec, std::span<const std::pair<std::size_t, std::size_t>> pairs,
                               const OracleOptions& options) {
  check_cap(spec, options);
  if (spec.mode == NumericMode::ExactRational) return brute<ExactRational>(spec, pairs);
  return brute<LogValue>(spec, pairs);
}

std::vector<std::pair<std::size_t, std::size_t>> all_pairs(std::size_t n) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) out.emplace_back(i, j);
  return out;
}

}  // namespace exactmrf
