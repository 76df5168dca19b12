#include "exactmrf/model.hpp"

#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <stdexcept>

#include "exactmrf/errors.hpp"

namespace exactmrf {

template <>
const Matrix<ExactRational>& ModelSpec::g<ExactRational>() const {
  if (!exact_g) throw std::logic_error("model has no exact pairwise weights");
  return *exact_g;
}

template <>
const Matrix<ExactRational>& ModelSpec::q<ExactRational>() const {
  if (!exact_q) throw std::logic_error("model has no exact unary weights");
  return *exact_q;
}

namespace {

Matrix<LogValue> to_log(const Matrix<ExactRational>& m) {
  Matrix<LogValue> r(m.rows, m.cols);
  for (std::size_t i = 0; i < m.data.size(); ++i) {
    // Negative entries are reported by validate(); keep them representable.
    r.data[i] = m.data[i].sign() < 0 ? LogValue::zero() : to_log_value(m.data[i]);
  }
  return r;
}

}  // namespace

ModelSpec make_model(GraphFamily family, int labels, std::size_t n1, std::size_t n2, Matrix<ExactRational> g,
                     Matrix<ExactRational> q, NumericMode mode) {
  ModelSpec s;
  s.family = family;
  s.labels = labels;
  s.n1 = n1;
  s.n2 = family == GraphFamily::Complete ? 0 : n2;
  s.mode = mode;
  s.log_g = to_log(g);
  s.log_q = to_log(q);
  s.exact_g = std::move(g);
  s.exact_q = std::move(q);
  return s;
}

ModelSpec make_log_model(GraphFamily family, int labels, std::size_t n1, std::size_t n2, Matrix<LogValue> log_g,
                         Matrix<LogValue> log_q) {
  ModelSpec s;
  s.family = family;
  s.labels = labels;
  s.n1 = n1;
  s.n2 = family == GraphFamily::Complete ? 0 : n2;
  s.mode = NumericMode::LogFloat;
  s.log_g = std::move(log_g);
  s.log_q = std::move(log_q);
  return s;
}

ModelSpec with_mode(ModelSpec spec, NumericMode mode) {
  if (mode == NumericMode::ExactRational && !spec.has_exact_weights())
    throw std::invalid_argument("rational mode requires exactly specified weights (decimal strings)");
  spec.mode = mode;
  return spec;
}

ValidationReport validate(const ModelSpec& spec) {
  ValidationReport report;
  auto fail = [&](std::string msg) { report.violations.push_back(std::move(msg)); };
  const auto K = static_cast<std::size_t>(spec.labels);
  if (spec.labels < 2) fail("K must be at least 2");
  if (spec.family == GraphFamily::Complete) {
    if (spec.n1 < 1) fail("n must be at least 1");
    if (spec.n2 != 0) fail("complete graph must not set n2");
  } else if (spec.n1 < 1 || spec.n2 < 1) {
    fail("bipartite sides n1 and n2 must each be at least 1");
  }
  if (!report.ok()) return report;

  const std::size_t N = spec.num_vertices();
  if (spec.log_g.rows != K || spec.log_g.cols != K) fail("g must be a KxK table");
  if (spec.log_q.rows != N || spec.log_q.cols != K) fail("q must have one row of K weights per vertex");
  if (spec.exact_g.has_value() != spec.exact_q.has_value()) fail("exact weights must cover both g and q");
  if (spec.exact_g && (spec.exact_g->rows != K || spec.exact_g->cols != K)) fail("exact g must be KxK");
  if (spec.exact_q && (spec.exact_q->rows != N || spec.exact_q->cols != K))
    fail("exact q must have one row of K weights per vertex");
  if (!report.ok()) return report;

  if (spec.mode == NumericMode::ExactRational && !spec.has_exact_weights())
    fail("rational mode requires exact weights");

  if (spec.exact_g) {
    for (std::size_t a = 0; a < K; ++a)
      for (std::size_t b = 0; b < K; ++b)
        if ((*spec.exact_g)(a, b).sign() < 0)
          fail("g(" + std::to_string(a) + "," + std::to_string(b) + ") is negative");
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t k = 0; k < K; ++k)
        if ((*spec.exact_q)(i, k).sign() < 0)
          fail("q[" + std::to_string(i) + "][" + std::to_string(k) + "] is negative");
  }

  if (spec.family == GraphFamily::Complete) {
    for (std::size_t a = 0; a < K; ++a)
      for (std::size_t b = a + 1; b < K; ++b) {
        bool symmetric = spec.exact_g ? (*spec.exact_g)(a, b) == (*spec.exact_g)(b, a)
                                      : spec.log_g(a, b) == spec.log_g(b, a);
        if (!symmetric)
          fail("g is not symmetric at (" + std::to_string(a) + "," + std::to_string(b) + ")");
      }
  }

  for (std::size_t i = 0; i < N; ++i) {
    bool any_positive = false;
    for (std::size_t k = 0; k < K; ++k) {
      bool positive = spec.exact_q ? (*spec.exact_q)(i, k).sign() > 0 : !spec.log_q(i, k).is_zero();
      any_positive = any_positive || positive;
    }
    if (!any_positive) fail("vertex " + std::to_string(i) + " has all-zero unary weights");
  }
  return report;
}

void require_valid(const ModelSpec& spec) {
  auto report = validate(spec);
  if (report.ok()) return;
  std::ostringstream msg;
  msg << "invalid model:";
  for (const auto& v : report.violations) msg << "\n  " << v;
  throw ValidationError(msg.str());
}

namespace {

template <class V>
std::optional<V> square_root(const V& v) {
  if constexpr (std::is_same_v<V, LogValue>)
    return LogValue::from_log(v.log() / 2.0);
  else
    return v.sqrt();
}

template <class V>
void require_positive(const V& v, const char* what) {
  if (is_zero(v)) throw NonPositiveWeight(std::string("canonicalization needs a positive ") + what);
}

}  // namespace

template <class V>
CanonicalBinaryModel<V> canonicalize_binary(const ModelSpec& spec) {
  if (spec.labels != 2 || spec.family != GraphFamily::Complete)
    throw std::invalid_argument("canonicalize_binary: needs a binary model on a complete graph");
  const Matrix<V>& g = spec.g<V>();
  const Matrix<V>& q = spec.q<V>();
  const std::size_t n = spec.n1;
  require_positive(g(0, 0), "g(0,0)");
  require_positive(g(1, 1), "g(1,1)");
  require_positive(g(0, 1), "g(0,1)");

  auto root = square_root(g(0, 0) * g(1, 1));
  if (!root) throw NonSquareRatio("g(0,0)*g(1,1) is not a rational square");
  CanonicalBinaryModel<V> c;
  c.alpha = g(0, 1) / *root;
  // (g00/g11)^((n-1)/2): integral power when n-1 is even, else via the root.
  V unary_shift = (n - 1) % 2 == 0 ? pow_int(g(0, 0) / g(1, 1), (n - 1) / 2) : pow_int(*root / g(1, 1), n - 1);
  c.scale = pow_int(g(1, 1), static_cast<std::uint64_t>(n) * (n - 1) / 2);
  c.beta.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    require_positive(q(i, 1), "q_i(1)");
    c.beta.push_back(q(i, 0) / q(i, 1) * unary_shift);
    c.scale *= q(i, 1);
  }
  return c;
}

template <class V>
CanonicalBinaryModel<V> canonicalize_bipartite_binary(const ModelSpec& spec) {
  if (spec.labels != 2 || spec.family != GraphFamily::CompleteBipartite)
    throw std::invalid_argument("canonicalize_bipartite_binary: needs a binary bipartite model");
  const Matrix<V>& g = spec.g<V>();
  const Matrix<V>& q = spec.q<V>();
  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t b = 0; b < 2; ++b) require_positive(g(a, b), "pairwise weight");

  auto alpha = square_root(g(0, 1) * g(1, 0) / (g(0, 0) * g(1, 1)));
  if (!alpha) throw NonSquareRatio("g01*g10/(g00*g11) is not a rational square");
  CanonicalBinaryModel<V> c;
  c.alpha = *alpha;
  const V shift_a = pow_int(g(1, 0) / (g(0, 0) * c.alpha), spec.n2);
  const V shift_b = pow_int(g(0, 1) / (g(0, 0) * c.alpha), spec.n1);
  c.scale = pow_int(g(0, 0), static_cast<std::uint64_t>(spec.n1) * spec.n2);
  const std::size_t N = spec.num_vertices();
  c.beta.reserve(N);
  for (std::size_t i = 0; i < N; ++i) {
    require_positive(q(i, 1), "q_i(1)");
    const V& shift = i < spec.n1 ? shift_a : shift_b;
    V label_one = q(i, 1) * shift;
    c.beta.push_back(q(i, 0) / label_one);
    c.scale *= label_one;
  }
  return c;
}

template CanonicalBinaryModel<LogValue> canonicalize_binary<LogValue>(const ModelSpec&);
template CanonicalBinaryModel<ExactRational> canonicalize_binary<ExactRational>(const ModelSpec&);
template CanonicalBinaryModel<LogValue> canonicalize_bipartite_binary<LogValue>(const ModelSpec&);
template CanonicalBinaryModel<ExactRational> canonicalize_bipartite_binary<ExactRational>(const ModelSpec&);

namespace {

ExactRational draw_weight(std::mt19937_64& rng, WeightRange range) {
  // 53-bit uniform in [0, 1), independent of the standard library's
  // distribution implementations.
  double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  double value = std::exp(std::log(range.lo) + u * (std::log(range.hi) - std::log(range.lo)));
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.5e", value);
  return ExactRational::from_decimal(buf);
}

}  // namespace

ModelSpec random_model(GraphFamily family, int labels, std::size_t n1, std::size_t n2, WeightRange range,
                       std::uint64_t seed, NumericMode mode) {
  if (!(range.lo > 0.0) || !(range.hi >= range.lo) || !std::isfinite(range.hi))
    throw std::invalid_argument("random_model: weight range must be a positive interval");
  if (labels < 2) throw std::invalid_argument("random_model: K must be at least 2");
  std::mt19937_64 rng(seed);
  const auto K = static_cast<std::size_t>(labels);
  Matrix<ExactRational> g(K, K);
  for (std::size_t a = 0; a < K; ++a) {
    for (std::size_t b = family == GraphFamily::Complete ? a : 0; b < K; ++b) {
      g(a, b) = draw_weight(rng, range);
      if (family == GraphFamily::Complete) g(b, a) = g(a, b);
    }
  }
  const std::size_t N = family == GraphFamily::Complete ? n1 : n1 + n2;
  Matrix<ExactRational> q(N, K);
  for (auto& w : q.data) w = draw_weight(rng, range);
  return make_model(family, labels, n1, n2, std::move(g), std::move(q), mode);
}

std::string to_string(GraphFamily family) {
  return family == GraphFamily::Complete ? "complete" : "bipartite";
}

std::string to_string(NumericMode mode) { return mode == NumericMode::LogFloat ? "log" : "rational"; }

}  // namespace exactmrf
