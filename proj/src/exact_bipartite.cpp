#include "exactmrf/exact_bipartite.hpp"

#include <numeric>
#include <stdexcept>

#include "engine.hpp"
#include "exactmrf/parallel.hpp"

namespace exactmrf {

namespace {

void require_bipartite(const ModelSpec& spec) {
  require_valid(spec);
  if (spec.family != GraphFamily::CompleteBipartite) throw std::invalid_argument("expected a bipartite model");
}

std::vector<std::size_t> range_of(std::size_t begin, std::size_t end) {
  std::vector<std::size_t> v(end - begin);
  std::iota(v.begin(), v.end(), begin);
  return v;
}

// cross(a) = sum_b other(b) prod_{k,k'} g(k,k')^{a_k b_k'} over count vectors
// a with total `self_size`. With transpose set, g is read as g(k',k), for the
// B side.
template <class V>
HTable<V> cross_weights(const Matrix<V>& g, const HTable<V>& other, std::size_t self_size, bool transpose) {
  const int K = other.labels();
  HTable<V> out(K, self_size, self_size);
  std::vector<std::pair<CountVector, V>> terms;
  other.for_each([&](const CountVector& b, const V& h) {
    if (!is_zero(h)) terms.emplace_back(b, h);
  });
  out.layout().for_each(self_size, [&](std::size_t idx, const CountVector& a) {
    V acc;
    for (const auto& [b, h] : terms) {
      V prod = h;
      for (int k = 0; k < K && !is_zero(prod); ++k) {
        if (a[k] == 0) continue;
        for (int kp = 0; kp < K; ++kp) {
          if (b[kp] == 0) continue;
          const auto ku = static_cast<std::size_t>(k), kpu = static_cast<std::size_t>(kp);
          const V& w = transpose ? g(kpu, ku) : g(ku, kpu);
          prod *= pow_int(w, static_cast<std::uint64_t>(a[k]) * b[kp]);
        }
      }
      if (!is_zero(prod)) acc += prod;
    }
    out[idx] = std::move(acc);
  });
  return out;
}

template <class V>
struct Sides {
  detail::Field<V> field;
  HTable<V> h_a;
  HTable<V> h_b;
};

template <class V>
Sides<V> build_sides(const ModelSpec& spec) {
  detail::Field<V> f = detail::prepare_field<V>(spec);
  const std::size_t n1 = spec.n1, n2 = spec.n2;
  auto a = range_of(0, n1), b = range_of(n1, n1 + n2);
  HTable<V> h_a = detail::forward(f.q, spec.labels, a, n1);
  HTable<V> h_b = detail::forward(f.q, spec.labels, b, n2);
  return {std::move(f), std::move(h_a), std::move(h_b)};
}

template <class V>
MarginalReport bipartite_marginals(const ModelSpec& spec, const InverseOptions& options) {
  require_bipartite(spec);
  const int K = spec.labels;
  const std::size_t n1 = spec.n1, n2 = spec.n2, N = n1 + n2;
  Sides<V> s = build_sides<V>(spec);
  const HTable<V> F = cross_weights(s.field.g, s.h_b, n1, false);
  const V Z = detail::class_sum(s.h_a, F, 0) * s.field.scale;

  MarginalReport report;
  report.mode = std::is_same_v<V, LogValue> ? NumericMode::LogFloat : NumericMode::ExactRational;
  report.log_Z = log_of(Z);
  if constexpr (std::is_same_v<V, ExactRational>) {
    report.Z_exact = Z;
    report.unary_exact = Matrix<ExactRational>(N, static_cast<std::size_t>(K));
  }
  report.unary = Matrix<double>(N, static_cast<std::size_t>(K), std::numeric_limits<double>::quiet_NaN());
  report.diagnostics.digits_lost.assign(N, 0.0);
  report.diagnostics.fallback.assign(N, false);
  report.diagnostics.canonical_path = s.field.canonical;
  report.diagnostics.zero_partition = is_zero(Z);
  report.diagnostics.kernels = std::string(kernels::active().name);
  if (report.diagnostics.zero_partition) return report;

  const HTable<V> G = cross_weights(s.field.g, s.h_a, n2, true);
  const detail::RemovalPlanner plan_a(s.h_a.layout(), n1 - 1);
  const detail::RemovalPlanner plan_b(s.h_b.layout(), n2 - 1);

  parallel_for(N, [&](std::size_t v) {
    const bool side_a = v < n1;
    const HTable<V>& h = side_a ? s.h_a : s.h_b;
    const HTable<V>& w = side_a ? F : G;
    const std::size_t begin = side_a ? 0 : n1, end = side_a ? n1 : N;
    auto removed = detail::remove_vertex<V>(h, s.field.q.row(v), side_a ? plan_a : plan_b, options, [&] {
      auto rest = detail::all_but(begin, end, {v});
      return detail::forward(s.field.q, K, rest, h.layout().capacity());
    });
    std::vector<V> sums(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k)
      sums[static_cast<std::size_t>(k)] =
          s.field.q(v, static_cast<std::size_t>(k)) * detail::class_sum(removed.table, w, h.layout().stride(k));
    ExactRational* exact = report.unary_exact ? &(*report.unary_exact)(v, 0) : nullptr;
    detail::normalize_row<V>(sums, report.unary.row(v), exact);
    report.diagnostics.digits_lost[v] = removed.digits_lost;
    report.diagnostics.fallback[v] = removed.fell_back;
  });
  return report;
}

}  // namespace

template <class V>
BipartiteHTables<V> h_forward_bipartite(const ModelSpec& spec) {
  require_bipartite(spec);
  const auto& q = spec.q<V>();
  auto a = range_of(0, spec.n1), b = range_of(spec.n1, spec.n1 + spec.n2);
  return {detail::forward(q, spec.labels, a, spec.n1), detail::forward(q, spec.labels, b, spec.n2)};
}

template <class V>
PartitionResult<V> partition_bipartite(const ModelSpec& spec) {
  require_bipartite(spec);
  Sides<V> s = build_sides<V>(spec);
  const HTable<V> F = cross_weights(s.field.g, s.h_b, spec.n1, false);
  PartitionResult<V> r{detail::class_sum(s.h_a, F, 0) * s.field.scale, false, s.field.canonical};
  r.zero_partition = is_zero(r.Z);
  return r;
}

MarginalReport unary_marginals_bipartite(const ModelSpec& spec, const InverseOptions& options) {
  if (spec.mode == NumericMode::ExactRational) return bipartite_marginals<ExactRational>(spec, options);
  return bipartite_marginals<LogValue>(spec, options);
}

template BipartiteHTables<LogValue> h_forward_bipartite<LogValue>(const ModelSpec&);
template BipartiteHTables<ExactRational> h_forward_bipartite<ExactRational>(const ModelSpec&);
template PartitionResult<LogValue> partition_bipartite<LogValue>(const ModelSpec&);
template PartitionResult<ExactRational> partition_bipartite<ExactRational>(const ModelSpec&);

}  // namespace exactmrf
