#include "exactmrf/exact_complete.hpp"

#include <numeric>
#include <stdexcept>

#include "engine.hpp"
#include "exactmrf/exact_bipartite.hpp"
#include "exactmrf/parallel.hpp"

namespace exactmrf {
namespace detail {

RemovalPlanner::RemovalPlanner(const SimplexLayout& layout, std::size_t total) : total_(total) {
  const int K = layout.labels();
  std::vector<std::pair<std::size_t, RemovalPlan::Entry>> keyed;
  keyed.reserve(simplex_size(K, total));
  for (int p = 0; p < K; ++p) {
    keyed.clear();
    layout.for_each(total, [&](std::size_t idx, const CountVector& m) {
      std::uint32_t mask = 0;
      for (int k = 0; k < K; ++k)
        if (m[k] > 0) mask |= 1u << k;
      keyed.push_back({m[p], {idx, mask}});
    });
    std::stable_sort(keyed.begin(), keyed.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    RemovalPlan plan;
    plan.pivot = p;
    plan.entries.reserve(keyed.size());
    for (const auto& e : keyed) plan.entries.push_back(e.second);
    plans_.push_back(std::move(plan));
  }
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kInf = std::numeric_limits<double>::infinity();

inline double log_add2(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  double hi = std::max(a, b), lo = std::min(a, b);
  return hi + std::log1p(std::exp(lo - hi));
}

struct PivotSolve {
  HTable<LogValue> table;
  std::vector<double> amplification;
  double max_amplification = 1.0;
};

// One triangular solve of sum_k q_k H'(m - e_k) = H(m) for H', dividing by
// the pivot weight. Alongside each value it propagates an error
// amplification factor: a subtraction A - S whose inputs carry relative
// errors (1, a_S) yields relative error (A + S a_S) / (A - S) in the same
// units. Entries whose subtraction goes negative or cancels completely get
// an infinite factor, which poisons everything computed from them.
PivotSolve solve_pivot(const HTable<LogValue>& h, std::span<const LogValue> q, const RemovalPlan& plan,
                       std::size_t total) {
  const SimplexLayout& layout = h.layout();
  const int K = layout.labels();
  const int p = plan.pivot;
  PivotSolve s{HTable<LogValue>(K, total, layout.capacity()), std::vector<double>(layout.dense_size(), 1.0), 1.0};

  struct Dep {
    std::uint32_t bit;
    std::ptrdiff_t offset;
    double log_weight;
  };
  std::vector<Dep> deps;
  for (int k = 0; k < K; ++k) {
    if (k == p || q[static_cast<std::size_t>(k)].is_zero()) continue;
    deps.push_back({1u << k,
                    static_cast<std::ptrdiff_t>(layout.stride(p)) - static_cast<std::ptrdiff_t>(layout.stride(k)),
                    q[static_cast<std::size_t>(k)].log()});
  }
  const double pivot_log = q[static_cast<std::size_t>(p)].log();
  const std::size_t target = layout.stride(p);
  const double* H = raw_logs(h);
  double* out = raw_logs(s.table);
  double* amp = s.amplification.data();
  const double eps = std::numeric_limits<double>::epsilon();

  for (const auto& e : plan.entries) {
    const double A = H[e.index + target];
    double S = kNegInf, dep_amp = 0.0;
    for (const auto& d : deps) {
      if ((e.nonzero_labels & d.bit) == 0) continue;
      const std::size_t j = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(e.index) + d.offset);
      dep_amp = std::max(dep_amp, amp[j]);
      if (out[j] != kNegInf) S = log_add2(S, d.log_weight + out[j]);
    }
    double value, a;
    if (S == kNegInf) {
      value = A == kNegInf ? kNegInf : A - pivot_log;
      a = dep_amp == kInf ? kInf : 1.0;
    } else if (A == kNegInf || S - A >= -8.0 * eps * std::max(1.0, std::abs(A))) {
      // Negative or fully cancelled difference.
      value = kNegInf;
      a = kInf;
    } else {
      const double d = S - A;
      const double one_minus_r = -std::expm1(d);
      value = A + std::log(one_minus_r) - pivot_log;
      const double r = std::exp(d);
      a = dep_amp == kInf ? kInf : (1.0 + r * dep_amp) / one_minus_r;
    }
    out[e.index] = value;
    amp[e.index] = a;
    s.max_amplification = std::max(s.max_amplification, a);
  }
  return s;
}

LeaveOneOut<LogValue> remove_log(const HTable<LogValue>& h, std::span<const LogValue> q,
                                 const RemovalPlanner& planner, const InverseOptions& options,
                                 const std::function<HTable<LogValue>()>& recompute) {
  const double budget = std::pow(10.0, options.loss_budget_digits);
  const std::size_t best = argmax_label(q);
  PivotSolve primary = solve_pivot(h, q, planner.plan(static_cast<int>(best)), planner.total());
  if (primary.max_amplification <= budget)
    return {std::move(primary.table), std::log10(primary.max_amplification), false};

  // Each pivot is stable where its own label count is large; merge the
  // solves entry by entry, keeping the smallest amplification.
  double* out = raw_logs(primary.table);
  for (std::size_t p = 0; p < q.size(); ++p) {
    if (p == best || q[p].is_zero()) continue;
    PivotSolve alt = solve_pivot(h, q, planner.plan(static_cast<int>(p)), planner.total());
    const double* alt_out = raw_logs(alt.table);
    for (const auto& e : planner.plan(0).entries) {
      if (alt.amplification[e.index] < primary.amplification[e.index]) {
        primary.amplification[e.index] = alt.amplification[e.index];
        out[e.index] = alt_out[e.index];
      }
    }
  }
  double worst = 1.0;
  for (const auto& e : planner.plan(0).entries) worst = std::max(worst, primary.amplification[e.index]);
  if (worst <= budget) return {std::move(primary.table), std::log10(worst), false};
  return {recompute(), std::log10(worst), true};
}

LeaveOneOut<ExactRational> remove_exact(const HTable<ExactRational>& h, std::span<const ExactRational> q,
                                        const RemovalPlanner& planner) {
  const SimplexLayout& layout = h.layout();
  const int K = layout.labels();
  const std::size_t p = argmax_label(q);
  const RemovalPlan& plan = planner.plan(static_cast<int>(p));
  HTable<ExactRational> out(K, planner.total(), layout.capacity());
  const std::size_t target = layout.stride(static_cast<int>(p));
  for (const auto& e : plan.entries) {
    ExactRational value = h[e.index + target];
    for (int k = 0; k < K; ++k) {
      if (static_cast<std::size_t>(k) == p || (e.nonzero_labels & (1u << k)) == 0) continue;
      const auto& w = q[static_cast<std::size_t>(k)];
      if (w.is_zero()) continue;
      const std::size_t j = e.index + layout.stride(static_cast<int>(p)) - layout.stride(k);
      if (!out[j].is_zero()) value = value - w * out[j];
    }
    out[e.index] = value / q[p];
  }
  return {std::move(out), 0.0, false};
}

}  // namespace

template <class V>
LeaveOneOut<V> remove_vertex(const HTable<V>& h, std::span<const V> q, const RemovalPlanner& planner,
                             const InverseOptions& options, const std::function<HTable<V>()>& recompute) {
  if (h.owner_size() == 0) throw std::invalid_argument("leave_one_out: table has no vertices");
  if (planner.total() + 1 != h.owner_size()) throw std::invalid_argument("leave_one_out: planner size mismatch");
  if constexpr (std::is_same_v<V, LogValue>)
    return remove_log(h, q, planner, options, recompute);
  else
    return remove_exact(h, q, planner);
}

template LeaveOneOut<LogValue> remove_vertex<LogValue>(const HTable<LogValue>&, std::span<const LogValue>,
                                                       const RemovalPlanner&, const InverseOptions&,
                                                       const std::function<HTable<LogValue>()>&);
template LeaveOneOut<ExactRational> remove_vertex<ExactRational>(const HTable<ExactRational>&,
                                                                 std::span<const ExactRational>,
                                                                 const RemovalPlanner&, const InverseOptions&,
                                                                 const std::function<HTable<ExactRational>()>&);

template <class V>
bool normalize_row(std::span<const V> sums, std::span<double> out, ExactRational* exact_out) {
  V total;
  for (const auto& s : sums) total += s;
  if (is_zero(total)) {
    std::fill(out.begin(), out.end(), std::numeric_limits<double>::quiet_NaN());
    return false;
  }
  for (std::size_t k = 0; k < sums.size(); ++k) {
    if constexpr (std::is_same_v<V, LogValue>) {
      out[k] = sums[k].is_zero() ? 0.0 : std::exp(sums[k].log() - total.log());
    } else {
      ExactRational p = sums[k] / total;
      out[k] = p.to_double();
      if (exact_out != nullptr) exact_out[k] = std::move(p);
    }
  }
  return true;
}

template bool normalize_row<LogValue>(std::span<const LogValue>, std::span<double>, ExactRational*);
template bool normalize_row<ExactRational>(std::span<const ExactRational>, std::span<double>, ExactRational*);

}  // namespace detail

namespace {

void require_complete(const ModelSpec& spec) {
  require_valid(spec);
  if (spec.family != GraphFamily::Complete) throw std::invalid_argument("expected a complete-graph model");
}

std::vector<std::size_t> iota_vertices(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

template <class V>
void fill_header(MarginalReport& report, const V& Z, bool canonical, std::size_t N, int K) {
  report.mode = std::is_same_v<V, LogValue> ? NumericMode::LogFloat : NumericMode::ExactRational;
  report.log_Z = log_of(Z);
  if constexpr (std::is_same_v<V, ExactRational>) {
    report.Z_exact = Z;
    report.unary_exact = Matrix<ExactRational>(N, static_cast<std::size_t>(K));
  }
  report.unary = Matrix<double>(N, static_cast<std::size_t>(K), std::numeric_limits<double>::quiet_NaN());
  report.diagnostics.digits_lost.assign(N, 0.0);
  report.diagnostics.fallback.assign(N, false);
  report.diagnostics.canonical_path = canonical;
  report.diagnostics.zero_partition = is_zero(Z);
  report.diagnostics.kernels = std::string(kernels::active().name);
}

template <class V>
MarginalReport complete_marginals(const ModelSpec& spec, std::span<const std::pair<std::size_t, std::size_t>> pairs,
                                  const InverseOptions& options) {
  require_complete(spec);
  const std::size_t n = spec.n1;
  const int K = spec.labels;
  for (const auto& [i, j] : pairs)
    if (i >= n || j >= n || i == j) throw std::out_of_range("invalid vertex pair");

  detail::Field<V> f = detail::prepare_field<V>(spec);
  const auto vertices = iota_vertices(n);
  const HTable<V> h = detail::forward(f.q, K, vertices, n);
  const HTable<V> w = detail::complete_weights(f.g, K, n);
  const V Z = detail::class_sum(h, w, 0) * f.scale;

  MarginalReport report;
  fill_header(report, Z, f.canonical, n, K);
  if (report.diagnostics.zero_partition) return report;

  const SimplexLayout& layout = h.layout();
  const detail::RemovalPlanner planner(layout, n - 1);
  auto fill_unary = [&](std::size_t i, const HTable<V>& rest) {
    std::vector<V> sums(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k)
      sums[static_cast<std::size_t>(k)] = f.q(i, static_cast<std::size_t>(k)) * detail::class_sum(rest, w, layout.stride(k));
    ExactRational* exact = report.unary_exact ? &(*report.unary_exact)(i, 0) : nullptr;
    detail::normalize_row<V>(sums, report.unary.row(i), exact);
  };
  // Vertices over the loss budget are recomputed together afterwards.
  parallel_for(n, [&](std::size_t i) {
    auto removed = detail::remove_vertex<V>(h, f.q.row(i), planner, options, [&] { return HTable<V>(K, 0, 0); });
    report.diagnostics.digits_lost[i] = removed.digits_lost;
    report.diagnostics.fallback[i] = removed.fell_back;
    if (!removed.fell_back) fill_unary(i, removed.table);
  });
  std::vector<std::size_t> kept, redo;
  for (std::size_t i = 0; i < n; ++i) (report.diagnostics.fallback[i] ? redo : kept).push_back(i);
  detail::forward_leave_one_out(f.q, K, kept, redo, n, fill_unary);

  if (!pairs.empty()) {
    const detail::RemovalPlanner inner(layout, n - 2);
    report.pairwise.resize(pairs.size());
    parallel_for(pairs.size(), [&](std::size_t p) {
      const auto [i, j] = pairs[p];
      auto first = detail::remove_vertex<V>(h, f.q.row(i), planner, options, [&] {
        auto rest = detail::all_but(0, n, {i});
        return detail::forward(f.q, K, rest, n);
      });
      auto second = detail::remove_vertex<V>(first.table, f.q.row(j), inner, options, [&] {
        auto rest = detail::all_but(0, n, {i, j});
        return detail::forward(f.q, K, rest, n);
      });
      const auto Ku = static_cast<std::size_t>(K);
      std::vector<V> sums(Ku * Ku);
      // The {i,j} edge is already counted by evaluating the class weight at
      // m + e_k + e_k'.
      for (int a = 0; a < K; ++a)
        for (int b = 0; b < K; ++b)
          sums[static_cast<std::size_t>(a) * Ku + static_cast<std::size_t>(b)] =
              f.q(i, static_cast<std::size_t>(a)) * f.q(j, static_cast<std::size_t>(b)) *
              detail::class_sum(second.table, w, layout.stride(a) + layout.stride(b));
      PairTable table;
      table.i = i;
      table.j = j;
      table.probabilities = Matrix<double>(Ku, Ku);
      table.fell_back = first.fell_back || second.fell_back;
      ExactRational* exact = nullptr;
      if constexpr (std::is_same_v<V, ExactRational>) {
        table.exact = Matrix<ExactRational>(Ku, Ku);
        exact = table.exact->data.data();
      }
      detail::normalize_row<V>(sums, table.probabilities.data, exact);
      report.pairwise[p] = std::move(table);
    });
  }
  return report;
}

}  // namespace

template <class V>
HTable<V> h_forward(const ModelSpec& spec, std::span<const std::size_t> order) {
  require_complete(spec);
  std::vector<bool> seen(spec.n1, false);
  for (std::size_t v : order) {
    if (v >= spec.n1 || seen[v]) throw std::invalid_argument("h_forward: order must list distinct vertices");
    seen[v] = true;
  }
  return detail::forward(spec.q<V>(), spec.labels, order, spec.n1);
}

template <class V>
HTable<V> h_forward(const ModelSpec& spec) {
  const auto order = iota_vertices(spec.n1);
  return h_forward<V>(spec, order);
}

template <class V>
HTable<V> insert_vertex(const HTable<V>& table, std::size_t vertex, const ModelSpec& spec) {
  if (table.owner_size() + 1 > table.layout().capacity()) throw std::invalid_argument("insert_vertex: table is full");
  HTable<V> out(table.labels(), table.owner_size() + 1, table.layout().capacity());
  detail::insert_into(table, out, spec.q<V>().row(vertex));
  return out;
}

template <class V>
LeaveOneOut<V> leave_one_out(const HTable<V>& h_full, std::size_t vertex, const ModelSpec& spec,
                             const InverseOptions& options) {
  require_complete(spec);
  if (vertex >= spec.n1) throw std::out_of_range("leave_one_out: vertex out of range");
  if (h_full.owner_size() != spec.n1) throw std::invalid_argument("leave_one_out: table is not H_V for this model");
  const detail::RemovalPlanner planner(h_full.layout(), h_full.owner_size() - 1);
  const Matrix<V>& q = spec.q<V>();
  return detail::remove_vertex<V>(h_full, q.row(vertex), planner, options, [&] {
    auto rest = detail::all_but(0, spec.n1, {vertex});
    return detail::forward(q, spec.labels, rest, h_full.layout().capacity());
  });
}

template <class V>
PartitionResult<V> partition(const ModelSpec& spec) {
  require_complete(spec);
  detail::Field<V> f = detail::prepare_field<V>(spec);
  const auto vertices = iota_vertices(spec.n1);
  const HTable<V> h = detail::forward(f.q, spec.labels, vertices, spec.n1);
  const HTable<V> w = detail::complete_weights(f.g, spec.labels, spec.n1);
  PartitionResult<V> r{detail::class_sum(h, w, 0) * f.scale, false, f.canonical};
  r.zero_partition = is_zero(r.Z);
  return r;
}

MarginalReport marginals(const ModelSpec& spec, std::span<const std::pair<std::size_t, std::size_t>> pairs,
                         const InverseOptions& options) {
  if (spec.family == GraphFamily::CompleteBipartite) {
    if (!pairs.empty()) throw std::invalid_argument("pairwise marginals are only available on complete graphs");
    return unary_marginals_bipartite(spec, options);
  }
  if (spec.mode == NumericMode::ExactRational) return complete_marginals<ExactRational>(spec, pairs, options);
  return complete_marginals<LogValue>(spec, pairs, options);
}

MarginalReport unary_marginals(const ModelSpec& spec, const InverseOptions& options) {
  return marginals(spec, {}, options);
}

MarginalReport pairwise_marginals(const ModelSpec& spec, std::span<const std::pair<std::size_t, std::size_t>> pairs,
                                  const InverseOptions& options) {
  return marginals(spec, pairs, options);
}

#define EXACTMRF_INSTANTIATE(V)                                                                          \
  template HTable<V> h_forward<V>(const ModelSpec&);                                                     \
  template HTable<V> h_forward<V>(const ModelSpec&, std::span<const std::size_t>);                       \
  template HTable<V> insert_vertex<V>(const HTable<V>&, std::size_t, const ModelSpec&);                  \
  template LeaveOneOut<V> leave_one_out<V>(const HTable<V>&, std::size_t, const ModelSpec&,              \
                                           const InverseOptions&);                                       \
  template PartitionResult<V> partition<V>(const ModelSpec&);

EXACTMRF_INSTANTIATE(LogValue)
EXACTMRF_INSTANTIATE(ExactRational)
#undef EXACTMRF_INSTANTIATE

}  // namespace exactmrf
