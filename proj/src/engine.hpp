#pragma once

// Backend-generic DP building blocks shared by the complete and bipartite
// engines. Log-domain paths go through the SIMD kernel set; exact paths use
// plain loops over the simplex.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "exactmrf/errors.hpp"
#include "exactmrf/exact_complete.hpp"
#include "exactmrf/htable.hpp"
#include "exactmrf/kernels.hpp"
#include "exactmrf/model.hpp"

namespace exactmrf::detail {

// Weights the DP runs on. Z_original = Z_field * scale.
template <class V>
struct Field {
  int labels = 2;
  Matrix<V> q;
  Matrix<V> g;
  V scale = one_of<V>();
  bool canonical = false;
};

template <class V>
Field<V> raw_field(const ModelSpec& spec) {
  Field<V> f;
  f.labels = spec.labels;
  f.q = spec.q<V>();
  f.g = spec.g<V>();
  return f;
}

template <class V>
Field<V> canonical_field(const CanonicalBinaryModel<V>& c) {
  Field<V> f;
  f.labels = 2;
  f.q = Matrix<V>(c.beta.size(), 2);
  for (std::size_t i = 0; i < c.beta.size(); ++i) {
    f.q(i, 0) = c.beta[i];
    f.q(i, 1) = one_of<V>();
  }
  f.g = Matrix<V>(2, 2);
  f.g(0, 0) = f.g(1, 1) = one_of<V>();
  f.g(0, 1) = f.g(1, 0) = c.alpha;
  f.scale = c.scale;
  f.canonical = true;
  return f;
}

// Binary models run on the alpha/beta form when it exists; anything else
// (K > 2, zero weights, irrational roots in exact mode) uses raw weights.
template <class V>
Field<V> prepare_field(const ModelSpec& spec) {
  if (spec.labels == 2) {
    try {
      if (spec.family == GraphFamily::Complete) return canonical_field(canonicalize_binary<V>(spec));
      return canonical_field(canonicalize_bipartite_binary<V>(spec));
    } catch (const NonPositiveWeight&) {
    } catch (const NonSquareRatio&) {
    }
  }
  return raw_field<V>(spec);
}

template <class V>
std::size_t argmax_label(std::span<const V> q) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < q.size(); ++k)
    if (q[best] < q[k]) best = k;
  return best;
}

// dst (owner = src.owner + 1) = src with one more vertex of weights q.
template <class V>
void insert_into(const HTable<V>& src, HTable<V>& dst, std::span<const V> q) {
  const SimplexLayout& layout = src.layout();
  const std::size_t total = src.owner_size() + 1;
  dst.set_owner_size(total);
  const int K = layout.labels();
  if constexpr (std::is_same_v<V, LogValue>) {
    kernels::ShiftTerm terms[32];
    std::size_t num_terms = 0;
    for (int k = 0; k < K; ++k) {
      if (q[static_cast<std::size_t>(k)].is_zero()) continue;
      terms[num_terms++] = {static_cast<std::ptrdiff_t>(layout.stride(k)), q[static_cast<std::size_t>(k)].log()};
    }
    const auto& kern = kernels::active();
    const double* in = raw_logs(src);
    double* out = raw_logs(dst);
    layout.for_each_row(total, [&](std::size_t start, std::size_t len) {
      kern.shifted_lse(out + start, in + start, len, terms, num_terms);
    });
  } else {
    layout.for_each_row(total, [&](std::size_t start, std::size_t len) {
      for (std::size_t j = start; j < start + len; ++j) {
        V acc;
        for (int k = 0; k < K; ++k) {
          const V& w = q[static_cast<std::size_t>(k)];
          if (is_zero(w)) continue;
          const V& h = src.data()[static_cast<std::ptrdiff_t>(j) - static_cast<std::ptrdiff_t>(layout.stride(k))];
          if (!is_zero(h)) acc += w * h;
        }
        dst[j] = std::move(acc);
      }
    });
  }
}

// H over the listed vertices (rows of q), in list order.
template <class V>
HTable<V> forward(const Matrix<V>& q, int labels, std::span<const std::size_t> vertices, std::size_t capacity) {
  HTable<V> a(labels, 0, capacity), b(labels, 0, capacity);
  a[0] = one_of<V>();
  for (std::size_t v : vertices) {
    insert_into(a, b, q.row(v));
    std::swap(a, b);
  }
  return a;
}

template <class V, class Visit>
void leave_one_out_split(const Matrix<V>& q, const HTable<V>& h, std::span<const std::size_t> targets, Visit& visit) {
  if (targets.size() == 1) {
    visit(targets[0], h);
    return;
  }
  auto extend = [&](std::span<const std::size_t> add) {
    HTable<V> a = h, b(h.labels(), 0, h.layout().capacity());
    for (std::size_t v : add) {
      insert_into(a, b, q.row(v));
      std::swap(a, b);
    }
    return a;
  };
  const std::size_t mid = targets.size() / 2;
  leave_one_out_split(q, extend(targets.subspan(mid)), targets.first(mid), visit);
  leave_one_out_split(q, extend(targets.first(mid)), targets.subspan(mid), visit);
}

// Calls visit(t, H) for each t in targets, H being the table over `base`
// plus every target except t. Forward insertions only, halving the target
// set at each level: O(|targets| log |targets|) insertions in total.
template <class V, class Visit>
void forward_leave_one_out(const Matrix<V>& q, int labels, std::span<const std::size_t> base,
                           std::span<const std::size_t> targets, std::size_t capacity, Visit&& visit) {
  if (targets.empty()) return;
  const HTable<V> start = forward(q, labels, base, capacity);
  leave_one_out_split(q, start, targets, visit);
}

inline std::vector<std::size_t> all_but(std::size_t begin, std::size_t end, std::initializer_list<std::size_t> skip) {
  std::vector<std::size_t> out;
  out.reserve(end - begin);
  for (std::size_t v = begin; v < end; ++v)
    if (std::find(skip.begin(), skip.end(), v) == skip.end()) out.push_back(v);
  return out;
}

// sum_m h(m) * w(m + shift), over h's domain. w must be indexable at every
// shifted index (same layout, owner size >= h's).
template <class V>
V class_sum(const HTable<V>& h, const HTable<V>& w, std::size_t shift) {
  if constexpr (std::is_same_v<V, LogValue>) {
    double r = kernels::active().lse_dot(raw_logs(h), raw_logs(w) + shift, h.layout().dense_size());
    return LogValue::from_log(r);
  } else {
    V acc;
    h.layout().for_each(h.owner_size(), [&](std::size_t idx, const CountVector&) {
      const V& a = h[idx];
      if (is_zero(a)) return;
      const V& b = w[idx + shift];
      if (!is_zero(b)) acc += a * b;
    });
    return acc;
  }
}

// Pairwise class weights prod_{k<=k'} g(k,k')^{n(m)(k,k')} over count
// vectors with total n.
template <class V>
HTable<V> complete_weights(const Matrix<V>& g, int labels, std::size_t n) {
  HTable<V> w(labels, n, n);
  w.layout().for_each(n, [&](std::size_t idx, const CountVector& m) {
    V prod = one_of<V>();
    for (int a = 0; a < labels && !is_zero(prod); ++a)
      for (int b = a; b < labels; ++b) {
        std::uint64_t e = edge_exponent(m, a, b);
        if (e != 0) prod *= pow_int(g(static_cast<std::size_t>(a), static_cast<std::size_t>(b)), e);
      }
    w[idx] = std::move(prod);
  });
  return w;
}

// Straight-line order for one pivot of the triangular inverse solve:
// entries of the leave-one-out domain sorted by descending count of the
// pivot label, so every dependency is solved before it is read.
struct RemovalPlan {
  struct Entry {
    std::size_t index;
    std::uint32_t nonzero_labels;  // bit k set when m_k >= 1
  };
  int pivot = 0;
  std::vector<Entry> entries;
};

class RemovalPlanner {
 public:
  RemovalPlanner(const SimplexLayout& layout, std::size_t total);
  const RemovalPlan& plan(int pivot) const { return plans_[static_cast<std::size_t>(pivot)]; }
  std::size_t total() const { return total_; }

 private:
  std::size_t total_;
  std::vector<RemovalPlan> plans_;
};

// Leave-one-out table of H without a vertex with weights q. The recompute
// callback produces the table by forward insertion for the log fallback.
template <class V>
LeaveOneOut<V> remove_vertex(const HTable<V>& h, std::span<const V> q, const RemovalPlanner& planner,
                             const InverseOptions& options, const std::function<HTable<V>()>& recompute);

extern template LeaveOneOut<LogValue> remove_vertex<LogValue>(const HTable<LogValue>&, std::span<const LogValue>,
                                                              const RemovalPlanner&, const InverseOptions&,
                                                              const std::function<HTable<LogValue>()>&);
extern template LeaveOneOut<ExactRational> remove_vertex<ExactRational>(
    const HTable<ExactRational>&, std::span<const ExactRational>, const RemovalPlanner&, const InverseOptions&,
    const std::function<HTable<ExactRational>()>&);

// Normalizes per-label sums into probabilities. Returns false (and fills
// NaN) when every sum is zero.
template <class V>
bool normalize_row(std::span<const V> sums, std::span<double> out, ExactRational* exact_out);

}  // namespace exactmrf::detail
