#pragma once

// Exact partition function and marginals for K-valued fields with a shared
// pairwise table on complete graphs.
//
// Labellings are grouped by their count vector m: every labelling in a group
// has the same pairwise product prod_{k<=k'} g(k,k')^{n(m)(k,k')}, so
// Z = sum_m H(m) * prod g^{n(m)}, where H(m) sums the unary products over the
// group. H is built by inserting vertices one at a time,
//   H_U(m) = sum_k q_i(k) H_{U\i}(m - e_k),
// and the insertion is inverted to obtain the leave-one-out tables H_{V\i}
// that unary and pairwise marginals need.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "exactmrf/htable.hpp"
#include "exactmrf/model.hpp"
#include "exactmrf/numerics.hpp"
#include "exactmrf/report.hpp"

namespace exactmrf {

struct InverseOptions {
  // Estimated decimal digits of precision the log-domain inverse may lose,
  // relative to the precision of H_V itself, before the leave-one-out table
  // is recomputed by forward insertion.
  double loss_budget_digits = 4.0;
};

template <class V>
struct LeaveOneOut {
  HTable<V> table;
  // Largest estimated loss over the table entries, in decimal digits
  // (log mode only).
  double digits_lost = 0.0;
  bool fell_back = false;
};

template <class V>
struct PartitionResult {
  V Z;
  bool zero_partition = false;
  // True when the binary canonical (alpha/beta) path was used.
  bool canonical_path = false;
};

// H_V over the raw unary weights, inserting vertices in index order or in
// the given order.
template <class V>
HTable<V> h_forward(const ModelSpec& spec);
template <class V>
HTable<V> h_forward(const ModelSpec& spec, std::span<const std::size_t> order);

// One forward insertion of `vertex` into `table` (raw weights).
template <class V>
HTable<V> insert_vertex(const HTable<V>& table, std::size_t vertex, const ModelSpec& spec);

// H_{V\vertex} from H_V. In log mode the inverse tracks cancellation and
// falls back to forward recomputation beyond the loss budget.
template <class V>
LeaveOneOut<V> leave_one_out(const HTable<V>& h_full, std::size_t vertex, const ModelSpec& spec,
                             const InverseOptions& options = {});

// Partition sum of the original model. V selects the backend; rational
// requires exact weights.
template <class V>
PartitionResult<V> partition(const ModelSpec& spec);

// Unary marginals for every vertex, in spec.mode.
MarginalReport unary_marginals(const ModelSpec& spec, const InverseOptions& options = {});
// Unary marginals plus pairwise tables for the requested vertex pairs.
MarginalReport marginals(const ModelSpec& spec, std::span<const std::pair<std::size_t, std::size_t>> pairs,
                         const InverseOptions& options = {});
MarginalReport pairwise_marginals(const ModelSpec& spec,
                                  std::span<const std::pair<std::size_t, std::size_t>> pairs,
                                  const InverseOptions& options = {});

}  // namespace exactmrf
