#pragma once

// Exact inference on complete bipartite graphs with a shared pairwise table.
// The unary contribution of a class (m^A, m^B) factorizes over the two sides,
// so each side keeps its own H table; a class weighs
// prod_{k,k'} g(k,k')^{m^A_k m^B_k'}.

#include "exactmrf/exact_complete.hpp"

namespace exactmrf {

template <class V>
struct BipartiteHTables {
  HTable<V> h_a;
  HTable<V> h_b;
};

template <class V>
BipartiteHTables<V> h_forward_bipartite(const ModelSpec& spec);

template <class V>
PartitionResult<V> partition_bipartite(const ModelSpec& spec);

MarginalReport unary_marginals_bipartite(const ModelSpec& spec, const InverseOptions& options = {});

}  // namespace exactmrf
