#pragma once

// Brute-force ground truth: enumerates every labelling and multiplies out its
// factors from scratch. Slow on purpose and independent of the DP engines.

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "exactmrf/model.hpp"
#include "exactmrf/report.hpp"

namespace exactmrf {

struct OracleOptions {
  // Maximum number of labellings enumerated.
  std::uint64_t cap = 20'000'000;
};

// K^N, saturating at UINT64_MAX.
std::uint64_t labelling_count(const ModelSpec& spec);

// Throws TooLarge when labelling_count exceeds the cap.
template <class V>
V brute_partition(const ModelSpec& spec, const OracleOptions& options = {});

// Unary marginals for every vertex plus pairwise tables for the given pairs,
// in spec.mode.
MarginalReport brute_marginals(const ModelSpec& spec, std::span<const std::pair<std::size_t, std::size_t>> pairs = {},
                               const OracleOptions& options = {});

// Every pair i < j.
std::vector<std::pair<std::size_t, std::size_t>> all_pairs(std::size_t n);

}  // namespace exactmrf
