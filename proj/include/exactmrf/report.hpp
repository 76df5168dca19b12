#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "exactmrf/model.hpp"
#include "exactmrf/numerics.hpp"

namespace exactmrf {

struct PairTable {
  std::size_t i = 0;
  std::size_t j = 0;
  Matrix<double> probabilities;  // K x K, row = label of i
  std::optional<Matrix<ExactRational>> exact;
  bool fell_back = false;
};

struct MarginalDiagnostics {
  std::vector<double> digits_lost;  // per vertex
  std::vector<bool> fallback;       // per vertex
  bool canonical_path = false;
  bool zero_partition = false;
  std::string kernels;
};

struct MarginalReport {
  NumericMode mode = NumericMode::LogFloat;
  double log_Z = 0.0;
  std::optional<ExactRational> Z_exact;
  Matrix<double> unary;  // N x K
  std::optional<Matrix<ExactRational>> unary_exact;
  std::vector<PairTable> pairwise;
  MarginalDiagnostics diagnostics;
};

}  // namespace exactmrf
