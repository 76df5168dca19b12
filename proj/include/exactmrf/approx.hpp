#pragma once

// Approximate-inference baselines and the harness that scores them against
// exact marginals.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "exactmrf/exact_complete.hpp"
#include "exactmrf/model.hpp"

namespace exactmrf {

struct ApproxResult {
  Matrix<double> unary;  // N x K, rows sum to 1
  std::size_t iterations = 0;  // sweeps (mean field) or recorded samples (Gibbs)
  bool converged = false;
  std::uint64_t seed = 0;
  // Only methods that estimate the partition function set this.
  std::optional<double> log_Z;
};

struct MeanFieldOptions {
  std::size_t max_iters = 1000;
  // Converged once a sweep changes no probability by more than tol.
  double tol = 1e-12;
  // Weight of the previous distribution in each update.
  double damping = 0.5;
};

// Naive mean field, uniform start, sweeps in vertex order. log_Z is the
// variational lower bound at the final distributions. Requires strictly
// positive weights.
ApproxResult mean_field(const ModelSpec& spec, const MeanFieldOptions& options = {});

struct GibbsOptions {
  std::size_t burn_in = 1000;
  std::size_t samples = 10000;
  std::uint64_t seed = 0;
};

// Systematic-sweep single-site Gibbs sampler; estimates are label
// frequencies over the recorded sweeps. Requires strictly positive weights.
ApproxResult gibbs(const ModelSpec& spec, const GibbsOptions& options = {});

struct EvaluateOptions {
  MeanFieldOptions mean_field;
  GibbsOptions gibbs;
  bool timing = true;
};

struct MethodEvaluation {
  std::string method;
  bool ok = false;
  std::string error;
  std::vector<double> l1;    // per vertex
  std::vector<double> linf;  // per vertex
  double l1_mean = 0.0;
  double linf_max = 0.0;
  std::optional<double> log_Z_error;
  double wall_ms = 0.0;
  ApproxResult result;
};

struct EvaluationReport {
  double exact_log_Z = 0.0;
  Matrix<double> exact_unary;
  std::vector<MethodEvaluation> methods;
};

// Method names: "mean_field", "gibbs". Unknown names and method failures
// become entries with ok = false.
EvaluationReport evaluate(const ModelSpec& spec, const std::vector<std::string>& methods,
                          const EvaluateOptions& options = {});

// Coupling strength of a model: the largest g(k,k') / sqrt(g(k,k) g(k',k'))
// over label pairs k != k' (for bipartite graphs, g symmetrized by geometric
// mean). For binary models this is the canonical alpha.
double coupling_summary(const ModelSpec& spec);

}  // namespace exactmrf
