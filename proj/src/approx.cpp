#include "exactmrf/approx.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <stdexcept>

#include "exactmrf/exact_bipartite.hpp"

namespace exactmrf {

namespace {

struct LogTables {
  std::size_t N = 0, K = 0;
  std::vector<double> lg;  // K x K
  std::vector<double> lq;  // N x K
};

LogTables positive_logs(const ModelSpec& spec, const char* method) {
  require_valid(spec);
  LogTables t;
  t.N = spec.num_vertices();
  t.K = static_cast<std::size_t>(spec.labels);
  for (const auto& w : spec.log_g.data) t.lg.push_back(w.log());
  for (const auto& w : spec.log_q.data) t.lq.push_back(w.log());
  for (double x : t.lg)
    if (!std::isfinite(x)) throw std::invalid_argument(std::string(method) + " requires strictly positive weights");
  for (double x : t.lq)
    if (!std::isfinite(x)) throw std::invalid_argument(std::string(method) + " requires strictly positive weights");
  return t;
}

// Coupling seen by a vertex on side `a_side` with label k from a neighbour
// with label kp. For complete graphs g is symmetric so both reads agree.
inline double coupling(const LogTables& t, bool a_side, std::size_t k, std::size_t kp) {
  return a_side ? t.lg[k * t.K + kp] : t.lg[kp * t.K + k];
}

void normalize_logits(std::vector<double>& logits) {
  double m = logits[0];
  for (double x : logits) m = std::max(m, x);
  double s = 0.0;
  for (double& x : logits) s += (x = std::exp(x - m));
  for (double& x : logits) x /= s;
}

}  // namespace

ApproxResult mean_field(const ModelSpec& spec, const MeanFieldOptions& options) {
  const LogTables t = positive_logs(spec, "mean_field");
  const std::size_t N = t.N, K = t.K;
  const bool complete = spec.family == GraphFamily::Complete;
  const std::size_t n1 = spec.n1;

  ApproxResult r;
  r.unary = Matrix<double>(N, K, 1.0 / static_cast<double>(K));
  // Per-side label totals of the current distributions.
  std::vector<double> tot_a(K, 0.0), tot_b(K, 0.0);
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t k = 0; k < K; ++k) ((complete || i < n1) ? tot_a : tot_b)[k] += r.unary(i, k);

  std::vector<double> logits(K);
  for (std::size_t sweep = 0; sweep < options.max_iters; ++sweep) {
    double change = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const bool a_side = complete || i < n1;
      auto mu = r.unary.row(i);
      for (std::size_t k = 0; k < K; ++k) {
        double field = t.lq[i * K + k];
        for (std::size_t kp = 0; kp < K; ++kp) {
          const double neighbours = complete ? tot_a[kp] - mu[kp] : (a_side ? tot_b[kp] : tot_a[kp]);
          field += neighbours * coupling(t, a_side, k, kp);
        }
        logits[k] = field;
      }
      normalize_logits(logits);
      auto& tot = a_side ? tot_a : tot_b;
      for (std::size_t k = 0; k < K; ++k) {
        const double next = (1.0 - options.damping) * logits[k] + options.damping * mu[k];
        change = std::max(change, std::abs(next - mu[k]));
        tot[k] += next - mu[k];
        mu[k] = next;
      }
    }
    r.iterations = sweep + 1;
    if (change <= options.tol) {
      r.converged = true;
      break;
    }
  }

  // Lower bound: E[log q] + E[log g] + entropy under the product distribution.
  double bound = 0.0;
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t k = 0; k < K; ++k) {
      const double p = r.unary(i, k);
      if (p > 0.0) bound += p * (t.lq[i * K + k] - std::log(p));
    }
  if (complete) {
    // sum_{i<j} mu_i^T L mu_j = (T^T L T - sum_i mu_i^T L mu_i) / 2
    double cross = 0.0;
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t kp = 0; kp < K; ++kp) cross += tot_a[k] * tot_a[kp] * t.lg[k * K + kp];
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t k = 0; k < K; ++k)
        for (std::size_t kp = 0; kp < K; ++kp) cross -= r.unary(i, k) * r.unary(i, kp) * t.lg[k * K + kp];
    bound += cross / 2.0;
  } else {
    for (std::size_t k = 0; k < K; ++k)
      for (std::size_t kp = 0; kp < K; ++kp) bound += tot_a[k] * tot_b[kp] * t.lg[k * K + kp];
  }
  r.log_Z = bound;
  return r;
}

ApproxResult gibbs(const ModelSpec& spec, const GibbsOptions& options) {
  const LogTables t = positive_logs(spec, "gibbs");
  const std::size_t N = t.N, K = t.K;
  const bool complete = spec.family == GraphFamily::Complete;
  const std::size_t n1 = spec.n1;

  std::mt19937_64 rng(options.seed);
  auto uniform = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };

  std::vector<std::size_t> x(N);
  std::vector<std::size_t> cnt_a(K, 0), cnt_b(K, 0);
  for (std::size_t i = 0; i < N; ++i) {
    x[i] = static_cast<std::size_t>(uniform() * static_cast<double>(K));
    ++((complete || i < n1) ? cnt_a : cnt_b)[x[i]];
  }

  std::vector<double> probs(K);
  std::vector<std::size_t> freq(N * K, 0);
  const std::size_t sweeps = options.burn_in + options.samples;
  for (std::size_t sweep = 0; sweep < sweeps; ++sweep) {
    for (std::size_t i = 0; i < N; ++i) {
      const bool a_side = complete || i < n1;
      auto& own = a_side ? cnt_a : cnt_b;
      --own[x[i]];
      const auto& other = complete ? cnt_a : (a_side ? cnt_b : cnt_a);
      for (std::size_t k = 0; k < K; ++k) {
        double field = t.lq[i * K + k];
        for (std::size_t kp = 0; kp < K; ++kp)
          if (other[kp] != 0) field += static_cast<double>(other[kp]) * coupling(t, a_side, k, kp);
        probs[k] = field;
      }
      normalize_logits(probs);
      double u = uniform();
      std::size_t label = K - 1;
      for (std::size_t k = 0; k + 1 < K; ++k) {
        if (u < probs[k]) {
          label = k;
          break;
        }
        u -= probs[k];
      }
      x[i] = label;
      ++own[label];
    }
    if (sweep >= options.burn_in)
      for (std::size_t i = 0; i < N; ++i) ++freq[i * K + x[i]];
  }

  ApproxResult r;
  r.unary = Matrix<double>(N, K, 0.0);
  r.iterations = options.samples;
  r.converged = true;
  r.seed = options.seed;
  if (options.samples > 0) {
    for (std::size_t i = 0; i < N * K; ++i)
      r.unary.data[i] = static_cast<double>(freq[i]) / static_cast<double>(options.samples);
  } else {
    for (std::size_t i = 0; i < N; ++i) r.unary(i, x[i]) = 1.0;
  }
  return r;
}

EvaluationReport evaluate(const ModelSpec& spec, const std::vector<std::string>& methods,
                          const EvaluateOptions& options) {
  EvaluationReport report;
  if (methods.empty()) return report;
  const MarginalReport exact = unary_marginals(spec);
  report.exact_log_Z = exact.log_Z;
  report.exact_unary = exact.unary;
  const std::size_t N = spec.num_vertices(), K = static_cast<std::size_t>(spec.labels);

  for (const auto& name : methods) {
    MethodEvaluation e;
    e.method = name;
    const auto start = std::chrono::steady_clock::now();
    try {
      if (name == "mean_field")
        e.result = mean_field(spec, options.mean_field);
      else if (name == "gibbs")
        e.result = gibbs(spec, options.gibbs);
      else
        throw std::invalid_argument("unknown method \"" + name + "\"");
      e.ok = true;
    } catch (const std::exception& ex) {
      e.error = ex.what();
    }
    if (options.timing)
      e.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    if (e.ok) {
      e.l1.assign(N, 0.0);
      e.linf.assign(N, 0.0);
      for (std::size_t i = 0; i < N; ++i) {
        for (std::size_t k = 0; k < K; ++k) {
          const double d = std::abs(e.result.unary(i, k) - exact.unary(i, k));
          e.l1[i] += d;
          e.linf[i] = std::max(e.linf[i], d);
        }
        e.l1_mean += e.l1[i] / static_cast<double>(N);
        e.linf_max = std::max(e.linf_max, e.linf[i]);
      }
      if (e.result.log_Z) e.log_Z_error = std::abs(*e.result.log_Z - exact.log_Z);
    }
    report.methods.push_back(std::move(e));
  }
  return report;
}

double coupling_summary(const ModelSpec& spec) {
  const auto K = static_cast<std::size_t>(spec.labels);
  const auto& g = spec.log_g;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t kp = 0; kp < K; ++kp) {
      if (k == kp) continue;
      const double off = (g(k, kp).log() + g(kp, k).log()) / 2.0;
      const double diag = (g(k, k).log() + g(kp, kp).log()) / 2.0;
      if (std::isnan(off - diag)) continue;
      best = std::max(best, off - diag);
    }
  return std::exp(best);
}

}  // namespace exactmrf
