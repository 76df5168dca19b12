// Acceptance suite: one PASS/FAIL line per criterion. Exits nonzero when any
// criterion fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "exactmrf/approx.hpp"
#include "exactmrf/exact_bipartite.hpp"
#include "exactmrf/exact_complete.hpp"
#include "exactmrf/htable.hpp"
#include "exactmrf/oracle.hpp"
#include "support.hpp"

using namespace exactmrf;
using testing::Gen;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

bool exact_equal(const MarginalReport& a, const MarginalReport& b) {
  return a.unary_exact.has_value() && b.unary_exact.has_value() && *a.unary_exact == *b.unary_exact;
}

double log_table_rel_diff(const HTable<LogValue>& a, const HTable<LogValue>& b) {
  double worst = 0.0;
  a.for_each([&](const CountVector& m, const LogValue& v) {
    worst = std::max(worst, testing::log_rel_diff(v.log(), b.at(m).log()));
  });
  return worst;
}

std::vector<std::size_t> all_but(std::size_t n, std::size_t skip) {
  std::vector<std::size_t> v;
  for (std::size_t i = 0; i < n; ++i)
    if (i != skip) v.push_back(i);
  return v;
}

// Unary marginal of `vertex` from a table over the other vertices of a
// complete graph: p(k) proportional to q(k) sum_m H(m) W(m + e_k).
std::vector<double> marginal_from_rest(const HTable<LogValue>& rest, std::size_t vertex, const ModelSpec& s) {
  const int K = s.labels;
  std::vector<double> logs(static_cast<std::size_t>(K), -INFINITY);
  rest.for_each([&](const CountVector& m, const LogValue& h) {
    if (h.is_zero()) return;
    for (int k = 0; k < K; ++k) {
      const CountVector mk = m.plus(k);
      double lw = h.log() + s.log_q(vertex, static_cast<std::size_t>(k)).log();
      for (int a = 0; a < K; ++a)
        for (int b = a; b < K; ++b) {
          const std::uint64_t e = edge_exponent(mk, a, b);
          if (e > 0) lw += static_cast<double>(e) * s.log_g(a, b).log();
        }
      double& acc = logs[static_cast<std::size_t>(k)];
      const double hi = std::max(acc, lw);
      if (hi != -INFINITY) acc = hi + std::log(std::exp(acc - hi) + std::exp(lw - hi));
    }
  });
  const double hi = *std::max_element(logs.begin(), logs.end());
  double total = 0.0;
  for (double& l : logs) total += (l = std::exp(l - hi));
  for (double& l : logs) l /= total;
  return logs;
}

// --- 1 ------------------------------------------------------------------

Outcome oracle_complete() {
  const auto start = Clock::now();
  Gen gen(1001);
  double worst_z = 0.0, worst_p = 0.0;
  int exact_mismatch = 0;
  for (int t = 0; t < 200; ++t) {
    const int K = 2 + static_cast<int>(gen.range(0, 2));
    const std::size_t n = gen.range(2, K == 4 ? 7 : 10);
    const ModelSpec s = random_model(GraphFamily::Complete, K, n, 0, WeightRange{0.1, 10.0}, 5000 + t);
    worst_z = std::max(worst_z, std::abs(partition<LogValue>(s).Z.log() - brute_partition<LogValue>(s).log()));
    const MarginalReport dp = unary_marginals(s), bf = brute_marginals(s);
    worst_p = std::max(worst_p, testing::max_abs_diff(dp.unary, bf.unary));
    worst_z = std::max(worst_z, std::abs(dp.log_Z - bf.log_Z));

    const ModelSpec e = with_mode(s, NumericMode::ExactRational);
    if (!(partition<ExactRational>(e).Z == brute_partition<ExactRational>(e))) ++exact_mismatch;
    if (!exact_equal(unary_marginals(e), brute_marginals(e))) ++exact_mismatch;
  }
  const double secs = seconds_since(start);
  Outcome o;
  o.pass = worst_z <= 1e-9 && worst_p <= 1e-9 && exact_mismatch == 0 && secs < 300.0;
  o.detail = "max|dlogZ|=" + fmt("%.2e", worst_z) + " max|dp|=" + fmt("%.2e", worst_p) +
             " rational mismatches=" + std::to_string(exact_mismatch) + " time=" + fmt("%.1fs", secs);
  return o;
}

// --- 2 ------------------------------------------------------------------

Outcome oracle_bipartite() {
  const auto start = Clock::now();
  Gen gen(1002);
  double worst_z = 0.0, worst_p = 0.0;
  int exact_mismatch = 0;
  for (int t = 0; t < 100; ++t) {
    const int K = 2 + static_cast<int>(gen.range(0, 1));
    const std::size_t n1 = gen.range(1, 6), n2 = gen.range(1, 6);
    const ModelSpec s = random_model(GraphFamily::CompleteBipartite, K, n1, n2, WeightRange{0.1, 10.0}, 6000 + t);
    worst_z = std::max(worst_z, std::abs(partition_bipartite<LogValue>(s).Z.log() - brute_partition<LogValue>(s).log()));
    const MarginalReport dp = unary_marginals_bipartite(s), bf = brute_marginals(s);
    worst_p = std::max(worst_p, testing::max_abs_diff(dp.unary, bf.unary));

    const ModelSpec e = with_mode(s, NumericMode::ExactRational);
    const MarginalReport de = unary_marginals_bipartite(e), be = brute_marginals(e);
    if (!(de.Z_exact == be.Z_exact) || !exact_equal(de, be)) ++exact_mismatch;
  }
  const double secs = seconds_since(start);
  Outcome o;
  o.pass = worst_z <= 1e-9 && worst_p <= 1e-9 && exact_mismatch == 0 && secs < 120.0;
  o.detail = "max|dlogZ|=" + fmt("%.2e", worst_z) + " max|dp|=" + fmt("%.2e", worst_p) +
             " rational mismatches=" + std::to_string(exact_mismatch) + " time=" + fmt("%.1fs", secs);
  return o;
}

// --- 3 ------------------------------------------------------------------

Outcome pairwise() {
  Gen gen(1003);
  double worst_table = 0.0, worst_margin = 0.0;
  for (int t = 0; t < 50; ++t) {
    const int K = 2 + static_cast<int>(gen.range(0, 1));
    const std::size_t n = gen.range(2, 8);
    const ModelSpec s = random_model(GraphFamily::Complete, K, n, 0, WeightRange{0.1, 10.0}, 7000 + t);
    const auto pairs = all_pairs(n);
    const MarginalReport dp = marginals(s, pairs), bf = brute_marginals(s, pairs);
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      const auto& tab = dp.pairwise[p].probabilities;
      worst_table = std::max(worst_table, testing::max_abs_diff(tab, bf.pairwise[p].probabilities));
      for (std::size_t a = 0; a < tab.rows; ++a) {
        double row = 0.0, col = 0.0;
        for (std::size_t b = 0; b < tab.cols; ++b) {
          row += tab(a, b);
          col += tab(b, a);
        }
        worst_margin = std::max(worst_margin, std::abs(row - dp.unary(pairs[p].first, a)));
        worst_margin = std::max(worst_margin, std::abs(col - dp.unary(pairs[p].second, a)));
      }
    }
  }
  Outcome o;
  o.pass = worst_table <= 1e-9 && worst_margin <= 1e-8;
  o.detail = "max|dtable|=" + fmt("%.2e", worst_table) + " max|margin-unary|=" + fmt("%.2e", worst_margin);
  return o;
}

// --- 4 ------------------------------------------------------------------

Outcome closed_forms() {
  Gen gen(1004);
  double worst_product = 0.0;
  int failures = 0, cases = 0;
  const std::size_t sizes[] = {1, 2, 3, 5, 8, 13, 21, 34, 50};
  for (int K = 2; K <= 4; ++K)
    for (std::size_t n : sizes) {
      const ModelSpec s = testing::decoupled(
          random_model(GraphFamily::Complete, K, n, 0, WeightRange{0.1, 10.0}, gen.next() % 100000));
      double log_product = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (int k = 0; k < K; ++k) row += s.log_q(i, static_cast<std::size_t>(k)).linear();
        log_product += std::log(row);
      }
      worst_product = std::max(worst_product, testing::log_rel_diff(partition<LogValue>(s).Z.log(), log_product));

      const ModelSpec unit = testing::uniform_model(GraphFamily::Complete, K, n, 0, NumericMode::ExactRational);
      ExactRational kn(1);
      for (std::size_t i = 0; i < n; ++i) kn *= ExactRational(K);
      ++cases;
      if (!(partition<ExactRational>(unit).Z == kn)) ++failures;

      // Unit unary weights with an arbitrary g: H is multinomial.
      ModelSpec unary_unit = random_model(GraphFamily::Complete, K, n, 0, WeightRange{0.1, 10.0}, 77 + n);
      unary_unit = make_model(GraphFamily::Complete, K, n, 0, *unary_unit.exact_g,
                              Matrix<ExactRational>(n, static_cast<std::size_t>(K), ExactRational(1)),
                              NumericMode::ExactRational);
      bool ok = true;
      h_forward<ExactRational>(unary_unit).for_each([&](const CountVector& m, const ExactRational& v) {
        ok = ok && v == testing::multinomial(m.counts());
      });
      ++cases;
      if (!ok) ++failures;
    }
  Outcome o;
  o.pass = worst_product <= 1e-12 && failures == 0;
  o.detail = "g=1 max rel err=" + fmt("%.2e", worst_product) + " exact cases failed " + std::to_string(failures) + "/" +
             std::to_string(cases);
  return o;
}

// --- 5 ------------------------------------------------------------------

Outcome inverse_integrity() {
  Gen gen(1005);
  int exact_failures = 0, log_failures = 0, fallbacks = 0, removals = 0;
  double worst_reinsert = 0.0, worst_forward = 0.0;
  for (int t = 0; t < 100; ++t) {
    const int K = 2 + static_cast<int>(gen.range(0, 2));
    const std::size_t n = gen.range(1, 12);
    const ModelSpec s = random_model(GraphFamily::Complete, K, n, 0, WeightRange{0.1, 10.0}, 8000 + t);
    const ModelSpec e = with_mode(s, NumericMode::ExactRational);
    const auto he = h_forward<ExactRational>(e);
    const auto hl = h_forward<LogValue>(s);
    for (std::size_t i = 0; i < n; ++i) {
      ++removals;
      if (!(insert_vertex<ExactRational>(leave_one_out<ExactRational>(he, i, e).table, i, e) == he)) ++exact_failures;
      const auto r = leave_one_out<LogValue>(hl, i, s);
      const double reinsert = log_table_rel_diff(insert_vertex<LogValue>(r.table, i, s), hl);
      worst_reinsert = std::max(worst_reinsert, reinsert);
      const auto rest = all_but(n, i);
      const double forward = log_table_rel_diff(r.table, h_forward<LogValue>(s, rest));
      if (r.fell_back)
        ++fallbacks;
      else
        worst_forward = std::max(worst_forward, forward);
      if (reinsert > 1e-9 || (!r.fell_back && forward > 1e-9)) ++log_failures;
    }
  }
  Outcome o;
  o.pass = exact_failures == 0 && log_failures == 0;
  o.detail = std::to_string(removals) + " removals: rational failures=" + std::to_string(exact_failures) +
             " log failures=" + std::to_string(log_failures) + " max reinsert=" + fmt("%.2e", worst_reinsert) +
             " max vs forward=" + fmt("%.2e", worst_forward) + " fallbacks=" + std::to_string(fallbacks);
  return o;
}

// --- 6 ------------------------------------------------------------------

std::vector<double> labelling_probabilities(const Matrix<LogValue>& g, const Matrix<LogValue>& q) {
  const std::size_t n = q.rows;
  std::vector<double> w(std::size_t{1} << n);
  for (std::size_t x = 0; x < w.size(); ++x) {
    double lw = 0.0;
    for (std::size_t i = 0; i < n; ++i) lw += q(i, (x >> i) & 1).log();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) lw += g((x >> i) & 1, (x >> j) & 1).log();
    w[x] = lw;
  }
  const double hi = *std::max_element(w.begin(), w.end());
  double Z = 0.0;
  for (double& v : w) Z += (v = std::exp(v - hi));
  for (double& v : w) v /= Z;
  return w;
}

Outcome canonicalization() {
  Gen gen(1006);
  double worst_p = 0.0, worst_z = 0.0;
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = gen.range(1, 10);
    const ModelSpec s = random_model(GraphFamily::Complete, 2, n, 0, WeightRange{0.1, 10.0}, 9000 + t);
    const auto c = canonicalize_binary<LogValue>(s);
    Matrix<LogValue> g(2, 2, LogValue::one());
    g(0, 1) = g(1, 0) = c.alpha;
    Matrix<LogValue> q(n, 2, LogValue::one());
    for (std::size_t i = 0; i < n; ++i) q(i, 0) = c.beta[i];
    const auto p = labelling_probabilities(s.log_g, s.log_q), pc = labelling_probabilities(g, q);
    for (std::size_t x = 0; x < p.size(); ++x) worst_p = std::max(worst_p, std::abs(p[x] - pc[x]));

    const ModelSpec can = make_log_model(GraphFamily::Complete, 2, n, 0, g, q);
    const double z = brute_partition<LogValue>(s).log();
    worst_z = std::max(worst_z, testing::log_rel_diff(brute_partition<LogValue>(can).log() + c.log_scale(), z));
    worst_z = std::max(worst_z, testing::log_rel_diff(partition<LogValue>(s).Z.log(), z));
  }
  Outcome o;
  o.pass = worst_p <= 1e-12 && worst_z <= 1e-11;
  o.detail = "max|dp(x)|=" + fmt("%.2e", worst_p) + " max Z rel err=" + fmt("%.2e", worst_z);
  return o;
}

// --- 7 ------------------------------------------------------------------

double time_run(const ModelSpec& s, int reps) {
  std::vector<double> t;
  for (int r = 0; r < reps; ++r) {
    const auto start = Clock::now();
    const auto z = partition<LogValue>(s);
    const auto m = unary_marginals(s);
    (void)z;
    (void)m;
    t.push_back(seconds_since(start));
  }
  std::sort(t.begin(), t.end());
  return t[t.size() / 2];
}

Outcome scaling() {
  auto binary = [](std::size_t n) {
    return random_model(GraphFamily::Complete, 2, n, 0, WeightRange{0.5, 2.0}, 11 + n);
  };
  const double t250 = time_run(binary(250), 5), t500 = time_run(binary(500), 3), t1000 = time_run(binary(1000), 3);
  const double t2000 = time_run(binary(2000), 1);
  const double t3 = time_run(random_model(GraphFamily::Complete, 3, 300, 0, WeightRange{0.5, 2.0}, 12), 1);
  const double limit = 4.0 * 1.5;
  const double r1 = t500 / t250, r2 = t1000 / t500, r3 = t2000 / t1000;
  Outcome o;
  o.pass = t2000 <= 5.0 && t3 <= 10.0 && r1 <= limit && r2 <= limit && r3 <= limit;
  o.detail = "n=2000 K=2 " + fmt("%.2fs", t2000) + ", n=300 K=3 " + fmt("%.2fs", t3) + ", ratios " +
             fmt("%.2f", r1) + "/" + fmt("%.2f", r2) + "/" + fmt("%.2f", r3) + " (limit " + fmt("%.1f", limit) + ")";
  return o;
}

// --- 8 ------------------------------------------------------------------

Outcome robustness() {
  const std::size_t n = 100;
  int mismatched_unflagged = 0, flagged = 0;
  double worst_final = 0.0, worst_unflagged = 0.0;
  Gen gen(1008);
  for (int arrangement = 0; arrangement < 3; ++arrangement) {
    std::vector<double> log_beta(n);
    for (std::size_t i = 0; i < n; ++i) log_beta[i] = std::log(1e-12) + (std::log(1e24) * i) / (n - 1);
    if (arrangement == 1) std::reverse(log_beta.begin(), log_beta.end());
    if (arrangement == 2)
      for (std::size_t i = n - 1; i > 0; --i) std::swap(log_beta[i], log_beta[gen.range(0, i)]);
    Matrix<LogValue> g(2, 2, LogValue::one());
    g(0, 1) = g(1, 0) = LogValue::from_log(std::log(1e-6));
    Matrix<LogValue> q(n, 2, LogValue::one());
    for (std::size_t i = 0; i < n; ++i) q(i, 0) = LogValue::from_log(log_beta[i]);
    const ModelSpec s = make_log_model(GraphFamily::Complete, 2, n, 0, g, q);

    const auto h = h_forward<LogValue>(s);
    const MarginalReport reported = unary_marginals(s);
    for (std::size_t i = 0; i < n; ++i) {
      const auto reference = marginal_from_rest(h_forward<LogValue>(s, all_but(n, i)), i, s);
      const auto r = leave_one_out<LogValue>(h, i, s);
      const auto via_inverse = marginal_from_rest(r.table, i, s);
      double d = 0.0;
      for (std::size_t k = 0; k < 2; ++k) {
        d = std::max(d, std::isnan(via_inverse[k]) ? INFINITY : std::abs(via_inverse[k] - reference[k]));
        worst_final = std::max(worst_final, std::abs(reported.unary(i, k) - reference[k]));
      }
      if (r.fell_back) {
        ++flagged;
      } else {
        worst_unflagged = std::max(worst_unflagged, d);
        if (d > 1e-6) ++mismatched_unflagged;
      }
    }
  }
  Outcome o;
  o.pass = mismatched_unflagged == 0 && worst_final <= 1e-9;
  o.detail = "unflagged mismatches=" + std::to_string(mismatched_unflagged) + " (max " + fmt("%.2e", worst_unflagged) +
             ") flagged=" + std::to_string(flagged) + "/300 final max err=" + fmt("%.2e", worst_final);
  return o;
}

// --- 9 ------------------------------------------------------------------

int run_cli(const std::string& args) {
  const std::string cmd = std::string("'") + EXACTMRF_CLI_PATH + "' " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome evaluation_harness() {
  double worst_mf = 0.0;
  for (int K = 2; K <= 4; ++K)
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      const ModelSpec c = testing::decoupled(random_model(GraphFamily::Complete, K, 20, 0, WeightRange{0.1, 10.0}, seed));
      const ModelSpec b =
          testing::decoupled(random_model(GraphFamily::CompleteBipartite, K, 5, 7, WeightRange{0.1, 10.0}, seed));
      for (const ModelSpec* s : {&c, &b}) worst_mf = std::max(worst_mf, testing::max_abs_diff(mean_field(*s).unary, unary_marginals(*s).unary));
    }

  const ModelSpec model = random_model(GraphFamily::Complete, 2, 10, 0, WeightRange{0.5, 2.0}, 2024);
  const Matrix<double> exact = unary_marginals(model).unary;
  auto l1 = [&](std::size_t samples, std::uint64_t seed) {
    GibbsOptions o;
    o.samples = samples;
    o.seed = seed;
    const Matrix<double> est = gibbs(model, o).unary;
    double e = 0.0;
    for (std::size_t i = 0; i < est.data.size(); ++i) e += std::abs(est.data[i] - exact.data[i]);
    return e;
  };
  int improved = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed)
    if (l1(1'000'000, seed) < l1(10'000, seed)) ++improved;

  const std::filesystem::path dir = EXACTMRF_TEST_TMP;
  std::filesystem::create_directories(dir);
  const std::string args = "evaluate --generate complete,2,10,2024,10 --no-timing --out ";
  const int rc1 = run_cli(args + "'" + (dir / "run1.csv").string() + "'");
  const int rc2 = run_cli(args + "'" + (dir / "run2.csv").string() + "'");
  const std::string a = slurp(dir / "run1.csv"), b = slurp(dir / "run2.csv");
  const bool stable = rc1 == 0 && rc2 == 0 && !a.empty() && a == b;

  Outcome o;
  o.pass = worst_mf <= 1e-8 && improved >= 18 && stable;
  o.detail = "mean-field max err on g=1 " + fmt("%.2e", worst_mf) + ", gibbs improved " + std::to_string(improved) +
             "/20, csv " + (stable ? "byte-stable" : "NOT byte-stable");
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"1 oracle equivalence, complete graphs", oracle_complete},
      {"2 oracle equivalence, bipartite graphs", oracle_bipartite},
      {"3 pairwise marginals", pairwise},
      {"4 closed forms", closed_forms},
      {"5 inverse-map integrity", inverse_integrity},
      {"6 canonicalization invariance", canonicalization},
      {"7 scaling", scaling},
      {"8 numerical robustness", robustness},
      {"9 evaluation harness", evaluation_harness},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s  %-40s %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
