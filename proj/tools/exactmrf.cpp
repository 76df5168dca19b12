// exactmrf: exact partition functions and marginals from the command line.
//
//   exactmrf partition MODEL [--mode log|rational] [--out PATH] [--no-timing]
//   exactmrf marginals MODEL [--pairs "i,j;k,l"] [--mode ...] [--out PATH]
//   exactmrf oracle-check MODEL [--tol 1e-9] [--mode ...] [--cap N]
//   exactmrf evaluate (MODEL | --generate family,K,n,seed,count) --methods a,b
//                     [--out CSV] [--detail JSON] [--no-timing]
//
// Exit codes: 0 ok, 1 schema/validation error, 2 enumeration or resource
// cap, 3 invalid pair indices, 4 tolerance exceeded.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <new>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "exactmrf/approx.hpp"
#include "exactmrf/errors.hpp"
#include "exactmrf/exact_bipartite.hpp"
#include "exactmrf/exact_complete.hpp"
#include "exactmrf/kernels.hpp"
#include "exactmrf/model.hpp"
#include "exactmrf/oracle.hpp"
#include "exactmrf/parallel.hpp"

using namespace exactmrf;
using nlohmann::ordered_json;

namespace {

enum Exit { kOk = 0, kSchema = 1, kCap = 2, kPairs = 3, kTolerance = 4 };

struct PairError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Rounds to `digits` significant digits; the JSON writer then prints the
// shortest string that reads back as the rounded value.
ordered_json number(double x, int digits) {
  if (!std::isfinite(x)) return nullptr;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*e", digits - 1, x);
  return std::strtod(buf, nullptr);
}

std::string csv_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

ordered_json probability_table(const Matrix<double>& m) {
  ordered_json rows = ordered_json::array();
  for (std::size_t r = 0; r < m.rows; ++r) {
    ordered_json row = ordered_json::array();
    for (double p : m.row(r)) row.push_back(number(p, 15));
    rows.push_back(std::move(row));
  }
  return rows;
}

ordered_json rational_table(const Matrix<ExactRational>& m) {
  ordered_json rows = ordered_json::array();
  for (std::size_t r = 0; r < m.rows; ++r) {
    ordered_json row = ordered_json::array();
    for (const auto& p : m.row(r)) row.push_back(p.to_string());
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_output(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

ModelSpec load(const std::string& path, const std::string& mode) {
  ModelSpec spec = read_model_file(path);
  if (mode == "log") spec = with_mode(std::move(spec), NumericMode::LogFloat);
  if (mode == "rational") spec = with_mode(std::move(spec), NumericMode::ExactRational);
  require_valid(spec);
  return spec;
}

std::vector<std::pair<std::size_t, std::size_t>> parse_pairs(const std::string& text, std::size_t n) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  if (text.empty()) return pairs;
  std::stringstream items(text);
  std::string item;
  while (std::getline(items, item, ';')) {
    if (item.empty()) continue;
    const auto comma = item.find(',');
    std::size_t i = 0, j = 0, used_i = 0, used_j = 0;
    try {
      if (comma == std::string::npos) throw std::invalid_argument("no comma");
      const std::string a = item.substr(0, comma), b = item.substr(comma + 1);
      if (a.empty() || b.empty() || a[0] == '-' || b[0] == '-') throw std::invalid_argument("bad index");
      i = std::stoul(a, &used_i);
      j = std::stoul(b, &used_j);
      if (used_i != a.size() || used_j != b.size()) throw std::invalid_argument("bad index");
    } catch (const std::exception&) {
      throw PairError("malformed pair \"" + item + "\"; expected i,j");
    }
    if (i >= n || j >= n) throw PairError("pair \"" + item + "\" names a vertex outside [0, " + std::to_string(n) + ")");
    if (i == j) throw PairError("pair \"" + item + "\" repeats a vertex");
    pairs.emplace_back(i, j);
  }
  return pairs;
}

ordered_json diagnostics_json(const MarginalDiagnostics& d) {
  ordered_json j;
  j["canonical_path"] = d.canonical_path;
  j["zero_partition"] = d.zero_partition;
  j["kernels"] = d.kernels;
  return j;
}

// --- partition ------------------------------------------------------------

int run_partition(const std::string& path, const std::string& mode, const std::string& out, bool timing) {
  const auto start = std::chrono::steady_clock::now();
  const ModelSpec spec = load(path, mode);
  ordered_json doc;
  doc["command"] = "partition";
  doc["mode"] = to_string(spec.mode);
  auto fill = [&](const auto& result) {
    doc["log_Z"] = number(log_of(result.Z), 17);
    if constexpr (std::is_same_v<std::decay_t<decltype(result.Z)>, ExactRational>)
      doc["Z_rational"] = result.Z.to_string();
    doc["zero_partition"] = result.zero_partition;
    doc["canonical_path"] = result.canonical_path;
  };
  const bool complete = spec.family == GraphFamily::Complete;
  if (spec.mode == NumericMode::ExactRational)
    fill(complete ? partition<ExactRational>(spec) : partition_bipartite<ExactRational>(spec));
  else
    fill(complete ? partition<LogValue>(spec) : partition_bipartite<LogValue>(spec));
  doc["fallback"] = false;
  doc["kernels"] = std::string(kernels::active().name);
  const double ms =
      timing ? std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count() : 0.0;
  doc["timings"] = {{"total_ms", number(ms, 6)}};
  write_output(doc.dump(2) + "\n", out);
  return kOk;
}

// --- marginals --------------------------------------------------------------

ordered_json report_json(const MarginalReport& r) {
  ordered_json doc;
  doc["command"] = "marginals";
  doc["mode"] = to_string(r.mode);
  doc["log_Z"] = number(r.log_Z, 17);
  if (r.Z_exact) doc["Z_rational"] = r.Z_exact->to_string();
  doc["unary"] = probability_table(r.unary);
  if (r.unary_exact) doc["unary_rational"] = rational_table(*r.unary_exact);
  ordered_json pairs = ordered_json::array();
  for (const auto& p : r.pairwise) {
    ordered_json t;
    t["i"] = p.i;
    t["j"] = p.j;
    t["table"] = probability_table(p.probabilities);
    if (p.exact) t["table_rational"] = rational_table(*p.exact);
    t["fallback"] = p.fell_back;
    pairs.push_back(std::move(t));
  }
  doc["pairwise"] = std::move(pairs);
  ordered_json fallback = ordered_json::array(), lost = ordered_json::array();
  for (bool f : r.diagnostics.fallback) fallback.push_back(f);
  for (double d : r.diagnostics.digits_lost) lost.push_back(number(d, 6));
  doc["fallback"] = std::move(fallback);
  doc["digits_lost"] = std::move(lost);
  doc["diagnostics"] = diagnostics_json(r.diagnostics);
  return doc;
}

int run_marginals(const std::string& path, const std::string& mode, const std::string& pairs_text,
                  const std::string& out) {
  const ModelSpec spec = load(path, mode);
  const auto pairs = parse_pairs(pairs_text, spec.num_vertices());
  if (!pairs.empty() && spec.family != GraphFamily::Complete)
    throw PairError("pairwise marginals are only available on complete graphs");
  write_output(report_json(marginals(spec, pairs)).dump(2) + "\n", out);
  return kOk;
}

// --- oracle-check -------------------------------------------------------------

int run_oracle_check(const std::string& path, const std::string& mode, double tol, std::uint64_t cap) {
  const ModelSpec spec = load(path, mode);
  OracleOptions oracle_options;
  oracle_options.cap = cap;
  const MarginalReport truth = brute_marginals(spec, {}, oracle_options);
  const MarginalReport dp = marginals(spec, {});

  bool pass = true;
  double z_diff = 0.0, unary_diff = 0.0;
  if (spec.mode == NumericMode::ExactRational) {
    pass = *truth.Z_exact == *dp.Z_exact && *truth.unary_exact == *dp.unary_exact;
    z_diff = pass ? 0.0 : std::abs(truth.log_Z - dp.log_Z);
  } else if (!std::isfinite(truth.log_Z) || !std::isfinite(dp.log_Z)) {
    pass = truth.log_Z == dp.log_Z;
    z_diff = pass ? 0.0 : std::numeric_limits<double>::infinity();
  } else {
    z_diff = std::abs(truth.log_Z - dp.log_Z);
    pass = z_diff <= tol;
  }
  for (std::size_t i = 0; i < truth.unary.data.size(); ++i) {
    const double a = truth.unary.data[i], b = dp.unary.data[i];
    if (std::isnan(a) && std::isnan(b)) continue;
    const double d = std::isnan(a) || std::isnan(b) ? std::numeric_limits<double>::infinity() : std::abs(a - b);
    unary_diff = std::max(unary_diff, d);
  }
  if (spec.mode != NumericMode::ExactRational) pass = pass && unary_diff <= tol;

  std::printf("log_Z dp=%.17g oracle=%.17g\n", dp.log_Z, truth.log_Z);
  std::printf("max |log_Z difference| = %.3e\n", z_diff);
  std::printf("max |unary difference| = %.3e\n", unary_diff);
  if (spec.mode == NumericMode::ExactRational)
    std::printf("%s (exact comparison)\n", pass ? "PASS" : "FAIL");
  else
    std::printf("%s (tol %.3e)\n", pass ? "PASS" : "FAIL", tol);
  return pass ? kOk : kTolerance;
}

// --- evaluate -----------------------------------------------------------------

struct Instance {
  std::string id;
  std::optional<ModelSpec> spec;
  std::string error;
  std::uint64_t seed = 0;
};

struct GenerateArgs {
  GraphFamily family;
  int K;
  std::size_t n1, n2;
  std::uint64_t seed;
  std::size_t count;
};

GenerateArgs parse_generate(const std::string& text) {
  std::vector<std::string> f;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) f.push_back(item);
  if (f.size() != 5) throw SchemaError("--generate", "expected family,K,n,seed,count");
  GenerateArgs g{};
  if (f[0] == "complete")
    g.family = GraphFamily::Complete;
  else if (f[0] == "bipartite")
    g.family = GraphFamily::CompleteBipartite;
  else
    throw SchemaError("--generate", "family must be complete or bipartite");
  try {
    g.K = std::stoi(f[1]);
    const auto x = f[2].find('x');
    g.n1 = std::stoul(f[2].substr(0, x));
    g.n2 = x == std::string::npos ? g.n1 : std::stoul(f[2].substr(x + 1));
    g.seed = std::stoull(f[3]);
    g.count = std::stoul(f[4]);
  } catch (const std::exception&) {
    throw SchemaError("--generate", "K, n, seed and count must be integers (bipartite n may be n1xn2)");
  }
  if (g.K < 2 || g.n1 < 1 || g.n2 < 1) throw SchemaError("--generate", "need K >= 2 and n >= 1");
  if (g.family == GraphFamily::Complete) g.n2 = 0;
  return g;
}

std::vector<std::string> split_methods(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

int run_evaluate(const std::string& path, const std::string& generate, const std::string& methods_text,
                 const std::string& out, const std::string& detail_path, bool timing, EvaluateOptions options) {
  std::vector<Instance> instances;
  if (!generate.empty()) {
    const GenerateArgs g = parse_generate(generate);
    for (std::size_t c = 0; c < g.count; ++c) {
      Instance inst;
      inst.id = std::to_string(c);
      inst.seed = g.seed + c;
      inst.spec = random_model(g.family, g.K, g.n1, g.n2, WeightRange{}, inst.seed);
      instances.push_back(std::move(inst));
    }
  } else {
    Instance inst;
    inst.id = "0";
    inst.spec = load(path, "");
    instances.push_back(std::move(inst));
  }
  const auto methods = split_methods(methods_text);
  options.timing = timing;

  std::vector<std::optional<EvaluationReport>> reports(instances.size());
  parallel_for(instances.size(), [&](std::size_t i) {
    EvaluateOptions local = options;
    local.gibbs.seed = options.gibbs.seed + instances[i].seed;
    try {
      reports[i] = evaluate(*instances[i].spec, methods, local);
    } catch (const std::exception& e) {
      instances[i].error = e.what();
    }
  });

  std::ostringstream csv;
  csv << "instance_id,method,n,K,alpha_summary,l1_mean,linf_max,logZ_err,wall_ms\n";
  ordered_json detail = ordered_json::array();
  bool any_ok = false;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const Instance& inst = instances[i];
    const ModelSpec& spec = *inst.spec;
    const std::string prefix = inst.id + ",";
    const std::string shape =
        (spec.family == GraphFamily::Complete ? std::to_string(spec.n1)
                                                : std::to_string(spec.n1) + "x" + std::to_string(spec.n2)) +
        "," + std::to_string(spec.labels) + "," + csv_number(coupling_summary(spec)) + ",";
    ordered_json entry;
    entry["instance_id"] = inst.id;
    entry["family"] = to_string(spec.family);
    entry["K"] = spec.labels;
    if (!reports[i]) {
      entry["ok"] = false;
      entry["error"] = inst.error;
      for (const auto& m : methods)
        csv << prefix << m << "," << shape << "nan,nan,nan," << csv_number(0.0) << "\n";
      detail.push_back(std::move(entry));
      continue;
    }
    any_ok = true;
    entry["ok"] = true;
    entry["exact_log_Z"] = number(reports[i]->exact_log_Z, 17);
    entry["exact_unary"] = probability_table(reports[i]->exact_unary);
    ordered_json ms = ordered_json::array();
    for (const auto& m : reports[i]->methods) {
      csv << prefix << m.method << "," << shape << csv_number(m.ok ? m.l1_mean : nan) << ","
          << csv_number(m.ok ? m.linf_max : nan) << "," << csv_number(m.log_Z_error.value_or(nan)) << ","
          << csv_number(m.wall_ms) << "\n";
      ordered_json mj;
      mj["method"] = m.method;
      mj["ok"] = m.ok;
      if (!m.ok) {
        mj["error"] = m.error;
      } else {
        mj["l1_mean"] = number(m.l1_mean, 17);
        mj["linf_max"] = number(m.linf_max, 17);
        mj["logZ_err"] = m.log_Z_error ? number(*m.log_Z_error, 17) : ordered_json(nullptr);
        mj["iterations"] = m.result.iterations;
        mj["converged"] = m.result.converged;
        if (m.method == "gibbs") mj["seed"] = m.result.seed;
        ordered_json l1 = ordered_json::array(), linf = ordered_json::array();
        for (double x : m.l1) l1.push_back(number(x, 17));
        for (double x : m.linf) linf.push_back(number(x, 17));
        mj["l1"] = std::move(l1);
        mj["linf"] = std::move(linf);
        mj["estimates"] = probability_table(m.result.unary);
      }
      mj["wall_ms"] = number(m.wall_ms, 6);
      ms.push_back(std::move(mj));
    }
    entry["methods"] = std::move(ms);
    detail.push_back(std::move(entry));
  }
  write_output(csv.str(), out);
  if (!detail_path.empty()) {
    ordered_json doc;
    doc["command"] = "evaluate";
    doc["instances"] = std::move(detail);
    write_output(doc.dump(2) + "\n", detail_path);
  }
  for (const auto& inst : instances)
    if (!inst.error.empty()) std::cerr << "instance " << inst.id << ": " << inst.error << "\n";
  return any_ok ? kOk : kSchema;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact inference for random fields with homogeneous pairwise potentials"};
  app.require_subcommand(1);

  std::string model, mode, out, pairs, generate, methods = "mean_field,gibbs", detail;
  double tol = 1e-9;
  std::uint64_t cap = OracleOptions{}.cap;
  bool no_timing = false;
  EvaluateOptions eval_options;

  auto add_mode = [&](CLI::App* c) {
    c->add_option("--mode", mode, "override the model's numeric mode")->check(CLI::IsMember({"log", "rational"}));
  };

  auto* part = app.add_subcommand("partition", "log partition function");
  part->add_option("model", model, "model JSON file")->required();
  add_mode(part);
  part->add_option("--out", out, "output path (default stdout)");
  part->add_flag("--no-timing", no_timing, "write zero timings");

  auto* marg = app.add_subcommand("marginals", "unary and pairwise marginals");
  marg->add_option("model", model, "model JSON file")->required();
  add_mode(marg);
  marg->add_option("--pairs", pairs, "vertex pairs \"i,j;k,l\"");
  marg->add_option("--out", out, "output path (default stdout)");

  auto* check = app.add_subcommand("oracle-check", "compare against brute-force enumeration");
  check->add_option("model", model, "model JSON file")->required();
  add_mode(check);
  check->add_option("--tol", tol, "tolerance for log mode");
  check->add_option("--cap", cap, "maximum labellings to enumerate");

  auto* eval = app.add_subcommand("evaluate", "score approximate methods against exact marginals");
  auto* model_opt = eval->add_option("model", model, "model JSON file");
  auto* gen_opt = eval->add_option("--generate", generate, "family,K,n,seed,count (bipartite n may be n1xn2)");
  model_opt->excludes(gen_opt);
  eval->add_option("--methods", methods, "comma-separated: mean_field, gibbs");
  eval->add_option("--out", out, "CSV output path (default stdout)");
  eval->add_option("--detail", detail, "JSON detail document path");
  eval->add_flag("--no-timing", no_timing, "write wall_ms as 0");
  eval->add_option("--mf-max-iters", eval_options.mean_field.max_iters);
  eval->add_option("--mf-tol", eval_options.mean_field.tol);
  eval->add_option("--mf-damping", eval_options.mean_field.damping)->check(CLI::Range(0.0, 1.0));
  eval->add_option("--gibbs-burn-in", eval_options.gibbs.burn_in);
  eval->add_option("--gibbs-samples", eval_options.gibbs.samples);
  eval->add_option("--gibbs-seed", eval_options.gibbs.seed, "added to each instance's seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kSchema;
  }

  try {
    if (*part) return run_partition(model, mode, out, !no_timing);
    if (*marg) return run_marginals(model, mode, pairs, out);
    if (*check) return run_oracle_check(model, mode, tol, cap);
    if (model.empty() && generate.empty()) throw SchemaError("evaluate", "give a model file or --generate");
    return run_evaluate(model, generate, methods, out, detail, !no_timing, eval_options);
  } catch (const PairError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kPairs;
  } catch (const TooLarge& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kCap;
  } catch (const std::length_error& e) {
    std::cerr << "error: resource limit: " << e.what() << "\n";
    return kCap;
  } catch (const std::bad_alloc&) {
    std::cerr << "error: out of memory\n";
    return kCap;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kSchema;
  }
}
