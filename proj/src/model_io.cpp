#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "exactmrf/errors.hpp"
#include "exactmrf/model.hpp"

namespace exactmrf {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

const json& require(const json& doc, const char* field) {
  auto it = doc.find(field);
  if (it == doc.end()) throw SchemaError(field, "missing required field");
  return *it;
}

std::size_t require_count(const json& doc, const char* field, std::size_t min) {
  const json& v = require(doc, field);
  if (!v.is_number_integer() || v.get<long long>() < static_cast<long long>(min))
    throw SchemaError(field, "must be an integer >= " + std::to_string(min));
  return v.get<std::size_t>();
}

struct ParsedWeight {
  LogValue log;
  std::optional<ExactRational> exact;
};

ParsedWeight parse_weight(const json& v, const std::string& path, bool log_domain, NumericMode mode) {
  if (log_domain) {
    if (v.is_number()) return {LogValue::from_log(v.get<double>()), std::nullopt};
    if (v.is_string()) {
      const auto& s = v.get_ref<const std::string&>();
      if (s == "-inf") return {LogValue::zero(), std::nullopt};
      try {
        std::size_t used = 0;
        double x = std::stod(s, &used);
        if (used == s.size() && std::isfinite(x)) return {LogValue::from_log(x), std::nullopt};
      } catch (const std::exception&) {
      }
    }
    throw SchemaError(path, "log-domain weight must be a finite number or \"-inf\"");
  }
  if (v.is_string()) {
    ExactRational r;
    try {
      r = ExactRational::from_decimal(v.get_ref<const std::string&>());
    } catch (const std::invalid_argument& e) {
      throw SchemaError(path, e.what());
    }
    if (r.sign() < 0) throw SchemaError(path, "weights must be non-negative");
    return {to_log_value(r), std::move(r)};
  }
  if (v.is_number()) {
    if (mode == NumericMode::ExactRational)
      throw SchemaError(path, "rational mode requires weights given as decimal strings");
    double x = v.get<double>();
    if (!std::isfinite(x)) throw SchemaError(path, "weight must be finite");
    if (x < 0.0) throw SchemaError(path, "weights must be non-negative");
    return {LogValue::from_linear(x), std::nullopt};
  }
  throw SchemaError(path, "weight must be a number or a decimal string");
}

void parse_table(const json& doc, const char* field, std::size_t rows, std::size_t cols, bool log_domain,
                 NumericMode mode, Matrix<LogValue>& logs, Matrix<ExactRational>& exact, bool& all_exact) {
  const json& t = require(doc, field);
  if (!t.is_array() || t.size() != rows)
    throw SchemaError(field, "must be an array of " + std::to_string(rows) + " rows");
  logs = Matrix<LogValue>(rows, cols);
  exact = Matrix<ExactRational>(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::string row_path = std::string(field) + "[" + std::to_string(r) + "]";
    const json& row = t[r];
    if (!row.is_array() || row.size() != cols)
      throw SchemaError(row_path, "must be an array of " + std::to_string(cols) + " weights");
    for (std::size_t c = 0; c < cols; ++c) {
      ParsedWeight w = parse_weight(row[c], row_path + "[" + std::to_string(c) + "]", log_domain, mode);
      logs(r, c) = w.log;
      if (w.exact)
        exact(r, c) = std::move(*w.exact);
      else
        all_exact = false;
    }
  }
}

ordered_json weight_json(const ExactRational& w) {
  if (auto d = w.to_decimal()) return *d;
  return w.to_string();
}

ordered_json weight_json(LogValue w) {
  if (w.is_zero()) return "-inf";
  return w.log();
}

template <class V>
ordered_json table_json(const Matrix<V>& m) {
  ordered_json rows = ordered_json::array();
  for (std::size_t r = 0; r < m.rows; ++r) {
    ordered_json row = ordered_json::array();
    for (const auto& w : m.row(r)) row.push_back(weight_json(w));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

ModelSpec parse_model(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(line_column(text, e.byte == 0 ? 0 : e.byte - 1), "malformed JSON");
  }
  if (!doc.is_object()) throw SchemaError("", "model document must be a JSON object");

  static const std::set<std::string> known = {"family", "K", "n", "n1", "n2", "g", "q", "mode", "log_domain"};
  for (const auto& item : doc.items())
    if (!known.contains(item.key())) throw SchemaError(item.key(), "unknown field");

  const json& fam = require(doc, "family");
  GraphFamily family;
  if (fam == "complete")
    family = GraphFamily::Complete;
  else if (fam == "bipartite")
    family = GraphFamily::CompleteBipartite;
  else
    throw SchemaError("family", "must be \"complete\" or \"bipartite\"");

  NumericMode mode = NumericMode::LogFloat;
  if (auto it = doc.find("mode"); it != doc.end()) {
    if (*it == "log")
      mode = NumericMode::LogFloat;
    else if (*it == "rational")
      mode = NumericMode::ExactRational;
    else
      throw SchemaError("mode", "must be \"log\" or \"rational\"");
  }
  bool log_domain = false;
  if (auto it = doc.find("log_domain"); it != doc.end()) {
    if (!it->is_boolean()) throw SchemaError("log_domain", "must be a boolean");
    log_domain = it->get<bool>();
  }
  if (log_domain && mode == NumericMode::ExactRational)
    throw SchemaError("log_domain", "rational mode requires linear weights as decimal strings");

  const std::size_t K = require_count(doc, "K", 2);
  std::size_t n1 = 0, n2 = 0;
  if (family == GraphFamily::Complete) {
    if (doc.contains("n1") || doc.contains("n2")) throw SchemaError("n1", "complete models use \"n\"");
    n1 = require_count(doc, "n", 1);
  } else {
    if (doc.contains("n")) throw SchemaError("n", "bipartite models use \"n1\" and \"n2\"");
    n1 = require_count(doc, "n1", 1);
    n2 = require_count(doc, "n2", 1);
  }

  ModelSpec spec;
  spec.family = family;
  spec.labels = static_cast<int>(K);
  spec.n1 = n1;
  spec.n2 = n2;
  spec.mode = mode;
  Matrix<ExactRational> exact_g, exact_q;
  bool all_exact = !log_domain;
  parse_table(doc, "g", K, K, log_domain, mode, spec.log_g, exact_g, all_exact);
  parse_table(doc, "q", spec.num_vertices(), K, log_domain, mode, spec.log_q, exact_q, all_exact);
  if (all_exact) {
    spec.exact_g = std::move(exact_g);
    spec.exact_q = std::move(exact_q);
  }
  return spec;
}

ModelSpec read_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError(path, "cannot open model file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str());
}

std::string serialize_model(const ModelSpec& spec) {
  ordered_json doc;
  doc["family"] = to_string(spec.family);
  doc["K"] = spec.labels;
  if (spec.family == GraphFamily::Complete) {
    doc["n"] = spec.n1;
  } else {
    doc["n1"] = spec.n1;
    doc["n2"] = spec.n2;
  }
  doc["mode"] = to_string(spec.mode);
  if (spec.has_exact_weights()) {
    doc["g"] = table_json(*spec.exact_g);
    doc["q"] = table_json(*spec.exact_q);
  } else {
    doc["log_domain"] = true;
    doc["g"] = table_json(spec.log_g);
    doc["q"] = table_json(spec.log_q);
  }
  return doc.dump(2) + "\n";
}

}  // namespace exactmrf
