#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "exactmrf/numerics.hpp"

namespace exactmrf {

enum class GraphFamily { Complete, CompleteBipartite };

template <class T>
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, const T& fill = T{}) : rows(r), cols(c), data(r * c, fill) {}

  T& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<const T> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
  std::span<T> row(std::size_t r) { return {data.data() + r * cols, cols}; }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

// A random-field instance: a shared pairwise table g and per-vertex unary
// tables q over K labels, on a complete graph with n1 vertices or a complete
// bipartite graph with sides of n1 (A) and n2 (B) vertices. q rows list the
// A side first. For bipartite graphs g(k, k') weighs an edge whose A end has
// label k and whose B end has label k'.
//
// Log weights are always present. Exact weights are kept when the source
// provided them exactly (decimal strings, generated models); rational mode
// requires them.
struct ModelSpec {
  GraphFamily family = GraphFamily::Complete;
  int labels = 2;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  NumericMode mode = NumericMode::LogFloat;
  Matrix<LogValue> log_g;
  Matrix<LogValue> log_q;
  std::optional<Matrix<ExactRational>> exact_g;
  std::optional<Matrix<ExactRational>> exact_q;

  std::size_t num_vertices() const { return family == GraphFamily::Complete ? n1 : n1 + n2; }
  bool has_exact_weights() const { return exact_g.has_value() && exact_q.has_value(); }

  // Weight tables in backend V. The exact accessors throw std::logic_error
  // when exact weights are absent.
  template <class V>
  const Matrix<V>& g() const;
  template <class V>
  const Matrix<V>& q() const;

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

template <>
inline const Matrix<LogValue>& ModelSpec::g<LogValue>() const { return log_g; }
template <>
inline const Matrix<LogValue>& ModelSpec::q<LogValue>() const { return log_q; }
template <>
const Matrix<ExactRational>& ModelSpec::g<ExactRational>() const;
template <>
const Matrix<ExactRational>& ModelSpec::q<ExactRational>() const;

ModelSpec make_model(GraphFamily family, int labels, std::size_t n1, std::size_t n2, Matrix<ExactRational> g,
                     Matrix<ExactRational> q, NumericMode mode = NumericMode::LogFloat);
ModelSpec make_log_model(GraphFamily family, int labels, std::size_t n1, std::size_t n2, Matrix<LogValue> log_g,
                         Matrix<LogValue> log_q);
// Returns a copy running in `mode`. Throws std::invalid_argument when
// rational mode is requested without exact weights.
ModelSpec with_mode(ModelSpec spec, NumericMode mode);

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

ValidationReport validate(const ModelSpec& spec);
// Throws ValidationError listing every violation.
void require_valid(const ModelSpec& spec);

// Binary model on a complete graph rewritten so that disagreeing edges weigh
// alpha, agreeing edges 1, label 0 of vertex i weighs beta[i] and label 1
// weighs 1. Z_original = Z_canonical * scale.
template <class V>
struct CanonicalBinaryModel {
  V alpha;
  std::vector<V> beta;
  V scale;

  double log_scale() const { return log_of(scale); }
};

// Throws NonPositiveWeight if a g entry or some q_i(1) is zero; in exact
// mode throws NonSquareRatio when g(0,0) g(1,1) is not a rational square.
template <class V>
CanonicalBinaryModel<V> canonicalize_binary(const ModelSpec& spec);

// Bipartite analogue: disagreeing cross edges weigh
// alpha = sqrt(g01 g10 / (g00 g11)); beta lists A then B vertices.
template <class V>
CanonicalBinaryModel<V> canonicalize_bipartite_binary(const ModelSpec& spec);

struct WeightRange {
  double lo = 0.5;
  double hi = 2.0;
};

// Deterministic for a fixed seed. Weights are drawn log-uniformly from the
// range and rounded to six significant decimal digits, so every generated
// model carries exact weights and runs in either mode.
ModelSpec random_model(GraphFamily family, int labels, std::size_t n1, std::size_t n2, WeightRange range,
                       std::uint64_t seed, NumericMode mode = NumericMode::LogFloat);

// JSON model document. parse_model throws SchemaError.
ModelSpec parse_model(const std::string& text);
ModelSpec read_model_file(const std::string& path);
std::string serialize_model(const ModelSpec& spec);

std::string to_string(GraphFamily family);
std::string to_string(NumericMode mode);

}  // namespace exactmrf
