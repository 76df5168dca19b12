#include "exactmrf/htable.hpp"

#include <limits>

namespace exactmrf {

std::size_t CountVector::total() const {
  std::size_t t = 0;
  for (auto c : counts_) t += c;
  return t;
}

CountVector CountVector::plus(int label) const {
  CountVector r = *this;
  ++r[label];
  return r;
}

std::uint64_t edge_exponent(const CountVector& m, int k, int k_prime) {
  const std::uint64_t a = m[k];
  if (k != k_prime) return a * m[k_prime];
  return a == 0 ? 0 : a * (a - 1) / 2;
}

SimplexLayout::SimplexLayout(int labels, std::size_t capacity) : labels_(labels), capacity_(capacity) {
  if (labels < 2) throw std::invalid_argument("SimplexLayout: need at least two labels");
  const std::size_t side = capacity + 1;
  strides_.assign(static_cast<std::size_t>(labels), 0);
  std::size_t stride = 1;
  for (int k = labels - 1; k >= 1; --k) {
    strides_[static_cast<std::size_t>(k)] = stride;
    if (k > 1 && stride > std::numeric_limits<std::size_t>::max() / side)
      throw std::length_error("SimplexLayout: table too large");
    if (k > 1) stride *= side;
  }
  // strides_[1] == side^(K-2); the dense array spans side^(K-1).
  dense_size_ = strides_[1] * side;
  guard_ = 2 * strides_[1] + 1;
}

std::size_t SimplexLayout::index(const CountVector& m) const {
  std::size_t idx = 0;
  for (int k = 1; k < labels_; ++k) idx += m[k] * strides_[static_cast<std::size_t>(k)];
  return idx;
}

std::size_t simplex_size(int labels, std::size_t total) {
  // C(total + labels - 1, labels - 1)
  std::uint64_t r = 1;
  for (int i = 1; i < labels; ++i) r = r * (total + static_cast<std::uint64_t>(i)) / static_cast<std::uint64_t>(i);
  return static_cast<std::size_t>(r);
}

}  // namespace exactmrf
