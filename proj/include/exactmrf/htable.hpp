#pragma once

// Count vectors and the dense tables indexed by them.
//
// A count vector m = (m_0, ..., m_{K-1}) tallies how many vertices carry each
// label. Tables store only components 1..K-1 (m_0 is implied by the total),
// in a dense row-major (K-1)-dimensional array whose side is capacity + 1.
// Tables of any total up to the capacity share one index map, so the DP can
// read a smaller table at the same index as a larger one. Entries outside the
// simplex, and guard regions before and after the array, always hold zero.

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <vector>

#include "exactmrf/numerics.hpp"

namespace exactmrf {

class CountVector {
 public:
  CountVector() = default;
  explicit CountVector(std::vector<std::size_t> counts) : counts_(std::move(counts)) {}
  CountVector(std::initializer_list<std::size_t> counts) : counts_(counts) {}

  int labels() const { return static_cast<int>(counts_.size()); }
  std::size_t operator[](int label) const { return counts_[static_cast<std::size_t>(label)]; }
  std::size_t& operator[](int label) { return counts_[static_cast<std::size_t>(label)]; }
  std::size_t total() const;
  CountVector plus(int label) const;
  const std::vector<std::size_t>& counts() const { return counts_; }

  friend bool operator==(const CountVector&, const CountVector&) = default;

 private:
  std::vector<std::size_t> counts_;
};

// Number of edges joining a label-k vertex to a label-k' vertex in a complete
// graph whose labelling has count vector m.
std::uint64_t edge_exponent(const CountVector& m, int k, int k_prime);

class SimplexLayout {
 public:
  SimplexLayout(int labels, std::size_t capacity);

  int labels() const { return labels_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t side() const { return capacity_ + 1; }
  std::size_t dense_size() const { return dense_size_; }
  // Index offset of +e_label; zero for label 0.
  std::size_t stride(int label) const { return strides_[static_cast<std::size_t>(label)]; }
  std::size_t guard() const { return guard_; }
  std::size_t index(const CountVector& m) const;

  // fn(row_start, row_length): rows of count vectors with the given total.
  // Labels 1..K-2 are fixed within a row; label K-1 runs over
  // [0, row_length) contiguously from row_start.
  template <class Fn>
  void for_each_row(std::size_t total, Fn&& fn) const;

  // fn(index, count_vector) for every count vector with the given total, in
  // ascending index order.
  template <class Fn>
  void for_each(std::size_t total, Fn&& fn) const;

  friend bool operator==(const SimplexLayout& a, const SimplexLayout& b) {
    return a.labels_ == b.labels_ && a.capacity_ == b.capacity_;
  }

 private:
  int labels_;
  std::size_t capacity_;
  std::size_t dense_size_;
  std::size_t guard_;
  std::vector<std::size_t> strides_;
};

// Number of count vectors over `labels` labels with the given total.
std::size_t simplex_size(int labels, std::size_t total);

template <class V>
class HTable {
 public:
  HTable(int labels, std::size_t owner_size, std::size_t capacity)
      : layout_(labels, capacity), owner_size_(owner_size),
        storage_(layout_.dense_size() + 2 * layout_.guard()) {
    if (owner_size > capacity) throw std::invalid_argument("HTable: owner size exceeds capacity");
  }

  const SimplexLayout& layout() const { return layout_; }
  int labels() const { return layout_.labels(); }
  std::size_t owner_size() const { return owner_size_; }
  // Caller guarantees that entries outside the new domain are zero.
  void set_owner_size(std::size_t s) { owner_size_ = s; }

  // Requires m.total() == owner_size().
  const V& at(const CountVector& m) const { return storage_[layout_.guard() + checked_index(m)]; }
  V& at(const CountVector& m) { return storage_[layout_.guard() + checked_index(m)]; }

  // Dense element 0; the guard makes data()[-guard .. dense+guard) valid.
  V* data() { return storage_.data() + layout_.guard(); }
  const V* data() const { return storage_.data() + layout_.guard(); }
  V& operator[](std::size_t index) { return data()[index]; }
  const V& operator[](std::size_t index) const { return data()[index]; }

  template <class Fn>
  void for_each(Fn&& fn) const {
    layout_.for_each(owner_size_, [&](std::size_t idx, const CountVector& m) { fn(m, data()[idx]); });
  }

  // Same labels, owner size and entries; capacities may differ.
  friend bool operator==(const HTable& a, const HTable& b) {
    if (a.labels() != b.labels() || a.owner_size_ != b.owner_size_) return false;
    bool equal = true;
    a.layout_.for_each(a.owner_size_, [&](std::size_t idx, const CountVector& m) {
      if (equal && !(a.data()[idx] == b.at(m))) equal = false;
    });
    return equal;
  }

 private:
  std::size_t checked_index(const CountVector& m) const {
    if (m.labels() != labels() || m.total() != owner_size_)
      throw std::out_of_range("HTable: count vector outside table domain");
    return layout_.index(m);
  }

  SimplexLayout layout_;
  std::size_t owner_size_;
  std::vector<V> storage_;
};

inline double* raw_logs(HTable<LogValue>& t) { return reinterpret_cast<double*>(t.data()); }
inline const double* raw_logs(const HTable<LogValue>& t) { return reinterpret_cast<const double*>(t.data()); }

template <class Fn>
void SimplexLayout::for_each_row(std::size_t total, Fn&& fn) const {
  if (total > capacity_) throw std::out_of_range("SimplexLayout: total exceeds capacity");
  if (labels_ == 2) {
    fn(std::size_t{0}, total + 1);
    return;
  }
  // Odometer over the fixed labels 1..K-2.
  const int fixed = labels_ - 2;
  std::vector<std::size_t> prefix(static_cast<std::size_t>(fixed), 0);
  std::size_t sum = 0, start = 0;
  while (true) {
    fn(start, total - sum + 1);
    int d = fixed - 1;
    while (d >= 0) {
      auto& c = prefix[static_cast<std::size_t>(d)];
      const std::size_t stride = strides_[static_cast<std::size_t>(d) + 1];
      if (sum < total) {
        ++c;
        ++sum;
        start += stride;
        break;
      }
      sum -= c;
      start -= c * stride;
      c = 0;
      --d;
    }
    if (d < 0) return;
  }
}

template <class Fn>
void SimplexLayout::for_each(std::size_t total, Fn&& fn) const {
  CountVector m(std::vector<std::size_t>(static_cast<std::size_t>(labels_), 0));
  const int last = labels_ - 1;
  std::vector<std::size_t> prefix;
  for_each_row(total, [&](std::size_t start, std::size_t len) {
    // Recover the fixed coordinates from the row start.
    std::size_t rem = start, fixed_sum = 0;
    for (int k = 1; k < last; ++k) {
      m[k] = rem / strides_[static_cast<std::size_t>(k)];
      rem -= m[k] * strides_[static_cast<std::size_t>(k)];
      fixed_sum += m[k];
    }
    for (std::size_t j = 0; j < len; ++j) {
      m[last] = j;
      m[0] = total - fixed_sum - j;
      fn(start + j, static_cast<const CountVector&>(m));
    }
  });
}

}  // namespace exactmrf
