#include <doctest.h>

#include <set>

#include "exactmrf/htable.hpp"
#include "support.hpp"

using namespace exactmrf;

TEST_CASE("simplex sizes") {
  CHECK(simplex_size(2, 0) == 1);
  CHECK(simplex_size(2, 7) == 8);
  CHECK(simplex_size(3, 3) == 10);
  CHECK(simplex_size(4, 5) == 56);
}

TEST_CASE("layout enumerates each count vector once, in index order") {
  for (int K = 2; K <= 5; ++K) {
    const SimplexLayout layout(K, 6);
    for (std::size_t total = 0; total <= 6; ++total) {
      std::size_t seen = 0, last = 0;
      std::set<std::vector<std::size_t>> distinct;
      layout.for_each(total, [&](std::size_t idx, const CountVector& m) {
        CHECK(m.total() == total);
        CHECK(layout.index(m) == idx);
        CHECK(idx < layout.dense_size());
        if (seen > 0) CHECK(idx > last);
        last = idx;
        distinct.insert(m.counts());
        ++seen;
      });
      CHECK(seen == simplex_size(K, total));
      CHECK(distinct.size() == seen);
    }
  }
}

TEST_CASE("strides shift by one label") {
  const SimplexLayout layout(4, 5);
  const CountVector m{1, 2, 0, 1};
  for (int k = 0; k < 4; ++k) {
    if (k == 0)
      CHECK(layout.index(m.plus(0)) == layout.index(m));
    else
      CHECK(layout.index(m.plus(k)) == layout.index(m) + layout.stride(k));
  }
  CHECK(layout.stride(0) == 0);
  CHECK(layout.side() == 6);
}

TEST_CASE("edge exponents count every edge once") {
  for (int K = 2; K <= 4; ++K) {
    const SimplexLayout layout(K, 9);
    for (std::size_t total = 0; total <= 9; ++total)
      layout.for_each(total, [&](std::size_t, const CountVector& m) {
        std::uint64_t sum = 0;
        for (int a = 0; a < K; ++a)
          for (int b = a; b < K; ++b) sum += edge_exponent(m, a, b);
        CHECK(sum == total * (total - (total > 0 ? 1 : 0)) / 2);
      });
  }
  const CountVector m{3, 2};
  CHECK(edge_exponent(m, 0, 0) == 3);
  CHECK(edge_exponent(m, 0, 1) == 6);
  CHECK(edge_exponent(m, 1, 1) == 1);
}

TEST_CASE("HTable checked access and guards") {
  HTable<LogValue> t(3, 2, 4);
  t.at(CountVector{0, 1, 1}) = LogValue::one();
  CHECK(t.at(CountVector{0, 1, 1}) == LogValue::one());
  CHECK_THROWS_AS(t.at(CountVector{1, 1, 1}), std::out_of_range);
  CHECK_THROWS_AS(t.at(CountVector{1, 1}), std::out_of_range);
  const std::ptrdiff_t guard = static_cast<std::ptrdiff_t>(t.layout().guard());
  for (std::ptrdiff_t i = -guard; i < 0; ++i) CHECK(t.data()[i].is_zero());
  CHECK_THROWS_AS(HTable<LogValue>(2, 5, 4), std::invalid_argument);

  HTable<LogValue> other(3, 2, 7);
  other.at(CountVector{0, 1, 1}) = LogValue::one();
  CHECK(t == other);
  other.at(CountVector{2, 0, 0}) = LogValue::one();
  CHECK_FALSE(t == other);
}
