#include <doctest.h>

#include "exactmrf/errors.hpp"
#include "exactmrf/oracle.hpp"
#include "support.hpp"

using namespace exactmrf;

TEST_CASE("brute_partition examples") {
  CHECK(brute_partition<ExactRational>(testing::uniform_model(GraphFamily::Complete, 2, 5, 0, NumericMode::ExactRational)) ==
        ExactRational(32));
  CHECK(brute_partition<ExactRational>(testing::canonical_binary("2", {"1", "1", "1"}, NumericMode::ExactRational)) ==
        ExactRational(26));
  const ModelSpec single = testing::complete_model(3, 1, {"1", "1", "1", "1", "1", "1", "1", "1", "1"}, {"0.5", "2", "4"});
  CHECK(brute_partition<LogValue>(single).linear() == doctest::Approx(6.5).epsilon(1e-15));
}

TEST_CASE("enumeration cap") {
  const ModelSpec big = testing::uniform_model(GraphFamily::Complete, 2, 25);
  CHECK(labelling_count(big) == (std::uint64_t{1} << 25));
  CHECK_THROWS_AS(brute_partition<LogValue>(big), TooLarge);
  CHECK_THROWS_AS(brute_marginals(big), TooLarge);
  OracleOptions small;
  small.cap = 15;
  CHECK_THROWS_AS(brute_partition<LogValue>(testing::uniform_model(GraphFamily::Complete, 2, 4), small), TooLarge);
  CHECK(labelling_count(testing::uniform_model(GraphFamily::Complete, 4, 40)) == UINT64_MAX);
}

TEST_CASE("brute_marginals examples") {
  const MarginalReport ind = brute_marginals(testing::canonical_binary("1", {"3", "0.25"}));
  CHECK(ind.unary(0, 1) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(ind.unary(1, 1) == doctest::Approx(0.8).epsilon(1e-15));

  const MarginalReport sym = brute_marginals(testing::canonical_binary("3", {"2", "2", "2", "2"}));
  for (std::size_t i = 1; i < 4; ++i) CHECK(sym.unary(i, 0) == doctest::Approx(sym.unary(0, 0)).epsilon(1e-15));

  const ModelSpec s = random_model(GraphFamily::Complete, 3, 4, 0, WeightRange{0.1, 10.0}, 3, NumericMode::ExactRational);
  const auto pairs = all_pairs(4);
  CHECK(pairs.size() == 6);
  const MarginalReport r = brute_marginals(s, pairs);
  for (const auto& t : r.pairwise)
    for (std::size_t a = 0; a < 3; ++a) {
      ExactRational row, col;
      for (std::size_t b = 0; b < 3; ++b) {
        row += (*t.exact)(a, b);
        col += (*t.exact)(b, a);
      }
      CHECK(row == (*r.unary_exact)(t.i, a));
      CHECK(col == (*r.unary_exact)(t.j, a));
    }
}

TEST_CASE("bipartite enumeration uses cross edges only") {
  // Two A vertices and one B vertex; a g that punishes equal labels would
  // also punish the A-A pair on a complete graph.
  const ModelSpec s = testing::bipartite_model(2, 2, 1, {"0", "1", "1", "0"}, {"1", "1", "1", "1", "1", "1"},
                                               NumericMode::ExactRational);
  CHECK(brute_partition<ExactRational>(s) == ExactRational(2));
}

TEST_CASE("exact enumeration with mixed denominators") {
  const ModelSpec one = testing::complete_model(3, 1, {"2", "1", "1", "1", "5", "1", "1", "1", "7"}, {"1/3", "2/7", "1"},
                                                NumericMode::ExactRational);
  CHECK(brute_partition<ExactRational>(one) == ExactRational(34, 21));
  // beta1 beta2 + alpha (beta1 + beta2) + 1.
  const ModelSpec two = testing::canonical_binary("1/2", {"1/3", "3/4"}, NumericMode::ExactRational);
  CHECK(brute_partition<ExactRational>(two) == ExactRational(43, 24));
  const MarginalReport r = brute_marginals(two);
  CHECK(*r.Z_exact == ExactRational(43, 24));
  // p(x_0 = 0) = beta1 (beta2 + alpha) / Z.
  CHECK((*r.unary_exact)(0, 0) == ExactRational(1, 3) * ExactRational(5, 4) / ExactRational(43, 24));
}
