#include <sstream>

#include "doctest.h"
#include "heig/serialization.hpp"
#include "test_support.hpp"

using namespace heig;
using namespace heig::test;

TEST_CASE("hodlr container: bit-exact round trip") {
  Rng rng(101);
  HodlrMatrix m = random_hodlr(48, 8, 3, rng);

  std::ostringstream first;
  write_hodlr(first, m);
  std::istringstream in(first.str());
  HodlrMatrix back = read_hodlr(in);

  CHECK(back.rows() == m.rows());
  CHECK(back.level() == m.level());
  CHECK((to_dense(back) - to_dense(m)).cwiseAbs().maxCoeff() == 0.0);

  std::ostringstream second;
  write_hodlr(second, back);
  CHECK(first.str() == second.str());
}

TEST_CASE("hodlr container: rectangular column extracts round trip") {
  Rng rng(103);
  HodlrMatrix m = random_hodlr(32, 4, 2, rng);
  HodlrMatrix rect = extract_columns(m, {0, 5, 9, 13, 17, 21, 30});
  std::ostringstream os;
  write_hodlr(os, rect);
  std::istringstream is(os.str());
  HodlrMatrix back = read_hodlr(is);
  CHECK(back.cols() == 7);
  CHECK((to_dense(back) - to_dense(rect)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("hodlr container: rejects foreign data") {
  std::istringstream is("not a container at all");
  CHECK_THROWS_AS(read_hodlr(is), IoError);
}
