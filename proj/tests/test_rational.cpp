#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "tot/rational.hpp"

using namespace tot;

TEST_CASE("construction normalizes sign and gcd") {
  auto r = make_rational(4, -6);
  REQUIRE(r.has_value());
  CHECK(r->num == -2);
  CHECK(r->den == 3);
  CHECK_FALSE(make_rational(1, 0).has_value());
}

TEST_CASE("arithmetic is exact") {
  const Rational a{8, 1};
  const Rational third = *make_rational(8, 3);
  // 3 - 8/3 = 1/3, 8 / (1/3) = 24
  auto inner = rat_sub(Rational{3, 1}, third);
  REQUIRE(inner.has_value());
  CHECK(*inner == (Rational{1, 3}));
  auto result = rat_div(a, *inner);
  REQUIRE(result.has_value());
  CHECK(*result == (Rational{24, 1}));
}

TEST_CASE("division by zero is rejected") {
  CHECK_FALSE(rat_div(Rational{1, 1}, Rational{0, 1}).has_value());
  CHECK(rat_apply('/', Rational{1, 1}, Rational{0, 1}) == std::nullopt);
}

TEST_CASE("ordering") {
  CHECK(rat_less(Rational{1, 3}, Rational{1, 2}));
  CHECK_FALSE(rat_less(Rational{1, 2}, Rational{1, 3}));
  CHECK(rat_less(Rational{-5, 1}, Rational{0, 1}));
}

TEST_CASE("formatting") {
  CHECK(rat_to_string(Rational{7, 1}) == "7");
  CHECK(rat_to_string(*make_rational(8, 3)) == "8/3");
  CHECK(rat_to_string(*make_rational(-4, 6)) == "-2/3");
}

TEST_CASE("parsing") {
  CHECK(parse_rational("7") == make_rational(7, 1));
  CHECK(parse_rational(" -7 ") == make_rational(-7, 1));
  CHECK(parse_rational("8/3") == make_rational(8, 3));
  CHECK(parse_rational("2.5") == make_rational(5, 2));
  CHECK(parse_rational("0.91") == make_rational(91, 100));
  CHECK_FALSE(parse_rational("").has_value());
  CHECK_FALSE(parse_rational("abc").has_value());
  CHECK_FALSE(parse_rational("1/0").has_value());
  CHECK_FALSE(parse_rational("1.").has_value());
  CHECK_FALSE(parse_rational("1 2").has_value());
}

TEST_CASE("round trip parse(to_string(r)) == r") {
  const long long nums[] = {-24, -5, -1, 0, 1, 3, 8, 24, 169};
  const long long dens[] = {1, 2, 3, 7, 13};
  for (long long n : nums) {
    for (long long d : dens) {
      const Rational r = *make_rational(n, d);
      CHECK(parse_rational(rat_to_string(r)) == r);
    }
  }
}
