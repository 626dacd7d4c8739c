#include <doctest.h>

#include <stdexcept>

#include "mcast/instance.hpp"
#include "mcast/rational.hpp"

using mcast::Rational;

TEST_CASE("parse and print rationals in lowest terms") {
  CHECK(mcast::parse_rational("3") == Rational(3));
  CHECK(mcast::parse_rational("6/4") == Rational(3, 2));
  CHECK(mcast::parse_rational("-1/3") == Rational(-1, 3));
  CHECK(mcast::to_string(Rational(6, 4)) == "3/2");
  CHECK(mcast::to_string(Rational(5)) == "5");
  CHECK_THROWS_AS(mcast::parse_rational("1/0"), std::invalid_argument);
  CHECK_THROWS_AS(mcast::parse_rational("x"), std::invalid_argument);
  CHECK_THROWS_AS(mcast::parse_rational(""), std::invalid_argument);
}

TEST_CASE("harmonic numbers against a direct sum") {
  Rational sum = 0;
  CHECK(mcast::harmonic(0) == 0);
  for (unsigned k = 1; k <= 40; ++k) {
    sum += Rational(1, k);
    CHECK(mcast::harmonic(k) == sum);
    CHECK(mcast::harmonic_sq(k) == sum * sum);
  }
  CHECK(mcast::harmonic(3) == Rational(11, 6));
}

TEST_CASE("pow_int") {
  CHECK(mcast::pow_int(Rational(256), 0) == 1);
  CHECK(mcast::pow_int(Rational(256), 3) == Rational(16777216));
  CHECK(mcast::pow_int(Rational(1, 2), 4) == Rational(1, 16));
}

TEST_CASE("edge classes at the powers of 256") {
  auto c1 = mcast::edge_class(Rational(1));
  CHECK(c1.index == 0);
  CHECK(c1.low == 1);
  CHECK(c1.upp == 256);
  auto c256 = mcast::edge_class(Rational(256));
  CHECK(c256.index == 1);
  CHECK(c256.low == 256);
  CHECK(mcast::edge_class(Rational(300)).index == 1);
  CHECK(mcast::edge_class(Rational(255)).index == 0);
  CHECK(mcast::edge_class(Rational(65535, 256)).index == 0);
  for (unsigned k = 0; k <= 4; ++k) {
    Rational p = mcast::pow_int(Rational(256), k);
    CHECK(mcast::edge_class(p).index == k);
    if (k > 0) CHECK(mcast::edge_class(p - Rational(1, 1000)).index == k - 1);
  }
  CHECK_THROWS_AS(mcast::edge_class(Rational(1, 2)), std::domain_error);
}

TEST_CASE("edge class is monotone in cost") {
  unsigned previous = 0;
  for (int i = 1; i < 200000; i = i * 3 / 2 + 1) {
    unsigned cls = mcast::edge_class(Rational(i)).index;
    CHECK(cls >= previous);
    previous = cls;
  }
}
