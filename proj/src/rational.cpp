#include "mcast/rational.hpp"

#include <cctype>
#include <deque>
#include <mutex>
#include <stdexcept>

namespace mcast {

namespace {

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

struct HarmonicTable {
  std::mutex mu;
  // deque keeps references stable while the table grows.
  std::deque<Rational> h{Rational(0)};
  std::deque<Rational> h_sq{Rational(0)};

  void extend_to(std::size_t k) {
    while (h.size() <= k) {
      Rational next = h.back() + Rational(1, static_cast<long>(h.size()));
      h_sq.push_back(next * next);
      h.push_back(std::move(next));
    }
  }
};

HarmonicTable& table() {
  static HarmonicTable t;
  return t;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  bool negative = false;
  if (!text.empty() && text.front() == '-') {
    negative = true;
    text.remove_prefix(1);
  }
  auto slash = text.find('/');
  std::string_view num = text.substr(0, slash);
  std::string_view den = slash == std::string_view::npos ? std::string_view("1")
                                                         : text.substr(slash + 1);
  if (!all_digits(num) || !all_digits(den)) {
    throw std::invalid_argument("malformed rational '" + std::string(text) + "'");
  }
  BigInt n{std::string(num)};
  BigInt d{std::string(den)};
  if (d == 0) throw std::invalid_argument("zero denominator");
  Rational r(n, d);
  return negative ? Rational(-r) : r;
}

std::string to_string(const Rational& value) {
  BigInt num = boost::multiprecision::numerator(value);
  BigInt den = boost::multiprecision::denominator(value);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

double to_double(const Rational& value) { return value.convert_to<double>(); }

Rational pow_int(const Rational& base, unsigned exponent) {
  Rational result(1);
  Rational b = base;
  while (exponent != 0) {
    if (exponent & 1U) result *= b;
    b *= b;
    exponent >>= 1U;
  }
  return result;
}

const Rational& harmonic(std::size_t k) {
  auto& t = table();
  std::lock_guard lock(t.mu);
  t.extend_to(k);
  return t.h[k];
}

const Rational& harmonic_sq(std::size_t k) {
  auto& t = table();
  std::lock_guard lock(t.mu);
  t.extend_to(k);
  return t.h_sq[k];
}

}  // namespace mcast
