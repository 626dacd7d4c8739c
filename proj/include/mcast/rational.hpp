#ifndef MCAST_RATIONAL_HPP
#define MCAST_RATIONAL_HPP

#include <boost/multiprecision/gmp.hpp>

#include <cstddef>
#include <string>
#include <string_view>

namespace mcast {

// Exact rational used for every cost, share and potential in the library.
using Rational = boost::multiprecision::number<boost::multiprecision::gmp_rational,
                                               boost::multiprecision::et_off>;
using BigInt = boost::multiprecision::number<boost::multiprecision::gmp_int,
                                             boost::multiprecision::et_off>;

/// Parses "num" or "num/den" (optional leading '-'). Throws std::invalid_argument.
Rational parse_rational(std::string_view text);

/// "n" for integers, "n/d" otherwise, always in lowest terms.
std::string to_string(const Rational& value);

double to_double(const Rational& value);

Rational pow_int(const Rational& base, unsigned exponent);

// Harmonic numbers H_k = 1 + 1/2 + ... + 1/k (H_0 = 0), memoized.
const Rational& harmonic(std::size_t k);

// (H_k)^2, the per-class budget term used by intervals and homogeneity.
const Rational& harmonic_sq(std::size_t k);

}  // namespace mcast

#endif  // MCAST_RATIONAL_HPP
