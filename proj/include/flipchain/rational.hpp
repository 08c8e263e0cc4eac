#pragma once

#include <string>

#include <boost/multiprecision/gmp.hpp>

namespace flipchain {

/// Exact rational, always stored reduced with a positive denominator.
using Rational = boost::multiprecision::mpq_rational;
using BigInt = boost::multiprecision::mpz_int;

/// Always "num/den", including integers ("1/1").
inline std::string to_string(const Rational& q) {
  return boost::multiprecision::numerator(q).str() + "/" +
         boost::multiprecision::denominator(q).str();
}

inline Rational make_rational(long long num, long long den) {
  return Rational(BigInt(num), BigInt(den));
}

}  // namespace flipchain
