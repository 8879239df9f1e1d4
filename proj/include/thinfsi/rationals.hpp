#ifndef THINFSI_RATIONALS_HPP
#define THINFSI_RATIONALS_HPP

#include <boost/rational.hpp>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace thinfsi {

/// Exact rational arithmetic for scaling exponents. Equality tests on
/// exponents (e.g. tau == -1) must be exact, so exponents are never held
/// as doubles.
using Rational = boost::rational<long long>;

inline double to_double(const Rational& q) {
  return static_cast<double>(q.numerator()) / static_cast<double>(q.denominator());
}

/// Parses "3", "-5/2", "3.5" or "0.25" into an exact rational.
inline Rational parse_rational(const std::string& text) {
  if (text.empty()) throw std::invalid_argument("empty rational literal");
  const auto slash = text.find('/');
  if (slash != std::string::npos) {
    const long long num = std::stoll(text.substr(0, slash));
    const long long den = std::stoll(text.substr(slash + 1));
    if (den == 0) throw std::invalid_argument("zero denominator in '" + text + "'");
    return {num, den};
  }
  const auto dot = text.find('.');
  if (dot == std::string::npos) return {std::stoll(text), 1};
  const std::string head = text.substr(0, dot);
  const std::string frac = text.substr(dot + 1);
  if (frac.size() > 12) throw std::invalid_argument("decimal literal too long: '" + text + "'");
  long long den = 1;
  for (size_t i = 0; i < frac.size(); ++i) den *= 10;
  long long num = std::stoll(head.empty() || head == "-" ? head + "0" : head) * den;
  const long long f = frac.empty() ? 0 : std::stoll(frac);
  num += (text[0] == '-') ? -f : f;
  return {num, den};
}

inline std::string to_string(const Rational& q) {
  if (q.denominator() == 1) return std::to_string(q.numerator());
  return std::to_string(q.numerator()) + "/" + std::to_string(q.denominator());
}

/// base^q for real base > 0 and rational exponent.
inline double rational_pow(double base, const Rational& q) {
  return std::pow(base, to_double(q));
}

}  // namespace thinfsi

#endif
