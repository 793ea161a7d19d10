#include "whittle/exact.hpp"

#include <stdexcept>
#include <string>

namespace whittle::exact {

namespace {

Rational power(const Rational& base, int n) {
  Rational out = 1;
  for (int i = 0; i < n; ++i) out *= base;
  return out;
}

}  // namespace

Rational off_belief(const Rational& p, const Rational& r, int l) {
  return r * (1 - power(p - r, l)) / (1 + r - p);
}

Rational on_belief(const Rational& p, const Rational& r, int l) {
  return (r + (1 - p) * power(p - r, l)) / (1 + r - p);
}

bool idle_gap_bound_holds(const Rational& p, const Rational& r, int l) {
  if (l < 1) throw std::invalid_argument("age must be >= 1");
  const Rational b = off_belief(p, r, l);
  return (1 - p) + b > (l - 1) * (off_belief(p, r, l + 1) - b);
}

Rational parse_decimal(const std::string& text) {
  const auto dot = text.find('.');
  std::string digits = text;
  Rational scale = 1;
  if (dot != std::string::npos) {
    digits = text.substr(0, dot) + text.substr(dot + 1);
    for (std::size_t i = dot + 1; i < text.size(); ++i) scale *= 10;
  }
  if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos) {
    throw std::invalid_argument("not a plain decimal: " + text);
  }
  // cpp_int reads a leading zero as an octal prefix.
  const auto first = digits.find_first_not_of('0');
  if (first == std::string::npos) return Rational(0);
  return Rational(boost::multiprecision::cpp_int(digits.substr(first))) / scale;
}

}  // namespace whittle::exact
