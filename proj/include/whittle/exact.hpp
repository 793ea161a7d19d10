#pragma once

#include <string>

#include <boost/multiprecision/cpp_int.hpp>

namespace whittle::exact {

using Rational = boost::multiprecision::cpp_rational;

/// b_{0,l} = r (1 - (p-r)^l) / (1 + r - p), untruncated, in exact arithmetic.
Rational off_belief(const Rational& p, const Rational& r, int l);

/// b_{1,l} = (r + (1-p)(p-r)^l) / (1 + r - p).
Rational on_belief(const Rational& p, const Rational& r, int l);

/// (1-p) + b_{0,l} > (l-1)(b_{0,l+1} - b_{0,l}): the bound that keeps the
/// aging block of the linearized fluid map contracting.
bool idle_gap_bound_holds(const Rational& p, const Rational& r, int l);

/// Decimal string such as "0.85" to an exact rational.
Rational parse_decimal(const std::string& text);

}  // namespace whittle::exact
