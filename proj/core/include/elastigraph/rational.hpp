#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <stdexcept>
#include <string>

namespace elastigraph {

// Exact rational scalar. The combinatorial layer (cuts, flows, train
// tracks) relies on exact arithmetic; the numeric layer converts to
// double at the boundary.
using Rat = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

inline double to_double(const Rat& r) { return r.convert_to<double>(); }

// Exact conversion; every finite double is a dyadic rational.
inline Rat rat_from_double(double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("rat_from_double: non-finite value");
  return Rat(x);
}

// Accepts "p/q", integer, and plain decimal ("0.25", "-3.5e2") literals.
Rat rat_from_string(const std::string& s);

std::string rat_to_string(const Rat& r);

inline Rat rat_abs(const Rat& r) { return r < 0 ? Rat(-r) : r; }

inline Rat rat_min(const Rat& a, const Rat& b) { return a < b ? a : b; }
inline Rat rat_max(const Rat& a, const Rat& b) { return a < b ? b : a; }

}  // namespace elastigraph
