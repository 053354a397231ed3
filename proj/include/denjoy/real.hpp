#pragma once

// Arithmetic backend selection. All numeric code is templated on a Real
// type so the working precision can be swapped (double by default,
// long double for the extended-range backend). Hex float strings give
// lossless serialization for either width.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <string>

namespace denjoy {

template <class Real>
struct real_traits;

template <>
struct real_traits<double> {
  static constexpr int bits = 64;
  static const char* name() { return "binary64"; }
  static std::string to_hex(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
  }
  static double from_hex(const std::string& s) { return std::strtod(s.c_str(), nullptr); }
};

template <>
struct real_traits<long double> {
  static constexpr int bits = 80;
  static const char* name() { return "binary80"; }
  static std::string to_hex(long double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%La", v);
    return buf;
  }
  static long double from_hex(const std::string& s) { return std::strtold(s.c_str(), nullptr); }
};

template <class Real>
std::string to_hex(Real v) { return real_traits<Real>::to_hex(v); }

template <class Real>
Real from_hex(const std::string& s) { return real_traits<Real>::from_hex(s); }

// frac(x) in [0,1) together with the exact integer part. The subtraction
// x - floor(x) is exact in binary floating point, which is what makes the
// degree-one identity F(x+1) = F(x) + 1 hold bit for bit.
template <class Real>
struct SplitPoint {
  long long whole;
  Real frac;
};

template <class Real>
SplitPoint<Real> split_unit(Real x) {
  using std::floor;
  Real f = floor(x);
  return {static_cast<long long>(f), x - f};
}

}  // namespace denjoy
