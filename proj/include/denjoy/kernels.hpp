#pragma once

// Closed forms for the two exponential kernels the construction is built
// from, with exact k-th derivatives by polynomial recurrence:
//
//   ramp kernel    beta(u) = exp(-1/u)          (u > 0, flat at 0+)
//   bump kernel    K(s)    = exp(-1/(s(1-s)))   (0 < s < 1, flat at both ends)
//
// The ramp antiderivative B(v) = integral_0^v exp(-1/u) du equals
// Gamma(-1, 1/v) = integral_{1/v}^inf exp(-t) t^-2 dt and is evaluated by a
// modified-Lentz continued fraction, so no quadrature enters the base map.
// The bump kernel has no elementary antiderivative; its normalized CDF is
// tabulated once per Real type on fixed composite Gauss-Legendre panels,
// which keeps every evaluation deterministic.

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <string>
#include <vector>

#include "denjoy/errors.hpp"

namespace denjoy {

// ---------------------------------------------------------------------------
// small dense polynomials over Real, for the derivative recurrences

template <class Real>
struct Poly {
  std::vector<Real> c;  // c[i] * x^i

  Real eval(Real x) const {
    Real r = 0;
    for (size_t i = c.size(); i-- > 0;) r = r * x + c[i];
    return r;
  }
  Poly derivative() const {
    if (c.size() <= 1) return Poly{{Real(0)}};
    Poly d;
    d.c.resize(c.size() - 1);
    for (size_t i = 1; i < c.size(); ++i) d.c[i - 1] = c[i] * Real(i);
    return d;
  }
};

template <class Real>
Poly<Real> operator*(const Poly<Real>& a, const Poly<Real>& b) {
  Poly<Real> r;
  r.c.assign(a.c.size() + b.c.size() - 1, Real(0));
  for (size_t i = 0; i < a.c.size(); ++i)
    for (size_t j = 0; j < b.c.size(); ++j) r.c[i + j] += a.c[i] * b.c[j];
  return r;
}

template <class Real>
Poly<Real> operator+(const Poly<Real>& a, const Poly<Real>& b) {
  Poly<Real> r;
  r.c.assign(std::max(a.c.size(), b.c.size()), Real(0));
  for (size_t i = 0; i < a.c.size(); ++i) r.c[i] += a.c[i];
  for (size_t i = 0; i < b.c.size(); ++i) r.c[i] += b.c[i];
  return r;
}

template <class Real>
Poly<Real> scale_poly(const Poly<Real>& a, Real s) {
  Poly<Real> r = a;
  for (auto& v : r.c) v *= s;
  return r;
}

// ---------------------------------------------------------------------------
// derivative tables for exp(-1/q(s)):  d^k/ds^k exp(-1/q) = N_k/q^{2k} exp(-1/q)
// with N_{k+1} = q^2 N_k' - 2k q q' N_k + q' N_k, N_0 = 1.

inline constexpr int kMaxDerivOrder = 48;

template <class Real>
class ExpKernelDerivs {
 public:
  explicit ExpKernelDerivs(Poly<Real> q) : q_(std::move(q)), qp_(q_.derivative()) {
    table_.push_back(Poly<Real>{{Real(1)}});
  }

  // k-th derivative at s, given q(s) > 0; returns 0 when the exponential
  // dominates (log-magnitude guard keeps the rational factor from overflowing)
  Real eval(Real s, int k) const {
    ensure(k);
    using std::exp;
    using std::log;
    Real qs = q_.eval(s);
    if (!(qs > Real(0))) return Real(0);
    Real n = table_[k].eval(s);
    if (n == Real(0)) return Real(0);
    Real mag = -Real(1) / qs - Real(2 * k) * log(qs) + log(n < 0 ? -n : n);
    if (mag < Real(-600)) return Real(0);
    Real v = exp(mag);
    return n < 0 ? -v : v;
  }

  void ensure(int k) const {
    if (k > kMaxDerivOrder)
      throw capability_error("derivative order " + std::to_string(k) +
                             " exceeds supported symbolic depth " + std::to_string(kMaxDerivOrder));
    std::lock_guard<std::mutex> lock(mu_);
    while (static_cast<int>(table_.size()) <= k) {
      int n = static_cast<int>(table_.size()) - 1;
      const Poly<Real>& Nk = table_.back();
      Poly<Real> next = q_ * q_ * Nk.derivative() + scale_poly(q_ * qp_ * Nk, Real(-2 * n)) + qp_ * Nk;
      table_.push_back(std::move(next));
    }
  }

 private:
  Poly<Real> q_, qp_;
  mutable std::vector<Poly<Real>> table_;
  mutable std::mutex mu_;
};

// ---------------------------------------------------------------------------
// ramp kernel beta(u) = exp(-1/u)

template <class Real>
Real ramp_value(Real u) {
  using std::exp;
  if (!(u > Real(0))) return Real(0);
  Real w = Real(1) / u;
  if (w > Real(700)) return Real(0);
  return exp(-w);
}

template <class Real>
const ExpKernelDerivs<Real>& ramp_derivs() {
  static ExpKernelDerivs<Real> tab(Poly<Real>{{Real(0), Real(1)}});  // q(u) = u
  return tab;
}

// B(v) = integral_0^v exp(-1/u) du = Gamma(-1, 1/v), v > 0. Modified Lentz
// on the standard continued fraction for the upper incomplete gamma:
//   Gamma(a, z) = exp(-z) z^a / (z + 1 - a - 1(1-a)/(z + 3 - a - 2(2-a)/...))
// with a = -1. Converges quickly for z >= 1; here z = 1/v >= 4/3 always.
template <class Real>
Real ramp_antiderivative(Real v) {
  using std::exp;
  using std::fabs;
  if (!(v > Real(0))) return Real(0);
  Real z = Real(1) / v;
  if (z > Real(700)) return Real(0);
  const Real tiny = std::numeric_limits<Real>::min() * Real(16);
  const Real eps = std::numeric_limits<Real>::epsilon() / 2;
  // Lentz with b0 = z + 2, b_k = z + 2 + 2k, a_k = -k(k+1)
  Real f = z + Real(2);
  if (f == Real(0)) f = tiny;
  Real C = f, D = Real(0);
  for (int k = 1; k < 512; ++k) {
    Real ak = -Real(k) * Real(k + 1);
    Real b = z + Real(2) + Real(2 * k);
    D = b + ak * D;
    if (fabs(D) < tiny) D = tiny;
    C = b + ak / C;
    if (fabs(C) < tiny) C = tiny;
    D = Real(1) / D;
    Real delta = C * D;
    f *= delta;
    if (fabs(delta - Real(1)) < eps) break;
  }
  // Gamma(-1, z) = exp(-z) z^{-1} / f
  return exp(-z) / (z * f);
}

// ---------------------------------------------------------------------------
// bump kernel K(s) = exp(-1/(s(1-s))), supported on [0,1]

template <class Real>
Real bump_value(Real s) {
  using std::exp;
  if (!(s > Real(0)) || !(s < Real(1))) return Real(0);
  Real p = s * (Real(1) - s);
  Real w = Real(1) / p;
  if (w > Real(700)) return Real(0);
  return exp(-w);
}

template <class Real>
const ExpKernelDerivs<Real>& bump_derivs() {
  static ExpKernelDerivs<Real> tab(Poly<Real>{{Real(0), Real(1), Real(-1)}});  // q(s) = s - s^2
  return tab;
}

template <class Real>
Real bump_derivative(Real s, int k) {
  if (k == 0) return bump_value(s);
  if (!(s > Real(0)) || !(s < Real(1))) return Real(0);
  return bump_derivs<Real>().eval(s, k);
}

// sup over [0,1] of K itself: attained at s = 1/2
template <class Real>
Real bump_sup() {
  using std::exp;
  return exp(Real(-4));
}

// ---------------------------------------------------------------------------
// normalized bump CDF Phi(s) = integral_0^s K, tabulated on fixed
// composite Gauss-Legendre panels (deterministic, near machine accuracy)

namespace gl {
// 16-point Gauss-Legendre nodes/weights on [-1,1] (positive half; mirror)
inline constexpr double nodes16[8] = {
    0.0950125098376374401853193, 0.2816035507792589132304605,
    0.4580167776572273863424194, 0.6178762444026437484466718,
    0.7554044083550030338951012, 0.8656312023878317438804679,
    0.9445750230732325760779884, 0.9894009349916499325961542};
inline constexpr double weights16[8] = {
    0.1894506104550684962853967, 0.1826034150449235888667637,
    0.1691565193950025381893121, 0.1495959888165767320815017,
    0.1246289712555338720524763, 0.0951585116824927848099251,
    0.0622535239386478928628438, 0.0271524594117540948517806};
}  // namespace gl

template <class Real, class F>
Real gauss16(F&& f, Real a, Real b) {
  Real c = (a + b) / 2, h = (b - a) / 2;
  Real acc = 0;
  for (int i = 0; i < 8; ++i) {
    Real x = Real(gl::nodes16[i]) * h;
    acc += Real(gl::weights16[i]) * (f(c + x) + f(c - x));
  }
  return acc * h;
}

template <class Real>
class BumpCdf {
 public:
  static const BumpCdf& instance() {
    static BumpCdf tab;
    return tab;
  }

  // integral_0^s K(t) dt, clamped outside [0,1]
  Real operator()(Real s) const {
    if (!(s > Real(0))) return Real(0);
    if (s >= Real(1)) return mass_;
    int p = static_cast<int>(s * kPanels);
    if (p >= kPanels) p = kPanels - 1;
    Real left = Real(p) / kPanels;
    return prefix_[p] + gauss16([](Real t) { return bump_value(t); }, left, s);
  }

  Real mass() const { return mass_; }

 private:
  static constexpr int kPanels = 256;
  BumpCdf() {
    prefix_.resize(kPanels + 1);
    prefix_[0] = 0;
    for (int p = 0; p < kPanels; ++p) {
      Real a = Real(p) / kPanels, b = Real(p + 1) / kPanels;
      prefix_[p + 1] = prefix_[p] + gauss16([](Real t) { return bump_value(t); }, a, b);
    }
    mass_ = prefix_[kPanels];
  }
  std::vector<Real> prefix_;
  Real mass_;
};

template <class Real>
Real bump_cdf(Real s) {
  return BumpCdf<Real>::instance()(s);
}

template <class Real>
Real bump_mass() {
  return BumpCdf<Real>::instance().mass();
}

// sup over [0,1] of |K^(j)|, cached per order; scanned on a fixed fine grid
// with local refinement around the best cell (upper estimates used for
// calibration bounds, padded by 1%)
template <class Real>
Real bump_shape_sup(int order) {
  static std::vector<Real> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  while (static_cast<int>(cache.size()) <= order) {
    int k = static_cast<int>(cache.size());
    const int n0 = 4096;
    Real best = 0, at = Real(0.5);
    for (int i = 1; i < n0; ++i) {
      Real s = Real(i) / n0;
      Real v = bump_derivative(s, k);
      if (v < 0) v = -v;
      if (v > best) { best = v; at = s; }
    }
    Real lo = at - Real(2) / n0, hi = at + Real(2) / n0;
    for (int pass = 0; pass < 30; ++pass) {
      Real step = (hi - lo) / 64;
      Real b2 = best, a2 = at;
      for (int i = 0; i <= 64; ++i) {
        Real s = lo + step * i;
        Real v = bump_derivative(s, k);
        if (v < 0) v = -v;
        if (v > b2) { b2 = v; a2 = s; }
      }
      best = b2;
      lo = a2 - step;
      hi = a2 + step;
    }
    cache.push_back(best * Real(1.01));
  }
  return cache[order];
}

}  // namespace denjoy
