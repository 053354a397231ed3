#pragma once

// Grid-based certification helpers: the C^n distance between two lifts that
// share a base (evaluated on the symbolic term difference, so common terms
// cancel exactly instead of drowning in roundoff), threshold flat-set
// detection, and extremum scans with dyadic refinement.

#include <algorithm>
#include <cmath>
#include <vector>

#include "denjoy/errors.hpp"
#include "denjoy/lift.hpp"

namespace denjoy {

struct GridSpec {
  int initial = 1 << 12;
  long long max_points = 1 << 20;
  double agree_rel = 0.01;       // stop refining when two passes agree to this
  int support_samples = 64;      // minimum samples across any bump support
};

// ---------------------------------------------------------------------------
// signed term difference of two lifts sharing a base

template <class Real>
struct LiftDiff {
  std::vector<std::pair<Real, const BumpTerm<Real>*>> parts;  // sign, term
  Real dshift = 0;

  Real value(Real frac) const {
    Real v = dshift;
    for (const auto& [sgn, t] : parts) v += sgn * t->cdf(frac);
    return v;
  }
  Real deriv(Real frac, int k) const {
    Real v = 0;
    for (const auto& [sgn, t] : parts) v += sgn * t->deriv(frac, k);
    return v;
  }
  std::vector<Interval<Real>> supports() const {
    std::vector<Interval<Real>> s;
    for (const auto& [sgn, t] : parts) {
      (void)sgn;
      if (t->amp_up != Real(0)) s.push_back(t->up);
      if (t->amp_down != Real(0)) s.push_back(t->down);
    }
    std::sort(s.begin(), s.end(), [](const auto& a, const auto& b) { return a.lo < b.lo; });
    return s;
  }
};

template <class Real>
bool terms_equal(const BumpTerm<Real>& a, const BumpTerm<Real>& b) {
  return a.up.lo == b.up.lo && a.up.hi == b.up.hi && a.down.lo == b.down.lo &&
         a.down.hi == b.down.hi && a.amp_up == b.amp_up && a.amp_down == b.amp_down &&
         a.scale == b.scale;
}

template <class Real>
LiftDiff<Real> lift_diff(const Lift<Real>& l1, const Lift<Real>& l2) {
  if (!l1.same_base(l2)) throw geometry_error("cn_norm_diff requires lifts sharing a base");
  size_t common = 0;
  while (common < l1.terms.size() && common < l2.terms.size() &&
         terms_equal(l1.terms[common], l2.terms[common]))
    ++common;
  LiftDiff<Real> d;
  d.dshift = l1.shift - l2.shift;
  for (size_t i = common; i < l1.terms.size(); ++i)
    if (!l1.terms[i].vanishes()) d.parts.push_back({Real(1), &l1.terms[i]});
  for (size_t i = common; i < l2.terms.size(); ++i)
    if (!l2.terms[i].vanishes()) d.parts.push_back({Real(-1), &l2.terms[i]});
  return d;
}

// ---------------------------------------------------------------------------
// sup of |f| over the diff's supports plus plateau values, refined until two
// passes agree within grid.agree_rel

template <class Real, class F>
Real sup_over_supports(const LiftDiff<Real>& d, F&& f, const GridSpec& grid, bool include_plateaus) {
  auto sup = std::vector<Interval<Real>>();
  {
    // merge overlapping supports into disjoint scan windows
    auto s = d.supports();
    for (const auto& iv : s) {
      if (!sup.empty() && iv.lo <= sup.back().hi) sup.back().hi = std::max(sup.back().hi, iv.hi);
      else sup.push_back(iv);
    }
  }
  using std::fabs;
  Real best = 0;
  if (include_plateaus) {
    // f is piecewise constant outside the supports; probe each gap
    Real prev = 0;
    for (const auto& iv : sup) {
      best = std::max(best, fabs(f(prev + (iv.lo - prev) / 2)));
      prev = iv.hi;
    }
    best = std::max(best, fabs(f(prev + (Real(1) - prev) / 2)));
    if (sup.empty()) best = std::max(best, fabs(f(Real(0.5))));
  }
  for (const auto& iv : sup) {
    int n = grid.support_samples;
    Real last = -1;
    for (;;) {
      Real m = 0;
      for (int i = 0; i <= n; ++i) {
        Real x = iv.lo + (iv.hi - iv.lo) * Real(i) / Real(n);
        m = std::max(m, fabs(f(x)));
      }
      if (last >= Real(0)) {
        Real denom = std::max(m, std::numeric_limits<Real>::min());
        if (fabs(m - last) <= Real(grid.agree_rel) * denom || m == Real(0)) {
          best = std::max(best, m);
          break;
        }
      }
      last = m;
      if (2LL * n > grid.max_points)
        throw refinement_error("norm scan exhausted refinement budget");
      n *= 2;
    }
  }
  return best;
}

// upper estimate of |F1 - F2|_{C^n} per the one-sided-derivative norm:
// sup of the difference plus the max over derivative orders 1..n of the
// derivative difference sups. Deterministic; pads by the agreement factor.
template <class Real>
Real cn_norm_diff(const Lift<Real>& l1, const Lift<Real>& l2, int n, const GridSpec& grid) {
  auto d = lift_diff(l1, l2);
  Real c0 = sup_over_supports(d, [&](Real x) { return d.value(x); }, grid, true);
  Real dmax = 0;
  for (int k = 1; k <= n; ++k)
    dmax = std::max(dmax, sup_over_supports(d, [&](Real x) { return d.deriv(x, k); }, grid, false));
  return (c0 + dmax) * (Real(1) + Real(grid.agree_rel));
}

// ---------------------------------------------------------------------------
// threshold flat set: maximal intervals where F' <= tol, located by a grid
// scan whose runs are sharpened by bisection on the crossing F' = tol

template <class Real>
std::vector<Interval<Real>> flat_set(const Lift<Real>& lift, Real tol, const GridSpec& grid) {
  if (!(tol > Real(0)) && tol != Real(0)) throw geometry_error("flat_set: tol must be >= 0");
  int n = grid.initial;
  auto at = [&](int i) { return Real(i) / Real(n); };
  std::vector<char> low(n + 1);
  for (int i = 0; i <= n; ++i) low[i] = lift.deriv1(at(i)) <= tol;

  auto cross = [&](Real a, Real b) {
    // F'(a) and F'(b) on opposite sides of tol; bisect to the crossing
    for (int it = 0; it < 60; ++it) {
      Real m = a + (b - a) / 2;
      if (m == a || m == b) break;
      if (lift.deriv1(m) <= tol) a = m;  // caller orients so 'a' is the low side
      else b = m;
    }
    return a;
  };

  std::vector<Interval<Real>> out;
  int i = 0;
  while (i <= n) {
    if (!low[i]) { ++i; continue; }
    int j = i;
    while (j + 1 <= n && low[j + 1]) ++j;
    Real lo = at(i), hi = at(j);
    if (i > 0) {
      // refine left edge: low at at(i), high at at(i-1)
      Real a = at(i), b = at(i - 1);
      for (int it = 0; it < 60; ++it) {
        Real m = b + (a - b) / 2;
        if (m == a || m == b) break;
        if (lift.deriv1(m) <= tol) a = m; else b = m;
      }
      lo = a;
    }
    if (j < n) hi = cross(at(j), at(j + 1));
    out.push_back({lo, hi});
    i = j + 1;
  }
  // merge runs separated by less than one grid cell (paranoia for ties)
  std::vector<Interval<Real>> merged;
  for (const auto& iv : out) {
    if (!merged.empty() && iv.lo - merged.back().hi < Real(0)) merged.back().hi = iv.hi;
    else merged.push_back(iv);
  }
  return merged;
}

// ---------------------------------------------------------------------------
// extremum of a scalar function over [a, b]: dyadic scan with local
// refinement around the best cell, repeated until two passes agree

template <class Real, class F>
std::pair<Real, Real> scan_min(F&& f, Real a, Real b, const GridSpec& grid) {
  int n = grid.initial;
  Real best = f(a), arg = a;
  for (int i = 1; i <= n; ++i) {
    Real x = a + (b - a) * Real(i) / Real(n);
    Real v = f(x);
    if (v < best) { best = v; arg = x; }
  }
  Real cell = (b - a) / Real(n);
  Real lo = std::max(a, arg - cell), hi = std::min(b, arg + cell);
  for (int pass = 0; pass < 40; ++pass) {
    Real step = (hi - lo) / 64;
    if (step == Real(0)) break;
    Real b2 = best, a2 = arg;
    for (int i = 0; i <= 64; ++i) {
      Real x = lo + step * Real(i);
      Real v = f(x);
      if (v < b2) { b2 = v; a2 = x; }
    }
    using std::fabs;
    bool settled = fabs(b2 - best) <= Real(grid.agree_rel) * std::max(fabs(best), std::numeric_limits<Real>::min());
    best = b2;
    arg = a2;
    lo = std::max(a, arg - step);
    hi = std::min(b, arg + step);
    if (settled && pass >= 2) break;
  }
  return {best, arg};
}

template <class Real, class F>
std::pair<Real, Real> scan_max(F&& f, Real a, Real b, const GridSpec& grid) {
  auto [v, x] = scan_min([&](Real t) { return -f(t); }, a, b, grid);
  return {-v, x};
}

}  // namespace denjoy
