#pragma once

// Closed-form representation of the piecewise-smooth, non-decreasing,
// degree-one lifts the construction manipulates: a fixed base profile with
// one flat interval and a half-critical point at its left end, plus an
// ordered list of zero-sum bump-pair terms acting on the derivative, plus a
// net translation. Evaluation separates integer and fractional parts so
// F(x+1) = F(x) + 1 holds bit for bit.

#include <algorithm>
#include <string>
#include <vector>

#include "denjoy/errors.hpp"
#include "denjoy/interval.hpp"
#include "denjoy/kernels.hpp"
#include "denjoy/real.hpp"

namespace denjoy {

enum class Side { Left, Right };

// ---------------------------------------------------------------------------
// base profile: F'(x) = norm * exp(-1/u) on the arc u in (0, arc_len],
// where u = (x - flat_hi) mod 1, and F' = 0 exactly on (flat_lo, flat_hi].
// The ramp is smooth across the wrap point and flat to all orders at
// flat_hi+, so flat_lo is a flat half-critical point of the projected map.

template <class Real>
struct BaseProfile {
  Real flat_lo = Real(1) / 2;
  Real flat_hi = Real(3) / 4;
  Real norm = 0;  // 1 / B(arc_len), fixed by total integral 1

  Real arc_len() const { return Real(1) - (flat_hi - flat_lo); }

  static BaseProfile standard() {
    BaseProfile b;
    b.norm = Real(1) / ramp_antiderivative(b.arc_len());
    return b;
  }

  // arc coordinate; 0 at flat_hi, arc_len at flat_lo
  Real arc(Real frac) const {
    Real u = frac - flat_hi;
    if (u < Real(0)) u += Real(1);
    return u;
  }

  Real deriv_value(Real frac) const {
    Real u = arc(frac);
    if (u <= Real(0) || u > arc_len()) return Real(0);
    return norm * ramp_value(u);
  }

  // k-th derivative of the lift restricted to the base part (k >= 1)
  Real deriv(Real frac, int k, Side side) const {
    Real u = arc(frac);
    Real A = arc_len();
    if (u == A) {  // the half-critical point flat_lo
      if (side == Side::Right) return Real(0);
      return k == 1 ? norm * ramp_value(A) : norm * ramp_derivs<Real>().eval(A, k - 1);
    }
    if (u <= Real(0) || u > A) return Real(0);
    return k == 1 ? norm * ramp_value(u) : norm * ramp_derivs<Real>().eval(u, k - 1);
  }

  // integral of the derivative profile over [0, frac]
  Real cdf(Real frac) const {
    Real A = arc_len();
    Real tail = Real(1) - flat_hi;  // arc length before the wrap point
    if (frac <= flat_lo) return norm * (ramp_antiderivative(frac + tail) - ramp_antiderivative(tail));
    Real flat_level = norm * (ramp_antiderivative(A) - ramp_antiderivative(tail));
    if (frac <= flat_hi) return flat_level;
    return flat_level + norm * ramp_antiderivative(frac - flat_hi);
  }

  Real left_derivative_at_flat() const { return norm * ramp_value(arc_len()); }

  bool same_as(const BaseProfile& o) const {
    return flat_lo == o.flat_lo && flat_hi == o.flat_hi && norm == o.norm;
  }
};

// ---------------------------------------------------------------------------
// one calibrated bump-pair term: contributes
//   scale * integral_0^x ( amp_up K((t-a)/(b-a)) - amp_down K((t-d)/(e-d)) ) dt
// to the lift. kappa and cnorm record the calibration bookkeeping.

template <class Real>
struct BumpTerm {
  Interval<Real> up;    // (a, b)
  Interval<Real> down;  // (d, e)
  Real amp_up = 0;
  Real amp_down = 0;
  Real scale = 0;
  int order = 0;   // smoothness budget the pair was calibrated for
  Real kappa = 0;  // max((b-a) amp_up, (e-d) amp_down)
  Real cnorm = 1;  // 2 max(|phi_up|_Cn, |phi_down|_Cn), >= 1

  bool vanishes() const {
    return scale == Real(0) || (amp_up == Real(0) && amp_down == Real(0));
  }

  Real cdf(Real frac) const {
    if (vanishes()) return Real(0);
    Real acc = Real(0);
    if (amp_up != Real(0) && frac > up.lo) {
      Real w = up.length();
      Real s = frac >= up.hi ? Real(1) : (frac - up.lo) / w;
      acc += amp_up * w * bump_cdf(s);
    }
    if (amp_down != Real(0) && frac > down.lo) {
      Real w = down.length();
      Real s = frac >= down.hi ? Real(1) : (frac - down.lo) / w;
      acc -= amp_down * w * bump_cdf(s);
    }
    return scale * acc;
  }

  // k-th derivative of the term's contribution to the lift (k >= 1)
  Real deriv(Real frac, int k) const {
    if (vanishes()) return Real(0);
    Real acc = Real(0);
    if (frac > up.lo && frac < up.hi && amp_up != Real(0)) {
      Real w = up.length();
      Real s = (frac - up.lo) / w;
      Real d = k == 1 ? bump_value(s) : bump_derivative(s, k - 1);
      for (int i = 1; i < k; ++i) d /= w;
      acc += amp_up * d;
    }
    if (frac > down.lo && frac < down.hi && amp_down != Real(0)) {
      Real w = down.length();
      Real s = (frac - down.lo) / w;
      Real d = k == 1 ? bump_value(s) : bump_derivative(s, k - 1);
      for (int i = 1; i < k; ++i) d /= w;
      acc -= amp_down * d;
    }
    return scale * acc;
  }
};

// ---------------------------------------------------------------------------

template <class Real>
struct Lift {
  using real_type = Real;

  BaseProfile<Real> base;
  std::vector<BumpTerm<Real>> terms;
  Real shift = 0;

  static Lift standard() {
    Lift f;
    f.base = BaseProfile<Real>::standard();
    return f;
  }

  // value of F on the fundamental domain offset: F(frac) for frac in [0,1)
  Real frac_value(Real frac) const {
    Real v = base.cdf(frac) + shift;
    for (const auto& t : terms) v += t.cdf(frac);
    return v;
  }

  // integer and fractional parts of F(x), fractional in [0,1). The whole
  // part advances by exactly 1 under x -> x+1 with an identical fractional
  // part, which is the bit-exact form of the degree-one identity; composing
  // the two into one Real can round at binade boundaries.
  struct EvalParts {
    long long whole;
    Real frac;
  };
  EvalParts eval_split(Real x) const {
    auto sp = split_unit(x);
    auto y = split_unit(frac_value(sp.frac));
    return {sp.whole + y.whole, y.frac};
  }

  Real eval(Real x) const {
    auto sp = split_unit(x);
    return Real(sp.whole) + frac_value(sp.frac);
  }

  // first derivative (pointwise value, flat convention open-left)
  Real deriv1(Real x) const {
    auto sp = split_unit(x);
    Real v = base.deriv_value(sp.frac);
    for (const auto& t : terms) v += t.deriv(sp.frac, 1);
    return v;
  }

  Real deriv(Real x, int k, Side side) const {
    if (k < 1) throw capability_error("derivative order must be >= 1");
    auto sp = split_unit(x);
    Real frac = sp.frac;
    // side only matters at the half-critical point and base breakpoints;
    // bump terms are flat to all orders at their support endpoints
    Real v = base.deriv(frac, k, side);
    for (const auto& t : terms) v += t.deriv(frac, k);
    return v;
  }

  Real iterate(Real x, long long n) const {
    auto sp = split_unit(x);
    long long acc = sp.whole;
    Real frac = sp.frac;
    for (long long i = 0; i < n; ++i) {
      auto y = split_unit(frac_value(frac));
      acc += y.whole;
      frac = y.frac;
    }
    return Real(acc) + frac;
  }

  // sorted breakpoints of the closed form in [0,1]
  std::vector<Real> breakpoints() const {
    std::vector<Real> b{Real(0), base.flat_lo, base.flat_hi, Real(1)};
    for (const auto& t : terms) {
      if (t.vanishes()) continue;
      if (t.amp_up != Real(0)) { b.push_back(t.up.lo); b.push_back(t.up.hi); }
      if (t.amp_down != Real(0)) { b.push_back(t.down.lo); b.push_back(t.down.hi); }
    }
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    return b;
  }

  bool same_base(const Lift& o) const { return base.same_as(o.base); }
};

// pure rotation x + rho; test double and tuning oracle
template <class Real>
struct RotationLift {
  using real_type = Real;
  Real rho = 0;

  Real eval(Real x) const {
    auto sp = split_unit(x);
    return Real(sp.whole) + sp.frac + rho;
  }
  Real deriv1(Real) const { return Real(1); }
  Real iterate(Real x, long long n) const {
    auto sp = split_unit(x);
    long long acc = sp.whole;
    Real frac = sp.frac;
    for (long long i = 0; i < n; ++i) {
      auto y = split_unit(frac + rho);
      acc += y.whole;
      frac = y.frac;
    }
    return Real(acc) + frac;
  }
};

// ---------------------------------------------------------------------------
// structural flat set: the maximal subintervals of the base flat interval
// whose interiors meet no bump support. On these the closed form is
// identically zero; everywhere else the derivative is not the zero function.

template <class Real>
std::vector<Interval<Real>> flat_set_exact(const Lift<Real>& lift) {
  std::vector<Interval<Real>> flats{{lift.base.flat_lo, lift.base.flat_hi}};
  auto subtract = [&flats](const Interval<Real>& s) {
    std::vector<Interval<Real>> next;
    for (const auto& f : flats) {
      if (s.hi <= f.lo || f.hi <= s.lo) {
        next.push_back(f);
        continue;
      }
      if (f.lo < s.lo) next.push_back({f.lo, std::min(s.lo, f.hi)});
      if (s.hi < f.hi) next.push_back({std::max(s.hi, f.lo), f.hi});
    }
    flats = std::move(next);
  };
  for (const auto& t : lift.terms) {
    if (t.vanishes()) continue;
    if (t.amp_up != Real(0)) subtract(t.up);
    if (t.amp_down != Real(0)) subtract(t.down);
  }
  std::vector<Interval<Real>> out;
  for (const auto& f : flats)
    if (f.length() > Real(0)) out.push_back(f);
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.lo < b.lo; });
  return out;
}

}  // namespace denjoy
