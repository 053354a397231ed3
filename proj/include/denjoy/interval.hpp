#pragma once

#include <algorithm>

namespace denjoy {

// Closed-enough interval on the unit circle's fundamental domain.
// Flat intervals use the open-left/closed-right convention (lo, hi];
// containment tests below are on closures with explicit margins.
template <class Real>
struct Interval {
  Real lo{};
  Real hi{};

  Real length() const { return hi - lo; }
  Real mid() const { return lo + (hi - lo) / 2; }
  bool contains(Real x) const { return lo <= x && x <= hi; }
  bool contains(const Interval& o) const { return lo <= o.lo && o.hi <= hi; }

  // compact containment with a relative margin on both sides
  bool contains_compactly(const Interval& o, Real rel_margin) const {
    Real m = rel_margin * length();
    return lo + m <= o.lo && o.hi <= hi - m;
  }
  bool disjoint(const Interval& o) const { return hi < o.lo || o.hi < lo; }
};

template <class Real>
bool overlap(const Interval<Real>& a, const Interval<Real>& b) {
  return !(a.hi <= b.lo || b.hi <= a.lo);
}

}  // namespace denjoy
