#pragma once

// Forward-orbit tracking of a seed interval under a monotone degree-one
// lift. Positions live on the real line (frac taken only for circle-set
// tests). Interval lengths shrink super-exponentially in this construction
// and drop below the floating-point separation of the endpoints within a
// few stages, so alongside the endpoint orbit we carry a multiplicative
// enclosure of the length in log space: length_{j+1} = integral of F' over
// the current interval lies in length_j * [min F', max F'] over it. When
// the interval is pointlike at working precision the F' range is padded by
// a fixed relative slack per step (stated tolerance, not formal interval
// arithmetic).

#include <cmath>
#include <vector>

#include "denjoy/interval.hpp"
#include "denjoy/lift.hpp"

namespace denjoy {

template <class Real>
struct OrbitInterval {
  Real left = 0;         // lift-line position of the left endpoint
  Real right = 0;        // lift-line position of the right endpoint
  Real log_len_lo = 0;   // ln-length enclosure
  Real log_len_hi = 0;

  Real frac_left() const {
    auto sp = split_unit(left);
    return sp.frac;
  }
  Real upper_length() const {
    using std::exp;
    return exp(log_len_hi);
  }
  bool positive_length() const { return log_len_lo > -std::numeric_limits<Real>::infinity(); }
};

// does the circle projection of [oi.left, oi.left + upper_length) meet the
// closed interval [t.lo, t.hi] in [0,1)?
template <class Real>
bool circle_meets(const OrbitInterval<Real>& oi, const Interval<Real>& t) {
  Real lo = oi.frac_left();
  Real hi = lo + oi.upper_length();
  if (hi <= Real(1)) return !(hi < t.lo || t.hi < lo);
  // wraps: [lo,1) plus [0, hi-1)
  return !(t.hi < lo) || !(hi - Real(1) < t.lo);
}

// is the projection compactly inside t with relative margin?
template <class Real>
bool circle_inside(const OrbitInterval<Real>& oi, const Interval<Real>& t, Real rel_margin) {
  Real lo = oi.frac_left();
  Real hi = lo + oi.upper_length();
  Real m = rel_margin * t.length();
  return t.lo + m <= lo && hi <= t.hi - m;
}

template <class Real>
class OrbitTracker {
 public:
  OrbitTracker(const Lift<Real>& lift, const Interval<Real>& seed)
      : lift_(lift), rel_slack_(Real(1e-6)) {
    using std::log;
    cur_.left = seed.lo;
    cur_.right = seed.hi;
    Real len = seed.hi - seed.lo;
    cur_.log_len_lo = log(len) - rel_slack_;
    cur_.log_len_hi = log(len) + rel_slack_;
    history_.push_back(cur_);
  }

  const OrbitInterval<Real>& at(size_t j) {
    while (history_.size() <= j) step();
    return history_[j];
  }
  const std::vector<OrbitInterval<Real>>& history() const { return history_; }

  void step() {
    using std::log;
    OrbitInterval<Real> next;
    next.left = lift_.eval(cur_.left);
    next.right = lift_.eval(cur_.right);
    Real direct = next.right - next.left;
    Real sep_floor = Real(64) * std::numeric_limits<Real>::epsilon() *
                     (cur_.left < Real(0) ? -cur_.left : cur_.left + Real(1));
    if (direct > sep_floor && cur_.right - cur_.left > sep_floor) {
      // endpoint-difference error is ~sep_floor absolute; widen accordingly
      Real slack = rel_slack_ + sep_floor / direct;
      next.log_len_lo = log(direct) - slack;
      next.log_len_hi = log(direct) + slack;
    } else {
      // pointlike: multiply the enclosure by the local derivative range
      Real fp = lift_.deriv1(cur_.left);
      if (!(fp > Real(0))) {
        next.log_len_lo = -std::numeric_limits<Real>::infinity();
        next.log_len_hi = -std::numeric_limits<Real>::infinity();
      } else {
        Real lfp = log(fp);
        next.log_len_lo = cur_.log_len_lo + lfp - rel_slack_;
        next.log_len_hi = cur_.log_len_hi + lfp + rel_slack_;
      }
    }
    cur_ = next;
    history_.push_back(cur_);
  }

 private:
  const Lift<Real>& lift_;
  Real rel_slack_;
  OrbitInterval<Real> cur_;
  std::vector<OrbitInterval<Real>> history_;
};

}  // namespace denjoy
