#pragma once

// The two derivative surgeries of the construction:
//   split_flat  — divide the single flat interval into two by raising the
//                 derivative on the in-between (and trailing) gap with
//                 calibrated zero-sum bump pairs;
//   close_flat  — re-absorb the auxiliary flat interval by raising the
//                 derivative across it from the main flat's right endpoint.
//
// Each pair couples an up bump inside the formerly flat territory with a
// donor down bump placed where the derivative has a certified positive
// floor xi, so the result stays non-decreasing with margin. Amplitudes are
// capped (donor sup = xi*budget/2) and the applied coefficient is the
// smallest of the kappa*c_n normalization, 1, and the certified C^n budget
// factor, which keeps every contract inequality strict.

#include <vector>

#include "denjoy/errors.hpp"
#include "denjoy/norms.hpp"

namespace denjoy {

template <class Real>
struct CalibrationResult {
  Real amp_up = 0;    // C_{a,b}
  Real amp_down = 0;  // C_{d,e}
  Real kappa = 0;
  Real cnorm = 1;
  Real xi = 0;  // donor derivative floor backing the cap
  Interval<Real> donor;
};

// |phi|_{C^n} for phi = C * K((x-lo)/w): sup of the function plus the max
// derivative sup over orders 1..n
template <class Real>
Real bump_cn_norm(Real amp, Real width, int n) {
  Real dsup = 0;
  Real wk = Real(1);
  for (int j = 1; j <= n; ++j) {
    wk *= width;
    dsup = std::max(dsup, bump_shape_sup<Real>(j) / wk);
  }
  return amp * (bump_shape_sup<Real>(0) + dsup);
}

// ---------------------------------------------------------------------------

// certified positive floor of F' over (0,1) minus the excluded neighborhood
// of the flat region; errors out when nothing positive remains
template <class Real>
Real xi_lower_bound(const Lift<Real>& lift, const Interval<Real>& excluded, const GridSpec& grid) {
  Real best = std::numeric_limits<Real>::max();
  bool any = false;
  auto piece = [&](Real a, Real b) {
    if (!(b - a > Real(0))) return;
    any = true;
    auto [v, at] = scan_min([&](Real x) { return lift.deriv1(x); }, a, b, grid);
    (void)at;
    best = std::min(best, v);
  };
  piece(Real(0), std::min(excluded.lo, Real(1)));
  piece(std::max(excluded.hi, Real(0)), Real(1));
  if (!any) throw geometry_error("xi_lower_bound: excluded region covers (0,1)");
  Real xi = best / 2;  // safety factor against scan misses
  if (!(xi > Real(0)))
    throw geometry_error("xi_lower_bound: derivative floor not strictly positive");
  return xi;
}

// floor of F' over a candidate donor interval, with the same safety factor
template <class Real>
Real donor_floor(const Lift<Real>& lift, const Interval<Real>& donor, const GridSpec& grid) {
  auto [v, at] = scan_min([&](Real x) { return lift.deriv1(x); }, donor.lo, donor.hi, grid);
  (void)at;
  return v / 2;
}

// donor selection rule: the middle third of the gap between the flat
// region's epsilon-neighborhood and 1. The gap is anchored right of the
// base profile's flat interval, where the derivative keeps a stable
// positive floor across stages.
template <class Real>
Interval<Real> choose_donor(const Lift<Real>& lift, Real flat_hi) {
  Real anchor = std::max(flat_hi, lift.base.flat_hi);
  Real eps = std::min(Real(0.1) * (Real(1) - anchor), Real(0.01));
  Real lo = anchor + eps, hi = Real(1);
  Real third = (hi - lo) / 3;
  if (!(third > Real(0))) throw geometry_error("choose_donor: no room right of the flat region");
  return {lo + third, hi - third};
}

// ---------------------------------------------------------------------------

// amplitudes for one zero-sum pair: the donor sup is pinned to cap/2 and
// the up amplitude follows from equal masses
template <class Real>
CalibrationResult<Real> calibrate_pair(const Interval<Real>& up, const Interval<Real>& down,
                                       Real cap, int n, Real xi_record = 0) {
  if (!(up.length() > Real(0)) || !(down.length() > Real(0)))
    throw geometry_error("calibrate_pair: degenerate interval");
  if (overlap(up, down)) throw geometry_error("calibrate_pair: intervals overlap");
  if (!(up.lo >= Real(0)) || !(up.hi <= Real(1)) || !(down.lo >= Real(0)) || !(down.hi <= Real(1)))
    throw geometry_error("calibrate_pair: intervals must lie inside (0,1)");
  if (!(cap > Real(0))) throw geometry_error("calibrate_pair: cap must be positive");

  CalibrationResult<Real> cal;
  cal.donor = down;
  cal.xi = xi_record;
  cal.amp_down = cap / 2 / bump_sup<Real>();
  cal.amp_up = cal.amp_down * down.length() / up.length();
  cal.kappa = std::max(up.length() * cal.amp_up, down.length() * cal.amp_down);
  cal.cnorm = std::max(Real(1), Real(2) * std::max(bump_cn_norm(cal.amp_up, up.length(), n),
                                                   bump_cn_norm(cal.amp_down, down.length(), n)));
  return cal;
}

// applied coefficient: the kappa*c_n normalization, clamped so the scaled
// donor bump respects its cap (<= 1) and the certified C^n budget holds
template <class Real>
Real applied_scale(const CalibrationResult<Real>& cal, const Interval<Real>& up, Real budget,
                   int n) {
  Real paper = budget / (Real(3) * cal.kappa * cal.cnorm);
  Real unit = cal.kappa * bump_mass<Real>();  // C0 part of the pair integral
  Real dsup = 0;
  Real wu = Real(1), wd = Real(1);
  for (int j = 0; j <= n - 1; ++j) {
    dsup = std::max(dsup, std::max(cal.amp_up * bump_shape_sup<Real>(j) / wu,
                                   cal.amp_down * bump_shape_sup<Real>(j) / wd));
    wu *= up.length();
    wd *= cal.donor.length();
  }
  Real norm_cap = (budget / 3) / (unit + dsup);
  return std::min(std::min(paper, Real(1)), norm_cap);
}

// ---------------------------------------------------------------------------

template <class Real>
struct PairPlan {
  Interval<Real> up;
  Interval<Real> donor;
};

// shared machinery: add one calibrated term per planned pair
template <class Real>
Lift<Real> apply_pairs(const Lift<Real>& lift, const std::vector<PairPlan<Real>>& plan, Real budget,
                       int n, const GridSpec& grid) {
  Lift<Real> out = lift;
  Real per = budget / Real(static_cast<int>(plan.size()));
  for (const auto& pp : plan) {
    Real xi = donor_floor(lift, pp.donor, grid);
    if (!(xi > Real(0))) throw geometry_error("perturb: donor derivative floor not positive");
    auto cal = calibrate_pair(pp.up, pp.donor, xi * per, n, xi);
    Real s = applied_scale(cal, pp.up, per, n);
    if (!(s > Real(0))) throw geometry_error("perturb: applied scale vanished");
    BumpTerm<Real> t;
    t.up = pp.up;
    t.down = pp.donor;
    t.amp_up = cal.amp_up;
    t.amp_down = cal.amp_down;
    t.scale = s;
    t.order = n;
    t.kappa = cal.kappa;
    t.cnorm = cal.cnorm;
    out.terms.push_back(t);
  }
  // monotonicity margin on the donors under the result
  for (const auto& pp : plan) {
    auto [v, at] = scan_min([&](Real x) { return out.deriv1(x); }, pp.donor.lo, pp.donor.hi, grid);
    (void)at;
    if (!(v > Real(0)))
      throw geometry_error("perturb: cap violation, derivative not positive on donor");
  }
  return out;
}

// Lemma "split": one flat interval I = (1/2, c) becomes exactly I1 u J1.
// Raises the gap (I1.hi, J1.lo) and, when J1 stops short of c, the trailing
// gap (J1.hi, c), each with its own donor share. Rotation number is NOT
// retuned here; the caller follows up with tune_translation.
template <class Real>
Lift<Real> split_flat(const Lift<Real>& lift, const Interval<Real>& I1, const Interval<Real>& J1,
                      Real delta, int n, const Interval<Real>& donor, const GridSpec& grid) {
  if (!(delta > Real(0)) || !(delta < Real(1)))
    throw geometry_error("split_flat: delta must lie in (0,1)");
  auto flats = flat_set_exact(lift);
  if (flats.size() != 1) throw geometry_error("split_flat: lift must have exactly one flat interval");
  const auto& I = flats[0];
  if (I1.lo != I.lo) throw geometry_error("split_flat: I1 must be left-anchored at the flat's left end");
  if (!(I1.hi < J1.lo) || !(J1.hi <= I.hi) || !(I1.length() > Real(0)) || !(J1.length() > Real(0)))
    throw geometry_error("split_flat: need I1 < J1 inside the flat interval");
  if (!(donor.lo > I.hi) || !(donor.hi < Real(1)))
    throw geometry_error("split_flat: donor must lie strictly between the flat interval and 1");

  std::vector<PairPlan<Real>> plan;
  Interval<Real> bridge{I1.hi, J1.lo};
  Interval<Real> tail{J1.hi, I.hi};
  bool with_tail = tail.length() > Real(0);
  if (with_tail) {
    Real dm = donor.mid();
    plan.push_back({bridge, {donor.lo, dm}});
    plan.push_back({tail, {dm, donor.hi}});
  } else {
    plan.push_back({bridge, donor});
  }
  Lift<Real> out = apply_pairs(lift, plan, delta, n, grid);
  auto nf = flat_set_exact(out);
  if (nf.size() != 2 || nf[0].lo != I1.lo || nf[0].hi != I1.hi || nf[1].lo != J1.lo ||
      nf[1].hi != J1.hi)
    throw geometry_error("split_flat: resulting flat set is not exactly I1 u J1");
  return out;
}

// Lemma "close": two flat intervals I = (1/2, a) and J; the up bump spans
// [a, J.hi] so the result's flat set is exactly I. Retuning deferred.
template <class Real>
Lift<Real> close_flat(const Lift<Real>& lift, const Interval<Real>& J, Real sigma, int n,
                      const Interval<Real>& donor, const GridSpec& grid) {
  if (!(sigma > Real(0)) || !(sigma < Real(1)))
    throw geometry_error("close_flat: sigma must lie in (0,1)");
  auto flats = flat_set_exact(lift);
  if (flats.size() != 2) throw geometry_error("close_flat: lift must have exactly two flat intervals");
  if (J.lo != flats[1].lo || J.hi != flats[1].hi)
    throw geometry_error("close_flat: J must be the auxiliary flat interval");
  if (!(donor.lo > J.hi) || !(donor.hi < Real(1)))
    throw geometry_error("close_flat: donor must lie strictly between J and 1");

  std::vector<PairPlan<Real>> plan{{Interval<Real>{flats[0].hi, J.hi}, donor}};
  Lift<Real> out = apply_pairs(lift, plan, sigma, n, grid);
  auto nf = flat_set_exact(out);
  if (nf.size() != 1 || nf[0].lo != flats[0].lo || nf[0].hi != flats[0].hi)
    throw geometry_error("close_flat: resulting flat set is not exactly I");
  return out;
}

}  // namespace denjoy
