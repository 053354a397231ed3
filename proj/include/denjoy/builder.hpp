#pragma once

// The staged construction: initialization (tune the base profile to the
// target rotation number, pick the seed interval), then per stage the
// two-step advance: split the flat interval with a budgeted perturbation
// small enough that the seed orbit's combinatorics persist, search the
// first return of the critical value into the old flat interval, close the
// auxiliary flat interval with a second budgeted perturbation, and retune
// the rotation number after each surgery. Budgets follow the geometric
// schedule that makes consecutive stages a Cauchy sequence in C^n.

#include <functional>
#include <string>
#include <vector>

#include "denjoy/orbit.hpp"
#include "denjoy/perturb.hpp"
#include "denjoy/rotation.hpp"

namespace denjoy {

template <class Real>
struct BuildParams {
  ContinuedFraction target;
  int stages = 4;
  int depth_extra = 0;  // convergent depth at stage i is i + 2 + depth_extra
  GridSpec grid;
  long long max_return_iter = 1000000;
  int scan_levels = 40;
  Real compact_margin = Real(1e-3);
  Real entry_margin = Real(0.05);

  int depth(int stage) const { return stage + 2 + depth_extra; }
  // every tune targets the final stage's depth so the certified rotation
  // windows nest across the run and retunes stay window-sized
  int run_depth() const { return depth(stages); }
};

template <class Real>
struct StageRecord {
  int index = 0;
  Lift<Real> lift;
  Interval<Real> flat;  // I_n
  Interval<Real> seed;  // J_0, fixed across stages
  std::vector<long long> return_times;
  Real delta_prime = 0;
  Real sigma = 0;
  Real tau = 0;  // translation budget used at this stage
  int rho_depth = 0;
};

template <class Real>
Real pow2(int k) {
  return std::ldexp(Real(1), k);
}

// ---------------------------------------------------------------------------

// x in [0,1] with F(x) = y + k for the branch k putting y + k in F([0,1])
template <class Real>
Real monotone_preimage(const Lift<Real>& f, Real y) {
  using std::ceil;
  Real f0 = f.frac_value(Real(0));
  Real yk = y + ceil(f0 - y);
  if (yk < f0) yk += Real(1);
  Real lo = 0, hi = 1;
  for (int it = 0; it < 200 && lo < hi; ++it) {
    Real m = lo + (hi - lo) / 2;
    if (m == lo || m == hi) break;
    if (f.frac_value(m) < yk) lo = m;
    else hi = m;
  }
  return lo + (hi - lo) / 2;
}

template <class Real>
Real frac_step(const Lift<Real>& f, Real frac) {
  return split_unit(f.frac_value(frac)).frac;
}

// retune with the smallest workable budget so the translation stays close
// to the minimum needed to re-enter the target's rotation window
template <class Real>
Lift<Real> tune_minimal(const Lift<Real>& lift, const ContinuedFraction& target, int K,
                        Real max_budget, const GridSpec& grid) {
  for (int j = 14; j >= 1; --j) {
    Real b = max_budget / pow2<Real>(j);
    try {
      return tune_translation(lift, target, K, b, grid);
    } catch (const budget_exceeded&) {
    }
  }
  return tune_translation(lift, target, K, max_budget, grid);
}

// ---------------------------------------------------------------------------

template <class Real>
StageRecord<Real> init_stage(const BuildParams<Real>& params) {
  if (params.target.finite())
    throw usage_error("build target must be irrational: use a lazy continued fraction (golden, sqrt2m1)");
  auto base = Lift<Real>::standard();
  Interval<Real> I0{base.base.flat_lo, base.base.flat_hi};

  auto f0 = tune_translation(base, params.target, params.run_depth(), Real(1), params.grid);

  // seed: middle third of the largest diffeomorphic component of f0^{-1}(I0)
  Real plo = monotone_preimage(f0, I0.lo);
  Real phi = monotone_preimage(f0, I0.hi);
  if (!(phi > plo)) throw geometry_error("init: degenerate preimage of the flat interval");
  std::vector<Interval<Real>> comps;
  if (plo < I0.lo) comps.push_back({plo, std::min(phi, I0.lo)});
  if (phi > I0.hi) comps.push_back({std::max(plo, I0.hi), phi});
  if (comps.empty()) throw geometry_error("init: preimage lies inside the flat interval");
  Interval<Real> best = comps[0];
  for (const auto& c : comps)
    if (c.length() > best.length()) best = c;
  Real w = best.length() / 3;
  Interval<Real> J0{best.lo + w, best.hi - w};

  // seed must map compactly into I0 (return time r0 = 1)
  OrbitTracker<Real> orb(f0, J0);
  if (!circle_inside(orb.at(1), I0, params.compact_margin))
    throw geometry_error("init: seed image not compactly inside the flat interval");
  if (circle_meets(orb.at(0), I0))
    throw geometry_error("init: seed interval meets the flat interval");

  StageRecord<Real> rec;
  rec.index = 0;
  rec.lift = f0;
  rec.flat = I0;
  rec.seed = J0;
  rec.return_times = {1};
  rec.tau = f0.shift;
  rec.rho_depth = params.run_depth();
  return rec;
}

// ---------------------------------------------------------------------------

// Divide I_n: I_next is left-anchored and as wide as condition (5) allows
// (the wider it is, the denser the ladder of return displacements that can
// land inside it); J_next covers the seed's return image and extends to
// I_n's right endpoint, so the region the critical-value orbit may re-enter
// without contradiction is only I_next and the narrow gap between them.
template <class Real>
std::pair<Interval<Real>, Interval<Real>> choose_subintervals(const StageRecord<Real>& rec,
                                                              const BuildParams<Real>& params) {
  const auto& In = rec.flat;
  OrbitTracker<Real> orb(rec.lift, rec.seed);
  const auto& v = orb.at(static_cast<size_t>(rec.return_times.back()));
  Real v_lo = v.frac_left();
  Real v_hi = v_lo + v.upper_length();
  if (!(v_lo > In.lo) || !(v_hi < In.hi))
    throw geometry_error("choose_subintervals: seed return image not interior to the flat interval");

  Real a = In.lo + std::min(Real(0.49) * In.length(), Real(0.7) * (v_lo - In.lo));
  Interval<Real> I_next{In.lo, a};
  for (int attempt = 0; attempt < 8; ++attempt) {
    Real pad = std::min((v_lo - a) / 2, In.length() / 16) / pow2<Real>(attempt);
    Interval<Real> J_next{v_lo - pad, In.hi};
    if (pad > Real(0) && J_next.lo > a) return {I_next, J_next};
  }
  throw geometry_error("choose_subintervals: no room for disjoint subintervals around the return image");
}

// ---------------------------------------------------------------------------

template <class Real>
struct SplitCandidate {
  bool pass = false;
  Lift<Real> tuned;
  long long m = 0;
  Real entry = 0;
  bool have_entry = false;
  bool flat_reentry = false;
  std::string note;
};

struct StaircaseCheck {
  bool ok = true;
  std::string what;
};

// condition (7) staircase over the tracked orbit: 0 < |f^j(J0)| < 2^{1-k}
// on each regime r_{k-1} <= j < r_k
template <class Real>
StaircaseCheck check_staircase(OrbitTracker<Real>& orb,
                                     const std::vector<long long>& returns) {
  for (size_t k = 1; k < returns.size(); ++k) {
    Real bound = pow2<Real>(-static_cast<int>(k - 1));
    for (long long j = returns[k - 1]; j < returns[k]; ++j) {
      const auto& oi = orb.at(static_cast<size_t>(j));
      if (!oi.positive_length())
        return {false, "orbit interval length not positive at iterate " + std::to_string(j)};
      if (!(oi.upper_length() < bound))
        return {false, "orbit interval length exceeds staircase bound at iterate " + std::to_string(j)};
    }
  }
  return {};
}

// first entry of the critical-value orbit into the closure of In
template <class Real>
std::pair<long long, Real> first_return(const Lift<Real>& f, Real start_frac,
                                        const Interval<Real>& In, long long cap) {
  Real w = start_frac;
  for (long long m = 1; m <= cap; ++m) {
    if (In.lo <= w && w <= In.hi) return {m, w};
    w = frac_step(f, w);
  }
  throw non_return_error("critical-value orbit failed to enter the flat interval within " +
                         std::to_string(cap) + " iterates");
}

// sup of |a' - b'| over (0,1) minus the closed excluded interval
template <class Real>
Real deriv_diff_sup_off(const Lift<Real>& a, const Lift<Real>& b, const Interval<Real>& excl,
                        const GridSpec& grid) {
  auto d = lift_diff(a, b);
  auto pieces = d.supports();
  Real best = 0;
  using std::fabs;
  for (const auto& s : pieces) {
    for (const auto& clip : {Interval<Real>{s.lo, std::min(s.hi, excl.lo)},
                             Interval<Real>{std::max(s.lo, excl.hi), s.hi}}) {
      if (!(clip.length() > Real(0))) continue;
      auto [v, at] = scan_max([&](Real x) { return fabs(d.deriv(x, 1)); }, clip.lo, clip.hi, grid);
      (void)at;
      best = std::max(best, v);
    }
  }
  return best * (Real(1) + Real(grid.agree_rel));
}

// ---------------------------------------------------------------------------

struct AdvanceTrace {
  std::vector<std::string> notes;
};

template <class Real>
StageRecord<Real> advance_stage(const StageRecord<Real>& rec, const BuildParams<Real>& params,
                                AdvanceTrace* trace = nullptr) {
  const int n = rec.index;
  const auto& fn = rec.lift;
  const Interval<Real> In = rec.flat;
  const long long rn = rec.return_times.back();
  const Real bound6 = pow2<Real>(-(n + 1));
  const Real sub = bound6 / 5;  // split bump, split tune, close bump, close tune
  const int K = params.run_depth();

  auto [I_next, J_next] = choose_subintervals(rec, params);
  Interval<Real> donor = choose_donor(fn, In.hi);

  auto note = [&](const std::string& s) {
    if (trace) trace->notes.push_back(s);
  };

  // --- first step: split with delta small enough that the seed orbit's
  // combinatorics persist and the critical value returns inside I_next.
  // A re-entry of the critical value into the auxiliary flat J_next is the
  // signature of a rational plateau inside the certified rotation window;
  // it is cured by certifying more convergents, not by changing delta.
  SplitCandidate<Real> chosen;
  Real chosen_delta = 0;
  int K_eff = K;
  std::vector<std::pair<Real, SplitCandidate<Real>>> outcomes;

  auto eval_delta = [&](Real delta) -> SplitCandidate<Real> {
    SplitCandidate<Real> c;
    try {
      auto split = split_flat(fn, I_next, J_next, delta, n, donor, params.grid);
      c.tuned = tune_minimal(split, params.target, K_eff, sub, params.grid);

      OrbitTracker<Real> orb(c.tuned, rec.seed);
      for (long long j = 0; j < rn; ++j) {
        if (circle_meets(orb.at(static_cast<size_t>(j)), In)) {
          c.note = "seed orbit meets the old flat interval at iterate " + std::to_string(j);
          return c;
        }
      }
      {
        const auto& ri = orb.at(static_cast<size_t>(rn));
        Real lo = ri.frac_left(), hi = lo + ri.upper_length();
        if (!(J_next.lo < lo && hi < J_next.hi)) {
          c.note = "seed return image escaped J_next";
          return c;
        }
      }
      auto stair = check_staircase(orb, rec.return_times);
      if (!stair.ok) {
        c.note = stair.what;
        return c;
      }

      Real w = frac_step(c.tuned, J_next.mid());
      auto [m, entry] = first_return(c.tuned, w, In, params.max_return_iter);
      c.m = m;
      c.entry = entry;
      c.have_entry = true;
      if (J_next.lo < entry && entry < J_next.hi) {
        c.flat_reentry = true;
        c.note = "critical value re-entered the auxiliary flat (rational plateau)";
        return c;
      }
      Real em = params.entry_margin * I_next.length();
      if (!(I_next.lo + em <= entry && entry <= I_next.hi - em)) {
        c.note = "critical-value return lands outside the interior of I_next";
        return c;
      }
      c.pass = true;
    } catch (const numeric_error& e) {
      c.note = e.what();
    }
    return c;
  };

  for (int deepen = 0; deepen <= 10 && !chosen.pass; ++deepen) {
    K_eff = K + deepen;
    outcomes.clear();
    bool saw_plateau = false;
    for (int j = 0; j <= params.scan_levels && !chosen.pass; ++j) {
      Real delta = sub / pow2<Real>(j);
      auto c = eval_delta(delta);
      note("delta scan K=" + std::to_string(K_eff) + " level " + std::to_string(j) + ": " +
           (c.pass ? "pass" : c.note));
      outcomes.push_back({delta, c});
      if (c.pass) {
        chosen = c;
        chosen.note = "";
        chosen_delta = delta;
      } else if (c.flat_reentry) {
        saw_plateau = true;
        break;  // delta cannot cure a plateau; deepen the tuning instead
      }
    }
    if (!chosen.pass && !saw_plateau) {
      // bisect between adjacent scan levels whose entry points straddle I_next
      for (size_t i = 0; i + 1 < outcomes.size() && !chosen.pass; ++i) {
        const auto& hi = outcomes[i];
        const auto& lo = outcomes[i + 1];
        if (!hi.second.have_entry || !lo.second.have_entry) continue;
        Real c0 = I_next.mid();
        if ((hi.second.entry < c0) == (lo.second.entry < c0)) continue;
        Real a = lo.first, b = hi.first;
        for (int it = 0; it < 25 && !chosen.pass; ++it) {
          Real mid = a + (b - a) / 2;
          auto c = eval_delta(mid);
          note("delta bisect: " + std::string(c.pass ? "pass" : c.note));
          if (c.pass) {
            chosen = c;
            chosen_delta = mid;
            break;
          }
          if (!c.have_entry || c.flat_reentry) break;
          if ((c.entry < c0) == (lo.second.entry < c0)) a = mid;
          else b = mid;
        }
      }
      if (!chosen.pass) break;  // genuine geometric failure, deepening will not help
    }
  }
  if (!chosen.pass) {
    std::string diag = "delta scan failed for stage " + std::to_string(n + 1) + ":";
    for (const auto& [d, c] : outcomes)
      diag += "\n  delta=" + std::to_string(static_cast<double>(d)) + " -> " +
              (c.note.empty() ? "?" : c.note);
    throw scan_failure(diag);
  }

  const Lift<Real>& ftilde = chosen.tuned;
  const long long m = chosen.m;
  const long long r_next = rn + m;
  std::vector<long long> returns_next = rec.return_times;
  returns_next.push_back(r_next);

  // --- second step: close the auxiliary flat interval with sigma small
  // enough that compact containment and all budgets survive
  Interval<Real> donor2 = choose_donor(ftilde, J_next.hi);
  StageRecord<Real> out;
  bool closed_ok = false;
  std::string close_diag;
  for (int j = 0; j <= params.scan_levels && !closed_ok; ++j) {
    Real sigma = sub / pow2<Real>(j);
    try {
      auto closed = close_flat(ftilde, J_next, sigma, n, donor2, params.grid);
      auto g = tune_minimal(closed, params.target, K_eff, sub, params.grid);

      Real norm6 = cn_norm_diff(g, fn, n, params.grid);
      if (!(norm6 < bound6)) {
        close_diag = "C^n budget exceeded: " + std::to_string(static_cast<double>(norm6));
        note("sigma scan " + std::to_string(j) + ": " + close_diag);
        continue;
      }
      Real d9 = deriv_diff_sup_off(g, fn, In, params.grid);
      if (!(d9 < bound6)) {
        close_diag = "derivative proximity bound exceeded off the flat interval";
        note("sigma scan " + std::to_string(j) + ": " + close_diag);
        continue;
      }

      OrbitTracker<Real> orb(g, rec.seed);
      bool orbit_ok = true;
      for (long long jj = 0; jj < r_next && orbit_ok; ++jj) {
        if (circle_meets(orb.at(static_cast<size_t>(jj)), I_next)) {
          close_diag = "seed orbit meets I_next at iterate " + std::to_string(jj);
          orbit_ok = false;
        }
      }
      if (!orbit_ok) {
        note("sigma scan " + std::to_string(j) + ": " + close_diag);
        continue;
      }
      if (!circle_inside(orb.at(static_cast<size_t>(r_next)), I_next, params.compact_margin)) {
        close_diag = "seed return image not compactly inside I_next";
        note("sigma scan " + std::to_string(j) + ": " + close_diag);
        continue;
      }
      auto stair = check_staircase(orb, returns_next);
      if (!stair.ok) {
        close_diag = stair.what;
        note("sigma scan " + std::to_string(j) + ": " + close_diag);
        continue;
      }
      OrbitTracker<Real> jorb(g, J_next);
      if (!circle_inside(jorb.at(static_cast<size_t>(m)), I_next, params.compact_margin)) {
        close_diag = "J_next return image not compactly inside I_next";
        note("sigma scan " + std::to_string(j) + ": " + close_diag);
        continue;
      }

      out.lift = g;
      out.sigma = sigma;
      closed_ok = true;
      note("sigma scan " + std::to_string(j) + ": pass");
    } catch (const numeric_error& e) {
      close_diag = e.what();
      note("sigma scan " + std::to_string(j) + ": " + close_diag);
    }
  }
  if (!closed_ok)
    throw scan_failure("sigma scan failed for stage " + std::to_string(n + 1) + ": " + close_diag);

  out.index = n + 1;
  out.flat = I_next;
  out.seed = rec.seed;
  out.return_times = returns_next;
  out.delta_prime = chosen_delta;
  out.tau = (chosen.tuned.shift - fn.shift) + (out.lift.shift - chosen.tuned.shift);
  out.rho_depth = K_eff;
  return out;
}

// ---------------------------------------------------------------------------

// full run; records are appended as stages certify so partial results
// survive a failure mid-run
template <class Real>
void run_build(const BuildParams<Real>& params, std::vector<StageRecord<Real>>& out) {
  if (params.stages < 1) throw usage_error("stages must be >= 1");
  out.clear();
  out.push_back(init_stage(params));
  for (int i = 0; i < params.stages; ++i) out.push_back(advance_stage(out.back(), params));
}

}  // namespace denjoy
