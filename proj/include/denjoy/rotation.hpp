#pragma once

// Rotation-number machinery for monotone degree-one lifts: continued
// fraction targets and their convergents, the classical (F^n(x)-x)/n
// estimator, rigorous comparison of rho(f) against a rational via the
// monotone-grid displacement enclosure, enclosures from convergent
// comparisons, and translation tuning by bisection on the devil's
// staircase.

#include <numeric>
#include <string>
#include <vector>

#include "denjoy/errors.hpp"
#include "denjoy/norms.hpp"
#include "denjoy/real.hpp"

namespace denjoy {

inline constexpr long long kMaxCompareDenominator = 1000000;

struct Rational {
  long long p = 0;
  long long q = 1;

  void reduce() {
    long long g = std::gcd(p < 0 ? -p : p, q);
    if (g > 1) { p /= g; q /= g; }
  }
  template <class Real>
  Real value() const { return Real(p) / Real(q); }
};

// ---------------------------------------------------------------------------

struct ContinuedFraction {
  enum class Tag { custom, golden, sqrt2m1 };

  Tag tag = Tag::custom;
  std::vector<long long> quotients;  // a1, a2, ... of [0; a1, a2, ...]

  bool lazy() const { return tag != Tag::custom; }
  bool finite() const { return !lazy(); }

  long long quotient(int k) const {  // 1-indexed
    switch (tag) {
      case Tag::golden: return 1;
      case Tag::sqrt2m1: return 2;
      case Tag::custom: break;
    }
    return quotients.at(static_cast<size_t>(k - 1));
  }

  int available(int K) const {
    if (lazy()) return K;
    return std::min<int>(K, static_cast<int>(quotients.size()));
  }

  std::string describe() const {
    switch (tag) {
      case Tag::golden: return "golden";
      case Tag::sqrt2m1: return "sqrt2m1";
      case Tag::custom: break;
    }
    std::string s = "0";
    for (long long a : quotients) s += "," + std::to_string(a);
    return s;
  }

  // "golden" | "sqrt2m1" | "0,a1,a2,..." (leading integer part must be 0)
  static ContinuedFraction parse(const std::string& text) {
    ContinuedFraction cf;
    if (text == "golden") { cf.tag = Tag::golden; return cf; }
    if (text == "sqrt2m1") { cf.tag = Tag::sqrt2m1; return cf; }
    cf.tag = Tag::custom;
    size_t pos = 0;
    bool first = true;
    while (pos <= text.size()) {
      size_t comma = text.find(',', pos);
      std::string tok = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
      if (tok.empty()) throw parse_error("empty continued-fraction quotient in '" + text + "'");
      char* end = nullptr;
      long long v = std::strtoll(tok.c_str(), &end, 10);
      if (end == tok.c_str() || *end != '\0')
        throw parse_error("bad continued-fraction quotient '" + tok + "'");
      if (first) {
        if (v != 0) throw parse_error("rotation target must start with integer part 0");
        first = false;
      } else {
        if (v < 1) throw parse_error("continued-fraction quotients must be >= 1");
        cf.quotients.push_back(v);
      }
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (first) throw parse_error("empty rotation target");
    return cf;
  }
};

// first K convergents p_k/q_k of [0; a1, a2, ...]; finite fractions may
// return fewer. Denominators are strictly increasing.
inline std::vector<Rational> convergents(const ContinuedFraction& cf, int K) {
  int n = cf.available(K);
  std::vector<Rational> out;
  long long pm1 = 1, qm1 = 0, p0 = 0, q0 = 1;
  for (int k = 1; k <= n; ++k) {
    long long a = cf.quotient(k);
    if (q0 > (1LL << 62) / std::max<long long>(a, 1))
      throw capability_error("convergent denominators exceed integer range");
    long long p = a * p0 + pm1;
    long long q = a * q0 + qm1;
    out.push_back({p, q});
    pm1 = p0; qm1 = q0; p0 = p; q0 = q;
  }
  return out;
}

// ---------------------------------------------------------------------------

template <class Map>
struct RhoEstimate {
  typename Map::real_type value;
  typename Map::real_type err;
};

template <class Map>
RhoEstimate<Map> rho_estimate(const Map& map, long long n,
                              typename Map::real_type x0 = 0) {
  using Real = typename Map::real_type;
  Real fn = map.iterate(x0, n);
  return {(fn - x0) / Real(n), Real(1) / Real(n)};
}

enum class Compare { Less, Greater, Contains };

// Certified three-way comparison of rho(f) against p/q. Uses the monotone
// enclosure: for increasing G = F^q, on a cell [x0,x1] the displacement
// G(x) - x - p lies within [G(x0) - x1 - p, G(x1) - x0 - p]. Undecided
// cells are split until every cell is decided, a sign change certifies a
// q-periodic displacement zero, or the refinement budget runs out.
template <class Map>
Compare rho_compare(const Map& map, long long p, long long q, const GridSpec& grid,
                    long long* evals_out = nullptr) {
  using Real = typename Map::real_type;
  using std::fabs;
  if (q < 1 || std::gcd(p < 0 ? -p : p, q) != 1)
    throw geometry_error("rho_compare: p/q must be reduced with q >= 1");
  if (q > kMaxCompareDenominator)
    throw capability_error("rho_compare: q exceeds the iteration cap");

  const Real ztol = Real(64) * Real(q) * std::numeric_limits<Real>::epsilon();
  long long evals = 0;
  auto G = [&](Real x) {
    ++evals;
    return map.iterate(x, q);
  };

  struct Cell { Real x0, x1, g0, g1; };
  int n0 = grid.initial;
  std::vector<Real> gs(n0 + 1);
  for (int i = 0; i <= n0; ++i) gs[i] = G(Real(i) / Real(n0));

  Real dmin = gs[0] - Real(p), dmax = dmin;
  for (int i = 0; i <= n0; ++i) {
    Real d = gs[i] - Real(i) / Real(n0) - Real(p);
    dmin = std::min(dmin, d);
    dmax = std::max(dmax, d);
  }

  auto result = [&](Compare c) {
    if (evals_out) *evals_out += evals * q;
    return c;
  };

  if (dmin < -ztol && dmax > ztol) return result(Compare::Contains);

  long long n_above = 0, n_below = 0;
  std::vector<Cell> undecided;
  for (int i = 0; i < n0; ++i) {
    Cell c{Real(i) / Real(n0), Real(i + 1) / Real(n0), gs[i], gs[i + 1]};
    Real lo = c.g0 - c.x1 - Real(p), hi = c.g1 - c.x0 - Real(p);
    if (lo > Real(0)) { ++n_above; continue; }
    if (hi < Real(0)) { ++n_below; continue; }
    undecided.push_back(c);
  }

  while (!undecided.empty()) {
    if (evals + static_cast<long long>(undecided.size()) > grid.max_points) {
      if (dmin <= ztol && dmax >= -ztol) return result(Compare::Contains);
      if (evals_out) *evals_out += evals * q;
      throw undecidable_error("rho_compare: refinement budget exhausted near " +
                                  std::to_string(p) + "/" + std::to_string(q),
                              static_cast<double>(dmin), static_cast<double>(dmax));
    }
    std::vector<Cell> next;
    for (const Cell& c : undecided) {
      Real xm = c.x0 + (c.x1 - c.x0) / 2;
      if (xm == c.x0 || xm == c.x1) {
        // cell at floating-point resolution; value pinched at ~0
        if (dmin <= ztol && dmax >= -ztol) return result(Compare::Contains);
        if (evals_out) *evals_out += evals * q;
        throw undecidable_error("rho_compare: cell pinched at float resolution",
                                static_cast<double>(dmin), static_cast<double>(dmax));
      }
      Real gm = G(xm);
      Real d = gm - xm - Real(p);
      dmin = std::min(dmin, d);
      dmax = std::max(dmax, d);
      if (dmin < -ztol && dmax > ztol) return result(Compare::Contains);
      Cell left{c.x0, xm, c.g0, gm}, right{xm, c.x1, gm, c.g1};
      for (const Cell& h : {left, right}) {
        Real lo = h.g0 - h.x1 - Real(p), hi = h.g1 - h.x0 - Real(p);
        if (lo > Real(0)) { ++n_above; continue; }
        if (hi < Real(0)) { ++n_below; continue; }
        next.push_back(h);
      }
    }
    undecided = std::move(next);
  }
  if (n_above > 0 && n_below == 0) return result(Compare::Greater);
  if (n_below > 0 && n_above == 0) return result(Compare::Less);
  // certified cells on both sides of the rational: a crossing exists
  return result(Compare::Contains);
}

// ---------------------------------------------------------------------------

struct RotationEnclosure {
  Rational lo{-2, 1};
  Rational hi{2, 1};
  int depth = 0;
  long long iterations_used = 0;
};

// expected comparison outcome at convergent k of an irrational target in
// (0,1): odd convergents lie above the target, even ones below
inline Compare expected_side(int k) { return (k % 2 == 1) ? Compare::Less : Compare::Greater; }

template <class Map>
RotationEnclosure rho_enclosure(const Map& map, const ContinuedFraction& target, int K,
                                const GridSpec& grid) {
  RotationEnclosure enc;
  auto convs = convergents(target, K);
  for (int k = 1; k <= static_cast<int>(convs.size()); ++k) {
    const Rational& c = convs[static_cast<size_t>(k - 1)];
    if (c.q > kMaxCompareDenominator) break;
    Compare r = rho_compare(map, c.p, c.q, grid, &enc.iterations_used);
    if (r == expected_side(k)) {
      ++enc.depth;
      (r == Compare::Less ? enc.hi : enc.lo) = c;
      continue;
    }
    if (target.finite() && k == static_cast<int>(convs.size()) && r == Compare::Contains) {
      // finite target: the last convergent is the target itself
      ++enc.depth;
      enc.lo = enc.hi = c;
    }
    break;
  }
  return enc;
}

// ---------------------------------------------------------------------------
// translation tuning: rho(map + tau) is non-decreasing in tau and strictly
// increasing through irrational values, so bisection on tau reaches any
// prescribed convergent depth. Deep = all K convergents certified on the
// correct side.

template <class Map>
struct Shifted {
  using real_type = typename Map::real_type;
  const Map* base;
  real_type tau;

  real_type eval(real_type x) const { return base->eval(x) + tau; }
  real_type deriv1(real_type x) const { return base->deriv1(x); }
  real_type iterate(real_type x, long long n) const {
    auto sp = split_unit(x);
    long long acc = sp.whole;
    real_type frac = sp.frac;
    for (long long i = 0; i < n; ++i) {
      auto y = split_unit(base->eval(frac) + tau);
      acc += y.whole;
      frac = y.frac;
    }
    return real_type(acc) + frac;
  }
};

enum class Fit { Low, High, Deep };

template <class Map>
Fit classify_against_target(const Map& map, const ContinuedFraction& target, int K,
                            const GridSpec& grid, long long* evals = nullptr) {
  auto convs = convergents(target, K);
  for (int k = 1; k <= static_cast<int>(convs.size()); ++k) {
    const Rational& c = convs[static_cast<size_t>(k - 1)];
    if (c.q > kMaxCompareDenominator)
      throw capability_error("convergent denominator exceeds the comparison iteration cap");
    Compare r = rho_compare(map, c.p, c.q, grid, evals);
    if (r == expected_side(k)) continue;
    if (target.finite() && k == static_cast<int>(convs.size()) && r == Compare::Contains)
      continue;  // exact rational target reached
    bool odd = (k % 2 == 1);
    // odd: target < convergent; Greater or Contains there means rho >= c > target
    return odd ? Fit::High : Fit::Low;
  }
  return Fit::Deep;
}

// returns the translation tau with |tau| <= budget reaching depth K
template <class Map>
typename Map::real_type tune_translation_offset(const Map& map, const ContinuedFraction& target,
                                                int K, typename Map::real_type budget,
                                                const GridSpec& grid) {
  using Real = typename Map::real_type;
  if (!(budget > Real(0))) throw budget_exceeded("tune_translation: budget must be positive");
  auto at = [&](Real tau) {
    Shifted<Map> s{&map, tau};
    return classify_against_target(s, target, K, grid);
  };
  Real a = -budget, b = budget;
  Fit fa = at(a);
  if (fa == Fit::Deep) return a;
  if (fa == Fit::High)
    throw budget_exceeded("tune_translation: rotation number above target across the whole budget");
  Fit fb = at(b);
  if (fb == Fit::Deep) return b;
  if (fb == Fit::Low)
    throw budget_exceeded("tune_translation: rotation number below target across the whole budget");
  for (int it = 0; it < 400; ++it) {
    Real m = a + (b - a) / 2;
    if (m == a || m == b) break;
    Fit fm = at(m);
    if (fm == Fit::Deep) return m;
    (fm == Fit::Low ? a : b) = m;
  }
  throw budget_exceeded("tune_translation: bisection failed to certify depth " + std::to_string(K));
}

template <class Real>
Lift<Real> tune_translation(const Lift<Real>& lift, const ContinuedFraction& target, int K,
                            Real budget, const GridSpec& grid) {
  Real tau = tune_translation_offset(lift, target, K, budget, grid);
  Lift<Real> out = lift;
  out.shift += tau;
  return out;
}

}  // namespace denjoy
