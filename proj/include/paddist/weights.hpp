#pragma once
// p-adic weights of the diagonal torus of GL_g: algebraic exponents, tame twists, wild
// exponents and one-parameter weight disks kappa_w,i(1+p) = (1+p)^{k_i} (1+w).

#include <vector>

#include "paddist/series.hpp"

namespace paddist {

/// kappa_i(t) = t^a * omega(t)^m * <t>^s * (1+w)^{disk * l(<t>)}.
struct WeightComponent {
  i64 a = 0;
  i64 m = 0;
  RingElem s;
  int disk = 0;

  /// The character t -> kappa_i(t) / kappa_j(t).
  WeightComponent over(const WeightComponent& o) const { return {a - o.a, m - o.m, s - o.s, disk - o.disk}; }
};

struct Weight {
  int g = 1;
  Ring ring;
  std::vector<WeightComponent> comps;

  static Weight algebraic(const Ring& R, const std::vector<i64>& k) {
    Weight w;
    w.g = static_cast<int>(k.size());
    if (w.g < 1) fail(Errc::InvalidArgument, "weight needs at least one component");
    w.ring = R;
    for (i64 ki : k) w.comps.push_back({ki, 0, RingElem::zero(R), 0});
    return w;
  }
  /// Weight disk centred at the algebraic weight k; R must be a weight-disk ring.
  static Weight disk_family(const Ring& R, const std::vector<i64>& k) {
    if (!R.is_disk()) fail(Errc::RingMismatch, "disk weights need a weight-disk ring");
    Weight w = algebraic(R, k);
    for (auto& c : w.comps) c.disk = 1;
    return w;
  }

  bool is_disk() const {
    for (auto& c : comps)
      if (c.disk != 0) return true;
    return false;
  }
  bool is_algebraic() const {
    for (auto& c : comps)
      if (c.disk != 0 || c.m % (ring.p - 1) != 0 || !c.s.is_zero()) return false;
    return true;
  }
  bool dominant() const {
    if (!is_algebraic()) return false;
    for (int i = 0; i + 1 < g; ++i)
      if (comps[i].a < comps[i + 1].a) return false;
    return true;
  }
  std::vector<i64> algebraic_part() const {
    std::vector<i64> k;
    for (auto& c : comps) k.push_back(c.a);
    return k;
  }
};

namespace detail {

inline RingElem log_one_plus_p(const Ring& S) {
  BigInt v = log_over_p(BigInt(1 + S.p), S.p, S.cap_p + 2);
  return RingElem::from_big(S, v).mul_p(1);
}

// binom(s, n) as a ring element (numerator product divided by n!).
template <class T>
std::vector<T> binomials(const T& s, int nmax) {
  const Ring& R = s.ring();
  std::vector<T> out;
  T one = const_like(s, RingElem::one(R));
  out.push_back(one);
  T P = one;
  i64 unit_fact = 1;
  int v_fact = 0;
  for (int n = 1; n <= nmax; ++n) {
    P = P * (s - const_like(s, RingElem::from_int(R, n - 1)));
    i64 nn = n;
    while (nn % R.p == 0) { nn /= R.p; ++v_fact; }
    unit_fact = mulmod(unit_fact, nn % R.mod, R.mod);
    out.push_back(mul_p(P * RingElem::from_int(R, inv_mod(unit_fact, R.mod)), -v_fact));
  }
  return out;
}

inline RingElem scalar_of(const RingElem& t) {
  RingElem s = t.scalar_coeff(0);
  for (int i = 1; i < t.len(); ++i)
    if (t.coeff(i) != 0) fail(Errc::NonUnitEntry, "torus entries must be scalars");
  return s;
}

}  // namespace detail

/// kappa_i(t) for a scalar p-unit t; the value lives in the weight's ring.
inline RingElem eval_component(const WeightComponent& c, const RingElem& t_in, const Ring& R) {
  RingElem t = detail::scalar_of(t_in);
  const Ring S = R.scalar_ring();
  if (t.ring() != S) fail(Errc::RingMismatch, "torus entry ring");
  if (!t.is_p_unit()) fail(Errc::NonUnitEntry, "torus entries must be p-units");
  RingElem omega = RingElem::from_int(S, teichmuller(t.lift(), S));
  RingElem bracket = t * omega.inv();
  RingElem val = t.pow(c.a) * omega.pow(((c.m % (R.p - 1)) + (R.p - 1)) % (R.p - 1));
  RingElem out = val.embed(R);
  bool scalar_s = c.s.denom_exp() == 0;
  for (int i = 1; i < c.s.len(); ++i) scalar_s = scalar_s && c.s.coeff(i) == 0;
  if (!c.s.is_zero() && scalar_s) {
    // <t> lies in 1 + pZ_p, so <t>^{p^N} = 1 mod p^{N+1}: an integer lift of s is exact.
    out *= RingElem::from_int(R, powmod(bracket.lift(), BigInt(c.s.coeff(0)), S.mod));
  } else if (!c.s.is_zero()) {
    RingElem z = bracket.embed(R) - RingElem::one(R);
    int deg = 4;
    BinomResult b = binom_series(c.s, z, deg);
    while (b.tail_valuation < R.cap_p + 1 && deg < 64 * R.cap_p) {
      deg *= 2;
      b = binom_series(c.s, z, deg);
    }
    out *= b.value;
  }
  if (c.disk) {
    RingElem l = RingElem::from_int(R, log_ratio(bracket.lift(), S)) * RingElem::from_int(R, c.disk);
    auto bs = detail::binomials(l, R.len() - 1);
    RingElem w = RingElem::w(R), wp = RingElem::one(R), acc = RingElem::zero(R);
    for (int n = 0; n < R.len(); ++n) {
      acc += bs[n] * wp;
      wp *= w;
    }
    out *= acc;
  }
  return out;
}

/// kappa_i on a series t whose constant term is a scalar p-unit; non-constant coefficients are
/// assumed divisible by p (so that t/t0 lies in 1 + pZ_p at every chart point).
inline Series eval_component(const WeightComponent& c, const Series& t, const Ring& R) {
  if (t.ring() != R) fail(Errc::RingMismatch, "series must have coefficients in the weight ring");
  const SpacePtr& sp = t.space();
  RingElem t0 = t.const_term();
  RingElem k0 = eval_component(c, t0, R);
  RingElem t0inv = t0.inv();
  Series one = Series::constant(sp, RingElem::one(R));
  Series z = t * t0inv - one;
  z[0] = RingElem::zero(R);
  const int nil = sp->total_cap();
  Series out = Series::constant(sp, k0);
  // Powers of z by repeated multiplication with the sparse z (never dense by dense).
  std::vector<Series> zp{one};
  auto zpow = [&](int n) -> const Series& {
    while (static_cast<int>(zp.size()) <= n) zp.push_back(zp.back() * z);
    return zp[n];
  };
  // (1+z)^{a+s}; for a plain non-negative integer exponent the sum stops at n = a.
  RingElem ex = c.s + RingElem::from_int(R, c.a);
  if (!ex.is_zero()) {
    // Integer exponents use exact integer binomials; the generic path divides by n!.
    std::vector<RingElem> bs;
    if (c.s.is_zero()) {
      const int top = c.a >= 0 ? std::min<int>(nil, static_cast<int>(c.a)) : nil;
      BigInt b = 1;
      for (int n = 0; n <= top; ++n) {
        if (n > 0) b = b * BigInt(c.a - n + 1) / BigInt(n);
        bs.push_back(RingElem::from_big(R, b));
      }
    } else {
      bs = detail::binomials(ex, nil);
    }
    Series acc = one;
    for (int n = 1; n < static_cast<int>(bs.size()); ++n) {
      const Series& zn = zpow(n);
      if (zn.is_zero()) break;
      acc += zn * bs[n];
    }
    out = out * acc;
  }
  if (c.disk && R.len() > 1) {
    Series lg(sp, R);
    for (int n = 1; n <= nil; ++n) {
      const Series& zn = zpow(n);
      if (zn.is_zero()) break;
      RingElem coef = RingElem::from_int(R, (n % 2) ? 1 : -1).mul_p(-vp_i64(n, R.p));
      i64 u = n;
      while (u % R.p == 0) u /= R.p;
      coef = coef * RingElem::from_int(R, inv_mod(u % R.mod, R.mod));
      lg += zn * coef;
    }
    Series L = lg * (detail::log_one_plus_p(R.scalar_ring()).inv() * RingElem::from_int(R.scalar_ring(), c.disk)).embed(R);
    auto bs = detail::binomials(L, R.len() - 1);
    RingElem w = RingElem::w(R), wp = RingElem::one(R);
    Series acc(sp, R);
    for (int n = 0; n < R.len(); ++n) {
      acc += bs[n] * wp;
      wp *= w;
    }
    out = out * acc;
  }
  return out;
}

/// kappa(diag(tau)) = prod_i kappa_i(tau_i).
inline RingElem eval_weight(const Weight& k, const std::vector<RingElem>& tau) {
  if (static_cast<int>(tau.size()) != k.g) fail(Errc::InvalidArgument, "torus element has wrong size");
  RingElem out = RingElem::one(k.ring);
  for (int i = 0; i < k.g; ++i) out *= eval_component(k.comps[i], tau[i], k.ring);
  return out;
}
inline Series eval_weight(const Weight& k, const std::vector<Series>& tau) {
  if (static_cast<int>(tau.size()) != k.g) fail(Errc::InvalidArgument, "torus element has wrong size");
  Series out = eval_component(k.comps[0], tau[0], k.ring);
  for (int i = 1; i < k.g; ++i) out = out * eval_component(k.comps[i], tau[i], k.ring);
  return out;
}

/// r_kappa = p^{-rho}; returns rho = min(1, min_i v(kappa_i(1+p) - 1)).
inline Rational r_kappa_exponent(const Weight& k) {
  const Ring S = k.ring.scalar_ring();
  int rho = 1;
  for (auto& c : k.comps) {
    RingElem d = eval_component(c, RingElem::from_int(S, 1 + S.p), k.ring) - RingElem::one(k.ring);
    int v = d.valuation();
    if (v <= 0) fail(Errc::NotAdapted, "|kappa_i(1+p) - 1| >= 1");
    rho = std::min(rho, v);
  }
  return Rational(rho);
}

/// Fiber of a disk weight at w = w0: (1+w0)^{l(<t>)} = <t>^{l(1+w0)} becomes a wild exponent.
inline Weight specialize_weight(const Weight& k, const RingElem& w0) {
  if (!k.ring.is_disk()) fail(Errc::RingMismatch, "specialize_weight needs a disk weight");
  const Ring S = k.ring.scalar_ring();
  Weight out;
  out.g = k.g;
  out.ring = S;
  RingElem one_plus = RingElem::one(S) + w0;
  RingElem sw = one_plus.is_p_unit() && w0.valuation() >= 1 ? RingElem::from_int(S, log_ratio(one_plus.lift(), S))
                                                            : RingElem::zero(S);
  if (!w0.is_zero() && w0.valuation() < 1) fail(Errc::Divergent, "w0 must have norm <= 1/p");
  for (auto& c : k.comps) {
    WeightComponent d{c.a, c.m, c.s.is_zero() ? RingElem::zero(S) : specialize(c.s, w0), 0};
    if (c.disk != 0) d.s = d.s + sw * RingElem::from_int(S, c.disk);
    out.comps.push_back(d);
  }
  return out;
}

}  // namespace paddist
