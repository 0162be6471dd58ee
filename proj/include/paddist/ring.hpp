#pragma once
// Bounded-precision p-adic scalars and truncated weight-disk rings Q_p[[w]]/(w^M).

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <boost/rational.hpp>

#include "paddist/error.hpp"

namespace paddist {

using i64 = std::int64_t;
using i128 = __int128;
using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::rational<i64>;

inline constexpr int kMaxW = 12;
inline constexpr int kInfVal = 1 << 28;

inline bool is_prime_i64(i64 n) {
  if (n < 2) return false;
  for (i64 d = 2; d * d <= n; ++d)
    if (n % d == 0) return false;
  return true;
}

inline int vp_i64(i64 n, i64 p) {
  if (n == 0) return kInfVal;
  int v = 0;
  while (n % p == 0) { n /= p; ++v; }
  return v;
}

inline int vp_big(BigInt n, i64 p) {
  if (n == 0) return kInfVal;
  int v = 0;
  while (n % p == 0) { n /= p; ++v; }
  return v;
}

inline i64 inv_mod(i64 a, i64 m) {
  i64 g = m, x = 0, x1 = 1, b = ((a % m) + m) % m;
  while (b != 0) {
    i64 q = g / b;
    i64 t = g - q * b; g = b; b = t;
    t = x - q * x1; x = x1; x1 = t;
  }
  if (g != 1) fail(Errc::NonUnit, "residue has no inverse");
  return ((x % m) + m) % m;
}

inline i64 mulmod(i64 a, i64 b, i64 m) { return static_cast<i64>((static_cast<i128>(a) * b) % m); }

inline i64 powmod(i64 a, BigInt n, i64 m) {
  i64 r = 1 % m;
  a %= m;
  if (a < 0) a += m;
  while (n > 0) {
    if ((n & 1) != 0) r = mulmod(r, a, m);
    a = mulmod(a, a, m);
    n >>= 1;
  }
  return r;
}

/// Descriptor of the coefficient ring: Z_p / p^cap_p, optionally tensored with Q_p[[w]]/(w^cap_w).
struct Ring {
  i64 p = 0;
  int cap_p = 0;
  int cap_w = 0;
  i64 mod = 1;

  static Ring make(i64 p, int cap_p, int cap_w = 0) {
    if (p < 3 || !is_prime_i64(p)) fail(Errc::InvalidArgument, "p must be an odd prime");
    if (cap_p < 1) fail(Errc::InvalidArgument, "cap_p must be positive");
    if (cap_w < 0 || cap_w > kMaxW) fail(Errc::InvalidArgument, "cap_w out of range");
    Ring r;
    r.p = p;
    r.cap_p = cap_p;
    r.cap_w = cap_w;
    i128 m = 1;
    for (int i = 0; i < cap_p; ++i) {
      m *= p;
      if (m >= (static_cast<i128>(1) << 62)) fail(Errc::InvalidArgument, "p^cap_p exceeds 2^62");
    }
    r.mod = static_cast<i64>(m);
    return r;
  }
  static Ring scalar(i64 p, int cap_p) { return make(p, cap_p, 0); }
  static Ring disk(i64 p, int cap_p, int cap_w) {
    if (cap_w < 1) fail(Errc::InvalidArgument, "a weight disk needs cap_w >= 1");
    return make(p, cap_p, cap_w);
  }

  bool is_disk() const { return cap_w > 0; }
  int len() const { return cap_w == 0 ? 1 : cap_w; }
  Ring scalar_ring() const { Ring r = *this; r.cap_w = 0; return r; }
  i64 ppow(int k) const {
    if (k >= cap_p) return 0;
    i64 r = 1;
    for (int i = 0; i < k; ++i) r *= p;
    return r;
  }
  bool operator==(const Ring& o) const { return p == o.p && cap_p == o.cap_p && cap_w == o.cap_w; }
  bool operator!=(const Ring& o) const { return !(*this == o); }
};

class RingElem {
 public:
  RingElem() = default;
  explicit RingElem(const Ring& r) : ring_(r) {}

  static RingElem zero(const Ring& r) { return RingElem(r); }
  static RingElem one(const Ring& r) { return from_int(r, 1); }
  static RingElem from_int(const Ring& r, i64 n) {
    RingElem x(r);
    x.c_[0] = ((n % r.mod) + r.mod) % r.mod;
    return x;
  }
  static RingElem from_big(const Ring& r, const BigInt& n) {
    BigInt m = n % r.mod;
    if (m < 0) m += r.mod;
    RingElem x(r);
    x.c_[0] = static_cast<i64>(m);
    return x;
  }
  /// num/den with den allowed to carry powers of p (which become denom_exp).
  static RingElem from_rational(const Ring& r, BigInt num, BigInt den) {
    if (den == 0) fail(Errc::InvalidArgument, "zero denominator");
    if (den < 0) { den = -den; num = -num; }
    int v = 0;
    while (den % r.p == 0) { den /= r.p; ++v; }
    RingElem x = from_big(r, num);
    BigInt dm = den % r.mod;
    x = x * from_int(r, inv_mod(static_cast<i64>(dm), r.mod));
    return x.mul_p(-v);
  }
  static RingElem from_coeffs(const Ring& r, const std::vector<i64>& cs, int denom_exp = 0) {
    if (static_cast<int>(cs.size()) > r.len()) fail(Errc::InvalidArgument, "too many w-coefficients");
    if (denom_exp < 0) fail(Errc::InvalidArgument, "negative denom_exp");
    RingElem x(r);
    for (size_t i = 0; i < cs.size(); ++i) x.c_[i] = ((cs[i] % r.mod) + r.mod) % r.mod;
    x.e_ = denom_exp;
    x.canonicalize();
    return x;
  }
  /// The disk variable w (zero when cap_w == 1).
  static RingElem w(const Ring& r) {
    if (!r.is_disk()) fail(Errc::RingMismatch, "w requested in a scalar ring");
    RingElem x(r);
    if (r.len() > 1) x.c_[1] = 1 % r.mod;
    return x;
  }

  const Ring& ring() const { return ring_; }
  int denom_exp() const { return e_; }
  i64 coeff(int i) const { return (i < ring_.len()) ? c_[i] : 0; }
  int len() const { return ring_.len(); }

  /// Coefficient of w^i as a scalar (carrying the common denominator).
  RingElem scalar_coeff(int i) const {
    RingElem s(ring_.scalar_ring());
    s.c_[0] = coeff(i);
    s.e_ = e_;
    s.canonicalize();
    return s;
  }
  RingElem constant_term() const {
    RingElem s(ring_);
    s.c_[0] = c_[0];
    s.e_ = e_;
    s.canonicalize();
    return s;
  }
  /// Embed a scalar into this (or any) ring with the same p and cap_p.
  RingElem embed(const Ring& target) const {
    if (target.p != ring_.p || target.cap_p != ring_.cap_p) fail(Errc::RingMismatch, "embed across primes/precisions");
    RingElem x(target);
    for (int i = 0; i < std::min(len(), target.len()); ++i) x.c_[i] = c_[i];
    x.e_ = e_;
    x.canonicalize();
    return x;
  }

  bool is_zero() const {
    for (int i = 0; i < len(); ++i)
      if (c_[i] != 0) return false;
    return true;
  }

  /// Gauss valuation with |w| = 1/p; kInfVal for zero.
  int valuation() const {
    int v = kInfVal;
    for (int i = 0; i < len(); ++i)
      if (c_[i] != 0) v = std::min(v, vp_i64(c_[i], ring_.p) + i);
    return v == kInfVal ? kInfVal : v - e_;
  }
  /// Valuation ignoring the w-grading: min_i v_p(c_i) - e.
  int coeff_valuation() const {
    int v = kInfVal;
    for (int i = 0; i < len(); ++i)
      if (c_[i] != 0) v = std::min(v, vp_i64(c_[i], ring_.p));
    return v == kInfVal ? kInfVal : v - e_;
  }
  /// Smallest i with nonzero w^i coefficient (kInfVal for zero).
  int w_valuation() const {
    for (int i = 0; i < len(); ++i)
      if (c_[i] != 0) return i;
    return kInfVal;
  }
  /// Number of p-adic digits known in absolute terms.
  int precision() const { return ring_.cap_p - e_; }

  bool is_invertible() const { return c_[0] != 0; }
  bool is_p_unit() const { return c_[0] != 0 && e_ == 0 && c_[0] % ring_.p != 0; }

  /// Residue in [0, p^N) of an integral scalar.
  i64 lift() const {
    if (e_ != 0) fail(Errc::NonUnit, "element is not integral");
    return c_[0];
  }
  /// Symmetric lift of an integral scalar.
  i64 signed_lift() const {
    i64 r = lift();
    return (r > ring_.mod / 2) ? r - ring_.mod : r;
  }

  RingElem operator-() const {
    RingElem x(*this);
    for (int i = 0; i < len(); ++i) x.c_[i] = (x.c_[i] == 0) ? 0 : ring_.mod - x.c_[i];
    return x;
  }
  RingElem operator+(const RingElem& o) const {
    check_same(o);
    RingElem x(ring_);
    const RingElem* hi = this;
    const RingElem* lo = &o;
    if (lo->e_ > hi->e_) std::swap(hi, lo);
    i64 sc = ring_.ppow(hi->e_ - lo->e_);
    for (int i = 0; i < len(); ++i) {
      i64 t = mulmod(lo->c_[i], sc, ring_.mod) + hi->c_[i];
      if (t >= ring_.mod) t -= ring_.mod;
      x.c_[i] = t;
    }
    x.e_ = hi->e_;
    x.canonicalize();
    return x;
  }
  RingElem operator-(const RingElem& o) const { return *this + (-o); }
  RingElem operator*(const RingElem& o) const {
    check_same(o);
    RingElem x(ring_);
    const int n = len();
    const i64 m = ring_.mod;
    if (n == 1) {
      x.c_[0] = mulmod(c_[0], o.c_[0], m);
    } else {
      for (int i = 0; i < n; ++i) {
        if (c_[i] == 0) continue;
        for (int j = 0; i + j < n; ++j) {
          if (o.c_[j] == 0) continue;
          i64 t = x.c_[i + j] + mulmod(c_[i], o.c_[j], m);
          x.c_[i + j] = t >= m ? t - m : t;
        }
      }
    }
    x.e_ = e_ + o.e_;
    x.canonicalize();
    return x;
  }
  RingElem& operator+=(const RingElem& o) { return *this = *this + o; }
  RingElem& operator-=(const RingElem& o) { return *this = *this - o; }
  RingElem& operator*=(const RingElem& o) { return *this = *this * o; }

  /// Fast accumulate of a*b into *this for integral operands sharing denom_exp 0.
  void add_mul(const RingElem& a, const RingElem& b) {
    if (len() == 1 && e_ == 0 && a.e_ == 0 && b.e_ == 0) {
      i64 t = c_[0] + mulmod(a.c_[0], b.c_[0], ring_.mod);
      c_[0] = t >= ring_.mod ? t - ring_.mod : t;
      return;
    }
    *this += a * b;
  }

  /// Multiply by p^k; negative k divides (raising denom_exp).
  RingElem mul_p(int k) const {
    RingElem x(*this);
    if (k < 0) {
      x.e_ += -k;
      x.canonicalize();
    } else if (k > 0) {
      int use = std::min(k, x.e_);
      x.e_ -= use;
      i64 sc = ring_.ppow(k - use);
      for (int i = 0; i < len(); ++i) x.c_[i] = mulmod(x.c_[i], sc, ring_.mod);
      x.canonicalize();
    }
    return x;
  }

  RingElem inv() const {
    if (c_[0] == 0) fail(Errc::NonUnit, "constant term vanishes at working precision");
    if (len() == 1) return inv_scalar_();
    RingElem x0 = constant_term();
    RingElem i0 = x0.inv_scalar_();
    RingElem y = (*this) * i0 - one(ring_);
    RingElem acc = one(ring_), term = one(ring_);
    for (int n = 1; n < len(); ++n) {
      term = term * (-y);
      acc += term;
    }
    return acc * i0;
  }

  RingElem pow(i64 n) const {
    if (n < 0) return inv().pow(-n);
    RingElem r = one(ring_), b = *this;
    while (n > 0) {
      if (n & 1) r *= b;
      b *= b;
      n >>= 1;
    }
    return r;
  }

  /// Elements agree to `digits` p-adic digits (Gauss valuation of the difference).
  friend bool agrees(const RingElem& a, const RingElem& b, int digits) {
    return (a - b).valuation() >= digits;
  }
  bool operator==(const RingElem& o) const {
    if (ring_ != o.ring_ || e_ != o.e_) return false;
    for (int i = 0; i < len(); ++i)
      if (c_[i] != o.c_[i]) return false;
    return true;
  }
  bool operator!=(const RingElem& o) const { return !(*this == o); }

  std::string to_string() const {
    std::string s;
    if (len() == 1) {
      s = std::to_string(c_[0]);
    } else {
      s = "[";
      for (int i = 0; i < len(); ++i) s += (i ? "," : "") + std::to_string(c_[i]);
      s += "]";
    }
    if (e_ > 0) s += "/" + std::to_string(ring_.p) + "^" + std::to_string(e_);
    return s;
  }

 private:
  void check_same(const RingElem& o) const {
    if (ring_ != o.ring_) fail(Errc::RingMismatch, "operands live in different rings");
  }
  void canonicalize() {
    if (e_ == 0) return;
    if (is_zero()) { e_ = 0; return; }
    while (e_ > 0) {
      for (int i = 0; i < len(); ++i)
        if (c_[i] % ring_.p != 0) return;
      for (int i = 0; i < len(); ++i) c_[i] /= ring_.p;
      --e_;
    }
  }
  RingElem inv_scalar_() const {
    const i64 m = ring_.mod;
    int v = vp_i64(c_[0], ring_.p);
    i64 u = c_[0];
    for (int i = 0; i < v; ++i) u /= ring_.p;
    RingElem x(ring_);
    x.c_[0] = inv_mod(u, m);
    if (e_ >= v) {
      x.c_[0] = mulmod(x.c_[0], ring_.ppow(e_ - v), m);
    } else {
      x.e_ = v - e_;
    }
    return x;
  }

  Ring ring_{};
  std::array<i64, kMaxW> c_{};
  int e_ = 0;
};

inline RingElem operator*(i64 n, const RingElem& x) { return RingElem::from_int(x.ring(), n) * x; }

/// Result of a truncated binomial series with a lower bound on the valuation of the omitted tail.
struct BinomResult {
  RingElem value;
  int tail_valuation;
};

/// sum_{n=0}^{degree} binom(s, n) z^n.
inline BinomResult binom_series(const RingElem& s, const RingElem& z, int degree) {
  const Ring& R = s.ring();
  if (z.ring() != R) fail(Errc::RingMismatch, "binom_series operands");
  if (degree < 0) fail(Errc::InvalidArgument, "negative degree");
  const i64 p = R.p;
  int vz = z.valuation();
  int vs = s.valuation();
  bool s_integral = !R.is_disk() && vs >= 0;
  int a = std::min(0, vs == kInfVal ? 0 : vs);
  if (vz != kInfVal && vz + a < 1) fail(Errc::Divergent, "|z| too large for a convergent binomial series");
  RingElem sum = RingElem::one(R);
  RingElem P = RingElem::one(R);
  i64 unit_fact = 1;
  int v_fact = 0;
  for (int n = 1; n <= degree; ++n) {
    P = P * (s - RingElem::from_int(R, n - 1)) * z;
    i64 nn = n;
    while (nn % p == 0) { nn /= p; ++v_fact; }
    unit_fact = mulmod(unit_fact, nn % R.mod, R.mod);
    sum += (P * RingElem::from_int(R, inv_mod(unit_fact, R.mod))).mul_p(-v_fact);
  }
  int tail;
  if (vz == kInfVal) {
    tail = kInfVal;
  } else if (s_integral) {
    tail = (degree + 1) * vz;
  } else {
    tail = kInfVal;
    int vf = 0;
    for (int n = 1; n <= degree + 1 + 8 * R.cap_p * static_cast<int>(p); ++n) {
      vf += vp_i64(n, p);
      if (n >= degree + 1) tail = std::min(tail, n * (vz + a) - vf);
    }
  }
  return {sum, tail};
}

/// Substitute w := w0 (a topologically nilpotent scalar).
/// x is p^v times a unit on the whole disk: its constant term strictly dominates the rest.
inline bool has_dominant_constant(const RingElem& x) {
  if (x.is_zero()) return false;
  if (!x.ring().is_disk()) return true;
  RingElem c0 = x.constant_term();
  return !c0.is_zero() && (x - c0).valuation() > c0.valuation();
}

inline RingElem specialize(const RingElem& x, const RingElem& w0) {
  const Ring& R = x.ring();
  if (!R.is_disk()) fail(Errc::RingMismatch, "specialize needs a weight-disk element");
  const Ring S = R.scalar_ring();
  if (w0.ring() != S) fail(Errc::RingMismatch, "w0 must be a scalar in the matching scalar ring");
  if (!w0.is_zero() && w0.valuation() < 1) fail(Errc::Divergent, "w0 must have norm <= 1/p");
  RingElem acc = RingElem::zero(S), wp = RingElem::one(S);
  for (int i = 0; i < R.len(); ++i) {
    acc += RingElem::from_int(S, x.coeff(i)) * wp;
    wp *= w0;
  }
  return acc.mul_p(-x.denom_exp());
}

/// Teichmuller lift of a unit residue modulo p^N.
inline i64 teichmuller(i64 t, const Ring& R) {
  if (t % R.p == 0) fail(Errc::NonUnitEntry, "Teichmuller lift of a non-unit");
  BigInt e = 1;
  for (int i = 0; i < R.cap_p; ++i) e *= R.p;
  return powmod(t, e, R.mod);
}

namespace detail {
inline BigInt inv_mod_big(const BigInt& a, const BigInt& m) {
  BigInt g0 = m, g1 = ((a % m) + m) % m, s0 = 0, s1 = 1;
  while (g1 != 0) {
    BigInt q = g0 / g1;
    BigInt t = g0 - q * g1; g0 = g1; g1 = t;
    t = s0 - q * s1; s0 = s1; s1 = t;
  }
  if (g0 != 1) fail(Errc::NonUnit, "big residue has no inverse");
  return ((s0 % m) + m) % m;
}

// log(x)/p modulo p^K for x = 1 (mod p), computed in big integers with guard digits.
inline BigInt log_over_p(const BigInt& x, i64 p, int K) {
  int guard = 4;
  for (i64 q = p; q < 64LL * K; q *= p) ++guard;
  const int W = K + 1 + guard;
  BigInt mod = 1, modK = 1;
  for (int i = 0; i < W; ++i) mod *= p;
  for (int i = 0; i < K; ++i) modK *= p;
  BigInt t = ((x - 1) % mod + mod) % mod;
  BigInt acc = 0, tp = 1;
  for (int n = 1; n - vp_i64(n, p) <= W + 1; ++n) {
    tp = (tp * t) % mod;
    int vn = vp_i64(n, p);
    BigInt pv = 1;
    for (int i = 0; i < vn + 1; ++i) pv *= p;
    BigInt num = tp / pv;  // exact: v_p(t^n) >= n > v_p(n)
    i64 u = n;
    for (int i = 0; i < vn; ++i) u /= p;
    BigInt val = (num * inv_mod_big(BigInt(u), modK)) % modK;
    acc += (n % 2 == 0) ? -val : val;
  }
  acc %= modK;
  if (acc < 0) acc += modK;
  return acc;
}
}  // namespace detail

/// l(x) = log(x)/log(1+p) for x in 1 + pZ_p given modulo p^N; one digit is lost.
inline i64 log_ratio(i64 x, const Ring& R) {
  if ((x - 1) % R.p != 0) fail(Errc::InvalidArgument, "log_ratio needs x = 1 mod p");
  const int K = R.cap_p + 2;
  BigInt num = detail::log_over_p(BigInt(x), R.p, K);
  BigInt den = detail::log_over_p(BigInt(1 + R.p), R.p, K);
  BigInt mod = 1;
  for (int i = 0; i < K; ++i) mod *= R.p;
  num %= mod;
  den %= mod;
  BigInt dinv = detail::inv_mod_big(den, mod);
  BigInt r = (num * dinv) % mod;
  r %= R.mod;
  return static_cast<i64>(r);
}

inline std::ostream& operator<<(std::ostream& os, const RingElem& x) { return os << x.to_string(); }

}  // namespace paddist
