#pragma once
// Modular symbols for Gamma = Gamma_1(N) ∩ Gamma_0(p) with coefficients in truncated distributions
// (genus one), their Hecke operators, the parabolic quotient and the cup-product pairing.
//
// Conventions. Symbols are left-equivariant maps phi on degree-zero divisors of P^1(Q):
// phi(gamma D) = gamma . phi(D). A symbol is stored by its values v_i = phi(g_i {0, oo}) on the
// coset representatives g_i of Gamma \ SL_2(Z). The coefficient action of an integral matrix
// [[a, b], [c, d]] with p | c is the action of the element [[a, b], [p (c/p), d]] of Xi.
//
// Overconvergent coefficients are modelled by the finite quotient F(M) of the integral
// distributions in which the moment of degree j is kept modulo p^{M+1-j}. Linear systems over F(M)
// become uniform-precision systems once the equation for moment j is multiplied by p^j; the
// "scaled" coordinates p^j m_j are the ones in which every entry is significant to p^{M+1}. The
// algebraic quotient (M = k, algebraic weight k) and constant coefficients are exact.

#include <array>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>

#include "paddist/fredholm.hpp"
#include "paddist/pairing.hpp"

namespace paddist {

// ---------------------------------------------------------------------------------------------
// Integer 2x2 matrices and cusps

struct IntMat2 {
  i64 a = 1, b = 0, c = 0, d = 1;

  i64 det() const { return a * d - b * c; }
  IntMat2 operator*(const IntMat2& o) const {
    return {a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c, c * o.b + d * o.d};
  }
  IntMat2 operator-() const { return {-a, -b, -c, -d}; }
  /// Adjugate; equal to the inverse when the determinant is one, and the same Moebius map otherwise.
  IntMat2 adj() const { return {d, -b, -c, a}; }
  bool operator==(const IntMat2& o) const { return a == o.a && b == o.b && c == o.c && d == o.d; }
  bool operator<(const IntMat2& o) const {
    return std::array<i64, 4>{a, b, c, d} < std::array<i64, 4>{o.a, o.b, o.c, o.d};
  }
};

inline const IntMat2 kSigma{0, -1, 1, 0};
inline const IntMat2 kTau{0, -1, 1, -1};
inline const IntMat2 kTee{1, 1, 0, 1};

inline i64 mod_pos(i64 x, i64 m) {
  i64 r = x % m;
  return r < 0 ? r + m : r;
}
inline i64 floor_div(i64 x, i64 y) {
  i64 q = x / y;
  return (x % y != 0 && ((x < 0) != (y < 0))) ? q - 1 : q;
}
/// (g, s, t) with s*a + t*b = g = gcd(a, b) >= 0.
inline std::array<i64, 3> ext_gcd(i64 a, i64 b) {
  i64 r0 = a, r1 = b, s0 = 1, s1 = 0, t0 = 0, t1 = 1;
  while (r1 != 0) {
    i64 q = floor_div(r0, r1);
    std::tie(r0, r1) = std::make_pair(r1, r0 - q * r1);
    std::tie(s0, s1) = std::make_pair(s1, s0 - q * s1);
    std::tie(t0, t1) = std::make_pair(t1, t0 - q * t1);
  }
  if (r0 < 0) r0 = -r0, s0 = -s0, t0 = -t0;
  return {r0, s0, t0};
}

/// A matrix in SL_2(Z) with bottom row (c, d); requires gcd(c, d) = 1.
inline IntMat2 complete_bottom_row(i64 c, i64 d) {
  auto [g, s, t] = ext_gcd(d, c);  // s d + t c = 1
  if (g != 1) fail(Errc::InvalidArgument, "bottom row is not primitive");
  return {s, -t, c, d};
}

/// A point u/v of P^1(Q), stored with v >= 0 and gcd(u, v) = 1; infinity is (1, 0).
struct Cusp {
  i64 u = 1, v = 0;
  static Cusp make(i64 u, i64 v) {
    if (u == 0 && v == 0) fail(Errc::InvalidArgument, "0/0 is not a cusp");
    i64 g = std::gcd(u, v);
    u /= g, v /= g;
    if (v < 0 || (v == 0 && u < 0)) u = -u, v = -v;
    return {u, v};
  }
  bool operator==(const Cusp& o) const { return u == o.u && v == o.v; }
  bool operator<(const Cusp& o) const { return std::make_pair(u, v) < std::make_pair(o.u, o.v); }
};
inline const Cusp kInfty{1, 0};
inline const Cusp kZero{0, 1};

inline Cusp apply(const IntMat2& m, const Cusp& x) { return Cusp::make(m.a * x.u + m.b * x.v, m.c * x.u + m.d * x.v); }

/// Unimodular paths: {r, s} = sum sign * g{0, oo} with g in SL_2(Z) (continued fractions).
struct PathTerm {
  IntMat2 g;
  int sign;
};

namespace detail {
inline void append_from_zero(const Cusp& x, int sign, std::vector<PathTerm>& out) {
  if (x == kZero) return;
  out.push_back({IntMat2{}, sign});
  if (x.v == 0) return;
  i64 pm2 = 0, qm2 = 1, pm1 = 1, qm1 = 0;
  i64 u = x.u, v = x.v;
  while (true) {
    i64 a = floor_div(u, v);
    i64 pk = a * pm1 + pm2, qk = a * qm1 + qm2;
    IntMat2 g{pk, pm1, qk, qm1};
    if (g.det() == -1) g = {-pk, pm1, -qk, qm1};
    out.push_back({g, sign});
    pm2 = pm1, qm2 = qm1, pm1 = pk, qm1 = qk;
    i64 r = u - a * v;
    if (r == 0) break;
    u = v, v = r;
  }
}
}  // namespace detail

inline std::vector<PathTerm> unimodular_decomposition(const Cusp& r, const Cusp& s) {
  std::vector<PathTerm> out;
  detail::append_from_zero(s, +1, out);
  detail::append_from_zero(r, -1, out);
  return out;
}

// ---------------------------------------------------------------------------------------------
// Cosets of Gamma_1(N) ∩ Gamma_0(p) in SL_2(Z)

struct CosetTable {
  i64 N = 0, p = 0;
  std::vector<IntMat2> reps;
  /// Right multiplication tables: coset of reps[i] * x.
  std::vector<int> sigma, tau, tee, minus;
  /// Cusp data: orbit of reps[i] * oo, and gamma with reps[i] * oo = cusp_gamma[i] * reps[orbit rep] * oo.
  std::vector<int> cusp_orbit;
  std::vector<IntMat2> cusp_gamma;
  std::vector<int> orbit_rep;
  /// Generator of the stabiliser in Gamma of reps[orbit_rep[o]] * oo, and the cusp width.
  std::vector<IntMat2> stabilizer;
  std::vector<int> width;

  int size() const { return static_cast<int>(reps.size()); }
  int cusp_count() const { return static_cast<int>(orbit_rep.size()); }

  std::array<i64, 3> key(i64 c, i64 d) const {
    i64 cp = mod_pos(c, p), dp = mod_pos(d, p);
    i64 pt = dp != 0 ? mulmod(cp, inv_mod(dp, p), p) : p;
    return {mod_pos(c, N), mod_pos(d, N), pt};
  }
  int index_of(const IntMat2& g) const {
    if (g.det() != 1) fail(Errc::InvalidArgument, "coset lookup needs a matrix in SL_2(Z)");
    auto it = index_.find(key(g.c, g.d));
    if (it == index_.end()) fail(Errc::InvalidArgument, "bottom row not primitive modulo the level");
    return it->second;
  }
  bool in_gamma(const IntMat2& g) const {
    return g.det() == 1 && mod_pos(g.c, N * p) == 0 && mod_pos(g.a, N) == 1 % N && mod_pos(g.d, N) == 1 % N;
  }
  /// g = gamma * reps[index_of(g)]; returns gamma.
  IntMat2 gamma_of(const IntMat2& g, int j) const { return g * reps[j].adj(); }

  std::map<std::array<i64, 3>, int> index_;
};

inline CosetTable manin_presentation(i64 N, i64 p) {
  if (p < 3 || !is_prime_i64(p)) fail(Errc::BadLevel, "p must be an odd prime");
  if (N <= 3 || N % p == 0) fail(Errc::BadLevel, "need N > 3 and p not dividing N");
  if (N * p > (i64(1) << 20)) fail(Errc::BadLevel, "level too large for the coset enumeration");
  CosetTable T;
  T.N = N, T.p = p;
  const i64 Np = N * p;
  const i64 invN = inv_mod(mod_pos(N, p), p);
  auto crt = [&](i64 rN, i64 rp) { return rN + N * mod_pos((rp - rN) * invN, p); };
  for (i64 c0 = 0; c0 < N; ++c0)
    for (i64 d0 = 0; d0 < N; ++d0) {
      if (std::gcd(std::gcd(c0, d0), N) != 1) continue;
      for (i64 pt = 0; pt <= p; ++pt) {
        i64 u = pt < p ? pt : 1, v = pt < p ? 1 : 0;
        i64 C = crt(c0, u), D = crt(d0, v);
        bool found = false;
        for (i64 s = 0; s < 64 && !found; ++s)
          for (i64 t = -64; t < 64 && !found; ++t) {
            i64 c = C + Np * s, d = D + Np * t;
            if (std::gcd(c, d) != 1) continue;
            T.index_.emplace(T.key(c, d), static_cast<int>(T.reps.size()));
            T.reps.push_back(complete_bottom_row(c, d));
            found = true;
          }
        if (!found) fail(Errc::BadLevel, "no primitive lift of a bottom row");
      }
    }
  const int n = T.size();
  auto table = [&](const IntMat2& x) {
    std::vector<int> t(n);
    for (int i = 0; i < n; ++i) t[i] = T.index_of(T.reps[i] * x);
    return t;
  };
  T.sigma = table(kSigma);
  T.tau = table(kTau);
  T.tee = table(kTee);
  T.minus = table(IntMat2{-1, 0, 0, -1});

  // Cusps: orbits of right multiplication by T and -1. Breadth-first search records, for every
  // coset j reached from the orbit representative r, a word W in <T, -1> with coset(g_r W) = j.
  T.cusp_orbit.assign(n, -1);
  T.cusp_gamma.assign(n, IntMat2{});
  for (int r = 0; r < n; ++r) {
    if (T.cusp_orbit[r] >= 0) continue;
    const int o = T.cusp_count();
    T.orbit_rep.push_back(r);
    std::vector<std::pair<int, IntMat2>> queue{{r, IntMat2{}}};
    T.cusp_orbit[r] = o;
    for (size_t q = 0; q < queue.size(); ++q) {
      auto [j, W] = queue[q];
      for (const IntMat2& step : {kTee, IntMat2{-1, 0, 0, -1}}) {
        IntMat2 W2 = W * step;
        int j2 = T.index_of(T.reps[r] * W2);
        if (T.cusp_orbit[j2] >= 0) continue;
        T.cusp_orbit[j2] = o;
        // g_r W2 = gamma'' g_j2, so g_j2 oo = gamma''^{-1} g_r oo.
        T.cusp_gamma[j2] = T.gamma_of(T.reps[r] * W2, j2).adj();
        queue.push_back({j2, W2});
      }
    }
    IntMat2 Tm = kTee;
    for (int m = 1;; ++m, Tm = Tm * kTee) {
      IntMat2 u = T.reps[r] * Tm * T.reps[r].adj();
      if (T.in_gamma(u)) {
        T.stabilizer.push_back(u), T.width.push_back(m);
        break;
      }
      if (T.in_gamma(-u)) {
        T.stabilizer.push_back(-u), T.width.push_back(m);
        break;
      }
    }
  }
  return T;
}

// ---------------------------------------------------------------------------------------------
// Coefficient modules

struct CoeffModule {
  Weight kappa;
  int M = 0;
  /// True for the finite-dimensional algebraic quotient (and constant coefficients).
  bool exact = false;

  int dim() const { return M + 1; }
  const Ring& ring() const { return kappa.ring; }
  i64 p() const { return kappa.ring.p; }

  /// Distributions truncated at M, as the quotient F(M).
  static CoeffModule distributions(const Weight& k, int M) {
    if (k.g != 1) fail(Errc::InvalidArgument, "modular symbols are implemented for genus one");
    if (M < 0) fail(Errc::InvalidArgument, "negative truncation");
    if (M + 1 >= k.ring.cap_p) fail(Errc::PrecisionExhausted, "ring precision must exceed the truncation");
    return {k, M, false, std::make_shared<Cache>()};
  }
  /// The algebraic dual V_k^vee: moments of degree <= k for algebraic weight k.
  static CoeffModule algebraic(const Weight& k) {
    if (k.g != 1) fail(Errc::InvalidArgument, "modular symbols are implemented for genus one");
    if (!k.is_algebraic() || k.comps[0].a < 0) fail(Errc::NotDominant, "algebraic coefficients need k >= 0");
    return {k, static_cast<int>(k.comps[0].a), true, std::make_shared<Cache>()};
  }
  static CoeffModule trivial(const Ring& R) { return algebraic(Weight::algebraic(R, {0})); }

  /// Digits to which results over this module are trusted; entries at or beyond count as zero.
  int precision() const {
    const int cap = ring().cap_p;
    return exact ? cap - std::max(1, cap / 3) : M + 1;
  }
  /// Equations and coordinates for moment j are scaled by p^{scale(j)}.
  int scale(int j) const { return exact ? 0 : j; }

  Xi to_xi(const IntMat2& g) const {
    if (mod_pos(g.c, p()) != 0) fail(Errc::NotInXi, "lower-left entry must be divisible by p");
    const Ring& R = ring();
    auto one = [&](i64 x) { return Matrix(1, 1, RingElem::from_int(R, x)); };
    return {one(g.a), one(g.b), one(g.c / p()), one(g.d)};
  }
  /// Matrix of g on moments 0..M (higher moments dropped).
  const Matrix& act(const IntMat2& g) const {
    std::lock_guard<std::mutex> lock(cache->mu);
    auto it = cache->mats.find(g);
    if (it != cache->mats.end()) return it->second;
    return cache->mats.emplace(g, action_matrix(to_xi(g), kappa, M, M)).first->second;
  }
  Matrix act(const Xi& x) const { return action_matrix(x, kappa, M, M); }

  struct Cache {
    std::mutex mu;
    std::map<IntMat2, Matrix> mats;
  };
  std::shared_ptr<Cache> cache;
};

// ---------------------------------------------------------------------------------------------
// Symbol spaces

/// phi(path) = sum over terms of  mat * v_coset.
struct LinearForm {
  std::vector<std::pair<int, Matrix>> terms;
};

struct SymbSpace {
  std::shared_ptr<const CosetTable> table;
  CoeffModule coeff;
  /// Columns are symbols in coset coordinates (block i holds the moments of v_i).
  Matrix basis;

  int dim() const { return basis.cols(); }
  int block() const { return coeff.dim(); }
  int ambient_size() const { return table->size() * block(); }
  const Ring& ring() const { return coeff.ring(); }

  LinearForm unimodular(const IntMat2& g) const {
    int j = table->index_of(g);
    return {{{j, coeff.act(table->gamma_of(g, j))}}};
  }
  LinearForm path(const Cusp& r, const Cusp& s) const {
    LinearForm f;
    for (auto& t : unimodular_decomposition(r, s)) {
      int j = table->index_of(t.g);
      Matrix m = coeff.act(table->gamma_of(t.g, j));
      f.terms.push_back({j, t.sign > 0 ? m : -m});
    }
    return f;
  }
  /// Scaled coordinates: the entry for moment j is multiplied by p^j (overconvergent model only).
  Matrix to_scaled(const Matrix& X) const {
    if (coeff.exact) return X;
    Matrix Y = X;
    for (int r = 0; r < Y.rows(); ++r)
      for (int c = 0; c < Y.cols(); ++c) Y(r, c) = Y(r, c).mul_p(coeff.scale(r % block()));
    return Y;
  }
  Matrix from_scaled(const Matrix& Y) const {
    if (coeff.exact) return Y;
    Matrix X = Y;
    for (int r = 0; r < X.rows(); ++r)
      for (int c = 0; c < X.cols(); ++c) X(r, c) = X(r, c).mul_p(-coeff.scale(r % block()));
    return X;
  }
};

namespace detail {
inline void add_block(Matrix& A, int r0, int c0, const Matrix& m) {
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j)
      if (!m(i, j).is_zero()) A(r0 + i, c0 + j) += m(i, j);
}
/// Dense (block x ambient) matrix of a linear form.
inline Matrix form_matrix(const SymbSpace& S, const LinearForm& f) {
  Matrix A = zero_matrix(S.block(), S.ambient_size(), S.ring());
  for (auto& [j, m] : f.terms) add_block(A, 0, j * S.block(), m);
  return A;
}
inline EliminationOptions zero_floor(const CoeffModule& c) {
  EliminationOptions opt;
  opt.floor = c.precision();
  opt.strict = c.exact;
  return opt;
}
}  // namespace detail

/// Manin relations v_i + gamma v_sigma(i) = 0 (all cosets) and the three-term relation (one per
/// tau-orbit), with the equation for moment j scaled by p^j in the overconvergent model.
inline Matrix manin_relations(const CosetTable& T, const CoeffModule& coeff) {
  const int m = coeff.dim(), n = T.size();
  const Ring& R = coeff.ring();
  std::vector<int> tau_reps;
  std::vector<bool> seen(n, false);
  for (int i = 0; i < n; ++i)
    if (!seen[i]) {
      tau_reps.push_back(i);
      seen[i] = seen[T.tau[i]] = seen[T.tau[T.tau[i]]] = true;
    }
  const int rows = (n + static_cast<int>(tau_reps.size())) * m;
  Matrix A = zero_matrix(rows, n * m, R);
  Matrix I = identity_matrix(m, R);
  int r = 0;
  for (int i = 0; i < n; ++i, r += m) {
    detail::add_block(A, r, i * m, I);
    int j = T.sigma[i];
    detail::add_block(A, r, j * m, coeff.act(T.gamma_of(T.reps[i] * kSigma, j)));
  }
  for (int i : tau_reps) {
    detail::add_block(A, r, i * m, I);
    int j1 = T.tau[i], j2 = T.tau[j1];
    detail::add_block(A, r, j1 * m, coeff.act(T.gamma_of(T.reps[i] * kTau, j1)));
    detail::add_block(A, r, j2 * m, coeff.act(T.gamma_of(T.reps[i] * kTau * kTau, j2)));
    r += m;
  }
  if (!coeff.exact)
    for (int i = 0; i < rows; ++i)
      for (int c = 0; c < A.cols(); ++c) A(i, c) = A(i, c).mul_p(coeff.scale(i % m));
  return A;
}

inline SymbSpace symb_space(std::shared_ptr<const CosetTable> table, const CoeffModule& coeff) {
  Matrix A = manin_relations(*table, coeff);
  Matrix K = kernel_basis(A, detail::zero_floor(coeff));
  return {std::move(table), coeff, std::move(K)};
}

/// Least valuation of the (scaled) Manin residual of the given coset vectors; kInfVal if exact.
inline int manin_residual_valuation(const SymbSpace& S, const Matrix& X) {
  Matrix Rm = manin_relations(*S.table, S.coeff) * X;
  int v = kInfVal;
  for (auto& x : Rm.data())
    if (!x.is_zero()) v = std::min(v, x.valuation());
  return v;
}

// ---------------------------------------------------------------------------------------------
// Hecke operators

struct HeckeOp {
  enum Kind { Up, Tq, Diamond, Star } kind = Up;
  i64 q = 0;
  static HeckeOp U() { return {Up, 0}; }
  /// The involution phi -> iota . phi(iota D), iota = diag(-1, 1).
  static HeckeOp star() { return {Star, 0}; }
  static HeckeOp T(i64 q) { return {Tq, q}; }
  static HeckeOp diamond(i64 d) { return {Diamond, d}; }
};

/// Left coset representatives delta_j of the double coset, as matrices acting on cusps and
/// (through Xi) on coefficients: (T phi)(D) = sum_j delta_j . phi(delta_j^{-1} D).
inline std::vector<IntMat2> hecke_cosets(const CosetTable& T, const HeckeOp& op) {
  const i64 N = T.N, p = T.p, Np = N * p;
  std::vector<IntMat2> out;
  switch (op.kind) {
    case HeckeOp::Up:
      for (i64 t = 0; t < p; ++t) out.push_back({1, 0, Np * t, p});
      break;
    case HeckeOp::Tq: {
      const i64 q = op.q;
      if (q < 2 || !is_prime_i64(q) || Np % q == 0) fail(Errc::BadPrime, "T_q needs a prime q prime to pN");
      const i64 invNp = inv_mod(mod_pos(Np, q), q);
      for (i64 c = 0; c < q; ++c) out.push_back({1, 0, Np * mod_pos(c * invNp, q), q});
      auto [g, s, t] = ext_gcd(q, Np);  // s q + t Np = 1, so [[s, -t], [Np, q]] has determinant one
      (void)g;
      out.push_back({q * s, -q * t, Np, q});
      break;
    }
    case HeckeOp::Diamond: {
      const i64 d = op.q;
      if (std::gcd(d, N) != 1) fail(Errc::InvalidArgument, "diamond operator needs d prime to N");
      i64 dd = mod_pos(d, N);
      while (std::gcd(dd, Np) != 1) dd += N;
      out.push_back(complete_bottom_row(Np, dd));
      break;
    }
    case HeckeOp::Star:
      out.push_back({-1, 0, 0, 1});
      break;
  }
  return out;
}

/// The operator on all coset vectors, applied through the unimodular path decomposition.
inline Matrix hecke_full(const SymbSpace& S, const HeckeOp& op) {
  const CosetTable& T = *S.table;
  const int m = S.block();
  Matrix H = zero_matrix(S.ambient_size(), S.ambient_size(), S.ring());
  for (const IntMat2& delta : hecke_cosets(T, op)) {
    Matrix rd = S.coeff.act(delta);
    IntMat2 inv = delta.adj();
    for (int i = 0; i < T.size(); ++i) {
      IntMat2 h = inv * T.reps[i];
      LinearForm f = S.path(apply(h, kZero), apply(h, kInfty));
      for (auto& [j, mat] : f.terms) detail::add_block(H, i * m, j * m, rd * mat);
    }
  }
  return H;
}

/// Matrix of the operator in the space basis, read off on pivot rows of the scaled basis.
inline Matrix hecke_matrix(const SymbSpace& S, const HeckeOp& op) {
  if (S.dim() == 0) return Matrix(0, 0, RingElem::zero(S.ring()));
  Matrix H = hecke_full(S, op);
  Matrix V = S.to_scaled(S.basis);
  Matrix HV = S.to_scaled(H * S.basis);
  Elimination el = eliminate(V);
  const int r = S.dim();
  if (el.rank() != r) fail(Errc::RankMismatch, "symbol basis is dependent");
  std::vector<int> rows;
  for (auto& pv : el.pivots) rows.push_back(pv.row);
  std::sort(rows.begin(), rows.end());
  Matrix Vs = zero_matrix(r, r, S.ring()), Bs = zero_matrix(r, r, S.ring());
  for (int a = 0; a < r; ++a)
    for (int b = 0; b < r; ++b) Vs(a, b) = V(rows[a], b), Bs(a, b) = HV(rows[a], b);
  return solve(Vs, Bs);
}

/// Coordinates of coset vectors X (columns) in the space basis, with the least valuation of the
/// scaled residual X - basis * coords (kInfVal when X lies in the span exactly).
struct Coordinates {
  Matrix coords;
  int residual_valuation;
};
inline Coordinates coordinates_in(const SymbSpace& S, const Matrix& X) {
  const int r = S.dim();
  Matrix V = S.to_scaled(S.basis), Y = S.to_scaled(X);
  Elimination el = eliminate(V);
  std::vector<int> rows;
  for (auto& pv : el.pivots) rows.push_back(pv.row);
  std::sort(rows.begin(), rows.end());
  Matrix Vs = zero_matrix(r, r, S.ring()), Ys = zero_matrix(r, X.cols(), S.ring());
  for (int a = 0; a < r; ++a) {
    for (int b = 0; b < r; ++b) Vs(a, b) = V(rows[a], b);
    for (int b = 0; b < X.cols(); ++b) Ys(a, b) = Y(rows[a], b);
  }
  Matrix C = r ? solve(Vs, Ys) : Matrix(0, X.cols(), RingElem::zero(S.ring()));
  int v = kInfVal;
  if (r) {
    Matrix res = Y - V * C;
    for (auto& x : res.data())
      if (!x.is_zero()) v = std::min(v, x.valuation());
  } else {
    for (auto& x : Y.data())
      if (!x.is_zero()) v = std::min(v, x.valuation());
  }
  return {C, v};
}

// ---------------------------------------------------------------------------------------------
// Boundary symbols and the parabolic quotient

/// Symbols phi(D) = psi(boundary of D) for Gamma-equivariant psi on cusps, in coset coordinates;
/// the spanning set may be dependent.
inline Matrix boundary_symbols(const SymbSpace& S) {
  const CosetTable& T = *S.table;
  const CoeffModule& cf = S.coeff;
  const int m = S.block(), nO = T.cusp_count();
  const Ring& R = S.ring();
  // Stabiliser invariants for each orbit, from the (scaled) equation (u - 1) w = 0.
  std::vector<Matrix> inv(nO);
  for (int o = 0; o < nO; ++o) {
    Matrix E = cf.act(T.stabilizer[o]) - identity_matrix(m, R);
    if (!cf.exact)
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) E(i, j) = E(i, j).mul_p(cf.scale(i));
    inv[o] = kernel_basis(E, detail::zero_floor(cf));
  }
  // psi(g_i oo) = rho(cusp_gamma[i]) w_{orbit(i)}; g_i 0 = g_i sigma oo.
  auto psi_at = [&](int i, const IntMat2& pre, int o_col_offset, std::vector<std::pair<int, Matrix>>& out) {
    (void)o_col_offset;
    out.push_back({T.cusp_orbit[i], cf.act(pre * T.cusp_gamma[i])});
  };
  int cols = 0;
  std::vector<int> off(nO);
  for (int o = 0; o < nO; ++o) off[o] = cols, cols += inv[o].cols();
  Matrix B = zero_matrix(S.ambient_size(), cols, R);
  for (int i = 0; i < T.size(); ++i) {
    std::vector<std::pair<int, Matrix>> plus, minus;
    psi_at(i, IntMat2{}, 0, plus);
    int j = T.sigma[i];
    psi_at(j, T.gamma_of(T.reps[i] * kSigma, j), 0, minus);
    for (auto& [o, mat] : plus) detail::add_block(B, i * m, off[o], mat * inv[o]);
    for (auto& [o, mat] : minus) detail::add_block(B, i * m, off[o], -(mat * inv[o]));
  }
  return B;
}

struct ParabolicSpace {
  SymbSpace ambient;
  /// Boundary symbols in ambient coordinates (independent columns).
  Matrix boundary;
  /// Ambient basis indices completing the boundary span; quotient classes lift to these.
  std::vector<int> complement;
  /// Change of basis P = [boundary | e_complement] and its inverse.
  Matrix P, Pinv;

  int dim() const { return static_cast<int>(complement.size()); }
  int boundary_dim() const { return boundary.cols(); }

  /// Ambient coordinates of the canonical lifts of quotient classes (columns).
  Matrix lift(const Matrix& q) const { return P.block(0, boundary_dim(), P.rows(), dim()) * q; }
  /// Coset-coordinate symbols for quotient classes.
  Matrix lift_symbols(const Matrix& q) const { return ambient.basis * lift(q); }
  /// Full block form P^{-1} A P of an ambient operator.
  Matrix adapted(const Matrix& A) const { return Pinv * A * P; }
  Matrix quotient_operator(const Matrix& A) const {
    return adapted(A).block(boundary_dim(), boundary_dim(), dim(), dim());
  }
  Matrix hecke(const HeckeOp& op) const { return quotient_operator(hecke_matrix(ambient, op)); }
};

inline ParabolicSpace parabolic_quotient(const SymbSpace& S) {
  const Ring& R = S.ring();
  const int d = S.dim();
  Matrix Bsym = boundary_symbols(S);
  if (manin_residual_valuation(S, Bsym) < S.coeff.precision())
    fail(Errc::PrecisionExhausted, "boundary symbols fail the Manin relations at working precision");
  // Coordinates may lose a digit to non-unit pivots of the basis; the relations above are the test.
  Coordinates co = coordinates_in(S, Bsym);
  // Independent boundary columns, then complete with standard basis vectors.
  EliminationOptions opt = detail::zero_floor(S.coeff);
  opt.strict = false;
  Elimination el = eliminate(co.coords.transpose(), opt);
  std::vector<int> bcols;
  for (auto& pv : el.pivots) bcols.push_back(pv.row);
  std::sort(bcols.begin(), bcols.end());
  const int b = static_cast<int>(bcols.size());
  Matrix Bc = zero_matrix(d, b, R);
  for (int c = 0; c < b; ++c)
    for (int r = 0; r < d; ++r) Bc(r, c) = co.coords(r, bcols[c]);
  std::vector<bool> used(d, false);
  {
    Elimination eb = eliminate(Bc);
    for (auto& pv : eb.pivots) used[pv.row] = true;
  }
  ParabolicSpace Q{S, Bc, {}, {}, {}};
  for (int r = 0; r < d; ++r)
    if (!used[r]) Q.complement.push_back(r);
  Q.P = zero_matrix(d, d, R);
  Q.P.set_block(0, 0, Bc);
  for (size_t k = 0; k < Q.complement.size(); ++k) Q.P(Q.complement[k], b + static_cast<int>(k)) = RingElem::one(R);
  Q.Pinv = d ? solve(Q.P, identity_matrix(d, R)) : Q.P;
  return Q;
}

// ---------------------------------------------------------------------------------------------
// Cup product on the Farey triangulation

namespace detail {
/// Orientation of each edge orbit (sigma-orbit of cosets, keyed by its least coset): +1 keeps the
/// direction g 0 -> g oo of that coset. Chosen by backtracking so that no triangle is a cycle.
inline std::vector<int> branching_orientation(const CosetTable& T) {
  const int n = T.size();
  std::vector<int> edge(n);
  for (int i = 0; i < n; ++i) {
    int a = i, b = T.sigma[i], c = T.sigma[b], d = T.sigma[c];
    edge[i] = std::min({a, b, c, d});
  }
  // Direction of coset i relative to its edge key: same for key and -key, reversed otherwise.
  auto rel = [&](int i) { return (i == edge[i] || i == T.minus[edge[i]]) ? 1 : -1; };
  std::vector<int> tri;
  std::vector<bool> seen(n, false);
  for (int i = 0; i < n; ++i) {
    if (seen[i]) continue;
    for (int x : {i, T.tau[i], T.tau[T.tau[i]]}) seen[x] = seen[T.minus[x]] = true;
    tri.push_back(i);
  }
  std::vector<int> keys;
  for (int i = 0; i < n; ++i)
    if (edge[i] == i) keys.push_back(i);
  std::map<int, int> orient;
  auto cyclic = [&](int t) {
    int s = 0;
    for (int x : {tri[t], T.tau[tri[t]], T.tau[T.tau[tri[t]]]}) {
      auto it = orient.find(edge[x]);
      if (it == orient.end()) return false;
      s += it->second * rel(x);
    }
    return s == 3 || s == -3;
  };
  std::function<bool(size_t)> go = [&](size_t k) {
    if (k == keys.size()) return true;
    for (int o : {1, -1}) {
      orient[keys[k]] = o;
      bool ok = true;
      for (size_t t = 0; t < tri.size() && ok; ++t) ok = !cyclic(static_cast<int>(t));
      if (ok && go(k + 1)) return true;
    }
    orient.erase(keys[k]);
    return false;
  };
  if (!go(0)) fail(Errc::LiftFailure, "no acyclic orientation of the triangulation");
  std::vector<int> out(n);
  for (int i = 0; i < n; ++i) out[i] = orient[edge[i]] * rel(i);
  return out;
}
}  // namespace detail

/// Bilinear form C on coset vectors with cup(phi, psi) = phi^T C psi.
///
/// Triangles g(0, oo, 1) are summed once per Gamma-orbit. With the branching orientation each
/// triangle has a source s, middle m and sink t, and contributes
///   sign * [[ phi(s -> m), psi~(m -> t) ]],
/// where sign compares (s, m, t) with the orientation (g0, g1, g oo) of the upper half plane and
/// psi~(D) = diag(1, 1/N) . psi(W D) with W = [[0, -1], [Np, 0]]. The twist makes the coefficient
/// pairing Gamma-invariant: psi~(gamma D) = (gamma^sharp)^{-1} psi~(D).
inline Matrix cup_form(const SymbSpace& S) {
  const CosetTable& T = *S.table;
  const CoeffModule& cf = S.coeff;
  const Ring& R = S.ring();
  const int m = S.block(), n = T.size();
  auto K = cached_kernel(cf.kappa, cf.M, cf.M);
  Matrix G = zero_matrix(m, m, R);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) G(i, j) = K->at(i, j);
  Matrix One(1, 1, RingElem::one(R)), Zero(1, 1, RingElem::zero(R));
  Xi h0{One, Zero, Zero, Matrix(1, 1, RingElem::from_int(R, T.N).inv())};
  Matrix rh = cf.act(h0);
  const IntMat2 W{0, -1, T.N * T.p, 0};

  std::vector<int> dir = detail::branching_orientation(T);
  Matrix C = zero_matrix(S.ambient_size(), S.ambient_size(), R);
  std::vector<bool> seen(n, false);
  for (int i = 0; i < n; ++i) {
    if (seen[i]) continue;
    for (int x : {i, T.tau[i], T.tau[T.tau[i]]}) seen[x] = seen[T.minus[x]] = true;
    const IntMat2 g = T.reps[i];
    // Vertices A = g0, B = g oo, Cv = g1; natural edge directions A->B (coset i), Cv->A (tau i),
    // B->Cv (tau^2 i). Vertex labels 0, 1, 2 for A, B, Cv.
    struct E {
      int from, to;
      IntMat2 h;
    };
    const IntMat2 gt = g * kTau, gtt = g * kTau * kTau;
    std::array<E, 3> es{E{0, 1, g}, E{2, 0, gt}, E{1, 2, gtt}};
    std::array<int, 3> cosets{i, T.tau[i], T.tau[T.tau[i]]};
    std::array<int, 3> outdeg{0, 0, 0};
    for (int e = 0; e < 3; ++e) {
      if (dir[cosets[e]] < 0) std::swap(es[e].from, es[e].to);
      outdeg[es[e].from]++;
    }
    int s = -1, mid = -1, t = -1;
    for (int v = 0; v < 3; ++v) (outdeg[v] == 2 ? s : outdeg[v] == 1 ? mid : t) = v;
    auto find_edge = [&](int a, int b) -> const E& {
      for (auto& e : es)
        if (e.from == a && e.to == b) return e;
      fail(Errc::LiftFailure, "triangle orientation is inconsistent");
    };
    const E& e1 = find_edge(s, mid);
    const E& e2 = find_edge(mid, t);
    // The positively oriented order is (A, Cv, B) = labels (0, 2, 1).
    auto pos = [](int v) { return v == 0 ? 0 : v == 2 ? 1 : 2; };
    std::array<int, 3> perm{pos(s), pos(mid), pos(t)};
    int inversions = (perm[0] > perm[1]) + (perm[0] > perm[2]) + (perm[1] > perm[2]);
    const bool positive = inversions % 2 == 0;

    auto endpoints = [&](const E& e, const IntMat2& h) {
      // Natural direction of the edge matrix h is h0 -> h oo.
      bool natural = (e.from == 0 && e.to == 1) || (e.from == 2 && e.to == 0) || (e.from == 1 && e.to == 2);
      Cusp a = apply(h, kZero), b = apply(h, kInfty);
      return natural ? std::make_pair(a, b) : std::make_pair(b, a);
    };
    auto [a1, b1] = endpoints(e1, e1.h);
    LinearForm L = S.path(a1, b1);
    auto [a2, b2] = endpoints(e2, e2.h);
    LinearForm Rf = S.path(apply(W, a2), apply(W, b2));
    for (auto& [j1, m1] : L.terms) {
      Matrix left = m1.transpose() * G * rh;
      for (auto& [j2, m2] : Rf.terms) {
        Matrix blk = left * m2;
        detail::add_block(C, j1 * m, j2 * m, positive ? blk : -blk);
      }
    }
  }
  return C;
}

/// Gram matrix of the cup pairing on the canonical lifts of the quotient basis.
inline Matrix cup_gram(const ParabolicSpace& Q) {
  Matrix L = Q.lift_symbols(identity_matrix(Q.dim(), Q.ambient.ring()));
  return L.transpose() * cup_form(Q.ambient) * L;
}

/// cup(Phi, Psi) for quotient classes given by coordinate columns (or for explicit coset-vector
/// lifts when `lifted` is set).
inline RingElem cup_pair(const ParabolicSpace& Q, const Matrix& phi, const Matrix& psi, bool lifted = false) {
  if (phi.cols() != 1 || psi.cols() != 1) fail(Errc::InvalidArgument, "cup_pair takes single classes");
  Matrix a = lifted ? phi : Q.lift_symbols(phi), b = lifted ? psi : Q.lift_symbols(psi);
  if (a.rows() != Q.ambient.ambient_size() || b.rows() != Q.ambient.ambient_size())
    fail(Errc::LiftFailure, "class does not belong to this parabolic space");
  return (a.transpose() * cup_form(Q.ambient) * b)(0, 0);
}

// ---------------------------------------------------------------------------------------------
// Slope decompositions and the control comparison

/// det(1 - T A) reduced to the trusted precision of the coefficient module and cut after the last
/// coefficient that is nonzero there; the result is incomplete when that happens before dim A.
inline CharSeries trusted_series(const Matrix& A, const CoeffModule& cf) {
  const Ring& R = cf.ring();
  if (A.rows() == 0) return CharSeries::one(R);
  CharSeries F = char_series(A);
  if (cf.exact) return F;
  Ring RP = Ring::make(R.p, cf.precision(), R.cap_w);
  CharSeries out{RP, {}, F.dim};
  for (auto& x : F.c) out.c.push_back(detail::recast(x, RP));
  int D = 0;
  for (int i = 0; i < static_cast<int>(out.c.size()); ++i)
    if (!out.c[i].is_zero()) D = i;
  out.c.resize(D + 1);
  return out;
}

struct SlopeSubspace {
  Rational h;
  CharSeries series;
  /// Slope <= h factor of series, in the working ring.
  std::vector<RingElem> Q;
  /// Columns span ker Q^*(A) in the coordinates A acts on.
  Matrix coords;
  /// A restricted to coords.
  Matrix op;
  int dim() const { return coords.cols(); }
};

/// Slope <= h part of an operator A given in coordinates over cf. When the trusted series ends at
/// a vertex, its remaining slopes are only known through `hidden_bound` (slopes that are not
/// visible exceed it); without such a bound that case is InsufficientDegree.
inline SlopeSubspace slope_subspace(const Matrix& A, const CoeffModule& cf, const Rational& h,
                                    std::optional<Rational> hidden_bound = std::nullopt) {
  const Ring& R = cf.ring();
  SlopeSubspace out{h, trusted_series(A, cf), {}, {}, {}};
  std::vector<RingElem> Qs;
  try {
    Qs = slope_factor(out.series, h).Q;
  } catch (const Error& e) {
    if (e.code() != Errc::InsufficientDegree || !hidden_bound || !(h < *hidden_bound)) throw;
    // Every visible slope is <= h and the rest exceed hidden_bound > h.
    for (auto& x : newton_polygon(out.series).slopes())
      if (h < x) throw;
    Qs = out.series.c;
  }
  for (auto& x : Qs) out.Q.push_back(detail::recast(x, R));
  const int deg = static_cast<int>(out.Q.size()) - 1;
  if (deg == 0) {
    out.coords = Matrix(A.rows(), 0, RingElem::zero(R));
    out.op = Matrix(0, 0, RingElem::zero(R));
    return out;
  }
  out.coords = riesz_projector(A, out.Q, cf.exact ? -1 : cf.precision() - 1);
  out.op = restrict_operator(A, out.coords);
  return out;
}

/// U_p-norm bound on the kernel of the specialization to V_k^vee: the least valuation of a column
/// of degree > k over the coset actions delta_t.
inline Rational kernel_norm_bound(const CosetTable& T, const CoeffModule& cf, i64 k) {
  int v = kInfVal;
  for (const IntMat2& d : hecke_cosets(T, HeckeOp::U())) {
    const Matrix& m = cf.act(d);
    for (int n = static_cast<int>(k) + 1; n < m.cols(); ++n)
      for (int j = 0; j < m.rows(); ++j)
        if (!m(j, n).is_zero()) v = std::min(v, m(j, n).valuation());
  }
  return Rational(v == kInfVal ? cf.precision() : v);
}

struct ControlReport {
  i64 k = 0;
  Rational h;
  int M = 0;
  Rational h_K, h_dagger, h_alg, h_k;
  int dim_overconvergent = 0, dim_algebraic = 0;
  int ambient_overconvergent = 0, ambient_algebraic = 0;
  int parabolic_overconvergent = 0, parabolic_algebraic = 0;
  NewtonPolygon polygon_overconvergent, polygon_algebraic;
  /// Valuation of the Gram determinant of the cup pairing on the algebraic slope <= h part.
  int gram_valuation = kInfVal;
  bool equal() const { return dim_overconvergent == dim_algebraic; }
};

/// Compares the slope <= h parabolic cohomology with coefficients in D_k (truncated at M) and in
/// V_k^vee, for an algebraic weight k over the scalar ring R.
inline ControlReport control_check(std::shared_ptr<const CosetTable> T, const Ring& R, i64 k, const Rational& h,
                                   int M) {
  if (k < 0) fail(Errc::NotDominant, "control needs an algebraic weight k >= 0");
  if (M <= k) fail(Errc::InvalidArgument, "truncation must exceed the weight");
  if (h < Rational(0)) fail(Errc::HNotAdmissible, "slopes are non-negative");
  Weight w = Weight::algebraic(R, {k});
  ControlReport rep;
  rep.k = k, rep.h = h, rep.M = M;

  CoeffModule alg = CoeffModule::algebraic(w), dist = CoeffModule::distributions(w, M);
  SymbSpace Sa = symb_space(T, alg), Sd = symb_space(T, dist);
  ParabolicSpace Pa = parabolic_quotient(Sa), Pd = parabolic_quotient(Sd);
  rep.ambient_algebraic = Sa.dim(), rep.ambient_overconvergent = Sd.dim();
  rep.parabolic_algebraic = Pa.dim(), rep.parabolic_overconvergent = Pd.dim();
  Matrix Ua = Pa.hecke(HeckeOp::U()), Ud = Pd.hecke(HeckeOp::U());
  CharSeries Fa = trusted_series(Ua, alg), Fd = trusted_series(Ud, dist);
  rep.polygon_algebraic = newton_polygon(Fa);
  rep.polygon_overconvergent = newton_polygon(Fd);

  rep.h_K = kernel_norm_bound(*T, dist, k);
  // A segment hidden past the last trusted vertex (D, v_D) reaches valuation >= M+1 at D+1.
  if (Fd.complete()) {
    rep.h_dagger = rep.h_K;
  } else {
    const int D = Fd.degree();
    rep.h_dagger = Rational(dist.precision() - Fd.c[D].valuation());
  }
  rep.h_alg = Rational(k + 1);
  for (auto& s : rep.polygon_algebraic.slopes())
    if (rep.h_alg < s) fail(Errc::PrecisionExhausted, "algebraic slopes exceed k+1");
  rep.h_k = std::min({rep.h_K, rep.h_dagger, rep.h_alg});
  if (!(h < rep.h_k)) fail(Errc::HNotAdmissible, "h is not below the control bound h_k");

  SlopeSubspace Ka = slope_subspace(Ua, alg, h);
  SlopeSubspace Kd = slope_subspace(Ud, dist, h, rep.h_k);
  rep.dim_algebraic = Ka.dim(), rep.dim_overconvergent = Kd.dim();
  if (Ka.dim() > 0) {
    Matrix L = Pa.lift_symbols(Ka.coords);
    rep.gram_valuation = det_valuation(L.transpose() * cup_form(Sa) * L);
  }
  return rep;
}

}  // namespace paddist
