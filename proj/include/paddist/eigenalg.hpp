#pragma once
// Finite flat algebras over a truncated weight disk A = Q_p[[w]]/(w^m): eigenalgebras generated by
// commuting operators, Noether different, Fitting ideal of differentials, the L-ideal of a pairing
// and ramification verdicts at points.

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "paddist/fredholm.hpp"

namespace paddist {

using Vec = std::vector<RingElem>;

namespace detail {

/// Nilpotency length m of w in the base (1 for a scalar field).
inline int wlen(const Ring& A) { return A.len(); }

/// w-adic order; kInfVal for zero.
inline int word(const RingElem& x) {
  for (int i = 0; i < x.len(); ++i)
    if (x.coeff(i) != 0) return i;
  return kInfVal;
}

/// x / w^j for x of order >= j.
inline RingElem wdiv(const RingElem& x, int j) {
  if (j == 0) return x;
  std::vector<i64> cs(x.len(), 0);
  for (int i = j; i < x.len(); ++i) cs[i - j] = x.coeff(i);
  return RingElem::from_coeffs(x.ring(), cs, x.denom_exp());
}

inline RingElem wpow(const Ring& A, int j) {
  if (j >= wlen(A)) return RingElem::zero(A);
  if (j == 0) return RingElem::one(A);
  std::vector<i64> cs(A.len(), 0);
  cs[j] = 1;
  return RingElem::from_coeffs(A, cs);
}

/// Digits below which a unit part is trusted to be nonzero.
inline int trusted_digits(const Ring& A) { return A.cap_p - std::max(1, A.cap_p / 3); }

/// a / b for ord(a) >= ord(b); the unit part of b must be p-adically significant.
inline RingElem wquot(const RingElem& a, const RingElem& b) {
  const int j = word(b);
  RingElem u = wdiv(b, j);
  if (u.constant_term().valuation() >= trusted_digits(b.ring()))
    fail(Errc::PrecisionExhausted, "pivot is indistinguishable from zero");
  return wdiv(a, j) * u.inv();
}

/// Drops w-coefficients whose p-adic valuation reaches the trusted digits (rounding noise).
inline RingElem denoise(const RingElem& x) {
  if (x.is_zero()) return x;
  const Ring& A = x.ring();
  const int t = trusted_digits(A), e = x.denom_exp();
  std::vector<i64> cs(x.len());
  bool changed = false;
  for (int i = 0; i < x.len(); ++i) {
    i64 c = x.coeff(i);
    int v = 0;
    for (i64 y = c; y != 0 && y % A.p == 0; y /= A.p) ++v;
    if (c != 0 && v - e >= t) c = 0, changed = true;
    cs[i] = c;
  }
  return changed ? RingElem::from_coeffs(A, cs, e) : x;
}
inline void denoise(std::vector<RingElem>& v) {
  for (auto& x : v) x = denoise(x);
}

inline bool vec_zero(const Vec& v) {
  for (auto& x : v)
    if (!x.is_zero()) return false;
  return true;
}
inline Vec axpy(const Vec& y, const RingElem& a, const Vec& x) {
  Vec out = y;
  for (size_t i = 0; i < x.size(); ++i)
    if (!x[i].is_zero()) out[i] -= a * x[i];
  return out;
}
inline Vec scale(const Vec& x, const RingElem& a) {
  Vec out = x;
  for (auto& e : out) e = e * a;
  return out;
}
inline Vec mat_vec(const Matrix& M, const Vec& x) {
  Vec out(M.rows(), RingElem::zero(x.empty() ? M(0, 0).ring() : x[0].ring()));
  for (int i = 0; i < M.rows(); ++i)
    for (int j = 0; j < M.cols(); ++j)
      if (!M(i, j).is_zero() && !x[j].is_zero()) out[i] += M(i, j) * x[j];
  return out;
}

}  // namespace detail

/// A-submodule of A^n in Howell form: at most one pivot per leading coordinate, closed under the
/// annihilator multiples w^{m - ord} g, so membership is decided by leading-term reduction.
class ASpan {
 public:
  ASpan(const Ring& A, int n) : A_(A), n_(n), piv_(n) {}

  const Ring& ring() const { return A_; }
  int ambient() const { return n_; }

  void add(Vec v) {
    std::vector<Vec> queue{std::move(v)};
    while (!queue.empty()) {
      Vec x = std::move(queue.back());
      queue.pop_back();
      detail::denoise(x);
      while (true) {
        int r = lead(x);
        if (r < 0) break;
        auto& slot = piv_[r];
        if (slot && detail::word((*slot)[r]) <= detail::word(x[r])) {
          x = detail::axpy(x, detail::wquot(x[r], (*slot)[r]), *slot);
          detail::denoise(x);
          continue;
        }
        if (detail::wdiv(x[r], detail::word(x[r])).constant_term().valuation() >= detail::trusted_digits(A_))
          fail(Errc::PrecisionExhausted, "leading entry is indistinguishable from zero");
        if (slot) queue.push_back(*slot);
        const int j = detail::word(x[r]);
        Vec ann = detail::scale(x, detail::wpow(A_, detail::wlen(A_) - j));
        slot = x;
        if (!detail::vec_zero(ann)) queue.push_back(std::move(ann));
        break;
      }
    }
  }

  Vec reduce(Vec x) const {
    detail::denoise(x);
    while (true) {
      int r = lead(x);
      if (r < 0) return x;
      const auto& slot = piv_[r];
      if (!slot || detail::word((*slot)[r]) > detail::word(x[r])) return x;
      x = detail::axpy(x, detail::wquot(x[r], (*slot)[r]), *slot);
      detail::denoise(x);
    }
  }
  bool contains(const Vec& x) const { return detail::vec_zero(reduce(x)); }
  bool contains(const ASpan& o) const {
    for (auto& g : o.gens())
      if (!contains(g)) return false;
    return true;
  }
  bool operator==(const ASpan& o) const { return contains(o) && o.contains(*this); }

  std::vector<Vec> gens() const {
    std::vector<Vec> out;
    for (auto& s : piv_)
      if (s) out.push_back(*s);
    return out;
  }
  /// Pivots with leading coordinate >= r (a Howell basis of the elements vanishing before r).
  std::vector<Vec> gens_from(int r) const {
    std::vector<Vec> out;
    for (int i = r; i < n_; ++i)
      if (piv_[i]) out.push_back(*piv_[i]);
    return out;
  }
  /// Length as an A-module (A itself has length m).
  int length() const {
    int l = 0;
    for (auto& s : piv_)
      if (s) l += detail::wlen(A_) - detail::word((*s)[lead(*s)]);
    return l;
  }
  bool is_zero() const { return length() == 0; }

 private:
  static int lead(const Vec& x) {
    for (size_t i = 0; i < x.size(); ++i)
      if (!x[i].is_zero()) return static_cast<int>(i);
    return -1;
  }
  Ring A_;
  int n_;
  std::vector<std::optional<Vec>> piv_;
};

/// Right kernel {x : M x = 0} over A, as generators.
inline std::vector<Vec> a_kernel(const Matrix& M) {
  const Ring& A = M(0, 0).ring();
  const int r = M.rows(), c = M.cols();
  ASpan S(A, r + c);
  for (int j = 0; j < c; ++j) {
    Vec v(r + c, RingElem::zero(A));
    for (int i = 0; i < r; ++i) v[i] = M(i, j);
    v[r + j] = RingElem::one(A);
    S.add(v);
  }
  std::vector<Vec> out;
  for (auto& g : S.gens_from(r)) out.emplace_back(g.begin() + r, g.end());
  return out;
}

// ---------------------------------------------------------------------------------------------
// Finite algebras

struct FiniteAlgebra {
  Ring base;
  int rank = 0;
  /// mult[i] is left multiplication by the basis element e_i (column j holds e_i e_j).
  std::vector<Matrix> mult;
  Vec one;
  /// Coordinates of the generating operators, when built from operators.
  std::vector<Vec> generators;
  /// The operators realising the basis (monomials in the generators).
  std::vector<Matrix> basis_ops;
  /// Flatness witness: coordinate carrying the unit pivot of each basis monomial.
  std::vector<int> flat_pivots;

  Vec zero_vec() const { return Vec(rank, RingElem::zero(base)); }
  Vec basis_vec(int i) const {
    Vec v = zero_vec();
    v[i] = RingElem::one(base);
    return v;
  }
  Vec scalar(const RingElem& a) const { return detail::scale(one, a); }
  Matrix left(const Vec& x) const {
    Matrix L = zero_matrix(rank, rank, base);
    for (int i = 0; i < rank; ++i)
      if (!x[i].is_zero())
        for (int r = 0; r < rank; ++r)
          for (int c = 0; c < rank; ++c) L(r, c) += x[i] * mult[i](r, c);
    return L;
  }
  Vec mul(const Vec& x, const Vec& y) const { return detail::mat_vec(left(x), y); }
  Vec add(const Vec& x, const Vec& y) const {
    Vec out = x;
    for (int i = 0; i < rank; ++i) out[i] += y[i];
    return out;
  }
  Vec sub(const Vec& x, const Vec& y) const { return detail::axpy(x, RingElem::one(base), y); }
  Vec power(Vec x, long long e) const {
    Vec r = one;
    while (e > 0) {
      if (e & 1) r = mul(r, x);
      x = mul(x, x);
      e >>= 1;
    }
    return r;
  }

  /// Associativity, commutativity and the identity, exactly.
  void validate() const {
    for (int i = 0; i < rank; ++i) {
      if (!detail::vec_zero(detail::axpy(mul(one, basis_vec(i)), RingElem::one(base), basis_vec(i))))
        fail(Errc::InvalidArgument, "identity element is wrong");
      for (int j = 0; j < rank; ++j) {
        Vec a = mul(basis_vec(i), basis_vec(j)), b = mul(basis_vec(j), basis_vec(i));
        if (!detail::vec_zero(sub(a, b))) fail(Errc::NonCommuting, "multiplication is not commutative");
        for (int k = 0; k < rank; ++k) {
          Vec l = mul(a, basis_vec(k)), r = mul(basis_vec(i), mul(basis_vec(j), basis_vec(k)));
          if (!detail::vec_zero(sub(l, r))) fail(Errc::InvalidArgument, "multiplication is not associative");
        }
      }
    }
  }
};

/// Algebra from structure constants: table[i][j] = coordinates of e_i e_j.
inline FiniteAlgebra algebra_from_table(const Ring& A, const std::vector<std::vector<Vec>>& table, const Vec& one) {
  FiniteAlgebra B;
  B.base = A;
  B.rank = static_cast<int>(table.size());
  for (int i = 0; i < B.rank; ++i) {
    Matrix L = zero_matrix(B.rank, B.rank, A);
    for (int j = 0; j < B.rank; ++j)
      for (int k = 0; k < B.rank; ++k) L(k, j) = table[i][j][k];
    B.mult.push_back(L);
  }
  B.one = one;
  B.validate();
  return B;
}

/// A[x]/(f) for monic f = x^n + f[n-1] x^{n-1} + ... + f[0], basis 1, x, ..., x^{n-1}.
inline FiniteAlgebra monogenic_algebra(const Ring& A, const Vec& f) {
  const int n = static_cast<int>(f.size());
  if (n == 0) fail(Errc::InvalidArgument, "polynomial must have positive degree");
  // Companion: x * x^j = x^{j+1}, x * x^{n-1} = -sum f_k x^k.
  Matrix X = zero_matrix(n, n, A);
  for (int j = 0; j + 1 < n; ++j) X(j + 1, j) = RingElem::one(A);
  for (int k = 0; k < n; ++k) X(k, n - 1) = -f[k];
  FiniteAlgebra B;
  B.base = A;
  B.rank = n;
  Matrix P = identity_matrix(n, A);
  for (int i = 0; i < n; ++i) B.mult.push_back(P), P = X * P;
  B.one = B.basis_vec(0);
  if (n > 1) B.generators.push_back(B.basis_vec(1));
  B.validate();
  return B;
}

/// A^n with the idempotent basis.
inline FiniteAlgebra product_algebra(const Ring& A, int n) {
  FiniteAlgebra B;
  B.base = A;
  B.rank = n;
  for (int i = 0; i < n; ++i) {
    Matrix L = zero_matrix(n, n, A);
    L(i, i) = RingElem::one(A);
    B.mult.push_back(L);
  }
  B.one = Vec(n, RingElem::one(A));
  B.validate();
  return B;
}

namespace detail {
inline Vec flatten(const Matrix& M) {
  Vec v;
  v.reserve(M.rows() * M.cols());
  for (int i = 0; i < M.rows(); ++i)
    for (int j = 0; j < M.cols(); ++j) v.push_back(M(i, j));
  return v;
}
inline bool negligible(const RingElem& x) {
  return x.is_zero() || x.valuation() >= trusted_digits(x.ring());
}
// Gaussian reduction against unit pivots, tracking coordinates in the accepted basis.
struct UnitBasis {
  std::vector<Vec> reduced;
  std::vector<int> pivot;
  std::vector<Vec> expr;  // reduced[k] as a combination of accepted vectors
  int size() const { return static_cast<int>(reduced.size()); }
  // Returns (residual, coordinates).
  std::pair<Vec, Vec> reduce(Vec v, const Ring& A, int cap) const {
    Vec coords(cap, RingElem::zero(A));
    for (int k = 0; k < size(); ++k) {
      const RingElem& x = v[pivot[k]];
      if (x.is_zero()) continue;
      RingElem q = x * reduced[k][pivot[k]].inv();
      v = axpy(v, q, reduced[k]);
      for (int i = 0; i < cap; ++i)
        if (!expr[k][i].is_zero()) coords[i] += q * expr[k][i];
    }
    return {v, coords};
  }
};
}  // namespace detail

/// The A-subalgebra of End(A^d) generated by commuting operators, with the monomials met in
/// breadth-first order as an A-basis. Fails with RankUnstable when a new monomial is neither in
/// the span nor contributes a unit pivot (the span is not visibly free at this precision).
inline FiniteAlgebra algebra_from_operators(const Ring& A, const std::vector<Matrix>& ops) {
  if (ops.empty()) fail(Errc::InvalidArgument, "need at least one operator");
  const int d = ops[0].rows();
  for (auto& o : ops)
    if (o.rows() != d || o.cols() != d) fail(Errc::InvalidArgument, "operators must be square of equal size");
  for (size_t i = 0; i < ops.size(); ++i)
    for (size_t j = i + 1; j < ops.size(); ++j) {
      Matrix C = ops[i] * ops[j] - ops[j] * ops[i];
      for (auto& x : C.data())
        if (!detail::negligible(x)) fail(Errc::NonCommuting, "operators do not commute");
    }
  const int cap = d * d;
  auto clean = [&](Vec v) {
    for (auto& x : v)
      if (detail::negligible(x)) x = RingElem::zero(A);
    return v;
  };
  detail::UnitBasis U;
  std::vector<Matrix> basis;
  auto try_add = [&](const Matrix& Mo) -> bool {
    auto [res, coords] = U.reduce(detail::flatten(Mo), A, cap);
    res = clean(res);
    if (detail::vec_zero(res)) return false;
    int best = -1;
    for (int i = 0; i < cap; ++i)
      if (!res[i].is_zero() && res[i].is_invertible() &&
          (best < 0 || res[i].constant_term().valuation() < res[best].constant_term().valuation()))
        best = i;
    if (best < 0 || detail::negligible(res[best].constant_term()))
      fail(Errc::RankUnstable, "operator span is not free at this precision");
    const int k = U.size();
    Vec e(cap, RingElem::zero(A));
    for (int i = 0; i < cap; ++i) e[i] = -coords[i];
    e[k] = RingElem::one(A);
    U.reduced.push_back(res), U.pivot.push_back(best), U.expr.push_back(e);
    basis.push_back(Mo);
    return true;
  };
  try_add(identity_matrix(d, A));
  for (size_t q = 0; q < basis.size(); ++q)
    for (auto& o : ops) try_add(basis[q] * o);

  const int n = U.size();
  auto coords_of = [&](const Matrix& Mo) {
    auto [res, coords] = U.reduce(detail::flatten(Mo), A, cap);
    if (!detail::vec_zero(clean(res))) fail(Errc::RankUnstable, "product leaves the operator span");
    Vec c(coords.begin(), coords.begin() + n);
    detail::denoise(c);
    return c;
  };
  FiniteAlgebra B;
  B.base = A;
  B.rank = n;
  B.basis_ops = basis;
  B.flat_pivots = U.pivot;
  for (int i = 0; i < n; ++i) {
    Matrix L = zero_matrix(n, n, A);
    for (int j = 0; j < n; ++j) {
      Vec c = coords_of(basis[i] * basis[j]);
      for (int k = 0; k < n; ++k) L(k, j) = c[k];
    }
    B.mult.push_back(L);
  }
  B.one = B.basis_vec(0);
  for (auto& o : ops) B.generators.push_back(coords_of(o));
  B.validate();
  return B;
}

/// Fiber of B at w = w0 (|w0| <= 1/p), as an algebra over Q_p.
inline FiniteAlgebra specialize_algebra(const FiniteAlgebra& B, const RingElem& w0) {
  if (!B.base.is_disk()) fail(Errc::RingMismatch, "algebra is already over a field");
  Ring S = B.base.scalar_ring();
  auto sp = [&](const RingElem& x) { return specialize(x, w0); };
  FiniteAlgebra F;
  F.base = S;
  F.rank = B.rank;
  for (auto& L : B.mult) {
    Matrix Ls = zero_matrix(B.rank, B.rank, S);
    for (int i = 0; i < B.rank; ++i)
      for (int j = 0; j < B.rank; ++j) Ls(i, j) = sp(L(i, j));
    F.mult.push_back(Ls);
  }
  for (auto& x : B.one) F.one.push_back(sp(x));
  for (auto& g : B.generators) {
    Vec v;
    for (auto& x : g) v.push_back(sp(x));
    F.generators.push_back(v);
  }
  F.flat_pivots = B.flat_pivots;
  return F;
}
inline Vec specialize_vec(const Vec& v, const RingElem& w0) {
  Vec out;
  for (auto& x : v) out.push_back(specialize(x, w0));
  return out;
}

// ---------------------------------------------------------------------------------------------
// Ideals

/// Ideal of B given by generators; its A-span is generated by g e_i.
struct Ideal {
  std::vector<Vec> gens;
};

inline ASpan ideal_span(const FiniteAlgebra& B, const Ideal& I) {
  ASpan S(B.base, B.rank);
  for (auto& g : I.gens)
    for (int i = 0; i < B.rank; ++i) S.add(B.mul(g, B.basis_vec(i)));
  return S;
}
inline bool ideal_contains(const FiniteAlgebra& B, const Ideal& I, const Ideal& J) {
  return ideal_span(B, I).contains(ideal_span(B, J));
}
inline bool ideal_equal(const FiniteAlgebra& B, const Ideal& I, const Ideal& J) {
  return ideal_span(B, I) == ideal_span(B, J);
}
inline bool is_unit_ideal(const FiniteAlgebra& B, const Ideal& I) { return ideal_span(B, I).contains(B.one); }
inline Ideal ideal_product(const FiniteAlgebra& B, const Ideal& I, const Ideal& J) {
  Ideal out;
  for (auto& a : I.gens)
    for (auto& b : J.gens) out.gens.push_back(B.mul(a, b));
  // Keep a Howell basis so powers stay small.
  ASpan S(B.base, B.rank);
  for (auto& g : out.gens) S.add(g);
  for (int i = 0; i < B.rank; ++i)
    for (auto& g : out.gens) S.add(B.mul(g, B.basis_vec(i)));
  return {S.gens()};
}

/// Noether different: image under multiplication of the annihilator of ker(B ⊗ B -> B).
inline Ideal noether_different(const FiniteAlgebra& B) {
  const int n = B.rank, n2 = n * n;
  const Ring& A = B.base;
  // (e_k ⊗ 1 - 1 ⊗ e_k) on the basis e_i ⊗ e_j (index i n + j), stacked over k.
  Matrix M = zero_matrix(n * n2, n2, A);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const int col = i * n + j;
        for (int a = 0; a < n; ++a) {
          M(k * n2 + a * n + j, col) += B.mult[k](a, i);
          M(k * n2 + i * n + a, col) -= B.mult[k](a, j);
        }
      }
  Ideal D;
  for (auto& t : a_kernel(M)) {
    Vec img = B.zero_vec();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (!t[i * n + j].is_zero()) img = B.add(img, detail::scale(B.mul(B.basis_vec(i), B.basis_vec(j)), t[i * n + j]));
    if (!detail::vec_zero(img)) D.gens.push_back(img);
  }
  return D;
}

/// B = A[b]/(f) for a primitive element b.
struct Presentation {
  Vec b;
  /// Monic f with f[i] the coefficient of X^i, f[n] = 1.
  Vec f;
};

inline Presentation find_presentation(const FiniteAlgebra& B) {
  const Ring& A = B.base;
  const int n = B.rank;
  std::vector<Vec> cands = B.generators;
  for (int i = 0; i < n; ++i) cands.push_back(B.basis_vec(i));
  const int base_count = static_cast<int>(cands.size());
  for (int i = 0; i < base_count; ++i)
    for (int j = i + 1; j < base_count; ++j)
      for (i64 c = 1; c <= 3; ++c) cands.push_back(B.add(cands[i], detail::scale(cands[j], RingElem::from_int(A, c))));
  for (auto& b : cands) {
    Matrix P = zero_matrix(n, n, A);
    Vec x = B.one;
    for (int j = 0; j < n; ++j, x = B.mul(x, b))
      for (int i = 0; i < n; ++i) P(i, j) = x[i];
    int v = det_valuation(P);
    if (v == kInfVal) continue;
    // The power basis is an A-basis exactly when det P is a unit of A.
    Elimination el = eliminate(P);
    bool unit = el.rank() == n;
    RingElem det = RingElem::one(A);
    if (unit) {
      CharSeries F = char_series(P);
      det = F.c.size() > static_cast<size_t>(n) ? F.c[n] : RingElem::zero(A);
      unit = det.is_invertible() && !detail::negligible(det.constant_term());
    }
    if (!unit) continue;
    CharSeries F = char_series(B.left(b));
    Vec f(n + 1, RingElem::zero(A));
    for (int i = 0; i <= n; ++i) f[n - i] = i < static_cast<int>(F.c.size()) ? F.c[i] : RingElem::zero(A);
    return {b, f};
  }
  fail(Errc::PresentationNotFound, "no primitive element among the tried candidates");
}

/// Fitt_0 of Omega^1_{B/A}: generated by f'(b) for a presentation A[b]/(f).
inline Ideal fitting_omega(const FiniteAlgebra& B) {
  Presentation P = find_presentation(B);
  const int n = B.rank;
  Vec acc = B.zero_vec(), x = B.one;
  for (int i = 1; i <= n; ++i) {
    acc = B.add(acc, detail::scale(x, P.f[i] * RingElem::from_int(B.base, i)));
    x = B.mul(x, P.b);
  }
  return {{acc}};
}

// ---------------------------------------------------------------------------------------------
// Points and local rings

/// A Q_p-point of B over w = 0: the character with chi(b) = lambda for a primitive element b.
struct Point {
  Presentation pres;
  RingElem lambda;
  /// Idempotent cutting out the local component at the point.
  Vec eta;
  /// Generators of the maximal ideal: w and b - lambda.
  Ideal m;
};

namespace detail {
inline RingElem eval_poly(const Vec& f, const RingElem& x) {
  RingElem acc = RingElem::zero(x.ring());
  for (int i = static_cast<int>(f.size()) - 1; i >= 0; --i) acc = acc * x + f[i];
  return acc;
}
}  // namespace detail

inline Point make_point(const FiniteAlgebra& B, const Presentation& P, const RingElem& lambda_in) {
  const Ring& A = B.base;
  RingElem lambda = lambda_in.embed(A);
  Vec f0;
  Ring S = A.scalar_ring();
  for (auto& c : P.f) f0.push_back(A.is_disk() ? specialize(c, RingElem::zero(S)) : c);
  RingElem r = detail::eval_poly(f0, A.is_disk() ? lambda.constant_term().embed(S) : lambda);
  if (!detail::negligible(r)) fail(Errc::InvalidArgument, "lambda is not a root of the reduced presentation");
  // E = (b - lambda)^K vanishes on the local component and is a unit elsewhere; with
  // det(X - L_E) = X^m g(X), eta = g(E) / g(0).
  const int n = B.rank;
  long long K = 1;
  while (K < static_cast<long long>(n) * detail::wlen(A)) K <<= 1;
  Vec E = B.power(B.sub(P.b, B.scalar(lambda)), K);
  CharSeries F = char_series(B.left(E));
  int top = 0;
  for (int i = 0; i < static_cast<int>(F.c.size()); ++i)
    if (!detail::negligible(F.c[i])) top = i;
  // g(X) = sum_{i <= top} c_i X^{top - i}.
  Vec g = B.zero_vec(), pw = B.one;
  for (int i = top; i >= 0; --i) {
    g = B.add(g, detail::scale(pw, F.c[i]));
    pw = B.mul(pw, E);
  }
  const RingElem& g0 = F.c[top];
  if (!g0.is_invertible()) fail(Errc::PrecisionExhausted, "local idempotent could not be separated");
  Vec eta = detail::scale(g, g0.inv());
  Vec b_minus = B.sub(P.b, B.scalar(lambda));
  Ideal m{{b_minus}};
  if (A.is_disk() && A.len() > 1) m.gens.push_back(B.scalar(RingElem::w(A)));
  return {P, lambda, eta, m};
}

/// Q_p-points of B over w = 0 whose residue value lies in Z_p, found by digit-wise root search
/// of the reduced presentation polynomial (cluster representatives are the exact small roots).
inline std::vector<Point> enumerate_points(const FiniteAlgebra& B, int digits = 6) {
  const Ring& A = B.base;
  Presentation P = find_presentation(B);
  Ring S = A.scalar_ring();
  Vec f0;
  for (auto& c : P.f) f0.push_back(A.is_disk() ? specialize(c, RingElem::zero(S)) : c);
  const i64 p = A.p;
  std::vector<i64> cur{0};
  i64 pk = 1;
  for (int k = 0; k < digits; ++k, pk *= p) {
    std::vector<i64> nxt;
    for (i64 r : cur)
      for (i64 t = 0; t < p; ++t) {
        i64 x = r + pk * t;
        RingElem v = detail::eval_poly(f0, RingElem::from_int(S, x));
        if (v.is_zero() || v.valuation() >= k + 1) nxt.push_back(x);
      }
    cur.swap(nxt);
    if (cur.size() > 4096) fail(Errc::PrecisionExhausted, "root search does not separate");
  }
  // Symmetric representatives, exact roots preferred, one per residue cluster.
  std::vector<i64> roots;
  const i64 pd = pk;
  for (i64 r : cur) {
    i64 s = r > pd / 2 ? r - pd : r;
    if (!detail::negligible(detail::eval_poly(f0, RingElem::from_int(S, s)))) continue;
    roots.push_back(s);
  }
  std::sort(roots.begin(), roots.end(), [](i64 a, i64 b) { return std::abs(a) != std::abs(b) ? std::abs(a) < std::abs(b) : a < b; });
  std::vector<Point> out;
  for (i64 r : roots) {
    Point pt = make_point(B, P, RingElem::from_int(A, r));
    bool dup = false;
    for (auto& q : out) dup = dup || detail::vec_zero(B.sub(q.eta, pt.eta));
    if (!dup) out.push_back(pt);
  }
  return out;
}

/// eta * I as an ideal (the localisation of I at the point, inside eta B).
inline Ideal localize(const FiniteAlgebra& B, const Point& x, const Ideal& I) {
  Ideal out;
  for (auto& g : I.gens) out.gens.push_back(B.mul(x.eta, g));
  return out;
}

/// Largest e with eta g in eta m^e (kInfVal when eta g = 0).
inline int order_at(const FiniteAlgebra& B, const Point& x, const Ideal& I) {
  Ideal loc = localize(B, x, I);
  if (ideal_span(B, loc).is_zero()) return kInfVal;
  Ideal mloc = localize(B, x, x.m);
  Ideal pw{{x.eta}};
  for (int e = 0;; ++e) {
    if (!ideal_contains(B, pw, loc)) return e - 1;
    pw = ideal_product(B, pw, mloc);
    if (e > B.rank * detail::wlen(B.base) + 1) fail(Errc::PrecisionExhausted, "order does not stabilise");
  }
}
inline int order_at(const FiniteAlgebra& B, const Point& x, const Vec& g) { return order_at(B, x, Ideal{{g}}); }

/// e(x) = max {e : Fitt_x contained in m_x^e}.
inline int e_of_x(const FiniteAlgebra& B, const Point& x) { return order_at(B, x, fitting_omega(B)); }

/// A-rank of the local component.
inline int local_rank(const FiniteAlgebra& B, const Point& x) {
  return ideal_span(B, Ideal{{x.eta}}).length() / detail::wlen(B.base);
}
/// Unramified at x: the local component is A itself.
inline bool is_etale_at(const FiniteAlgebra& B, const Point& x) { return local_rank(B, x) == 1; }
/// The maximal ideal at x is locally principal (x is a smooth point of the truncated curve).
inline bool is_smooth_at(const FiniteAlgebra& B, const Point& x) {
  Ideal mloc = localize(B, x, x.m);
  for (auto& g : mloc.gens)
    if (ideal_equal(B, Ideal{{g}}, mloc)) return true;
  return false;
}

// ---------------------------------------------------------------------------------------------
// Paired modules and the L-ideal

/// beta(m, n) = m^T gram n on A-free modules M, N with B acting through act_M, act_N (one matrix
/// per basis element of B).
struct PairedModule {
  FiniteAlgebra algebra;
  std::vector<Matrix> act_M, act_N;
  Matrix gram;

  void validate() const {
    const int n = algebra.rank;
    if (static_cast<int>(act_M.size()) != n || static_cast<int>(act_N.size()) != n)
      fail(Errc::InvalidArgument, "one action matrix per algebra basis element");
    if (gram.rows() != act_M[0].rows() || gram.cols() != act_N[0].rows())
      fail(Errc::InvalidArgument, "Gram shape does not match the modules");
    for (int i = 0; i < n; ++i) {
      Matrix L = act_M[i].transpose() * gram, R = gram * act_N[i];
      for (int r = 0; r < L.rows(); ++r)
        for (int c = 0; c < L.cols(); ++c)
          if (!detail::negligible(L(r, c) - R(r, c))) fail(Errc::InvalidArgument, "pairing is not B-equivariant");
    }
  }
};

/// B acting on itself, paired by beta(u, v) = lambda(u v) for an A-linear form lambda.
inline PairedModule regular_paired_module(const FiniteAlgebra& B, const Vec& lambda) {
  const int n = B.rank;
  Matrix G = zero_matrix(n, n, B.base);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      Vec e = B.mul(B.basis_vec(i), B.basis_vec(j));
      for (int k = 0; k < n; ++k) G(i, j) += lambda[k] * e[k];
    }
  PairedModule pm{B, B.mult, B.mult, G};
  pm.validate();
  return pm;
}

struct LIdeal {
  Vec generator;
  Vec m_tilde, n_tilde;
};

namespace detail {
// (X ⊗ B)[m] for X free of rank r with B acting through act, and a single B-generator of it.
inline Vec annihilated_generator(const FiniteAlgebra& B, const std::vector<Matrix>& act) {
  const Ring& A = B.base;
  const int n = B.rank, r = act[0].rows(), rn = r * n;
  Matrix M = zero_matrix(n * rn, rn, A);
  for (int k = 0; k < n; ++k)
    for (int a = 0; a < r; ++a)
      for (int i = 0; i < n; ++i) {
        const int col = a * n + i;
        for (int b = 0; b < r; ++b) M(k * rn + b * n + i, col) += act[k](b, a);
        for (int j = 0; j < n; ++j) M(k * rn + a * n + j, col) -= B.mult[k](j, i);
      }
  std::vector<Vec> K = a_kernel(M);
  ASpan KS(A, rn);
  for (auto& v : K) KS.add(v);
  auto b_span = [&](const Vec& v) {
    ASpan S(A, rn);
    for (int k = 0; k < n; ++k) {
      Vec w(rn, RingElem::zero(A));
      for (int a = 0; a < r; ++a)
        for (int j = 0; j < n; ++j)
          for (int i = 0; i < n; ++i)
            if (!v[a * n + i].is_zero()) w[a * n + j] += B.mult[k](j, i) * v[a * n + i];
      S.add(w);
    }
    return S;
  };
  std::vector<Vec> cands = KS.gens();
  const size_t g = cands.size();
  for (size_t i = 0; i < g; ++i)
    for (size_t j = i + 1; j < g && cands.size() < 64; ++j) {
      Vec s = cands[i];
      for (size_t t = 0; t < s.size(); ++t) s[t] += cands[j][t];
      cands.push_back(s);
    }
  for (auto& v : cands) {
    ASpan S = b_span(v);
    if (S == KS && S.length() == n * wlen(A)) return v;
  }
  fail(Errc::NotRankOne, "annihilated submodule is not free of rank one over B");
}
}  // namespace detail

/// Generator beta_B(m~, n~) of the L-ideal, for m~, n~ generating (M ⊗ B)[m], (N ⊗ B)[m].
inline LIdeal l_ideal(const PairedModule& pm) {
  pm.validate();
  const FiniteAlgebra& B = pm.algebra;
  const int n = B.rank, r = pm.gram.rows(), s = pm.gram.cols();
  Vec mt = detail::annihilated_generator(B, pm.act_M);
  Vec nt = detail::annihilated_generator(B, pm.act_N);
  Vec L = B.zero_vec();
  for (int a = 0; a < r; ++a)
    for (int i = 0; i < n; ++i) {
      if (mt[a * n + i].is_zero()) continue;
      for (int c = 0; c < s; ++c) {
        if (pm.gram(a, c).is_zero()) continue;
        for (int j = 0; j < n; ++j) {
          if (nt[c * n + j].is_zero()) continue;
          RingElem coef = mt[a * n + i] * nt[c * n + j] * pm.gram(a, c);
          L = B.add(L, detail::scale(B.mul(B.basis_vec(i), B.basis_vec(j)), coef));
        }
      }
    }
  return {L, mt, nt};
}

struct RamificationReport {
  Vec ladj;
  bool ramified = false;
  int ord = 0;
  int e = 0;
  bool smooth = false;
  bool different_in_max = false;
  bool fitting_in_max = false;
  bool etale = false;
};

/// Verdict at a point over w = 0. The pairing must be nondegenerate on the fiber.
inline RamificationReport ramification_report(const PairedModule& pm, const Point& x) {
  const FiniteAlgebra& B = pm.algebra;
  if (pm.gram.rows() != pm.gram.cols()) fail(Errc::DegeneratePairing, "Gram matrix is not square");
  CharSeries F = char_series(pm.gram);
  const int r = pm.gram.rows();
  RingElem det = static_cast<int>(F.c.size()) > r ? F.c[r] : RingElem::zero(B.base);
  if (!det.is_invertible() || detail::negligible(det.constant_term()))
    fail(Errc::DegeneratePairing, "pairing degenerates on the fiber");
  RamificationReport out;
  out.ladj = l_ideal(pm).generator;
  out.ord = order_at(B, x, out.ladj);
  out.ramified = out.ord >= 1;
  out.e = e_of_x(B, x);
  out.smooth = is_smooth_at(B, x);
  out.etale = is_etale_at(B, x);
  out.different_in_max = order_at(B, x, noether_different(B)) >= 1;
  out.fitting_in_max = out.e >= 1;
  if (out.ramified != out.different_in_max)
    fail(Errc::PrecisionExhausted, "L-ideal vanishing disagrees with the different");
  if (out.smooth && out.ord != out.e) fail(Errc::PrecisionExhausted, "order of L^adj differs from e at a smooth point");
  return out;
}

// ---------------------------------------------------------------------------------------------
// Clean neighbourhoods

struct SlopeIdempotents {
  /// Projectors onto ker Q*(U) and ker S*(U) for the slope factorisation det(1 - TU) = Q S.
  Matrix eta_small, eta_large;
  SlopeFactorization factors;
};

inline SlopeIdempotents slope_idempotents(const Matrix& U, const Rational& h) {
  const Ring& R = U(0, 0).ring();
  const int n = U.rows();
  CharSeries F = char_series(U);
  SlopeFactorization sf = slope_factor(F, h);
  Matrix K1 = sf.Q.size() > 1 ? riesz_projector(U, sf.Q) : zero_matrix(n, 0, R);
  Matrix K2 = sf.S.size() > 1 ? riesz_projector(U, sf.S) : zero_matrix(n, 0, R);
  if (K1.cols() + K2.cols() != n) fail(Errc::RankMismatch, "slope summands do not span");
  Matrix P = zero_matrix(n, n, R);
  P.set_block(0, 0, K1);
  P.set_block(0, K1.cols(), K2);
  Matrix Pinv = solve(P, identity_matrix(n, R));
  Matrix D1 = zero_matrix(n, n, R), D2 = zero_matrix(n, n, R);
  for (int i = 0; i < n; ++i) (i < K1.cols() ? D1 : D2)(i, i) = RingElem::one(R);
  return {P * D1 * Pinv, P * D2 * Pinv, sf};
}

}  // namespace paddist
