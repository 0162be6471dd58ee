#pragma once
// GSp_2g over bounded-precision p-adic rings: similitude certificates, strict Iwahori
// factorization, the monoid Xi and its sharp involution, and the manifold T_0 with its chart.

#include <random>
#include <vector>

#include "paddist/matrix.hpp"

namespace paddist {

/// Symplectic form J = [[0, -1anti], [1anti, 0]].
inline Matrix symplectic_form(int g, const Ring& R) {
  Matrix J = zero_matrix(2 * g, 2 * g, R);
  for (int i = 0; i < g; ++i) {
    J(i, 2 * g - 1 - i) = -RingElem::one(R);
    J(g + i, g - 1 - i) = RingElem::one(R);
  }
  return J;
}

namespace detail {
inline bool is_symmetric(const Matrix& m, int digits) { return matrices_agree(m, m.transpose(), digits); }
inline int full_precision(const Matrix& m) {
  int d = kInfVal;
  for (auto& x : m.data()) d = std::min(d, x.precision());
  return d;
}
}  // namespace detail

/// Returns the similitude s with tM J M = s J. The three block identities are validated as well.
inline RingElem symplectic_check(const Matrix& M) {
  const int n = M.rows();
  if (n != M.cols() || n % 2 != 0 || n == 0) fail(Errc::NotSymplectic, "matrix must be square of even size");
  const int g = n / 2;
  const Ring& R = M(0, 0).ring();
  const int digits = detail::full_precision(M);
  Matrix E = anti_identity(g, RingElem::zero(R), RingElem::one(R));
  Matrix a = M.block(0, 0, g, g), b = M.block(0, g, g, g), c = M.block(g, 0, g, g), d = M.block(g, g, g, g);
  if (!detail::is_symmetric(a.transpose() * E * c, digits) || !detail::is_symmetric(b.transpose() * E * d, digits))
    fail(Errc::NotSymplectic, "off-diagonal block identities fail");
  Matrix mid = a.transpose() * E * d - c.transpose() * E * b;
  RingElem s = mid(0, g - 1);
  if (!matrices_agree(mid, E.scaled(s), digits)) fail(Errc::NotSymplectic, "no scalar similitude");
  Matrix J = symplectic_form(g, R);
  if (!matrices_agree(M.transpose() * J * M, J.scaled(s), digits)) fail(Errc::NotSymplectic, "tMJM != sJ");
  if (!s.is_invertible()) fail(Errc::NotSymplectic, "similitude vanishes");
  return s;
}

struct IwahoriFactorization {
  Matrix u_minus, t, u_plus;
};

namespace detail {
inline IwahoriFactorization lu_to_iwahori(const Matrix& M) {
  auto lu = lu_unit(M, Errc::NonUnitPivot);
  const Ring& R = M(0, 0).ring();
  Matrix t = zero_matrix(M.rows(), M.rows(), R);
  for (int i = 0; i < M.rows(); ++i) t(i, i) = lu.D[i];
  return {lu.L, t, lu.U};
}
inline bool integral(const Matrix& M) {
  for (auto& x : M.data())
    if (x.denom_exp() > 0) return false;
  return true;
}
}  // namespace detail

/// Membership in the strict Iwahori of GL_g: integral with diagonal unit reduction mod p.
inline bool is_strict_iwahori_gl(const Matrix& M) {
  if (M.rows() != M.cols() || !detail::integral(M)) return false;
  for (int i = 0; i < M.rows(); ++i)
    for (int j = 0; j < M.cols(); ++j) {
      int v = M(i, j).valuation();
      if (i == j ? v != 0 : v < 1) return false;
    }
  return true;
}

/// Membership in the strict Iwahori of GSp_2g: symplectic, and mod p block upper triangular
/// with diagonal blocks diagonal.
inline bool is_strict_iwahori_gsp(const Matrix& M) {
  if (M.rows() != M.cols() || M.rows() % 2 || !detail::integral(M)) return false;
  const int g = M.rows() / 2;
  for (int i = 0; i < 2 * g; ++i)
    for (int j = 0; j < 2 * g; ++j) {
      bool same_block = (i < g) == (j < g);
      int v = M(i, j).valuation();
      if (i == j && v != 0) return false;
      if (same_block && i != j && v < 1) return false;
      if (i >= g && j < g && v < 1) return false;
    }
  try {
    symplectic_check(M);
  } catch (const Error&) {
    return false;
  }
  return true;
}

/// M = u_minus * t * u_plus for M in the strict Iwahori of GL_g (square of size g) or GSp_2g.
inline IwahoriFactorization strict_iwahori_factor_gl(const Matrix& M) {
  if (!is_strict_iwahori_gl(M)) fail(Errc::NotStrictIwahori, "congruence condition fails");
  return detail::lu_to_iwahori(M);
}
inline IwahoriFactorization strict_iwahori_factor_gsp(const Matrix& M) {
  if (!is_strict_iwahori_gsp(M)) fail(Errc::NotStrictIwahori, "congruence condition fails");
  return detail::lu_to_iwahori(M);
}

/// Element of Xi, stored as blocks (A, B, Ct, D); the matrix is [[A, B], [p*Ct, D]].
struct Xi {
  Matrix A, B, Ct, D;

  int g() const { return A.rows(); }
  const Ring& ring() const { return A(0, 0).ring(); }

  static Xi identity(int g, const Ring& R) {
    return {identity_matrix(g, R), zero_matrix(g, g, R), zero_matrix(g, g, R), identity_matrix(g, R)};
  }
  /// From a full 2g x 2g matrix; the lower-left block loses one p-adic digit when divided by p.
  static Xi from_matrix(const Matrix& M) {
    if (M.rows() != M.cols() || M.rows() % 2) fail(Errc::NotInXi, "shape");
    const int g = M.rows() / 2;
    Matrix C = M.block(g, 0, g, g);
    for (auto& x : C.data())
      if (x.valuation() < 1) fail(Errc::NotInXi, "lower-left block not divisible by p");
    Xi x{M.block(0, 0, g, g), M.block(0, g, g, g), C.mul_p(-1), M.block(g, g, g, g)};
    x.validate(1);
    return x;
  }
  Matrix to_matrix() const {
    const int n = g();
    Matrix M = zero_matrix(2 * n, 2 * n, ring());
    M.set_block(0, 0, A);
    M.set_block(0, n, B);
    M.set_block(n, 0, Ct.mul_p(1));
    M.set_block(n, n, D);
    return M;
  }
  /// Checks integrality, the Iwahori condition on A and the scaled symplectic identities.
  /// `slack` digits of the top precision are not trusted (e.g. after dividing a block by p).
  void validate(int slack = 0) const {
    if (!detail::integral(A) || !detail::integral(B) || !detail::integral(Ct) || !detail::integral(D))
      fail(Errc::NotInXi, "blocks must be integral");
    if (!is_strict_iwahori_gl(A)) fail(Errc::NotInXi, "upper-left block not in the strict Iwahori");
    (void)similitude(slack);
  }
  RingElem similitude(int slack = 0) const {
    const int n = g();
    const Ring& R = ring();
    Matrix E = anti_identity(n, RingElem::zero(R), RingElem::one(R));
    int digits = std::min({detail::full_precision(A), detail::full_precision(B), detail::full_precision(Ct),
                           detail::full_precision(D)}) - slack;
    if (!detail::is_symmetric(A.transpose() * E * Ct, digits) || !detail::is_symmetric(B.transpose() * E * D, digits))
      fail(Errc::NotInXi, "not symplectic");
    Matrix mid = A.transpose() * E * D - (Ct.transpose() * E * B).mul_p(1);
    RingElem s = mid(0, n - 1);
    if (!matrices_agree(mid, E.scaled(s), digits) || !s.is_invertible()) fail(Errc::NotInXi, "not symplectic");
    return s;
  }
  Xi operator*(const Xi& o) const {
    return {A * o.A + (B * o.Ct).mul_p(1), A * o.B + B * o.D, Ct * o.A + D * o.Ct, (Ct * o.B).mul_p(1) + D * o.D};
  }
  bool agrees_with(const Xi& o, int digits) const {
    return matrices_agree(A, o.A, digits) && matrices_agree(B, o.B, digits) && matrices_agree(Ct, o.Ct, digits) &&
           matrices_agree(D, o.D, digits);
  }
};

/// alpha^sharp = d_p tα d_p^{-1}; exact in the scaled representation.
inline Xi sharp_involution(const Xi& a) {
  a.validate();
  return {a.A.transpose(), a.Ct.transpose(), a.B.transpose(), a.D.transpose()};
}

/// d_p tM d_p^{-1} for an arbitrary 2g x 2g matrix (denominators allowed).
inline Matrix sharp_matrix(const Matrix& M) {
  const int g = M.rows() / 2;
  Matrix T = M.transpose();
  for (int i = 0; i < 2 * g; ++i)
    for (int j = 0; j < 2 * g; ++j) {
      int k = (i >= g ? 1 : 0) - (j >= g ? 1 : 0);
      if (k != 0) T(i, j) = T(i, j).mul_p(k);
    }
  return T;
}

/// u_{p,i} as a full diagonal matrix.
inline Matrix upi_matrix(int g, int i, const Ring& R) {
  if (i < 0 || i >= g) fail(Errc::IndexOutOfRange, "u_{p,i} index");
  Matrix M = zero_matrix(2 * g, 2 * g, R);
  std::vector<int> e(2 * g);
  for (int r = 0; r < g; ++r) {
    if (i == 0) {
      e[r] = 0;
      e[g + r] = 1;
    } else {
      e[r] = r < g - i ? 0 : 1;
      e[g + r] = r < i ? 1 : 2;
    }
  }
  for (int r = 0; r < 2 * g; ++r) M(r, r) = RingElem::one(R).mul_p(e[r]);
  return M;
}

/// p-exponents of the diagonal blocks (u_square, u_blacksquare) of u_{p,i}.
inline std::pair<std::vector<int>, std::vector<int>> upi_exponents(int g, int i) {
  if (i < 0 || i >= g) fail(Errc::IndexOutOfRange, "u_{p,i} index");
  std::vector<int> sq(g), bl(g);
  for (int r = 0; r < g; ++r) {
    sq[r] = (i == 0) ? 0 : (r < g - i ? 0 : 1);
    bl[r] = (i == 0) ? 1 : (r < i ? 1 : 2);
  }
  return {sq, bl};
}

/// Chart coordinates of T_00: strict-lower entries of gamma over p, then the upper triangle of
/// S/p = tL 1anti (upsilon/p), both row-major.
template <class T>
struct ChartCoords {
  std::vector<T> lower;
  std::vector<T> sym;
  std::vector<T> flat() const {
    std::vector<T> f = lower;
    f.insert(f.end(), sym.begin(), sym.end());
    return f;
  }
  static ChartCoords from_flat(int g, const std::vector<T>& f) {
    const int nl = g * (g - 1) / 2;
    if (static_cast<int>(f.size()) != g * g) fail(Errc::InvalidArgument, "chart needs g^2 coordinates");
    return {std::vector<T>(f.begin(), f.begin() + nl), std::vector<T>(f.begin() + nl, f.end())};
  }
};

inline int chart_dim(int g) { return g * g; }
inline std::vector<std::pair<int, int>> lower_positions(int g) {
  std::vector<std::pair<int, int>> v;
  for (int r = 0; r < g; ++r)
    for (int s = 0; s < r; ++s) v.push_back({r, s});
  return v;
}
inline std::vector<std::pair<int, int>> sym_positions(int g) {
  std::vector<std::pair<int, int>> v;
  for (int r = 0; r < g; ++r)
    for (int s = r; s < g; ++s) v.push_back({r, s});
  return v;
}

/// Point of T_0 written as (gamma, upsilon~) with upsilon = p * upsilon~.
template <class T>
struct T0PointT {
  Mat<T> gamma;
  Mat<T> ups;  // upsilon / p

  int g() const { return gamma.rows(); }
};
using T0Point = T0PointT<RingElem>;

template <class T>
struct NormalFormT {
  ChartCoords<T> chart;
  Mat<T> b;             // upper triangular in B+_{GL_g,0}
  std::vector<T> diag;  // diagonal of b
};

namespace detail {
template <class T>
Mat<T> anti_like(int g, const T& proto) {
  T z = const_like(proto, RingElem::zero(proto.ring()));
  T o = const_like(proto, RingElem::one(proto.ring()));
  return anti_identity(g, z, o);
}
}  // namespace detail

/// (chart, b) with x = (chart point) * b.
template <class T>
NormalFormT<T> t0_normal_form(const T0PointT<T>& x) {
  const int g = x.g();
  auto lu = lu_unit(x.gamma, Errc::NotInT0);
  Mat<T> b = lu.U;
  for (int r = 0; r < g; ++r)
    for (int c = 0; c < g; ++c) b(r, c) = lu.D[r] * lu.U(r, c);
  Mat<T> binv = unit_lu_inverse(b, Errc::NotInT0);
  Mat<T> ups0 = x.ups * binv;
  Mat<T> E = detail::anti_like(g, x.gamma(0, 0));
  Mat<T> Sig = lu.L.transpose() * E * ups0;
  ChartCoords<T> ch;
  for (auto [r, s] : lower_positions(g)) ch.lower.push_back(mul_p(lu.L(r, s), -1));
  for (auto [r, s] : sym_positions(g)) ch.sym.push_back(Sig(r, s));
  return {ch, b, lu.D};
}

/// Normalized point of T_00 with the given chart.
template <class T>
T0PointT<T> t00_point(int g, const ChartCoords<T>& ch, const T& proto) {
  T z = const_like(proto, RingElem::zero(proto.ring()));
  T o = const_like(proto, RingElem::one(proto.ring()));
  Mat<T> L = Mat<T>::identity(g, z, o);
  auto lp = lower_positions(g);
  for (size_t k = 0; k < lp.size(); ++k) L(lp[k].first, lp[k].second) = mul_p(ch.lower[k], 1);
  Mat<T> Sig(g, g, z);
  auto sp = sym_positions(g);
  for (size_t k = 0; k < sp.size(); ++k) {
    Sig(sp[k].first, sp[k].second) = ch.sym[k];
    Sig(sp[k].second, sp[k].first) = ch.sym[k];
  }
  Mat<T> E = anti_identity(g, z, o);
  Mat<T> ups = E * unipotent_lower_inverse(L).transpose() * Sig;
  return {L, ups};
}

template <class T>
T0PointT<T> recompose(const NormalFormT<T>& nf, int g) {
  T0PointT<T> x = t00_point(g, nf.chart, nf.b(0, 0));
  return {x.gamma * nf.b, x.ups * nf.b};
}

/// Validates a scalar T_0 point.
inline void check_t0(const T0Point& x) {
  const int g = x.g();
  if (!is_strict_iwahori_gl(x.gamma)) fail(Errc::NotInT0, "gamma not in the strict Iwahori of GL_g");
  if (!detail::integral(x.ups)) fail(Errc::NotInT0, "upsilon must be divisible by p");
  const Ring& R = x.gamma(0, 0).ring();
  Matrix E = anti_identity(g, RingElem::zero(R), RingElem::one(R));
  if (!detail::is_symmetric(x.gamma.transpose() * E * x.ups, R.cap_p - 1))
    fail(Errc::NotInT0, "symmetry condition fails");
}

inline bool is_normalized(const T0Point& x) {
  const int g = x.g();
  for (int r = 0; r < g; ++r)
    for (int c = 0; c < g; ++c) {
      const RingElem& e = x.gamma(r, c);
      if (r == c && e != RingElem::one(e.ring())) return false;
      if (r < c && !e.is_zero()) return false;
      if (r > c && e.valuation() < 1) return false;
    }
  return true;
}

/// Left action of Xi: (A gamma + B upsilon, C gamma + D upsilon).
template <class T>
T0PointT<T> act_xi(const Xi& a, const T0PointT<T>& x) {
  const T& proto = x.gamma(0, 0);
  Mat<T> A = lift_matrix(a.A, proto), B = lift_matrix(a.B, proto), C = lift_matrix(a.Ct, proto),
         D = lift_matrix(a.D, proto);
  return {A * x.gamma + (B * x.ups).mul_p(1), C * x.gamma + D * x.ups};
}

/// Right action of beta in B+_{GL_g,0}.
template <class T>
T0PointT<T> act_b_right(const Matrix& beta, const T0PointT<T>& x) {
  const int g = x.g();
  for (int r = 0; r < g; ++r)
    for (int c = 0; c < g; ++c) {
      int v = beta(r, c).valuation();
      if ((r == c && v != 0) || (r > c && !beta(r, c).is_zero()) || (r < c && v < 1))
        fail(Errc::InvalidArgument, "beta is not in B+_{GL_g,0}");
    }
  Mat<T> Bt = lift_matrix(beta, x.gamma(0, 0));
  return {x.gamma * Bt, x.ups * Bt};
}

/// u_{p,i} on T_0: conjugate the normalized representative and reapply the B+ part.
template <class T>
T0PointT<T> act_upi(int i, const T0PointT<T>& x) {
  const int g = x.g();
  auto [sq, bl] = upi_exponents(g, i);
  auto nf = t0_normal_form(x);
  T0PointT<T> x0 = t00_point(g, nf.chart, x.gamma(0, 0));
  for (int r = 0; r < g; ++r)
    for (int c = 0; c < g; ++c) {
      x0.gamma(r, c) = mul_p(x0.gamma(r, c), sq[r] - sq[c]);
      x0.ups(r, c) = mul_p(x0.ups(r, c), bl[r] - sq[c]);
    }
  return {x0.gamma * nf.b, x0.ups * nf.b};
}

/// Multipliers (as p-exponents) by which u_{p,i} scales each chart coordinate.
inline std::vector<int> upi_chart_exponents(int g, int i) {
  auto [sq, bl] = upi_exponents(g, i);
  (void)bl;
  int e = (i == 0) ? 1 : 2;
  std::vector<int> out;
  for (auto [r, s] : lower_positions(g)) out.push_back(sq[r] - sq[s]);
  for (auto [r, s] : sym_positions(g)) out.push_back(e - sq[r] - sq[s]);
  return out;
}

namespace detail {
inline i64 rand_res(std::mt19937_64& rng, const Ring& R) { return static_cast<i64>(rng() % static_cast<uint64_t>(R.mod)); }
inline Matrix random_iwahori_gl(int g, const Ring& R, std::mt19937_64& rng) {
  Matrix m = zero_matrix(g, g, R);
  for (int r = 0; r < g; ++r)
    for (int c = 0; c < g; ++c) {
      i64 v = rand_res(rng, R);
      if (r == c) {
        if (v % R.p == 0) v += 1;
        m(r, c) = RingElem::from_int(R, v);
      } else {
        m(r, c) = RingElem::from_int(R, v).mul_p(1);
      }
    }
  return m;
}
inline Matrix random_symmetric(int g, const Ring& R, std::mt19937_64& rng) {
  Matrix m = zero_matrix(g, g, R);
  for (int r = 0; r < g; ++r)
    for (int c = r; c < g; ++c) m(r, c) = m(c, r) = RingElem::from_int(R, rand_res(rng, R));
  return m;
}
}  // namespace detail

/// Random element of Xi as a product of generators: Levi elements, upper and lower unipotents
/// with symmetric blocks, and diag(1, s) similitude twists.
inline Xi random_xi(int g, const Ring& R, std::mt19937_64& rng, int factors = 4) {
  Matrix E = anti_identity(g, RingElem::zero(R), RingElem::one(R));
  Xi acc = Xi::identity(g, R);
  for (int f = 0; f < factors; ++f) {
    Xi x = Xi::identity(g, R);
    switch (rng() % 4) {
      case 0: {
        Matrix gam = detail::random_iwahori_gl(g, R, rng);
        Matrix ginv = unit_lu_inverse(gam, Errc::NonUnitPivot);
        x.A = gam;
        x.D = E * ginv.transpose() * E;
        break;
      }
      case 1: x.B = E * detail::random_symmetric(g, R, rng); break;
      case 2: x.Ct = E * detail::random_symmetric(g, R, rng); break;
      default: {
        i64 s = detail::rand_res(rng, R);
        if (s % R.p == 0) s += 1;
        x.D = identity_matrix(g, R).scaled(RingElem::from_int(R, s));
        break;
      }
    }
    acc = acc * x;
  }
  return acc;
}

/// Random T_0 point: a random chart point times a random B+ element.
inline T0Point random_t0_point(int g, const Ring& R, std::mt19937_64& rng, bool normalized = false) {
  ChartCoords<RingElem> ch;
  for (int k = 0; k < g * (g - 1) / 2; ++k) ch.lower.push_back(RingElem::from_int(R, detail::rand_res(rng, R)));
  for (int k = 0; k < g * (g + 1) / 2; ++k) ch.sym.push_back(RingElem::from_int(R, detail::rand_res(rng, R)));
  T0Point x = t00_point(g, ch, RingElem::zero(R));
  if (normalized) return x;
  Matrix b = zero_matrix(g, g, R);
  for (int r = 0; r < g; ++r)
    for (int c = r; c < g; ++c) {
      i64 v = detail::rand_res(rng, R);
      if (r == c && v % R.p == 0) v += 1;
      b(r, c) = r == c ? RingElem::from_int(R, v) : RingElem::from_int(R, v).mul_p(1);
    }
  return {x.gamma * b, x.ups * b};
}

}  // namespace paddist
