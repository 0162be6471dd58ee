#pragma once
// Fredholm series det(1 - T U) of finite truncated operators, their Newton polygons, slope
// factorizations F = Q S and kernels of Q*(U).

#include <optional>

#include "paddist/linalg.hpp"

namespace paddist {

/// Truncated det(1 - T U): c[0] = 1, ..., c[D]. `dim` is the operator size (-1 when unknown).
struct CharSeries {
  Ring ring;
  std::vector<RingElem> c;
  int dim = -1;

  int degree() const { return static_cast<int>(c.size()) - 1; }
  /// Every coefficient of the full determinant is present.
  bool complete() const { return dim >= 0 && degree() >= dim; }

  static CharSeries from_coeffs(const Ring& R, std::vector<RingElem> cs, int dim = -1) {
    if (cs.empty() || cs[0] != RingElem::one(R)) fail(Errc::InvalidArgument, "a Fredholm series starts with 1");
    for (auto& x : cs)
      if (x.ring() != R) fail(Errc::RingMismatch, "coefficient in another ring");
    return {R, std::move(cs), dim};
  }
  static CharSeries one(const Ring& R) { return {R, {RingElem::one(R)}, 0}; }
};

namespace detail {
// Berkowitz: division-free characteristic polynomial, coefficients of det(xI - A) from x^n down.
inline std::vector<RingElem> berkowitz(const Matrix& A) {
  const int n = A.rows();
  const Ring& R = A(0, 0).ring();
  std::vector<RingElem> vec{RingElem::one(R), -A(0, 0)};
  for (int r = 1; r < n; ++r) {
    // Leading (r+1)x(r+1) block [[M, C], [Rw, a]].
    std::vector<RingElem> T(r + 2, RingElem::zero(R));
    T[0] = RingElem::one(R);
    T[1] = -A(r, r);
    std::vector<RingElem> X(r);  // M^k C
    for (int i = 0; i < r; ++i) X[i] = A(i, r);
    for (int k = 0; k < r; ++k) {
      RingElem s = RingElem::zero(R);
      for (int j = 0; j < r; ++j) s.add_mul(A(r, j), X[j]);
      T[k + 2] = -s;
      if (k + 1 < r) {
        std::vector<RingElem> Y(r, RingElem::zero(R));
        for (int i = 0; i < r; ++i)
          for (int j = 0; j < r; ++j) Y[i].add_mul(A(i, j), X[j]);
        X = std::move(Y);
      }
    }
    std::vector<RingElem> next(r + 2, RingElem::zero(R));
    for (int i = 0; i < r + 2; ++i)
      for (int j = 0; j <= std::min(i, r); ++j) next[i].add_mul(T[i - j], vec[j]);
    vec = std::move(next);
  }
  return vec;
}
}  // namespace detail

/// Coefficients of det(1 - T U) up to degree D (default: the full determinant).
inline CharSeries char_series(const Matrix& U, std::optional<int> D = std::nullopt) {
  const int n = U.rows();
  if (U.cols() != n) fail(Errc::InvalidArgument, "char_series needs a square matrix");
  if (n == 0) fail(Errc::InvalidArgument, "empty operator");
  const Ring& R = U(0, 0).ring();
  for (auto& x : U.data())
    if (x.ring() != R) fail(Errc::RingMismatch, "operator entries live in different rings");
  const int deg = D.value_or(n);
  if (deg < 0 || deg > n) fail(Errc::InvalidArgument, "truncation degree must lie in [0, dim]");
  std::vector<RingElem> p = detail::berkowitz(U);
  p.resize(deg + 1);
  return {R, std::move(p), n};
}

struct PolygonSegment {
  Rational slope;
  int length;
  bool operator==(const PolygonSegment& o) const { return slope == o.slope && length == o.length; }
};

struct NewtonPolygon {
  std::vector<std::pair<int, int>> vertices;  // (n, v_p(c_n))
  std::vector<PolygonSegment> segments;

  /// Slopes with multiplicity, in increasing order.
  std::vector<Rational> slopes() const {
    std::vector<Rational> out;
    for (auto& s : segments) out.insert(out.end(), s.length, s.slope);
    return out;
  }
};

/// Lower convex hull of (n, v(c_n)) over the coefficients that are nonzero at working precision.
inline NewtonPolygon newton_polygon(const CharSeries& F) {
  std::vector<std::pair<int, int>> hull;
  for (int n = 0; n <= F.degree(); ++n) {
    if (F.c[n].is_zero()) continue;
    std::pair<int, int> pt{n, F.c[n].valuation()};
    while (hull.size() >= 2) {
      auto [x1, y1] = hull[hull.size() - 2];
      auto [x2, y2] = hull.back();
      // Drop the middle point when it lies on or above the chord.
      if (static_cast<i64>(y2 - y1) * (pt.first - x1) >= static_cast<i64>(pt.second - y1) * (x2 - x1))
        hull.pop_back();
      else
        break;
    }
    hull.push_back(pt);
  }
  NewtonPolygon np;
  np.vertices = hull;
  for (size_t i = 1; i < hull.size(); ++i) {
    int dn = hull[i].first - hull[i - 1].first;
    np.segments.push_back({Rational(hull[i].second - hull[i - 1].second, dn), dn});
  }
  return np;
}

namespace detail {
// Vertex n0 splitting slopes <= h from slopes > h, with checks that the split is determined by
// the known coefficients. Throws InsufficientDegree when it is not.
inline int slope_vertex(const CharSeries& F, Rational h) {
  NewtonPolygon np = newton_polygon(F);
  int n0 = 0, v0 = 0;
  for (size_t i = 0; i < np.segments.size(); ++i) {
    if (np.segments[i].slope > h) break;
    n0 = np.vertices[i + 1].first;
    v0 = np.vertices[i + 1].second;
  }
  if (!F.complete() && n0 == F.degree())
    fail(Errc::InsufficientDegree, "every computed slope is <= h; the break lies beyond the truncation");
  // Coefficients that vanish at working precision only bound v(c_n) from below by their precision.
  for (int n = n0 + 1; n <= F.degree(); ++n) {
    if (!F.c[n].is_zero()) continue;
    if (Rational(F.c[n].precision() - v0) <= h * (n - n0))
      fail(Errc::InsufficientDegree, "a coefficient lost to precision could still carry a slope <= h");
  }
  return n0;
}

// In the Tate ring the vertex coefficient is a unit multiple of p^v exactly when its constant
// term strictly dominates the rest.
inline bool dominant_constant(const RingElem& x) { return has_dominant_constant(x); }
}  // namespace detail

/// The polygon has a vertex separating slopes <= h from slopes > h, and its coefficient is a unit
/// multiple of a power of p on the whole disk (so the degree of Q is constant on fibers).
inline bool is_slope_datum(const CharSeries& F, Rational h) {
  int n0 = detail::slope_vertex(F, h);
  return detail::dominant_constant(F.c[n0]);
}

struct SlopeFactorization {
  Rational h;
  std::vector<RingElem> Q;  // polynomial, Q[0] = 1
  std::vector<RingElem> S;  // truncated series, S[0] = 1
  /// Valuation of the Sylvester-type Jacobian of (Q, S): finite means (Q, S) is the unit ideal.
  int resultant_valuation = 0;
  int iterations = 0;
};

namespace detail {
// Same residues, read in a ring with `cap` digits (symmetric lift so small integers stay exact).
inline RingElem recast(const RingElem& x, const Ring& T) {
  const Ring& R = x.ring();
  std::vector<i64> cs(R.len());
  for (int i = 0; i < R.len(); ++i) {
    i64 c = x.coeff(i);
    cs[i] = c > R.mod / 2 ? c - R.mod : c;
  }
  return RingElem::from_coeffs(T, cs, x.denom_exp());
}

inline std::vector<RingElem> poly_mul(const std::vector<RingElem>& a, const std::vector<RingElem>& b, int deg) {
  const Ring& R = a[0].ring();
  std::vector<RingElem> out(deg + 1, RingElem::zero(R));
  for (size_t i = 0; i < a.size() && static_cast<int>(i) <= deg; ++i) {
    if (a[i].is_zero()) continue;
    for (size_t j = 0; j < b.size() && static_cast<int>(i + j) <= deg; ++j) out[i + j].add_mul(a[i], b[j]);
  }
  return out;
}

inline int max_cap(i64 p) {
  int k = 0;
  i128 m = 1;
  while (m * p < (static_cast<i128>(1) << 62)) m *= p, ++k;
  return k;
}

// Digits of x that are certainly zero, counted coefficientwise (ignoring the w-grading).
inline int exact_digits(const RingElem& x) { return x.coeff_valuation(); }
}  // namespace detail

/// Hensel/Newton lifting of the polygon split at h. Works in a ring with extra digits so that
/// Q * S reproduces F exactly at the input precision.
inline SlopeFactorization slope_factor(const CharSeries& F, Rational h, int max_iter = 64) {
  if (!is_slope_datum(F, h)) fail(Errc::NotASlopeDatum, "no unit vertex separating slopes <= h");
  const int n0 = detail::slope_vertex(F, h);
  const int D = F.degree(), ds = D - n0;
  const Ring& R = F.ring;
  SlopeFactorization out;
  out.h = h;
  if (n0 == 0 || ds == 0) {
    std::vector<RingElem> one{RingElem::one(R)};
    out.Q = n0 == 0 ? one : F.c;
    out.S = n0 == 0 ? F.c : one;
    return out;
  }
  const int cap = std::min(detail::max_cap(R.p), 2 * R.cap_p + 8);
  const Ring W = Ring::make(R.p, cap, R.cap_w);
  std::vector<RingElem> f;
  for (auto& x : F.c) f.push_back(detail::recast(x, W));

  // Seed from the lower edge: Q0 = F mod T^{n0+1}, S0 = 1 + sum_j c_{n0+j}/c_{n0} T^j.
  std::vector<RingElem> q(f.begin(), f.begin() + n0 + 1), s(ds + 1, RingElem::zero(W));
  RingElem lead_inv = f[n0].inv();
  s[0] = RingElem::one(W);
  for (int j = 1; j <= ds; ++j) s[j] = f[n0 + j] * lead_inv;

  for (int it = 0; it <= max_iter; ++it) {
    auto qs = detail::poly_mul(q, s, D);
    std::vector<RingElem> e(D);
    int ev = kInfVal;
    for (int n = 1; n <= D; ++n) {
      e[n - 1] = f[n] - qs[n];
      ev = std::min(ev, detail::exact_digits(e[n - 1]));
    }
    // Jacobian of (q_1..q_n0, s_1..s_ds) -> coefficients 1..D of Q S.
    Matrix J = zero_matrix(D, D, W);
    for (int n = 1; n <= D; ++n) {
      for (int i = 1; i <= n0; ++i)
        if (n - i >= 0 && n - i <= ds) J(n - 1, i - 1) = s[n - i];
      for (int j = 1; j <= ds; ++j)
        if (n - j >= 0 && n - j <= n0) J(n - 1, n0 + j - 1) = q[n - j];
    }
    if (ev >= R.cap_p + 2 || ev >= cap) {
      out.resultant_valuation = det_valuation(J);
      out.iterations = it;
      break;
    }
    if (it == max_iter) fail(Errc::LiftDiverged, "Hensel iteration did not converge");
    Matrix E = zero_matrix(D, 1, W);
    for (int n = 0; n < D; ++n) E(n, 0) = e[n];
    Matrix delta;
    try {
      delta = solve(J, E);
    } catch (const Error&) {
      fail(Errc::LiftDiverged, "Jacobian of the split is singular at working precision");
    }
    for (int i = 1; i <= n0; ++i) q[i] += delta(i - 1, 0);
    for (int j = 1; j <= ds; ++j) s[j] += delta(n0 + j - 1, 0);
    for (auto* v : {&q, &s})
      for (auto& x : *v)
        if (x.denom_exp() > 0 && x.precision() < R.cap_p)
          fail(Errc::LiftDiverged, "precision exhausted during Hensel iteration");
  }
  for (auto& x : q) out.Q.push_back(detail::recast(x, R));
  for (auto& x : s) out.S.push_back(detail::recast(x, R));
  return out;
}

/// Q*(U) = sum_i q_i U^{deg Q - i}.
inline Matrix reversed_poly_at(const std::vector<RingElem>& Q, const Matrix& U) {
  const int n = U.rows();
  const Ring& R = U(0, 0).ring();
  Matrix acc = zero_matrix(n, n, R);
  for (size_t i = 0; i < Q.size(); ++i) {
    acc = acc * U;
    for (int d = 0; d < n; ++d) acc(d, d) += Q[i];
  }
  return acc;
}

/// Basis (as columns) of ker Q*(U). Entries of valuation >= zero_floor are treated as zero;
/// by default the last third of the digits is not trusted.
inline Matrix riesz_projector(const Matrix& U, const std::vector<RingElem>& Q, int zero_floor = -1) {
  if (Q.empty() || Q[0] != RingElem::one(Q[0].ring())) fail(Errc::InvalidArgument, "Q must satisfy Q(0) = 1");
  const int d = static_cast<int>(Q.size()) - 1;
  const Ring& R = U(0, 0).ring();
  if (d == 0) return zero_matrix(U.rows(), 0, R);
  EliminationOptions opt;
  opt.floor = zero_floor >= 0 ? zero_floor : R.cap_p - std::max(1, R.cap_p / 3);
  Matrix K = kernel_basis(reversed_poly_at(Q, U), opt);
  if (K.cols() != d) fail(Errc::RankMismatch, "kernel dimension differs from deg Q");
  return K;
}

/// Matrix A with U V = V A for V spanning a U-stable subspace (columns independent).
inline Matrix restrict_operator(const Matrix& U, const Matrix& V) {
  const int r = V.cols();
  Elimination el = eliminate(V);
  if (el.rank() != r) fail(Errc::RankMismatch, "basis columns are dependent");
  std::vector<int> rows;
  for (auto& pv : el.pivots) rows.push_back(pv.row);
  std::sort(rows.begin(), rows.end());
  const Ring& R = U(0, 0).ring();
  Matrix UV = U * V;
  Matrix Vs = zero_matrix(r, r, R), Bs = zero_matrix(r, r, R);
  for (int a = 0; a < r; ++a)
    for (int b = 0; b < r; ++b) Vs(a, b) = V(rows[a], b), Bs(a, b) = UV(rows[a], b);
  return solve(Vs, Bs);
}

/// Coefficientwise specialization w := w0 of a family series.
inline CharSeries specialize_series(const CharSeries& F, const RingElem& w0) {
  CharSeries out{w0.ring(), {}, F.dim};
  for (auto& x : F.c) out.c.push_back(specialize(x, w0));
  return out;
}

/// Product of two coefficient lists, truncated at degree `deg`.
inline std::vector<RingElem> series_product(const std::vector<RingElem>& a, const std::vector<RingElem>& b, int deg) {
  return detail::poly_mul(a, b, deg);
}

}  // namespace paddist
