#include <gtest/gtest.h>

#include "paddist/eigenalg.hpp"

using namespace paddist;

namespace {

const Ring& base() {
  static const Ring A = Ring::disk(3, 12, 6);
  return A;
}
RingElem I(i64 v) { return RingElem::from_int(base(), v); }
RingElem W(int j = 1) { return detail::wpow(base(), j); }
RingElem Z() { return RingElem::zero(base()); }

// x^n + f_{n-1} x^{n-1} + ... + f_0
FiniteAlgebra mono(const Vec& f) { return monogenic_algebra(base(), f); }
FiniteAlgebra split2() { return product_algebra(base(), 2); }
FiniteAlgebra x2_minus_w() { return mono({-W(), Z()}); }
FiniteAlgebra x2() { return mono({Z(), Z()}); }
FiniteAlgebra x3_minus_w() { return mono({-W(), Z(), Z()}); }

Vec coords(const FiniteAlgebra& B, std::vector<RingElem> xs) {
  xs.resize(B.rank, Z());
  return xs;
}
Ideal principal(const Vec& g) { return Ideal{{g}}; }

// Linear form picking the top power-basis coordinate (the dualising trace of a monogenic algebra).
Vec top_coeff(const FiniteAlgebra& B) {
  Vec l(B.rank, Z());
  l[B.rank - 1] = I(1);
  return l;
}

Matrix mat(std::vector<std::vector<RingElem>> rows) {
  Matrix M = zero_matrix(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()), base());
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < rows[i].size(); ++j) M(i, j) = rows[i][j];
  return M;
}

}  // namespace

// ---------------------------------------------------------------------------------------------
// Spans over A

TEST(ASpan, HowellClosureDecidesMembership) {
  // Span of (w, 1) in A^2 contains (w^6, w^5)... = 0 and w^5 (w, 1) but not (1, 0).
  ASpan S(base(), 2);
  S.add({W(), I(1)});
  EXPECT_TRUE(S.contains(Vec{W(2), W()}));
  EXPECT_FALSE(S.contains(Vec{I(1), Z()}));
  EXPECT_EQ(S.length(), 6);
  // Adding (w^5, 0) changes nothing: it is w^4 (w, 1) - (0, w^4) ... not in the span.
  ASpan T(base(), 2);
  T.add({W(5), Z()});
  EXPECT_EQ(T.length(), 1);
  EXPECT_TRUE(T.contains(Vec{W(5) * I(7), Z()}));
  EXPECT_FALSE(T.contains(Vec{W(4), Z()}));
}

TEST(ASpan, KernelOfMultiplicationByW) {
  // ker(w) on A is w^5 A.
  std::vector<Vec> K = a_kernel(mat({{W()}}));
  ASpan S(base(), 1);
  for (auto& v : K) S.add(v);
  EXPECT_EQ(S.length(), 1);
  EXPECT_TRUE(S.contains(Vec{W(5)}));
  EXPECT_FALSE(S.contains(Vec{W(4)}));
}

// ---------------------------------------------------------------------------------------------
// Algebras from operators

TEST(AlgebraFromOperators, IdentityGivesBase) {
  FiniteAlgebra B = algebra_from_operators(base(), {identity_matrix(3, base())});
  EXPECT_EQ(B.rank, 1);
}

TEST(AlgebraFromOperators, DistinctUnitsGiveSplitAlgebra) {
  Matrix D = mat({{I(1), Z()}, {Z(), I(2)}});
  FiniteAlgebra B = algebra_from_operators(base(), {D});
  ASSERT_EQ(B.rank, 2);
  // Vandermonde oracle: e = (D - 2) / (1 - 2) is a nontrivial idempotent.
  Vec d = B.generators[0];
  Vec e = detail::scale(B.sub(d, B.scalar(I(2))), I(-1));
  EXPECT_TRUE(detail::vec_zero(B.sub(B.mul(e, e), e)));
  EXPECT_FALSE(detail::vec_zero(e));
  EXPECT_FALSE(detail::vec_zero(B.sub(e, B.one)));
}

TEST(AlgebraFromOperators, SquareRootOfW) {
  const Ring A4 = Ring::disk(3, 12, 4);
  Matrix X = zero_matrix(2, 2, A4);
  X(0, 1) = detail::wpow(A4, 1);
  X(1, 0) = RingElem::one(A4);
  FiniteAlgebra B = algebra_from_operators(A4, {X});
  ASSERT_EQ(B.rank, 2);
  Vec x = B.generators[0];
  // Minimal polynomial x^2 - w.
  EXPECT_TRUE(detail::vec_zero(B.sub(B.mul(x, x), B.scalar(detail::wpow(A4, 1)))));
  Presentation P = find_presentation(B);
  EXPECT_TRUE((P.f[0] + detail::wpow(A4, 1)).is_zero());
  EXPECT_TRUE(P.f[1].is_zero());
  EXPECT_TRUE((P.f[2] - RingElem::one(A4)).is_zero());
}

TEST(AlgebraFromOperators, Errors) {
  Matrix X = mat({{I(0), I(1)}, {I(0), I(0)}}), Y = mat({{I(1), I(0)}, {I(0), I(2)}});
  try {
    algebra_from_operators(base(), {X, Y});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NonCommuting);
  }
  // w N with N nilpotent: its span direction has no unit pivot.
  Matrix Nw = mat({{Z(), W()}, {Z(), Z()}});
  try {
    algebra_from_operators(base(), {Nw});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::RankUnstable);
  }
  EXPECT_THROW(algebra_from_operators(base(), {}), Error);
}

TEST(FiniteAlgebraTest, ValidationRejectsBadTables) {
  // e0 e1 = e0 but e1 e0 = e1: not commutative.
  std::vector<std::vector<Vec>> table = {{{I(1), Z()}, {I(1), Z()}}, {{Z(), I(1)}, {Z(), I(1)}}};
  EXPECT_THROW(algebra_from_table(base(), table, {I(1), Z()}), Error);
}

// ---------------------------------------------------------------------------------------------
// Noether different and Fitting ideal

TEST(NoetherDifferent, HandDerivedIdeals) {
  EXPECT_TRUE(is_unit_ideal(split2(), noether_different(split2())));
  {
    FiniteAlgebra B = x2_minus_w();
    EXPECT_TRUE(ideal_equal(B, noether_different(B), principal(coords(B, {Z(), I(2)}))));
    EXPECT_FALSE(is_unit_ideal(B, noether_different(B)));
  }
  {
    FiniteAlgebra B = x2();
    Ideal D = noether_different(B);
    EXPECT_TRUE(ideal_equal(B, D, principal(coords(B, {Z(), I(2)}))));
    // x is nilpotent, so D lies in every maximal ideal.
    for (auto& pt : enumerate_points(B)) EXPECT_GE(order_at(B, pt, D), 1);
  }
  {
    FiniteAlgebra B = x3_minus_w();
    EXPECT_TRUE(ideal_equal(B, noether_different(B), principal(coords(B, {Z(), Z(), I(3)}))));
  }
}

TEST(NoetherDifferent, AnnihilatorElementForSquareRoot) {
  // x ⊗ 1 + 1 ⊗ x kills x ⊗ 1 - 1 ⊗ x, and multiplies to 2x.
  FiniteAlgebra B = x2_minus_w();
  Vec x = B.basis_vec(1);
  // In B ⊗ B with basis e_i ⊗ e_j: t = e1⊗e0 + e0⊗e1, d = e1⊗e0 - e0⊗e1.
  auto tensor_mul = [&](const Vec& s, const Vec& t) {
    Vec out(4, Z());
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int c = 0; c < 2; ++c)
          for (int d = 0; d < 2; ++d) {
            RingElem k = s[a * 2 + b] * t[c * 2 + d];
            if (k.is_zero()) continue;
            Vec l = B.mul(B.basis_vec(a), B.basis_vec(c)), r = B.mul(B.basis_vec(b), B.basis_vec(d));
            for (int i = 0; i < 2; ++i)
              for (int j = 0; j < 2; ++j) out[i * 2 + j] += k * l[i] * r[j];
          }
    return out;
  };
  Vec t{Z(), I(1), I(1), Z()}, d{Z(), I(-1), I(1), Z()};
  EXPECT_TRUE(detail::vec_zero(tensor_mul(t, d)));
  (void)x;
}

TEST(Fitting, HandDerivedIdealsAndE) {
  {
    FiniteAlgebra B = x2_minus_w();
    EXPECT_TRUE(ideal_equal(B, fitting_omega(B), principal(coords(B, {Z(), I(2)}))));
    auto pts = enumerate_points(B);
    ASSERT_EQ(pts.size(), 1u);
    EXPECT_EQ(e_of_x(B, pts[0]), 1);
  }
  {
    FiniteAlgebra B = algebra_from_operators(base(), {identity_matrix(2, base())});
    EXPECT_TRUE(is_unit_ideal(B, fitting_omega(B)));
    EXPECT_EQ(e_of_x(B, enumerate_points(B).at(0)), 0);
  }
  {
    FiniteAlgebra B = x3_minus_w();
    EXPECT_TRUE(ideal_equal(B, fitting_omega(B), principal(coords(B, {Z(), Z(), I(3)}))));
    EXPECT_EQ(e_of_x(B, enumerate_points(B).at(0)), 2);
  }
}

TEST(Fitting, PresentationNotFoundForNonMonogenic) {
  // A[x, y]/(x, y)^2 has no primitive element.
  std::vector<std::vector<Vec>> table(3, std::vector<Vec>(3, Vec(3, Z())));
  for (int i = 0; i < 3; ++i) table[0][i][i] = I(1), table[i][0][i] = I(1);
  FiniteAlgebra B = algebra_from_table(base(), table, {I(1), Z(), Z()});
  try {
    fitting_omega(B);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::PresentationNotFound);
  }
}

TEST(Points, SplitAlgebraHasTwoPoints) {
  FiniteAlgebra B = split2();
  auto pts = enumerate_points(B);
  ASSERT_EQ(pts.size(), 2u);
  Vec s = B.add(pts[0].eta, pts[1].eta);
  EXPECT_TRUE(detail::vec_zero(B.sub(s, B.one)));
  for (auto& pt : pts) {
    EXPECT_TRUE(detail::vec_zero(B.sub(B.mul(pt.eta, pt.eta), pt.eta)));
    EXPECT_TRUE(is_etale_at(B, pt));
    EXPECT_TRUE(is_smooth_at(B, pt));
  }
}

// ---------------------------------------------------------------------------------------------
// L-ideal and ramification

TEST(LIdeal, UnitPairingOnBase) {
  FiniteAlgebra B = algebra_from_operators(base(), {identity_matrix(1, base())});
  PairedModule pm{B, B.mult, B.mult, mat({{I(1)}})};
  LIdeal L = l_ideal(pm);
  EXPECT_TRUE(is_unit_ideal(B, principal(L.generator)));
}

TEST(LIdeal, NondegenerateEqualsDifferent) {
  FiniteAlgebra B = x2_minus_w();
  PairedModule pm = regular_paired_module(B, top_coeff(B));
  LIdeal L = l_ideal(pm);
  EXPECT_TRUE(detail::vec_zero(B.sub(L.generator, coords(B, {Z(), I(2)}))));
  EXPECT_TRUE(ideal_equal(B, principal(L.generator), noether_different(B)));
}

TEST(LIdeal, DegeneratePairingGivesSmallerIdeal) {
  FiniteAlgebra B = x2_minus_w();
  // beta(u, v) = coefficient of x in u v x.
  Matrix G = zero_matrix(2, 2, base());
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      Vec e = B.mul(B.mul(B.basis_vec(i), B.basis_vec(j)), B.basis_vec(1));
      G(i, j) = e[1];
    }
  PairedModule pm{B, B.mult, B.mult, G};
  LIdeal L = l_ideal(pm);
  Ideal got = principal(L.generator);
  EXPECT_TRUE(ideal_equal(B, got, principal(B.scalar(I(2) * W()))));
  EXPECT_TRUE(ideal_contains(B, noether_different(B), got));
  EXPECT_FALSE(ideal_equal(B, got, noether_different(B)));
  auto pt = enumerate_points(B).at(0);
  try {
    ramification_report(pm, pt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::DegeneratePairing);
  }
}

TEST(LIdeal, RankTwoModuleIsRejected) {
  FiniteAlgebra B = algebra_from_operators(base(), {identity_matrix(1, base())});
  Matrix I2 = identity_matrix(2, base());
  PairedModule pm{B, {I2}, {I2}, I2};
  try {
    l_ideal(pm);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NotRankOne);
  }
}

TEST(LIdeal, EquivarianceIsChecked) {
  FiniteAlgebra B = x2_minus_w();
  PairedModule pm{B, B.mult, B.mult, mat({{I(1), I(0)}, {I(0), I(2)}})};
  EXPECT_THROW(l_ideal(pm), Error);
}

TEST(Ramification, SquareRootOfWIsRamifiedOnce) {
  FiniteAlgebra B = x2_minus_w();
  PairedModule pm = regular_paired_module(B, top_coeff(B));
  auto pts = enumerate_points(B);
  ASSERT_EQ(pts.size(), 1u);
  RamificationReport r = ramification_report(pm, pts[0]);
  EXPECT_TRUE(r.ramified);
  EXPECT_EQ(r.ord, 1);
  EXPECT_EQ(r.e, 1);
  EXPECT_TRUE(r.smooth);
  EXPECT_FALSE(r.etale);
  EXPECT_TRUE(detail::vec_zero(B.sub(r.ladj, coords(B, {Z(), I(2)}))));
}

TEST(Ramification, SplitAlgebraIsUnramified) {
  FiniteAlgebra B = split2();
  // Trace form: beta(u, v) = sum of the coordinates of u v.
  PairedModule pm = regular_paired_module(B, {I(1), I(1)});
  for (auto& pt : enumerate_points(B)) {
    RamificationReport r = ramification_report(pm, pt);
    EXPECT_FALSE(r.ramified);
    EXPECT_EQ(r.ord, 0);
    EXPECT_EQ(r.e, 0);
    EXPECT_TRUE(r.etale);
  }
}

TEST(Ramification, CubeRootOfWHasOrderTwo) {
  FiniteAlgebra B = x3_minus_w();
  PairedModule pm = regular_paired_module(B, top_coeff(B));
  RamificationReport r = ramification_report(pm, enumerate_points(B).at(0));
  EXPECT_TRUE(r.ramified);
  EXPECT_EQ(r.ord, 2);
  EXPECT_EQ(r.e, 2);
}

// ---------------------------------------------------------------------------------------------
// Properties over the test family

TEST(Properties, DifferentEqualsFittingAndAuslanderBuchsbaum) {
  for (const FiniteAlgebra& B : {split2(), x2_minus_w(), x2(), x3_minus_w()}) {
    Ideal D = noether_different(B), F = fitting_omega(B);
    for (auto& pt : enumerate_points(B)) {
      const bool d_in = order_at(B, pt, D) >= 1;
      const bool f_in = order_at(B, pt, F) >= 1;
      EXPECT_EQ(d_in, !is_etale_at(B, pt));
      EXPECT_EQ(f_in, !is_etale_at(B, pt));
      if (is_smooth_at(B, pt)) {
        EXPECT_TRUE(ideal_equal(B, localize(B, pt, D), localize(B, pt, F)));
      }
    }
    EXPECT_TRUE(ideal_equal(B, D, F));
  }
}

TEST(Properties, BaseChangeCommutesWithDifferentAndFitting) {
  RingElem w0 = RingElem::zero(base().scalar_ring());
  for (const FiniteAlgebra& B : {split2(), x2_minus_w(), x2(), x3_minus_w()}) {
    FiniteAlgebra B0 = specialize_algebra(B, w0);
    Ideal D = noether_different(B), F = fitting_omega(B);
    Ideal Ds, Fs;
    for (auto& g : D.gens) Ds.gens.push_back(specialize_vec(g, w0));
    for (auto& g : F.gens) Fs.gens.push_back(specialize_vec(g, w0));
    EXPECT_TRUE(ideal_equal(B0, Ds, noether_different(B0)));
    EXPECT_TRUE(ideal_equal(B0, Fs, fitting_omega(B0)));
  }
}

TEST(Properties, LIdealIsMultipleOfDifferentWithEqualityIffNondegenerate) {
  int nondegenerate = 0, degenerate = 0;
  for (const FiniteAlgebra& B : {x2_minus_w(), x3_minus_w(), split2()}) {
    const int n = B.rank;
    for (int which = 0; which <= n; ++which) {
      // Coordinate forms, then the sum of all coordinates.
      Vec lam(n, which == n ? I(1) : Z());
      if (which < n) lam[which] = I(1);
      PairedModule pm = regular_paired_module(B, lam);
      CharSeries Fg = char_series(pm.gram);
      RingElem det = static_cast<int>(Fg.c.size()) > n ? Fg.c[n] : Z();
      const bool nondeg = det.is_invertible();
      Ideal L;
      try {
        L = principal(l_ideal(pm).generator);
      } catch (const Error&) {
        EXPECT_FALSE(nondeg);
        continue;
      }
      Ideal D = noether_different(B);
      EXPECT_TRUE(ideal_contains(B, D, L));
      EXPECT_EQ(ideal_equal(B, D, L), nondeg) << which;
      ++(nondeg ? nondegenerate : degenerate);
    }
  }
  EXPECT_GE(nondegenerate, 3);
  EXPECT_GE(degenerate, 2);
}

// ---------------------------------------------------------------------------------------------
// Clean neighbourhoods

TEST(SlopeIdempotents, SplitHeckeModule) {
  const Ring R = Ring::scalar(3, 16);
  Matrix D = matrix_from_ints(R, {{1, 0, 0}, {0, 3, 0}, {0, 0, 9}});
  Matrix P = matrix_from_ints(R, {{1, 2, 0}, {0, 1, 1}, {1, 0, 1}});
  Matrix U = P * D * solve(P, identity_matrix(3, R));
  Matrix T = P * matrix_from_ints(R, {{5, 0, 0}, {0, 7, 0}, {0, 0, 11}}) * solve(P, identity_matrix(3, R));
  SlopeIdempotents s = slope_idempotents(U, Rational(1));
  Matrix I3 = identity_matrix(3, R);
  auto zero = [](const Matrix& M) {
    for (auto& x : M.data())
      if (!x.is_zero() && x.valuation() < 10) return false;
    return true;
  };
  EXPECT_TRUE(zero(s.eta_small * s.eta_small - s.eta_small));
  EXPECT_TRUE(zero(s.eta_small + s.eta_large - I3));
  EXPECT_TRUE(zero(s.eta_small * U - U * s.eta_small));
  EXPECT_TRUE(zero(s.eta_small * T - T * s.eta_small));
  EXPECT_EQ(static_cast<int>(s.factors.Q.size()) - 1, 2);
}
