#include <gtest/gtest.h>

#include <random>

#include "paddist/pairing.hpp"

using namespace paddist;

namespace {

RingElem I(const Ring& R, i64 v) { return RingElem::from_int(R, v); }

BigInt binom(i64 n, i64 k) {
  BigInt b = 1;
  for (i64 i = 0; i < k; ++i) b = b * (n - i) / (i + 1);
  return b;
}

T0Point g1_point(const Ring& R, i64 c) { return {identity_matrix(1, R), Matrix(1, 1, I(R, c))}; }

}  // namespace

TEST(EHst, IdentityAndDiagonal) {
  Ring R = Ring::scalar(5, 8);
  Weight k = Weight::algebraic(R, {3, 1});
  EXPECT_EQ(e_hst_eval(k, identity_matrix(2, R)), I(R, 1));
  Matrix tau = matrix_from_ints(R, {{2, 0}, {0, 3}});
  EXPECT_EQ(e_hst_eval(k, tau), eval_weight(k, {I(R, 2), I(R, 3)}));
  EXPECT_EQ(e_hst_eval(k, matrix_from_ints(R, {{1, 0}, {3, 1}})), I(R, 1));
}

TEST(EHst, AlgebraicClosedForm) {
  // e_k(X) = X11^{k1-k2} det(X)^{k2}.
  Ring R = Ring::scalar(3, 10);
  Weight k = Weight::algebraic(R, {4, 1});
  Matrix X = matrix_from_ints(R, {{4, 3}, {6, 7}});
  EXPECT_EQ(e_hst_eval(k, X), I(R, 4).pow(3) * I(R, 4 * 7 - 18));
}

TEST(EHst, Equivariance) {
  Ring R = Ring::scalar(3, 10);
  Weight k = Weight::algebraic(R, {3, 1, 0});
  k.comps[1].s = RingElem::from_rational(R, 1, 2);
  std::mt19937_64 rng(71);
  for (int trial = 0; trial < 10; ++trial) {
    Matrix X = detail::random_iwahori_gl(3, R, rng);
    Matrix beta = detail::random_iwahori_gl(3, R, rng), u = identity_matrix(3, R);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) {
        if (r > c) beta(r, c) = I(R, 0);
        if (r > c) u(r, c) = I(R, static_cast<i64>(rng() % 100));
      }
    std::vector<RingElem> d{beta(0, 0), beta(1, 1), beta(2, 2)};
    EXPECT_TRUE(agrees(e_hst_eval(k, X * beta), e_hst_eval(k, X) * eval_weight(k, d), 9));
    EXPECT_TRUE(agrees(e_hst_eval(k, u * X), e_hst_eval(k, X), 9));
    EXPECT_TRUE(agrees(e_hst_eval(k, X.transpose()), e_hst_eval(k, X), 9));
  }
}

TEST(EHst, RejectsNonUnitMinor) {
  Ring R = Ring::scalar(3, 10);
  try {
    e_hst_eval(Weight::algebraic(R, {1, 0}), matrix_from_ints(R, {{3, 1}, {1, 1}}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NonUnitMinor);
  }
}

TEST(Kernel, GenusOneIntegerWeight) {
  for (i64 p : {3, 5, 7}) {
    Ring R = Ring::scalar(p, 9);
    for (i64 kk = 0; kk <= 6; ++kk) {
      PairKernel K = pair_kernel(Weight::algebraic(R, {kk}), 7, 7);
      for (int i = 0; i <= 7; ++i)
        for (int j = 0; j <= 7; ++j) {
          RingElem expect = i == j ? RingElem::from_big(R, binom(kk, i)).mul_p(i) : I(R, 0);
          EXPECT_EQ(K.at(i, j), expect) << "p=" << p << " k=" << kk << " i=" << i << " j=" << j;
        }
    }
  }
}

TEST(Kernel, GenusOneWildFirstOrder) {
  Ring R = Ring::scalar(3, 10);
  Weight k = Weight::algebraic(R, {0});
  k.comps[0].s = RingElem::from_rational(R, 1, 2);
  PairKernel K = pair_kernel(k, 3, 3);
  EXPECT_EQ(K.at(0, 0), I(R, 1));
  EXPECT_TRUE(agrees(K.at(1, 1), RingElem::from_rational(R, 3, 2), 10));
  EXPECT_TRUE(K.at(1, 0).is_zero());
}

TEST(Kernel, SymmetricAndNormalized) {
  Ring R = Ring::scalar(3, 8);
  Weight k = Weight::algebraic(R, {2, 1});
  k.comps[0].s = RingElem::from_rational(R, 1, 2);
  PairKernel K = pair_kernel(k, 3, 3);
  EXPECT_EQ(K.at(0, 0), I(R, 1));
  for (int i = 0; i < K.rows(); ++i)
    for (int j = 0; j < K.cols(); ++j) {
      EXPECT_TRUE(agrees(K.at(i, j), K.at(j, i), 8));
      // Each monomial in either argument carries at least one power of p.
      int di = K.sp1->total_degree(i), dj = K.sp2->total_degree(j);
      if (!K.at(i, j).is_zero()) {
        EXPECT_GE(K.at(i, j).valuation(), std::max(di, dj));
      }
    }
}

TEST(Kernel, RectangularAgreesWithSquare) {
  Ring R = Ring::scalar(3, 8);
  Weight k = Weight::algebraic(R, {1, 1});
  PairKernel sq = pair_kernel(k, 3, 3), rect = pair_kernel(k, 3, 1);
  for (int i = 0; i < rect.rows(); ++i)
    for (int j = 0; j < rect.cols(); ++j) EXPECT_EQ(rect.at(i, j), sq.at(i, j));
}

TEST(Pairing, DiracExamples) {
  Ring R = Ring::scalar(3, 10);
  Weight k = Weight::algebraic(R, {2});
  EXPECT_EQ(pair_dist(dirac(g1_point(R, 0), k, 3), dirac(g1_point(R, 0), k, 3)), I(R, 1));
  EXPECT_EQ(pair_dist(dirac(g1_point(R, 1), k, 3), dirac(g1_point(R, 2), k, 3)), I(R, 49));
}

TEST(Pairing, AdjunctionWitness) {
  Ring R = Ring::scalar(3, 10);
  Weight k = Weight::algebraic(R, {3});
  Xi alpha = Xi::from_matrix(matrix_from_ints(R, {{1, 0}, {3, 1}}));
  Xi sharp = sharp_involution(alpha);
  i64 c1 = 2, c2 = 5;
  RingElem expect = I(R, 1 + 3 * (c1 + 1) * c2).pow(3);
  auto d1 = dirac(g1_point(R, c1), k, 3), d2 = dirac(g1_point(R, c2), k, 3);
  EXPECT_EQ(pair_dist(act_dist_xi(alpha, d1), d2), expect);
  // The sharp side needs moments beyond 3; the kernel's j-th column is O(p^j).
  EXPECT_TRUE(agrees(pair_dist(d1, act_dist_xi(sharp, dirac(g1_point(R, c2), k, 12), 12)), expect, 10));
}

TEST(Pairing, SymmetryAndUpSelfAdjoint) {
  Ring R = Ring::scalar(3, 8);
  std::mt19937_64 rng(73);
  for (int g = 1; g <= 2; ++g) {
    Weight k = Weight::algebraic(R, g == 1 ? std::vector<i64>{3} : std::vector<i64>{2, 1});
    const int M = g == 1 ? 6 : 3;
    for (int trial = 0; trial < 5; ++trial) {
      auto m1 = random_distribution(k, M, rng), m2 = random_distribution(k, M, rng);
      EXPECT_EQ(pair_dist(m1, m2), pair_dist(m2, m1));
      for (int i = 0; i < g; ++i)
        EXPECT_EQ(pair_dist(act_dist_upi(i, m1), m2), pair_dist(m1, act_dist_upi(i, m2)));
    }
  }
}

TEST(Pairing, AdjunctionRandom) {
  Ring R = Ring::scalar(3, 10);
  std::mt19937_64 rng(79);
  for (int g = 1; g <= 2; ++g) {
    Weight k = Weight::algebraic(R, g == 1 ? std::vector<i64>{2} : std::vector<i64>{1, 0});
    const int M = g == 1 ? 6 : 3, Mext = g == 1 ? 6 : 5, digits = 6;
    for (int trial = 0; trial < 3; ++trial) {
      Xi a = random_xi(g, R, rng);
      auto m1 = random_distribution(k, M, rng), m2 = random_distribution(k, M, rng);
      RingElem lhs = pair_dist(act_dist_xi(a, m1, Mext), m2);
      RingElem rhs = pair_dist(m1, act_dist_xi(sharp_involution(a), m2, Mext));
      EXPECT_TRUE(agrees(lhs, rhs, digits)) << lhs << " vs " << rhs;
    }
  }
}

TEST(Pairing, DiracPairsAreIntegral) {
  Ring R = Ring::scalar(5, 8);
  Weight k = Weight::algebraic(R, {2, 2});
  std::mt19937_64 rng(83);
  for (int trial = 0; trial < 5; ++trial) {
    auto x = random_t0_point(2, R, rng, true), y = random_t0_point(2, R, rng, true);
    EXPECT_GE(pair_dist(dirac(x, k, 3), dirac(y, k, 3)).valuation(), 0);
  }
}

TEST(Pairing, TruncationConvergence) {
  Ring R = Ring::scalar(3, 10);
  Weight k = Weight::algebraic(R, {0});
  k.comps[0].s = RingElem::from_rational(R, 1, 2);
  std::mt19937_64 rng(89);
  for (int M = 2; M <= 5; ++M) {
    auto m1 = random_distribution(k, M + 1, rng), m2 = random_distribution(k, M + 1, rng);
    RingElem hi = pair_dist(m1, m2), lo = pair_dist(m1.truncate(M), m2.truncate(M));
    EXPECT_GE((hi - lo).valuation(), M + 1);
  }
}

TEST(Pairing, TruncationMismatch) {
  Ring R = Ring::scalar(3, 8);
  Weight k = Weight::algebraic(R, {1});
  PairKernel K = pair_kernel(k, 2, 2);
  try {
    pair_dist(Distribution::zero(k, 3), Distribution::zero(k, 2), K);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::TruncationMismatch);
  }
}

TEST(AlgModel, WeylDimension) {
  EXPECT_EQ(weyl_dimension({5}), 6);
  EXPECT_EQ(weyl_dimension({1, 0}), 4);
  EXPECT_EQ(weyl_dimension({1, 1}), 5);
  EXPECT_EQ(weyl_dimension({2, 0}), 10);
  EXPECT_EQ(weyl_dimension({2, 1}), 16);
  EXPECT_EQ(weyl_dimension({1, 0, 0}), 6);
}

TEST(AlgModel, GenusOneTrivialWeight) {
  Ring R = Ring::scalar(3, 10);
  AlgModel am = alg_model(Weight::algebraic(R, {0}));
  EXPECT_EQ(am.dim, 1);
  EXPECT_EQ(am.gram(0, 0), I(R, 1));
  EXPECT_TRUE(am.nondegenerate);
}

TEST(AlgModel, GenusOneGramIsDiagonal) {
  Ring R = Ring::scalar(11, 13);
  for (i64 kk = 0; kk <= 10; ++kk) {
    AlgModel am = alg_model(Weight::algebraic(R, {kk}));
    ASSERT_EQ(am.dim, kk + 1);
    int expect_val = 0;
    for (int i = 0; i <= kk; ++i) {
      expect_val += i;
      for (int j = 0; j <= kk; ++j)
        EXPECT_EQ(am.gram(i, j), i == j ? RingElem::from_big(R, binom(kk, i)).mul_p(i) : I(R, 0));
    }
    EXPECT_EQ(am.det_valuation, expect_val);
    EXPECT_TRUE(am.nondegenerate);
  }
}

TEST(AlgModel, GenusTwoStandard) {
  Ring R = Ring::scalar(3, 12);
  AlgModel am = alg_model(Weight::algebraic(R, {1, 0}));
  EXPECT_EQ(am.dim, 4);
  EXPECT_TRUE(am.nondegenerate);
  EXPECT_EQ(am.basis().size(), 4u);
}

TEST(AlgModel, RejectsNonDominant) {
  Ring R = Ring::scalar(3, 12);
  try {
    alg_model(Weight::algebraic(R, {0, 1}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NotDominant);
  }
}

TEST(AlgModel, GenusTwoRanksMatchWeyl) {
  Ring R = Ring::scalar(3, 12);
  for (auto kv : std::vector<std::vector<i64>>{{1, 0}, {1, 1}, {2, 0}, {2, 1}}) {
    AlgModel am = alg_model(Weight::algebraic(R, kv));
    EXPECT_EQ(am.dim, am.weyl_dim);
    EXPECT_TRUE(am.nondegenerate);
    EXPECT_EQ(am.gram.rows(), am.dim);
    for (int a = 0; a < am.dim; ++a)
      for (int b = 0; b < am.dim; ++b) EXPECT_EQ(am.gram(a, b), am.gram(b, a));
  }
}

TEST(AlgModel, PairingFactorsThroughDual) {
  // Moments above the degree bound never contribute.
  Ring R = Ring::scalar(5, 8);
  Weight k = Weight::algebraic(R, {2});
  AlgModel am = alg_model(k);
  std::mt19937_64 rng(97);
  auto m1 = random_distribution(k, 6, rng), m2 = random_distribution(k, 6, rng);
  EXPECT_EQ(alg_pair(am, m1, m2), pair_dist(m1, m2));
}
