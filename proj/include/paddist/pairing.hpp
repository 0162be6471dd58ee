#pragma once
// The kappa-pairing on distributions: the kernel e_kappa^hst(t gamma_2 gamma_1 + t ups_2 ups_1 / p)
// expanded in the chart coordinates of both arguments, its contraction against moments, and the
// algebraic model V^alg_k with its Gram matrix.

#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <sstream>

#include "paddist/distributions.hpp"
#include "paddist/linalg.hpp"

namespace paddist {

namespace detail {

template <class T>
T det_laplace(const Mat<T>& m) {
  const int n = m.rows();
  if (n == 1) return m(0, 0);
  T acc = m(0, 0) - m(0, 0);
  for (int c = 0; c < n; ++c) {
    if (is_zero_elem(m(0, c))) continue;
    Mat<T> minor(n - 1, n - 1, acc);
    for (int r = 1; r < n; ++r)
      for (int cc = 0, k = 0; cc < n; ++cc)
        if (cc != c) minor(r - 1, k++) = m(r, cc);
    T t = m(0, c) * det_laplace(minor);
    acc = (c % 2 == 0) ? acc + t : acc - t;
  }
  return acc;
}

/// The characters kappa_i / kappa_{i+1} (with kappa_{g+1} trivial) applied to the leading minors.
inline std::vector<WeightComponent> minor_characters(const Weight& k) {
  std::vector<WeightComponent> out;
  WeightComponent triv{0, 0, RingElem::zero(k.ring), 0};
  for (int i = 0; i < k.g; ++i) out.push_back(k.comps[i].over(i + 1 < k.g ? k.comps[i + 1] : triv));
  return out;
}

inline std::string weight_key(const Weight& k) {
  std::ostringstream os;
  os << k.ring.p << ',' << k.ring.cap_p << ',' << k.ring.cap_w << '|';
  for (auto& c : k.comps) os << c.a << ',' << c.m << ',' << c.s.to_string() << ',' << c.disk << ';';
  return os.str();
}

}  // namespace detail

/// e_kappa^hst(X) = prod_i (kappa_i / kappa_{i+1})(i-th leading principal minor of X).
inline RingElem e_hst_eval(const Weight& k, const Matrix& X) {
  if (X.rows() != k.g || X.cols() != k.g) fail(Errc::InvalidArgument, "X must be g x g");
  auto lu = lu_unit(X, Errc::NonUnitMinor);
  auto chars = detail::minor_characters(k);
  RingElem out = RingElem::one(k.ring);
  RingElem minor = RingElem::one(X(0, 0).ring());
  for (int i = 0; i < k.g; ++i) {
    minor *= lu.D[i];
    out *= eval_component(chars[i], minor, k.ring);
  }
  return out;
}

/// e_kappa^hst on a series matrix whose leading minors have constant term 1 and p-divisible tails.
inline Series e_hst_series(const Weight& k, const Mat<Series>& X) {
  auto chars = detail::minor_characters(k);
  Series out;
  for (int i = 0; i < k.g; ++i) {
    Series f = eval_component(chars[i], detail::det_laplace(X.block(0, 0, i + 1, i + 1)), k.ring);
    out = (i == 0) ? f : out * f;
  }
  return out;
}

/// K[i][j] for |i| <= M1 (first argument) and |j| <= M2 (second argument).
struct PairKernel {
  Weight kappa;
  int M1 = 0, M2 = 0;
  SpacePtr sp1, sp2;
  std::vector<RingElem> K;

  int rows() const { return sp1->size(); }
  int cols() const { return sp2->size(); }
  const RingElem& at(int i, int j) const { return K[static_cast<size_t>(i) * cols() + j]; }
};

inline PairKernel pair_kernel(const Weight& k, int M1, int M2) {
  if (M1 < 0 || M2 < 0) fail(Errc::InvalidArgument, "negative truncation");
  try {
    (void)r_kappa_exponent(k);
  } catch (const Error& e) {
    if (e.code() == Errc::NotAdapted) fail(Errc::Divergent, "kernel does not converge for a non-adapted weight");
    throw;
  }
  const int g = k.g, d0 = g * g;
  const Ring& R = k.ring;
  SpacePtr sp = SeriesSpace::get({{d0, M1}, {d0, M2}});
  Series proto(sp, R);
  auto x1 = t00_point(g, ChartCoords<Series>::from_flat(g, detail::chart_variables(sp, R, 0, d0)), proto);
  auto x2 = t00_point(g, ChartCoords<Series>::from_flat(g, detail::chart_variables(sp, R, d0, d0)), proto);
  Mat<Series> X = x2.gamma.transpose() * x1.gamma + (x2.ups.transpose() * x1.ups).mul_p(1);
  Series e = e_hst_series(k, X);
  PairKernel pk{k, M1, M2, SeriesSpace::single(d0, M1), SeriesSpace::single(d0, M2), e.coeffs()};
  return pk;
}

/// Kernels are expensive and reused; they are cached per (weight, M1, M2).
inline std::shared_ptr<const PairKernel> cached_kernel(const Weight& k, int M1, int M2) {
  static std::mutex mu;
  static std::map<std::string, std::shared_ptr<const PairKernel>> cache;
  std::string key = detail::weight_key(k) + '#' + std::to_string(M1) + ',' + std::to_string(M2);
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  auto pk = std::make_shared<const PairKernel>(pair_kernel(k, M1, M2));
  std::lock_guard<std::mutex> lock(mu);
  cache.emplace(key, pk);
  return pk;
}

/// sum_{i,j} K[i][j] mu1(x^i) mu2(x^j). A kernel built for (M2, M1) is used through its symmetry.
inline RingElem pair_dist(const Distribution& m1, const Distribution& m2, const PairKernel& K) {
  if (m1.ring() != m2.ring() || m1.ring() != K.kappa.ring || m1.g() != K.kappa.g || m2.g() != K.kappa.g)
    fail(Errc::RingMismatch, "distributions and kernel disagree on ring or genus");
  bool direct = m1.M <= K.M1 && m2.M <= K.M2;
  bool swapped = m1.M <= K.M2 && m2.M <= K.M1;
  if (!direct && !swapped) fail(Errc::TruncationMismatch, "kernel truncation too small for these distributions");
  const Ring& R = m1.ring();
  RingElem acc = RingElem::zero(R);
  for (int i = 0; i < m1.size(); ++i) {
    if (m1.mom[i].is_zero()) continue;
    RingElem row = RingElem::zero(R);
    for (int j = 0; j < m2.size(); ++j) row.add_mul(direct ? K.at(i, j) : K.at(j, i), m2.mom[j]);
    acc.add_mul(m1.mom[i], row);
  }
  return acc;
}

inline RingElem pair_dist(const Distribution& m1, const Distribution& m2) {
  if (m1.g() != m2.g() || m1.ring() != m2.ring()) fail(Errc::RingMismatch, "distributions over different rings");
  return pair_dist(m1, m2, *cached_kernel(m1.kappa, m1.M, m2.M));
}

/// Dimension of the irreducible Sp_2g representation of highest weight k (Weyl's formula).
inline i64 weyl_dimension(const std::vector<i64>& k) {
  const int g = static_cast<int>(k.size());
  BigInt num = 1, den = 1;
  std::vector<i64> l(g), r(g);
  for (int i = 0; i < g; ++i) {
    r[i] = g - i;
    l[i] = k[i] + r[i];
  }
  for (int i = 0; i < g; ++i) {
    num *= l[i];
    den *= r[i];
    for (int j = i + 1; j < g; ++j) {
      num *= (l[i] - l[j]) * (l[i] + l[j]);
      den *= (r[i] - r[j]) * (r[i] + r[j]);
    }
  }
  return static_cast<i64>(num / den);
}

/// V^alg_k restricted to the chart, with the pairing on its dual computed from the kernel.
struct AlgModel {
  Weight kappa;
  int degree = 0;                   // polynomial degree bound in each argument
  std::shared_ptr<const PairKernel> kernel;
  std::vector<int> monomials;       // S: dual-of-monomial basis indices, ascending
  int dim = 0;                      // rank of the kernel = dim V^alg_k
  i64 weyl_dim = 0;
  Matrix gram;                      // K restricted to S x S
  std::vector<int> pivot_valuations;
  int det_valuation = 0;
  bool nondegenerate = false;

  /// Polynomial functions in V^alg_k: phi_s(x) = sum_i K[i][s] x^i for s in S.
  std::vector<std::vector<RingElem>> basis() const {
    std::vector<std::vector<RingElem>> out;
    for (int s : monomials) {
      std::vector<RingElem> f;
      for (int i = 0; i < kernel->rows(); ++i) f.push_back(kernel->at(i, s));
      out.push_back(f);
    }
    return out;
  }
};

/// Algebraic model for a dominant algebraic weight k (k_1 >= ... >= k_g >= 0).
inline AlgModel alg_model(const Weight& k, int margin = 2) {
  if (!k.dominant() || k.comps.back().a < 0) fail(Errc::NotDominant, "weight must be dominant algebraic");
  AlgModel am;
  am.kappa = k;
  i64 sum = 0;
  for (auto& c : k.comps) sum += c.a;
  // Each X entry has degree <= g in either argument and e_k has total exponent sum k_i on minors.
  am.degree = static_cast<int>(k.g == 1 ? sum : k.g * sum);
  am.kernel = cached_kernel(k, am.degree, am.degree);
  const int n = am.kernel->rows();
  Matrix K = zero_matrix(n, n, k.ring);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) K(i, j) = am.kernel->at(i, j);
  EliminationOptions opt;
  opt.floor = k.ring.cap_p - margin;
  opt.strict = true;
  for (auto& pv : eliminate(K, opt).pivots) am.monomials.push_back(pv.row);
  std::sort(am.monomials.begin(), am.monomials.end());
  am.dim = static_cast<int>(am.monomials.size());
  am.weyl_dim = weyl_dimension(k.algebraic_part());
  am.gram = zero_matrix(am.dim, am.dim, k.ring);
  for (int a = 0; a < am.dim; ++a)
    for (int b = 0; b < am.dim; ++b) am.gram(a, b) = K(am.monomials[a], am.monomials[b]);
  Elimination gp = eliminate(am.gram, opt);
  for (auto& pv : gp.pivots) am.pivot_valuations.push_back(pv.val);
  am.det_valuation = gp.valuation_sum();
  am.nondegenerate = gp.rank() == am.dim && am.dim == am.weyl_dim;
  return am;
}

/// The pairing on V^alg,vee_k: distributions enter through their moments of degree <= the bound.
inline RingElem alg_pair(const AlgModel& am, const Distribution& m1, const Distribution& m2) {
  return pair_dist(m1.truncate(std::min(m1.M, am.degree)), m2.truncate(std::min(m2.M, am.degree)), *am.kernel);
}

}  // namespace paddist
