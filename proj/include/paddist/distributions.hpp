#pragma once
// Truncated kappa-homogeneous distributions on T_0, stored as moments against the chart
// monomials x^i of T_00 (total degree <= M; higher moments are taken to be zero).

#include <optional>
#include <random>

#include "paddist/groups.hpp"
#include "paddist/weights.hpp"

namespace paddist {

struct Distribution {
  Weight kappa;
  int M = 0;
  SpacePtr idx;
  std::vector<RingElem> mom;

  int g() const { return kappa.g; }
  int d0() const { return kappa.g * kappa.g; }
  const Ring& ring() const { return kappa.ring; }
  int size() const { return static_cast<int>(mom.size()); }

  static Distribution zero(const Weight& k, int M) {
    if (M < 0) fail(Errc::InvalidArgument, "negative truncation");
    Distribution d;
    d.kappa = k;
    d.M = M;
    d.idx = SeriesSpace::single(k.g * k.g, M);
    d.mom.assign(d.idx->size(), RingElem::zero(k.ring));
    return d;
  }
  const RingElem& moment(const std::vector<int>& e) const {
    int i = idx->index_of(e);
    if (i < 0) fail(Errc::IndexOutOfRange, "moment index beyond truncation");
    return mom[i];
  }
  RingElem& moment(const std::vector<int>& e) {
    int i = idx->index_of(e);
    if (i < 0) fail(Errc::IndexOutOfRange, "moment index beyond truncation");
    return mom[i];
  }
  /// Keep moments of degree <= M2 (or pad with zeros when M2 > M).
  Distribution truncate(int M2) const {
    Distribution d = zero(kappa, M2);
    for (int i = 0; i < size(); ++i) {
      int j = d.idx->index_of(idx->exps(i));
      if (j >= 0) d.mom[j] = mom[i];
    }
    return d;
  }
  Distribution operator+(const Distribution& o) const {
    check_compatible(o);
    Distribution d(*this);
    for (int i = 0; i < size(); ++i) d.mom[i] += o.mom[i];
    return d;
  }
  Distribution operator-(const Distribution& o) const {
    check_compatible(o);
    Distribution d(*this);
    for (int i = 0; i < size(); ++i) d.mom[i] -= o.mom[i];
    return d;
  }
  Distribution operator*(const RingElem& c) const {
    Distribution d(*this);
    for (auto& m : d.mom) m = m * c;
    return d;
  }
  void check_compatible(const Distribution& o) const {
    if (M != o.M) fail(Errc::TruncationMismatch, "distributions truncated at different degrees");
    if (ring() != o.ring() || g() != o.g()) fail(Errc::RingMismatch, "distributions over different rings");
  }
  bool agrees_with(const Distribution& o, int digits) const {
    if (M != o.M) return false;
    for (int i = 0; i < size(); ++i)
      if ((mom[i] - o.mom[i]).valuation() < digits) return false;
    return true;
  }
  int valuation() const {
    int v = kInfVal;
    for (auto& m : mom) v = std::min(v, m.valuation());
    return v;
  }
};

namespace detail {
// Values f_j = kappa(diag) * chart^j for all monomials j of `out`, as series.
inline std::vector<Series> monomial_images(const std::vector<Series>& chart, const Series& kap, const SpacePtr& out) {
  std::vector<Series> f(out->size());
  f[0] = kap;
  for (int j = 1; j < out->size(); ++j) {
    std::vector<int> e = out->exps(j);
    int v = 0;
    while (e[v] == 0) ++v;
    e[v] -= 1;
    f[j] = f[out->index_of(e)] * chart[v];
  }
  return f;
}
inline std::vector<Series> chart_variables(const SpacePtr& sp, const Ring& R, int first, int count) {
  std::vector<Series> v;
  for (int k = 0; k < count; ++k) v.push_back(Series::variable(sp, R, first + k));
  return v;
}
}  // namespace detail

/// delta_x: moments kappa(b) * chart(x)^i where x = (chart point) * b.
inline Distribution dirac(const T0Point& x, const Weight& k, int M) {
  if (x.g() != k.g) fail(Errc::InvalidArgument, "genus mismatch");
  check_t0(x);
  auto nf = t0_normal_form(x);
  auto flat = nf.chart.flat();
  Distribution d = Distribution::zero(k, M);
  RingElem kb = eval_weight(k, nf.diag);
  std::vector<RingElem> ch;
  for (auto& c : flat) ch.push_back(c.embed(k.ring));
  for (int i = 0; i < d.size(); ++i) {
    RingElem t = kb;
    const auto& e = d.idx->exps(i);
    for (size_t v = 0; v < e.size(); ++v)
      if (e[v] > 0) t *= ch[v].pow(e[v]);
    d.mom[i] = t;
  }
  return d;
}

/// Matrix of alpha on moments: (alpha . mu)_j = sum_n A(j, n) mu_n for mu truncated at M_in,
/// output truncated at M_out.
inline Matrix action_matrix(const Xi& a, const Weight& k, int M_in, int M_out) {
  a.validate();
  const int g = k.g, d0 = g * g;
  if (a.g() != g) fail(Errc::InvalidArgument, "genus mismatch");
  const Ring& R = k.ring;
  SpacePtr sp = SeriesSpace::single(d0, M_in);
  auto vars = detail::chart_variables(sp, R, 0, d0);
  auto ch = ChartCoords<Series>::from_flat(g, vars);
  Series proto(sp, R);
  Xi aR = a;
  if (a.ring() != R) {
    auto emb = [&](const Matrix& m) {
      Matrix o = zero_matrix(m.rows(), m.cols(), R);
      for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) o(i, j) = m(i, j).embed(R);
      return o;
    };
    aR = {emb(a.A), emb(a.B), emb(a.Ct), emb(a.D)};
  }
  auto y = act_xi(aR, t00_point(g, ch, proto));
  auto nf = t0_normal_form(y);
  Series kap = eval_weight(k, nf.diag);
  SpacePtr out = SeriesSpace::single(d0, M_out);
  auto f = detail::monomial_images(nf.chart.flat(), kap, out);
  Matrix A = zero_matrix(out->size(), sp->size(), R);
  for (int j = 0; j < out->size(); ++j)
    for (int n = 0; n < sp->size(); ++n) A(j, n) = f[j][n];
  return A;
}

/// alpha . mu for alpha in Xi, with output truncated at M_out (default: the input truncation).
inline Distribution act_dist_xi(const Xi& a, const Distribution& mu, std::optional<int> M_out = std::nullopt) {
  Matrix A = action_matrix(a, mu.kappa, mu.M, M_out.value_or(mu.M));
  Distribution out = Distribution::zero(mu.kappa, M_out.value_or(mu.M));
  for (int j = 0; j < out.size(); ++j) {
    RingElem acc = RingElem::zero(mu.ring());
    for (int n = 0; n < mu.size(); ++n)
      if (!A(j, n).is_zero()) acc.add_mul(A(j, n), mu.mom[n]);
    out.mom[j] = acc;
  }
  return out;
}

/// u_{p,i} . mu: diagonal on moments, (u mu)_n = p^{<e, n>} mu_n.
inline Distribution act_dist_upi(int i, const Distribution& mu, std::optional<int> M_out = std::nullopt) {
  const int g = mu.g();
  auto ex = upi_chart_exponents(g, i);
  Distribution out = mu.truncate(M_out.value_or(mu.M));
  for (int n = 0; n < out.size(); ++n) {
    const auto& e = out.idx->exps(n);
    int s = 0;
    for (size_t v = 0; v < e.size(); ++v) s += e[v] * ex[v];
    out.mom[n] = out.mom[n].mul_p(s);
  }
  return out;
}

/// Convolution on T_00 = U^opp: (mu1 * mu2)(f) = integral of f(x y).
inline Distribution convolve(const Distribution& m1, const Distribution& m2) {
  m1.check_compatible(m2);
  const int g = m1.g(), d0 = m1.d0(), M = m1.M;
  const Ring& R = m1.ring();
  SpacePtr sp = SeriesSpace::get({{d0, M}, {d0, M}});
  Series proto(sp, R);
  auto x = t00_point(g, ChartCoords<Series>::from_flat(g, detail::chart_variables(sp, R, 0, d0)), proto);
  auto y = t00_point(g, ChartCoords<Series>::from_flat(g, detail::chart_variables(sp, R, d0, d0)), proto);
  Series z = Series(sp, R), o = Series::constant(sp, RingElem::one(R));
  Mat<Series> E = anti_identity(g, z, o);
  Mat<Series> D1 = E * unipotent_lower_inverse(x.gamma).transpose() * E;
  T0PointT<Series> xy{x.gamma * y.gamma, x.ups * y.gamma + D1 * y.ups};
  auto nf = t0_normal_form(xy);
  Series kap = eval_weight(m1.kappa, nf.diag);
  Distribution out = Distribution::zero(m1.kappa, M);
  auto f = detail::monomial_images(nf.chart.flat(), kap, out.idx);
  // Split each two-group monomial into (n, m).
  std::vector<std::pair<int, int>> split(sp->size());
  for (int t = 0; t < sp->size(); ++t) {
    const auto& e = sp->exps(t);
    std::vector<int> a(e.begin(), e.begin() + d0), b(e.begin() + d0, e.end());
    split[t] = {m1.idx->index_of(a), m1.idx->index_of(b)};
  }
  for (int j = 0; j < out.size(); ++j) {
    RingElem acc = RingElem::zero(R);
    for (int t = 0; t < sp->size(); ++t) {
      if (f[j][t].is_zero()) continue;
      acc += f[j][t] * m1.mom[split[t].first] * m2.mom[split[t].second];
    }
    out.mom[j] = acc;
  }
  return out;
}

/// log_p of an r-norm; `zero` marks the zero distribution (norm 0).
struct LogNorm {
  bool zero = false;
  Rational log_p{0};
};

namespace detail {
// Row n: coefficients of binom(x, n) = sum_k c_{n,k} x^k, i.e. s(n,k)/n!.
inline std::vector<std::vector<RingElem>> mahler_rows(const Ring& R, int M) {
  std::vector<std::vector<BigInt>> s(M + 1, std::vector<BigInt>(M + 1, 0));
  s[0][0] = 1;
  for (int n = 0; n < M; ++n)
    for (int k = 0; k <= n; ++k) {
      s[n + 1][k + 1] += s[n][k];
      s[n + 1][k] -= BigInt(n) * s[n][k];
    }
  std::vector<std::vector<RingElem>> rows(M + 1);
  BigInt fact = 1;
  for (int n = 0; n <= M; ++n) {
    if (n > 0) fact *= n;
    for (int k = 0; k <= n; ++k) rows[n].push_back(RingElem::from_rational(R, s[n][k], fact));
  }
  return rows;
}
}  // namespace detail

/// Coefficients of mu in the chart Mahler basis: a_n = mu(prod_j binom(x_j, n_j)).
inline std::vector<RingElem> mahler_coefficients(const Distribution& mu) {
  auto rows = detail::mahler_rows(mu.ring(), mu.M);
  std::vector<RingElem> a(mu.size(), RingElem::zero(mu.ring()));
  const int d0 = mu.d0();
  for (int n = 0; n < mu.size(); ++n) {
    const auto& en = mu.idx->exps(n);
    // Sum over k <= n coordinatewise.
    std::vector<int> k(d0, 0);
    while (true) {
      RingElem c = RingElem::one(mu.ring());
      for (int v = 0; v < d0; ++v) c *= rows[en[v]][k[v]];
      a[n] += c * mu.mom[mu.idx->index_of(k)];
      int v = 0;
      while (v < d0 && k[v] == en[v]) k[v++] = 0;
      if (v == d0) break;
      ++k[v];
    }
  }
  return a;
}

/// log_p ||mu||_r for r = p^{-rho}, rho in (0, 1] with r >= r_kappa.
inline LogNorm r_norm(const Distribution& mu, Rational rho) {
  if (rho <= 0) fail(Errc::InvalidArgument, "r must be < 1");
  if (rho > r_kappa_exponent(mu.kappa)) fail(Errc::RTooSmall, "r below r_kappa");
  auto a = mahler_coefficients(mu);
  LogNorm best{true, 0};
  for (int n = 0; n < mu.size(); ++n) {
    if (a[n].is_zero()) continue;
    Rational val = Rational(-a[n].valuation()) - rho * mu.idx->total_degree(n);
    if (best.zero || val > best.log_p) best = {false, val};
  }
  return best;
}

inline Distribution specialize_dist(const Distribution& mu, const RingElem& w0) {
  Weight k = specialize_weight(mu.kappa, w0);
  Distribution d = Distribution::zero(k, mu.M);
  for (int i = 0; i < mu.size(); ++i) d.mom[i] = specialize(mu.mom[i], w0);
  return d;
}

inline Distribution random_distribution(const Weight& k, int M, std::mt19937_64& rng) {
  Distribution d = Distribution::zero(k, M);
  for (auto& m : d.mom) {
    std::vector<i64> cs(k.ring.len());
    for (auto& c : cs) c = static_cast<i64>(rng() % static_cast<uint64_t>(k.ring.mod));
    m = RingElem::from_coeffs(k.ring, cs);
  }
  return d;
}

}  // namespace paddist
