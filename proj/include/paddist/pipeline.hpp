#pragma once
// End-to-end chain from modular symbols to ramification verdicts: the slope <= h parabolic part
// with algebraic coefficients, split by the involution iota into plus and minus parts, the Hecke
// algebra acting on both, the cup pairing between them and the L-ideal at every rational point.
//
// The chain runs on the fiber at an algebraic weight k. The overconvergent side enters through
// the control comparison, which must report equal dimensions before anything else is computed.

#include <string>
#include <vector>

#include "paddist/eigenalg.hpp"
#include "paddist/modsym.hpp"

namespace paddist {

struct ModsymChainConfig {
  i64 N = 4, p = 3, k = 0;
  Rational h{0};
  int M = 4;
  int cap = 20;
  /// Primes for T_q; empty selects the two least primes prime to N p.
  std::vector<i64> hecke_primes;
};

struct ChainPoint {
  Point point;
  RamificationReport report;
};

struct ModsymChainResult {
  ControlReport control;
  std::vector<i64> hecke_primes;
  int ambient_dim = 0, boundary_dim = 0, parabolic_dim = 0;
  int slope_dim = 0, plus_dim = 0, minus_dim = 0;
  /// Operators on the slope part (order: U_p, then T_q for each prime, then iota).
  std::vector<Matrix> slope_ops;
  std::vector<std::string> op_names;
  /// Present when the slope part is nonzero.
  std::optional<PairedModule> bundle;
  std::vector<ChainPoint> points;
  /// Trusted digits of every reported entry.
  int precision = 0;
};

namespace detail {
/// Independent columns of X (chosen by elimination on the transpose).
inline Matrix column_basis(const Matrix& X, const Ring& R) {
  if (X.cols() == 0) return X;
  EliminationOptions opt;
  opt.floor = R.cap_p - std::max(1, R.cap_p / 3);
  opt.strict = false;
  Elimination el = eliminate(X.transpose(), opt);
  std::vector<int> cols;
  for (auto& pv : el.pivots) cols.push_back(pv.row);
  std::sort(cols.begin(), cols.end());
  Matrix out = zero_matrix(X.rows(), static_cast<int>(cols.size()), R);
  for (size_t c = 0; c < cols.size(); ++c)
    for (int r = 0; r < X.rows(); ++r) out(r, static_cast<int>(c)) = X(r, cols[c]);
  return out;
}

inline Matrix block_diagonal(const Matrix& a, const Matrix& b, const Ring& R) {
  Matrix out = zero_matrix(a.rows() + b.rows(), a.cols() + b.cols(), R);
  out.set_block(0, 0, a);
  out.set_block(a.rows(), a.cols(), b);
  return out;
}

inline std::vector<i64> default_hecke_primes(i64 Np) {
  std::vector<i64> out;
  for (i64 q = 2; out.size() < 2; ++q)
    if (is_prime_i64(q) && Np % q != 0) out.push_back(q);
  return out;
}
}  // namespace detail

inline ModsymChainResult modsym_chain(const ModsymChainConfig& cfg) {
  auto T = std::make_shared<const CosetTable>(manin_presentation(cfg.N, cfg.p));
  const Ring R = Ring::scalar(cfg.p, cfg.cap);
  ModsymChainResult out;
  out.control = control_check(T, R, cfg.k, cfg.h, cfg.M);
  if (!out.control.equal())
    fail(Errc::PrecisionExhausted, "overconvergent and algebraic slope parts differ in dimension");
  out.hecke_primes = cfg.hecke_primes.empty() ? detail::default_hecke_primes(cfg.N * cfg.p) : cfg.hecke_primes;
  for (i64 q : out.hecke_primes)
    if (!is_prime_i64(q) || (cfg.N * cfg.p) % q == 0) fail(Errc::BadPrime, "T_q needs a prime q prime to N p");

  CoeffModule alg = CoeffModule::algebraic(Weight::algebraic(R, {cfg.k}));
  out.precision = alg.precision();
  SymbSpace S = symb_space(T, alg);
  ParabolicSpace P = parabolic_quotient(S);
  out.ambient_dim = S.dim(), out.boundary_dim = P.boundary_dim(), out.parabolic_dim = P.dim();

  Matrix U = P.hecke(HeckeOp::U());
  SlopeSubspace K = slope_subspace(U, alg, cfg.h);
  out.slope_dim = K.dim();
  if (out.slope_dim != out.control.dim_algebraic)
    fail(Errc::RankMismatch, "slope part differs from the control comparison");
  if (K.dim() == 0) return out;

  std::vector<Matrix> ops{K.op};
  out.op_names.push_back("U_" + std::to_string(cfg.p));
  for (i64 q : out.hecke_primes) {
    ops.push_back(restrict_operator(P.hecke(HeckeOp::T(q)), K.coords));
    out.op_names.push_back("T_" + std::to_string(q));
  }
  Matrix J = restrict_operator(P.hecke(HeckeOp::star()), K.coords);
  out.slope_ops = ops;
  out.slope_ops.push_back(J);
  out.op_names.push_back("iota");

  const int s = K.dim();
  Matrix I = identity_matrix(s, R);
  Matrix Vp = detail::column_basis(I + J, R), Vm = detail::column_basis(I - J, R);
  out.plus_dim = Vp.cols(), out.minus_dim = Vm.cols();
  if (out.plus_dim + out.minus_dim != s) fail(Errc::RankMismatch, "iota does not split the slope part");

  // The Hecke algebra acting on both signs at once, so one basis serves both modules.
  std::vector<Matrix> blocks;
  for (auto& A : ops) blocks.push_back(detail::block_diagonal(restrict_operator(A, Vp), restrict_operator(A, Vm), R));
  FiniteAlgebra B = algebra_from_operators(R, blocks);
  PairedModule pm{B, {}, {}, {}};
  for (auto& E : B.basis_ops) {
    pm.act_M.push_back(E.block(0, 0, out.plus_dim, out.plus_dim));
    pm.act_N.push_back(E.block(out.plus_dim, out.plus_dim, out.minus_dim, out.minus_dim));
  }
  Matrix Lp = P.lift_symbols(K.coords * Vp), Lm = P.lift_symbols(K.coords * Vm);
  pm.gram = Lp.transpose() * cup_form(S) * Lm;
  pm.validate();
  out.bundle = pm;
  if (out.plus_dim == 0 || out.minus_dim == 0) return out;
  for (Point& x : enumerate_points(B)) out.points.push_back({x, ramification_report(pm, x)});
  return out;
}

}  // namespace paddist
