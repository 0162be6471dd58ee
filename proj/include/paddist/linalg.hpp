#pragma once
// Valuation-pivoted elimination over RingElem: rank, kernels and linear solves.
//
// Pivots are chosen by least valuation (then least row, then least column), preferring entries
// that are invertible in the coefficient ring. With this choice every multiplier is integral, so
// Schur complements keep the absolute precision of the input.

#include <numeric>

#include "paddist/matrix.hpp"

namespace paddist {

struct Pivot {
  int row, col, val;
};

struct EliminationOptions {
  /// Entries of valuation >= floor (minus accumulated pivot valuations when `adaptive`) count as zero.
  int floor = kInfVal;
  bool adaptive = false;
  /// Raise PrecisionExhausted instead of ignoring entries that fall below the floor.
  bool strict = false;
  /// Only columns < pivot_cols may carry pivots (all columns are updated).
  int pivot_cols = -1;
};

struct Elimination {
  Matrix reduced;
  std::vector<Pivot> pivots;
  int rank() const { return static_cast<int>(pivots.size()); }
  int valuation_sum() const {
    int s = 0;
    for (auto& p : pivots) s += p.val;
    return s;
  }
};

inline Elimination eliminate(Matrix A, const EliminationOptions& opt = {}) {
  const int n = A.rows(), m = A.cols();
  const int pc = opt.pivot_cols < 0 ? m : opt.pivot_cols;
  std::vector<bool> rdone(n, false), cdone(m, false);
  Elimination res;
  int acc = 0;
  while (true) {
    int bi = -1, bj = -1, bv = kInfVal;
    bool binv = false;
    for (int i = 0; i < n; ++i) {
      if (rdone[i]) continue;
      for (int j = 0; j < pc; ++j) {
        if (cdone[j] || A(i, j).is_zero()) continue;
        int v = A(i, j).valuation();
        bool inv = has_dominant_constant(A(i, j));
        if ((inv && !binv) || (inv == binv && v < bv)) bv = v, bi = i, bj = j, binv = inv;
      }
    }
    if (bi < 0) break;
    const int fl = opt.adaptive ? opt.floor - acc : opt.floor;
    if (bv >= fl || !binv) {
      if (opt.strict) fail(Errc::PrecisionExhausted, "remaining entries cannot be told apart from zero");
      break;
    }
    res.pivots.push_back({bi, bj, bv});
    acc += bv;
    rdone[bi] = cdone[bj] = true;
    RingElem inv = A(bi, bj).inv();
    for (int i = 0; i < n; ++i) {
      if (rdone[i] || A(i, bj).is_zero()) continue;
      RingElem f = A(i, bj) * inv;
      for (int j = 0; j < m; ++j)
        if (!cdone[j] && !A(bi, j).is_zero()) A(i, j) -= f * A(bi, j);
      A(i, bj) = RingElem::zero(A(i, bj).ring());
    }
  }
  res.reduced = std::move(A);
  return res;
}

namespace detail {
// Back substitution: given values of the non-pivot variables, fill in the pivot variables so that
// every pivot row of the reduced system vanishes. `rhs[row]` is moved to the right-hand side.
inline void back_substitute(const Elimination& el, std::vector<RingElem>& x, const std::vector<RingElem>* rhs) {
  const Matrix& A = el.reduced;
  std::vector<int> order(A.cols(), -1);
  for (size_t k = 0; k < el.pivots.size(); ++k) order[el.pivots[k].col] = static_cast<int>(k);
  for (int k = el.rank() - 1; k >= 0; --k) {
    const Pivot& pv = el.pivots[k];
    RingElem s = rhs ? (*rhs)[pv.row] : RingElem::zero(A(0, 0).ring());
    for (int j = 0; j < A.cols(); ++j) {
      if (j == pv.col || (order[j] >= 0 && order[j] < k)) continue;
      if (!A(pv.row, j).is_zero()) s -= A(pv.row, j) * x[j];
    }
    x[pv.col] = s * A(pv.row, pv.col).inv();
  }
}
}  // namespace detail

/// Basis of the right kernel {x : A x = 0}, one column per free variable; vectors are made primitive.
inline Matrix kernel_basis(const Matrix& A, const EliminationOptions& opt = {}) {
  Elimination el = eliminate(A, opt);
  const int m = A.cols();
  const Ring& R = A(0, 0).ring();
  std::vector<bool> piv(m, false);
  for (auto& p : el.pivots) piv[p.col] = true;
  std::vector<std::vector<RingElem>> vecs;
  for (int f = 0; f < m; ++f) {
    if (piv[f]) continue;
    std::vector<RingElem> x(m, RingElem::zero(R));
    x[f] = RingElem::one(R);
    detail::back_substitute(el, x, nullptr);
    int v = kInfVal;
    for (auto& e : x)
      if (!e.is_zero()) v = std::min(v, e.valuation());
    if (v != 0 && v < kInfVal)
      for (auto& e : x) e = e.mul_p(-v);
    vecs.push_back(x);
  }
  Matrix K = zero_matrix(m, static_cast<int>(vecs.size()), R);
  for (size_t c = 0; c < vecs.size(); ++c)
    for (int r = 0; r < m; ++r) K(r, static_cast<int>(c)) = vecs[c][r];
  return K;
}

/// Solves A X = B for square invertible A (RankMismatch when A is singular at precision).
inline Matrix solve(const Matrix& A, const Matrix& B) {
  const int n = A.rows();
  if (A.cols() != n || B.rows() != n) fail(Errc::InvalidArgument, "solve: shape mismatch");
  const Ring& R = A(0, 0).ring();
  Matrix AB = zero_matrix(n, n + B.cols(), R);
  AB.set_block(0, 0, A);
  AB.set_block(0, n, B);
  EliminationOptions opt;
  opt.pivot_cols = n;
  Elimination el = eliminate(AB, opt);
  if (el.rank() != n) fail(Errc::RankMismatch, "matrix is singular at working precision");
  Matrix X = zero_matrix(n, B.cols(), R);
  Elimination sq{el.reduced.block(0, 0, n, n), el.pivots};
  for (int c = 0; c < B.cols(); ++c) {
    std::vector<RingElem> rhs(n), x(n, RingElem::zero(R));
    for (int r = 0; r < n; ++r) rhs[r] = el.reduced(r, n + c);
    detail::back_substitute(sq, x, &rhs);
    for (int r = 0; r < n; ++r) X(r, c) = x[r];
  }
  return X;
}

/// Valuation of the determinant of a square matrix (kInfVal when singular at precision).
inline int det_valuation(const Matrix& A) {
  Elimination el = eliminate(A);
  return el.rank() == A.rows() ? el.valuation_sum() : kInfVal;
}

}  // namespace paddist
