#pragma once
// Small dense matrices over RingElem or Series.

#include <vector>

#include "paddist/series.hpp"

namespace paddist {

template <class T>
class Mat {
 public:
  Mat() = default;
  Mat(int rows, int cols, const T& fill) : r_(rows), c_(cols), a_(static_cast<size_t>(rows) * cols, fill) {}

  static Mat identity(int n, const T& zero, const T& one) {
    Mat m(n, n, zero);
    for (int i = 0; i < n; ++i) m(i, i) = one;
    return m;
  }

  int rows() const { return r_; }
  int cols() const { return c_; }
  T& operator()(int i, int j) { return a_[static_cast<size_t>(i) * c_ + j]; }
  const T& operator()(int i, int j) const { return a_[static_cast<size_t>(i) * c_ + j]; }

  Mat operator*(const Mat& o) const {
    if (c_ != o.r_) fail(Errc::InvalidArgument, "matrix shape mismatch in product");
    Mat m(r_, o.c_, zero_of_());
    for (int i = 0; i < r_; ++i)
      for (int k = 0; k < c_; ++k) {
        const T& x = (*this)(i, k);
        if (is_zero_elem(x)) continue;
        for (int j = 0; j < o.c_; ++j) m(i, j) += x * o(k, j);
      }
    return m;
  }
  Mat operator+(const Mat& o) const {
    shape_check_(o);
    Mat m(*this);
    for (size_t i = 0; i < a_.size(); ++i) m.a_[i] += o.a_[i];
    return m;
  }
  Mat operator-(const Mat& o) const {
    shape_check_(o);
    Mat m(*this);
    for (size_t i = 0; i < a_.size(); ++i) m.a_[i] -= o.a_[i];
    return m;
  }
  Mat operator-() const {
    Mat m(*this);
    for (auto& x : m.a_) x = -x;
    return m;
  }
  Mat transpose() const {
    Mat m(c_, r_, zero_of_());
    for (int i = 0; i < r_; ++i)
      for (int j = 0; j < c_; ++j) m(j, i) = (*this)(i, j);
    return m;
  }
  Mat scaled(const T& s) const {
    Mat m(*this);
    for (auto& x : m.a_) x = x * s;
    return m;
  }
  Mat mul_p(int k) const {
    Mat m(*this);
    for (auto& x : m.a_) x = paddist::mul_p(x, k);
    return m;
  }
  Mat block(int i0, int j0, int nr, int nc) const {
    Mat m(nr, nc, zero_of_());
    for (int i = 0; i < nr; ++i)
      for (int j = 0; j < nc; ++j) m(i, j) = (*this)(i0 + i, j0 + j);
    return m;
  }
  void set_block(int i0, int j0, const Mat& b) {
    for (int i = 0; i < b.rows(); ++i)
      for (int j = 0; j < b.cols(); ++j) (*this)(i0 + i, j0 + j) = b(i, j);
  }
  bool is_zero() const {
    for (auto& x : a_)
      if (!is_zero_elem(x)) return false;
    return true;
  }
  const std::vector<T>& data() const { return a_; }

 private:
  T zero_of_() const { return a_.empty() ? T() : a_[0] - a_[0]; }
  void shape_check_(const Mat& o) const {
    if (r_ != o.r_ || c_ != o.c_) fail(Errc::InvalidArgument, "matrix shape mismatch");
  }
  int r_ = 0, c_ = 0;
  std::vector<T> a_;
};

using Matrix = Mat<RingElem>;

inline Matrix zero_matrix(int r, int c, const Ring& R) { return Matrix(r, c, RingElem::zero(R)); }
inline Matrix identity_matrix(int n, const Ring& R) {
  return Matrix::identity(n, RingElem::zero(R), RingElem::one(R));
}
inline Matrix matrix_from_ints(const Ring& R, const std::vector<std::vector<i64>>& rows) {
  Matrix m(static_cast<int>(rows.size()), rows.empty() ? 0 : static_cast<int>(rows[0].size()), RingElem::zero(R));
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) m(i, j) = RingElem::from_int(R, rows[i][j]);
  return m;
}
/// Anti-diagonal identity 1anti_g.
template <class T>
Mat<T> anti_identity(int g, const T& zero, const T& one) {
  Mat<T> m(g, g, zero);
  for (int i = 0; i < g; ++i) m(i, g - 1 - i) = one;
  return m;
}

template <class T>
bool matrices_agree(const Mat<T>& a, const Mat<T>& b, int digits) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      if ((a(i, j) - b(i, j)).valuation() < digits) return false;
  return true;
}

/// Lift every entry of a scalar matrix into the algebra of `proto` (scalar or series).
template <class T>
Mat<T> lift_matrix(const Matrix& m, const T& proto) {
  Mat<T> out(m.rows(), m.cols(), const_like(proto, RingElem::zero(proto.ring())));
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) out(i, j) = const_like(proto, m(i, j));
  return out;
}

/// Unit-pivot LU: M = L * diag(D) * U with L lower and U upper unipotent. Pivots must be invertible.
template <class T>
struct LUResult {
  Mat<T> L;
  std::vector<T> D;
  Mat<T> U;
};

template <class T>
LUResult<T> lu_unit(const Mat<T>& M, Errc on_bad_pivot) {
  const int n = M.rows();
  if (M.cols() != n) fail(Errc::InvalidArgument, "LU of a non-square matrix");
  T zero = M(0, 0) - M(0, 0);
  T one = const_like(zero, RingElem::one(zero.ring()));
  Mat<T> A = M;
  Mat<T> L = Mat<T>::identity(n, zero, one);
  for (int k = 0; k < n; ++k) {
    RingElem piv = constant_part(A(k, k));
    if (!piv.is_invertible() || (!piv.ring().is_disk() && piv.valuation() != 0))
      fail(on_bad_pivot, "pivot is not a unit");
    T inv = inverse(A(k, k));
    for (int i = k + 1; i < n; ++i) {
      T f = A(i, k) * inv;
      L(i, k) = f;
      if (is_zero_elem(f)) continue;
      for (int j = k; j < n; ++j) A(i, j) -= f * A(k, j);
    }
  }
  std::vector<T> D;
  Mat<T> U = Mat<T>::identity(n, zero, one);
  for (int k = 0; k < n; ++k) {
    D.push_back(A(k, k));
    T inv = inverse(A(k, k));
    for (int j = k + 1; j < n; ++j) U(k, j) = A(k, j) * inv;
  }
  return {L, D, U};
}

/// Inverse of a unipotent lower-triangular matrix by forward substitution.
template <class T>
Mat<T> unipotent_lower_inverse(const Mat<T>& L) {
  const int n = L.rows();
  T zero = L(0, 0) - L(0, 0);
  T one = const_like(zero, RingElem::one(zero.ring()));
  Mat<T> X = Mat<T>::identity(n, zero, one);
  for (int j = 0; j < n; ++j)
    for (int i = j + 1; i < n; ++i) {
      T s = zero;
      for (int k = j; k < i; ++k) s += L(i, k) * X(k, j);
      X(i, j) = -s;
    }
  return X;
}

/// General inverse via LU with unit pivots.
template <class T>
Mat<T> unit_lu_inverse(const Mat<T>& M, Errc on_bad_pivot) {
  auto lu = lu_unit(M, on_bad_pivot);
  const int n = M.rows();
  Mat<T> Linv = unipotent_lower_inverse(lu.L);
  Mat<T> Uinv = unipotent_lower_inverse(lu.U.transpose()).transpose();
  Mat<T> Dinv(n, n, lu.D[0] - lu.D[0]);
  for (int i = 0; i < n; ++i) Dinv(i, i) = inverse(lu.D[i]);
  return Uinv * Dinv * Linv;
}

template <class T>
T determinant_lu(const Mat<T>& M, Errc on_bad_pivot) {
  auto lu = lu_unit(M, on_bad_pivot);
  T d = lu.D[0];
  for (size_t i = 1; i < lu.D.size(); ++i) d = d * lu.D[i];
  return d;
}

}  // namespace paddist
