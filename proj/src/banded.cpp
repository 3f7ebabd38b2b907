#include "heig/banded.hpp"

#include <algorithm>
#include <cmath>

namespace heig {

BandedMatrix::BandedMatrix(Index n, Index bandwidth)
    : n_(n), bandwidth_(bandwidth) {
  if (n < 0 || bandwidth < 0) throw StructuralError("banded: negative size");
  store_ = Matrix::Zero(2 * bandwidth + 1, std::max<Index>(n, 1));
}

bool BandedMatrix::in_band(Index i, Index j) const {
  return i >= 0 && j >= 0 && i < n_ && j < n_ &&
         std::abs(i - j) <= bandwidth_;
}

double BandedMatrix::at(Index i, Index j) const {
  if (!in_band(i, j)) return 0.0;
  return store_(i - j + bandwidth_, j);
}

void BandedMatrix::set(Index i, Index j, double v) {
  if (!in_band(i, j)) throw StructuralError("banded: entry outside band");
  store_(i - j + bandwidth_, j) = v;
}

void BandedMatrix::set_sym(Index i, Index j, double v) {
  set(i, j, v);
  if (i != j) set(j, i, v);
}

double BandedMatrix::asymmetry() const {
  double worst = 0.0;
  for (Index j = 0; j < n_; ++j)
    for (Index i = j + 1; i <= std::min(n_ - 1, j + bandwidth_); ++i)
      worst = std::max(worst, std::abs(at(i, j) - at(j, i)));
  return worst;
}

double BandedMatrix::max_abs() const {
  double m = 0.0;
  for (Index j = 0; j < n_; ++j)
    for (Index i = std::max<Index>(0, j - bandwidth_);
         i <= std::min(n_ - 1, j + bandwidth_); ++i)
      m = std::max(m, std::abs(at(i, j)));
  return m;
}

Vector BandedMatrix::diagonal() const {
  Vector d(n_);
  for (Index i = 0; i < n_; ++i) d(i) = at(i, i);
  return d;
}

Vector BandedMatrix::matvec(const Vector& x) const {
  if (x.size() != n_) throw StructuralError("banded matvec: dimension mismatch");
  Vector y = Vector::Zero(n_);
  for (Index j = 0; j < n_; ++j) {
    const Index lo = std::max<Index>(0, j - bandwidth_);
    const Index hi = std::min(n_ - 1, j + bandwidth_);
    for (Index i = lo; i <= hi; ++i) y(i) += at(i, j) * x(j);
  }
  return y;
}

Matrix BandedMatrix::to_dense() const {
  Matrix m = Matrix::Zero(n_, n_);
  for (Index j = 0; j < n_; ++j) {
    const Index lo = std::max<Index>(0, j - bandwidth_);
    const Index hi = std::min(n_ - 1, j + bandwidth_);
    for (Index i = lo; i <= hi; ++i) m(i, j) = at(i, j);
  }
  return m;
}

BandedMatrix BandedMatrix::from_dense(const Matrix& m, Index bandwidth) {
  if (m.rows() != m.cols()) throw StructuralError("from_dense: square required");
  BandedMatrix b(m.rows(), bandwidth);
  for (Index j = 0; j < m.cols(); ++j) {
    const Index lo = std::max<Index>(0, j - bandwidth);
    const Index hi = std::min(m.rows() - 1, j + bandwidth);
    for (Index i = lo; i <= hi; ++i) b.set(i, j, m(i, j));
  }
  return b;
}

}  // namespace heig
