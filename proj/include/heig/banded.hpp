#ifndef HEIG_BANDED_HPP
#define HEIG_BANDED_HPP

#include <vector>

#include "heig/types.hpp"

namespace heig {

// Square banded matrix with explicit storage of both triangles, so that
// almost-symmetric inputs (e.g. from files) can be represented and checked.
// Entry (i, j) is stored iff |i - j| <= bandwidth.
class BandedMatrix {
 public:
  BandedMatrix() = default;
  BandedMatrix(Index n, Index bandwidth);

  Index size() const { return n_; }
  Index bandwidth() const { return bandwidth_; }

  double at(Index i, Index j) const;       // 0 outside the band
  void set(Index i, Index j, double v);    // throws outside the band
  void set_sym(Index i, Index j, double v);

  bool in_band(Index i, Index j) const;

  // max |A(i,j) - A(j,i)| over the band
  double asymmetry() const;
  double max_abs() const;

  Vector diagonal() const;
  Vector matvec(const Vector& x) const;
  Matrix to_dense() const;

  static BandedMatrix from_dense(const Matrix& m, Index bandwidth);

 private:
  Index n_ = 0;
  Index bandwidth_ = 0;
  // stride_(d + bandwidth, j) = A(j + d, j), d in [-bandwidth, bandwidth]
  Matrix store_;
};

}  // namespace heig

#endif
