#ifndef HEIG_TEST_SUPPORT_HPP
#define HEIG_TEST_SUPPORT_HPP

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "heig/banded.hpp"
#include "heig/hodlr.hpp"

namespace heig::test {

inline Matrix random_matrix(Index rows, Index cols, Rng& rng, double sigma = 1.0) {
  std::normal_distribution<double> dist(0.0, sigma);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
  return m;
}

inline Matrix random_symmetric(Index n, Rng& rng) {
  Matrix m = random_matrix(n, n, rng);
  return 0.5 * (m + m.transpose());
}

// symmetric with prescribed eigenvalues (dense route, test-only)
inline Matrix symmetric_with_spectrum(const Vector& eigs, Rng& rng) {
  const Index n = eigs.size();
  Matrix g = random_matrix(n, n, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  return q * eigs.asDiagonal() * q.transpose();
}

inline BandedMatrix random_banded(Index n, Index b, Rng& rng, double sigma = 1.0) {
  std::normal_distribution<double> dist(0.0, sigma);
  BandedMatrix m(n, b);
  for (Index j = 0; j < n; ++j)
    for (Index i = j; i <= std::min(n - 1, j + b); ++i)
      m.set_sym(i, j, dist(rng));
  return m;
}

// HODLR matrix assembled directly from random factors of the given rank
inline HodlrMatrix random_hodlr(const std::vector<Index>& leaves, size_t lo,
                                size_t hi, Index rank, Rng& rng) {
  if (hi - lo == 1) return HodlrMatrix(random_matrix(leaves[lo], leaves[lo], rng));
  const size_t mid = lo + (hi - lo) / 2;
  Index n1 = 0, n2 = 0;
  for (size_t i = lo; i < mid; ++i) n1 += leaves[i];
  for (size_t i = mid; i < hi; ++i) n2 += leaves[i];
  const double s = 1.0 / std::sqrt(static_cast<double>(std::max<Index>(n1 + n2, 1)));
  LowRankBlock upper(random_matrix(n1, rank, rng, s), random_matrix(n2, rank, rng, s));
  LowRankBlock lower(random_matrix(n2, rank, rng, s), random_matrix(n1, rank, rng, s));
  return {random_hodlr(leaves, lo, mid, rank, rng),
          random_hodlr(leaves, mid, hi, rank, rng), std::move(upper),
          std::move(lower)};
}

inline HodlrMatrix random_hodlr(Index n, Index leaf_size, Index rank, Rng& rng) {
  IndexPartition p = IndexPartition::balanced(n, leaf_size);
  return random_hodlr(p.leaf_sizes, 0, p.leaf_sizes.size(), rank, rng);
}

// dense 2-norm oracle
inline double snorm(const Matrix& m) {
  if (m.rows() == 0 || m.cols() == 0) return 0.0;
  return Eigen::BDCSVD<Matrix>(m).singularValues()(0);
}

inline Index count_off_blocks(const HodlrMatrix& m) {
  if (m.is_leaf()) return 0;
  return 2 + count_off_blocks(m.child(0)) + count_off_blocks(m.child(1));
}

}  // namespace heig::test

#endif
