#ifndef HEIG_HODLR_HPP
#define HEIG_HODLR_HPP

#include <memory>
#include <optional>
#include <vector>

#include "heig/banded.hpp"
#include "heig/types.hpp"

namespace heig {

// Per-block truncation used by all recompressing operations. The threshold
// is an absolute 2-norm bound on the discarded part of each off-diagonal
// block; `relative` switches to epsilon * sigma_max of the block.
struct TruncationConfig {
  double epsilon = 1e-10;
  Index max_rank = -1;  // < 0: no cap
  bool relative = false;
};

// Leaf sizes of a dyadic index partition: 2^level leaves, zero sizes allowed
// (they appear after submatrix extraction and are benign).
struct IndexPartition {
  int level = 0;
  std::vector<Index> leaf_sizes;

  Index total() const;
  bool operator==(const IndexPartition&) const = default;

  // Recursive halving (ceil/floor) until every leaf is <= leaf_size.
  static IndexPartition balanced(Index n, Index leaf_size);
  static IndexPartition single(Index n);
};

// Factored representation u * v^T; u is rows x k, v is cols x k.
struct LowRankBlock {
  Matrix u, v;

  LowRankBlock() = default;
  LowRankBlock(Matrix u_in, Matrix v_in);

  Index rank() const { return u.cols(); }
  Index rows() const { return u.rows(); }
  Index cols() const { return v.rows(); }
  Matrix to_dense() const;

  static LowRankBlock zero(Index rows, Index cols);
};

// Recompress a factor pair to the smallest rank meeting the truncation
// threshold (QR of both factors + SVD of the small core).
LowRankBlock truncate(const LowRankBlock& block, const TruncationConfig& cfg);

// Immutable recursive 2x2 block matrix: dense leaves, low-rank off-diagonal
// blocks. Rectangular shapes carry independent row/column partitions sharing
// one tree. Copies are cheap (subtrees are shared, never mutated).
class HodlrMatrix {
 public:
  HodlrMatrix() = default;  // 0x0 leaf
  explicit HodlrMatrix(Matrix dense);
  HodlrMatrix(HodlrMatrix first, HodlrMatrix second, LowRankBlock upper,
              LowRankBlock lower);

  bool is_leaf() const { return !c0_; }
  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  int level() const { return level_; }

  const Matrix& dense_block() const;
  const HodlrMatrix& child(int i) const;
  // off_block(0): upper-right, off_block(1): lower-left
  const LowRankBlock& off_block(int i) const;

  IndexPartition row_partition() const;
  IndexPartition col_partition() const;

 private:
  Index rows_ = 0, cols_ = 0;
  int level_ = 0;
  Matrix dense_;
  std::shared_ptr<const HodlrMatrix> c0_, c1_;
  LowRankBlock off0_, off1_;
};

// construction ---------------------------------------------------------

HodlrMatrix build_from_banded(const BandedMatrix& a, Index leaf_size,
                              const TruncationConfig& cfg);
HodlrMatrix build_from_dense(const Matrix& m, const IndexPartition& partition,
                             const TruncationConfig& cfg);
HodlrMatrix hodlr_identity(const IndexPartition& partition, double scale = 1.0);
HodlrMatrix hodlr_zero(const IndexPartition& rows, const IndexPartition& cols);

// queries ---------------------------------------------------------------

Matrix to_dense(const HodlrMatrix& m);
Index hodlr_rank(const HodlrMatrix& m);
Index memory_units(const HodlrMatrix& m);
double hodlr_trace(const HodlrMatrix& m);
Vector hodlr_diagonal(const HodlrMatrix& m);
double frobenius_norm(const HodlrMatrix& m);
bool same_row_structure(const HodlrMatrix& a, const HodlrMatrix& b);
bool same_col_structure(const HodlrMatrix& a, const HodlrMatrix& b);

// arithmetic ------------------------------------------------------------

Vector matvec(const HodlrMatrix& m, const Vector& x);
Vector matvec_transposed(const HodlrMatrix& m, const Vector& x);
Matrix matmat(const HodlrMatrix& m, const Matrix& x);
Matrix matmat_transposed(const HodlrMatrix& m, const Matrix& x);

HodlrMatrix add(const HodlrMatrix& a, const HodlrMatrix& b,
                const TruncationConfig& cfg);
HodlrMatrix multiply(const HodlrMatrix& a, const HodlrMatrix& b,
                     const TruncationConfig& cfg);
HodlrMatrix scale(const HodlrMatrix& m, double s);
HodlrMatrix add_diagonal(const HodlrMatrix& m, double s);
HodlrMatrix transpose(const HodlrMatrix& m);
// Exactly symmetric output: (m + m^T)/2 with mirrored off-diagonal factors.
HodlrMatrix symmetrize(const HodlrMatrix& m, const TruncationConfig& cfg);
// m + u v^T (recompressing every touched off-diagonal block)
HodlrMatrix add_low_rank(const HodlrMatrix& m, const Matrix& u, const Matrix& v,
                         const TruncationConfig& cfg);

// factorization / triangular ops ----------------------------------------

// Upper-triangular r with r^T r = m (m symmetric positive definite up to
// truncation). Throws IndefiniteMatrix on a non-positive dense-leaf pivot.
HodlrMatrix hodlr_cholesky(const HodlrMatrix& m, const TruncationConfig& cfg);

// x = t^{-1} b (transposed=false) or t^{-T} b (transposed=true), t upper
// triangular, b dense.
Matrix solve_triangular(const HodlrMatrix& t, const Matrix& b, bool transposed);

// m * t^{-1} (transposed=false) or m * t^{-T} (transposed=true), t upper
// triangular; column partition of m must match t.
HodlrMatrix multiply_triangular_inverse_right(const HodlrMatrix& m,
                                              const HodlrMatrix& t,
                                              bool transposed,
                                              const TruncationConfig& cfg);

// submatrices ------------------------------------------------------------

// Indices must be in range and ascending across leaf boundaries; order within
// one dense leaf is preserved as given.
HodlrMatrix extract_principal_submatrix(const HodlrMatrix& m,
                                        const std::vector<Index>& c);
HodlrMatrix extract_columns(const HodlrMatrix& m, const std::vector<Index>& c);
HodlrMatrix append_columns(const HodlrMatrix& m, const Matrix& x,
                           const TruncationConfig& cfg);

// Absorb the deepest level into dense leaves (2^p -> 2^(p-1) leaves).
HodlrMatrix merge_bottom_level(const HodlrMatrix& m);
// Merge bottom levels until the mean leaf size is at least leaf_size/2.
HodlrMatrix repartition(const HodlrMatrix& m, Index leaf_size);

// randomized 2-norm estimate (power iteration on m^T m)
double norm2_estimate(const HodlrMatrix& m, Rng& rng, int iterations = 20);

}  // namespace heig

#endif
