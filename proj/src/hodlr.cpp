#include "heig/hodlr.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <utility>

namespace heig {

namespace {

Matrix pick_rows(const Matrix& m, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (Index i = 0; i < out.rows(); ++i) out.row(i) = m.row(rows[i]);
  return out;
}

Matrix pick_cols(const Matrix& m, const std::vector<Index>& cols) {
  Matrix out(m.rows(), static_cast<Index>(cols.size()));
  for (Index j = 0; j < out.cols(); ++j) out.col(j) = m.col(cols[j]);
  return out;
}

Matrix pick_both(const Matrix& m, const std::vector<Index>& idx) {
  Matrix out(static_cast<Index>(idx.size()), static_cast<Index>(idx.size()));
  for (Index i = 0; i < out.rows(); ++i)
    for (Index j = 0; j < out.cols(); ++j) out(i, j) = m(idx[i], idx[j]);
  return out;
}

// Split indices at `boundary`; the right part is shifted down by boundary.
// Order of appearance is preserved.
void split_indices(const std::vector<Index>& c, Index boundary,
                   std::vector<Index>& left, std::vector<Index>& right) {
  left.clear();
  right.clear();
  for (Index idx : c) {
    if (idx < boundary)
      left.push_back(idx);
    else
      right.push_back(idx - boundary);
  }
}

LowRankBlock concat(const LowRankBlock& a, const LowRankBlock& b) {
  if (a.rank() == 0) return b;
  if (b.rank() == 0) return a;
  LowRankBlock out;
  out.u.resize(a.rows(), a.rank() + b.rank());
  out.u << a.u, b.u;
  out.v.resize(a.cols(), a.rank() + b.rank());
  out.v << a.v, b.v;
  return out;
}

LowRankBlock scale_block(const LowRankBlock& b, double s) {
  if (b.rank() == 0) return b;
  if (s == 0.0) return LowRankBlock::zero(b.rows(), b.cols());
  return {b.u * s, b.v};
}

// Recompress the sum of two blocks; a zero summand leaves the other as is.
LowRankBlock add_blocks(const LowRankBlock& a, const LowRankBlock& b,
                        const TruncationConfig& cfg) {
  if (a.rank() == 0) return b;
  if (b.rank() == 0) return a;
  return truncate(concat(a, b), cfg);
}

// Low-rank approximation of a dense block, 2-norm error below threshold.
LowRankBlock truncate_dense(const Matrix& m, const TruncationConfig& cfg) {
  if (m.rows() == 0 || m.cols() == 0)
    return LowRankBlock::zero(m.rows(), m.cols());
  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sigma = svd.singularValues();
  const double thr =
      cfg.relative && sigma.size() > 0 ? cfg.epsilon * sigma(0) : cfg.epsilon;
  Index keep = 0;
  while (keep < sigma.size() && sigma(keep) > thr) ++keep;
  if (cfg.max_rank >= 0) keep = std::min(keep, cfg.max_rank);
  if (keep == 0) return LowRankBlock::zero(m.rows(), m.cols());
  return {svd.matrixU().leftCols(keep) * sigma.head(keep).asDiagonal(),
          svd.matrixV().leftCols(keep)};
}

}  // namespace

// IndexPartition ----------------------------------------------------------

Index IndexPartition::total() const {
  Index n = 0;
  for (Index s : leaf_sizes) n += s;
  return n;
}

IndexPartition IndexPartition::single(Index n) { return {0, {n}}; }

IndexPartition IndexPartition::balanced(Index n, Index leaf_size) {
  if (n < 0 || leaf_size < 1)
    throw StructuralError("balanced partition: invalid sizes");
  IndexPartition p{0, {n}};
  while (*std::max_element(p.leaf_sizes.begin(), p.leaf_sizes.end()) >
         leaf_size) {
    std::vector<Index> next;
    next.reserve(p.leaf_sizes.size() * 2);
    for (Index s : p.leaf_sizes) {
      next.push_back((s + 1) / 2);
      next.push_back(s / 2);
    }
    p.leaf_sizes = std::move(next);
    ++p.level;
  }
  return p;
}

// LowRankBlock --------------------------------------------------------------

LowRankBlock::LowRankBlock(Matrix u_in, Matrix v_in)
    : u(std::move(u_in)), v(std::move(v_in)) {
  if (u.cols() != v.cols())
    throw StructuralError("low-rank block: factor rank mismatch");
}

Matrix LowRankBlock::to_dense() const {
  if (rank() == 0) return Matrix::Zero(rows(), cols());
  return u * v.transpose();
}

LowRankBlock LowRankBlock::zero(Index rows, Index cols) {
  return {Matrix(rows, 0), Matrix(cols, 0)};
}

LowRankBlock truncate(const LowRankBlock& block, const TruncationConfig& cfg) {
  const Index k = block.rank();
  if (k == 0 || block.rows() == 0 || block.cols() == 0)
    return LowRankBlock::zero(block.rows(), block.cols());

  const Index ku = std::min(k, block.rows());
  const Index kv = std::min(k, block.cols());
  Eigen::HouseholderQR<Matrix> qru(block.u), qrv(block.v);
  Matrix ru = qru.matrixQR().topRows(ku).triangularView<Eigen::Upper>();
  Matrix rv = qrv.matrixQR().topRows(kv).triangularView<Eigen::Upper>();
  Matrix core = ru * rv.transpose();
  Eigen::JacobiSVD<Matrix> svd(core,
                               Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sigma = svd.singularValues();
  const double thr =
      cfg.relative && sigma.size() > 0 ? cfg.epsilon * sigma(0) : cfg.epsilon;
  Index keep = 0;
  while (keep < sigma.size() && sigma(keep) > thr) ++keep;
  if (cfg.max_rank >= 0) keep = std::min(keep, cfg.max_rank);
  if (keep == 0) return LowRankBlock::zero(block.rows(), block.cols());

  Matrix qu = qru.householderQ() * Matrix::Identity(block.rows(), ku);
  Matrix qv = qrv.householderQ() * Matrix::Identity(block.cols(), kv);
  return {qu * (svd.matrixU().leftCols(keep) * sigma.head(keep).asDiagonal()),
          qv * svd.matrixV().leftCols(keep)};
}

// HodlrMatrix ----------------------------------------------------------------

HodlrMatrix::HodlrMatrix(Matrix dense)
    : rows_(dense.rows()), cols_(dense.cols()), dense_(std::move(dense)) {}

HodlrMatrix::HodlrMatrix(HodlrMatrix first, HodlrMatrix second,
                         LowRankBlock upper, LowRankBlock lower)
    : rows_(first.rows() + second.rows()),
      cols_(first.cols() + second.cols()),
      off0_(std::move(upper)),
      off1_(std::move(lower)) {
  if (first.level() != second.level())
    throw StructuralError("hodlr node: children depth mismatch");
  if (off0_.rows() != first.rows() || off0_.cols() != second.cols() ||
      off1_.rows() != second.rows() || off1_.cols() != first.cols())
    throw StructuralError("hodlr node: off-diagonal block shape mismatch");
  level_ = first.level() + 1;
  c0_ = std::make_shared<const HodlrMatrix>(std::move(first));
  c1_ = std::make_shared<const HodlrMatrix>(std::move(second));
}

const Matrix& HodlrMatrix::dense_block() const {
  if (!is_leaf()) throw StructuralError("dense_block: not a leaf");
  return dense_;
}

const HodlrMatrix& HodlrMatrix::child(int i) const {
  if (is_leaf()) throw StructuralError("child: leaf node");
  return i == 0 ? *c0_ : *c1_;
}

const LowRankBlock& HodlrMatrix::off_block(int i) const {
  if (is_leaf()) throw StructuralError("off_block: leaf node");
  return i == 0 ? off0_ : off1_;
}

namespace {
void collect_leaves(const HodlrMatrix& m, bool row_side,
                    std::vector<Index>& out) {
  if (m.is_leaf()) {
    out.push_back(row_side ? m.rows() : m.cols());
    return;
  }
  collect_leaves(m.child(0), row_side, out);
  collect_leaves(m.child(1), row_side, out);
}
}  // namespace

IndexPartition HodlrMatrix::row_partition() const {
  IndexPartition p;
  p.level = level_;
  collect_leaves(*this, true, p.leaf_sizes);
  return p;
}

IndexPartition HodlrMatrix::col_partition() const {
  IndexPartition p;
  p.level = level_;
  collect_leaves(*this, false, p.leaf_sizes);
  return p;
}

bool same_row_structure(const HodlrMatrix& a, const HodlrMatrix& b) {
  if (a.level() != b.level() || a.rows() != b.rows()) return false;
  if (a.is_leaf()) return true;
  return same_row_structure(a.child(0), b.child(0)) &&
         same_row_structure(a.child(1), b.child(1));
}

bool same_col_structure(const HodlrMatrix& a, const HodlrMatrix& b) {
  if (a.level() != b.level() || a.cols() != b.cols()) return false;
  if (a.is_leaf()) return true;
  return same_col_structure(a.child(0), b.child(0)) &&
         same_col_structure(a.child(1), b.child(1));
}

namespace {
bool cross_structure(const HodlrMatrix& a, const HodlrMatrix& b) {
  // a's columns against b's rows
  if (a.level() != b.level() || a.cols() != b.rows()) return false;
  if (a.is_leaf()) return true;
  return cross_structure(a.child(0), b.child(0)) &&
         cross_structure(a.child(1), b.child(1));
}
}  // namespace

// construction ---------------------------------------------------------------

namespace {

HodlrMatrix build_banded_rec(const BandedMatrix& a, Index offset, Index n,
                             int level) {
  if (level == 0) {
    Matrix d(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) d(i, j) = a.at(offset + i, offset + j);
    return HodlrMatrix(std::move(d));
  }
  const Index n1 = (n + 1) / 2, n2 = n / 2;
  HodlrMatrix c0 = build_banded_rec(a, offset, n1, level - 1);
  HodlrMatrix c1 = build_banded_rec(a, offset + n1, n2, level - 1);

  // The coupling block row range [offset, offset+n1) x [offset+n1, ...) has
  // nonzeros only in a corner of size <= bandwidth; factor it exactly,
  // skipping all-zero corner columns so e.g. diagonal input yields rank 0.
  const Index b = a.bandwidth();
  auto corner_block = [&](bool upper) {
    const Index rows = upper ? n1 : n2;
    const Index cols = upper ? n2 : n1;
    const Index row_off = upper ? offset : offset + n1;
    const Index col_off = upper ? offset + n1 : offset;
    const Index cr = std::min(b, rows);  // corner rows (end of row range)
    const Index cc = std::min(b, cols);  // corner cols (start of col range)
    Matrix corner(cr, cc);
    for (Index i = 0; i < cr; ++i)
      for (Index j = 0; j < cc; ++j)
        corner(i, j) = upper ? a.at(row_off + rows - cr + i, col_off + j)
                             : a.at(row_off + i, col_off + cols - cc + j);
    std::vector<Index> live;
    for (Index j = 0; j < cc; ++j)
      if (corner.col(j).cwiseAbs().maxCoeff() != 0.0) live.push_back(j);
    const Index k = static_cast<Index>(live.size());
    Matrix u = Matrix::Zero(rows, k), v = Matrix::Zero(cols, k);
    for (Index jj = 0; jj < k; ++jj) {
      if (upper) {
        u.block(rows - cr, jj, cr, 1) = corner.col(live[jj]);
        v(live[jj], jj) = 1.0;
      } else {
        u.block(0, jj, cr, 1) = corner.col(live[jj]);
        v(cols - cc + live[jj], jj) = 1.0;
      }
    }
    return LowRankBlock(std::move(u), std::move(v));
  };

  return HodlrMatrix(std::move(c0), std::move(c1), corner_block(true),
                     corner_block(false));
}

}  // namespace

HodlrMatrix build_from_banded(const BandedMatrix& a, Index leaf_size,
                              const TruncationConfig& cfg) {
  (void)cfg;  // banded construction is exact; nothing to truncate
  const double scale = a.max_abs();
  if (a.asymmetry() >
      8.0 * std::numeric_limits<double>::epsilon() * std::max(scale, 1.0))
    throw StructuralError("build_from_banded: input is not symmetric");
  IndexPartition p = IndexPartition::balanced(a.size(), leaf_size);
  return build_banded_rec(a, 0, a.size(), p.level);
}

namespace {
HodlrMatrix build_dense_rec(const Matrix& m, Index r0, Index c0,
                            const std::vector<Index>& row_leaves,
                            const std::vector<Index>& col_leaves, size_t lo,
                            size_t hi, const TruncationConfig& cfg) {
  if (hi - lo == 1) {
    return HodlrMatrix(m.block(r0, c0, row_leaves[lo], col_leaves[lo]));
  }
  const size_t mid = lo + (hi - lo) / 2;
  Index r1 = 0, c1 = 0, r2 = 0, c2 = 0;
  for (size_t i = lo; i < mid; ++i) r1 += row_leaves[i], c1 += col_leaves[i];
  for (size_t i = mid; i < hi; ++i) r2 += row_leaves[i], c2 += col_leaves[i];
  HodlrMatrix a = build_dense_rec(m, r0, c0, row_leaves, col_leaves, lo, mid, cfg);
  HodlrMatrix b =
      build_dense_rec(m, r0 + r1, c0 + c1, row_leaves, col_leaves, mid, hi, cfg);
  LowRankBlock upper = truncate_dense(m.block(r0, c0 + c1, r1, c2), cfg);
  LowRankBlock lower = truncate_dense(m.block(r0 + r1, c0, r2, c1), cfg);
  return HodlrMatrix(std::move(a), std::move(b), std::move(upper),
                     std::move(lower));
}
}  // namespace

HodlrMatrix build_from_dense(const Matrix& m, const IndexPartition& partition,
                             const TruncationConfig& cfg) {
  if (partition.total() != m.rows() || m.rows() != m.cols())
    throw StructuralError("build_from_dense: partition/shape mismatch");
  return build_dense_rec(m, 0, 0, partition.leaf_sizes, partition.leaf_sizes, 0,
                         partition.leaf_sizes.size(), cfg);
}

namespace {
HodlrMatrix structured_diag_rec(const std::vector<Index>& rows,
                                const std::vector<Index>& cols, size_t lo,
                                size_t hi, double scale) {
  if (hi - lo == 1) {
    Matrix d = Matrix::Zero(rows[lo], cols[lo]);
    d.diagonal().setConstant(scale);
    return HodlrMatrix(std::move(d));
  }
  const size_t mid = lo + (hi - lo) / 2;
  HodlrMatrix a = structured_diag_rec(rows, cols, lo, mid, scale);
  HodlrMatrix b = structured_diag_rec(rows, cols, mid, hi, scale);
  LowRankBlock upper = LowRankBlock::zero(a.rows(), b.cols());
  LowRankBlock lower = LowRankBlock::zero(b.rows(), a.cols());
  return HodlrMatrix(std::move(a), std::move(b), std::move(upper),
                     std::move(lower));
}
}  // namespace

HodlrMatrix hodlr_identity(const IndexPartition& partition, double scale) {
  return structured_diag_rec(partition.leaf_sizes, partition.leaf_sizes, 0,
                             partition.leaf_sizes.size(), scale);
}

HodlrMatrix hodlr_zero(const IndexPartition& rows, const IndexPartition& cols) {
  if (rows.level != cols.level)
    throw StructuralError("hodlr_zero: partition level mismatch");
  return structured_diag_rec(rows.leaf_sizes, cols.leaf_sizes, 0,
                             rows.leaf_sizes.size(), 0.0);
}

// queries ---------------------------------------------------------------

Matrix to_dense(const HodlrMatrix& m) {
  if (m.is_leaf()) return m.dense_block();
  Matrix out(m.rows(), m.cols());
  const Index r1 = m.child(0).rows(), c1 = m.child(0).cols();
  out.topLeftCorner(r1, c1) = to_dense(m.child(0));
  out.bottomRightCorner(m.rows() - r1, m.cols() - c1) = to_dense(m.child(1));
  out.topRightCorner(r1, m.cols() - c1) = m.off_block(0).to_dense();
  out.bottomLeftCorner(m.rows() - r1, c1) = m.off_block(1).to_dense();
  return out;
}

Index hodlr_rank(const HodlrMatrix& m) {
  if (m.is_leaf()) return 0;
  return std::max({m.off_block(0).rank(), m.off_block(1).rank(),
                   hodlr_rank(m.child(0)), hodlr_rank(m.child(1))});
}

Index memory_units(const HodlrMatrix& m) {
  if (m.is_leaf()) return m.rows() * m.cols();
  const auto& b0 = m.off_block(0);
  const auto& b1 = m.off_block(1);
  return memory_units(m.child(0)) + memory_units(m.child(1)) +
         b0.rank() * (b0.rows() + b0.cols()) +
         b1.rank() * (b1.rows() + b1.cols());
}

double hodlr_trace(const HodlrMatrix& m) {
  if (m.is_leaf()) return m.dense_block().diagonal().sum();
  return hodlr_trace(m.child(0)) + hodlr_trace(m.child(1));
}

Vector hodlr_diagonal(const HodlrMatrix& m) {
  if (m.is_leaf()) return m.dense_block().diagonal();
  Vector out(std::min(m.rows(), m.cols()));
  Vector d0 = hodlr_diagonal(m.child(0));
  Vector d1 = hodlr_diagonal(m.child(1));
  out.head(d0.size()) = d0;
  out.segment(d0.size(), out.size() - d0.size()) =
      d1.head(out.size() - d0.size());
  return out;
}

double frobenius_norm(const HodlrMatrix& m) {
  if (m.is_leaf()) return m.dense_block().norm();
  auto block_sq = [](const LowRankBlock& b) {
    if (b.rank() == 0) return 0.0;
    Matrix g = (b.u.transpose() * b.u) * (b.v.transpose() * b.v);
    return g.trace();
  };
  const double a = frobenius_norm(m.child(0));
  const double b = frobenius_norm(m.child(1));
  return std::sqrt(a * a + b * b + block_sq(m.off_block(0)) +
                   block_sq(m.off_block(1)));
}

// matvec / matmat -------------------------------------------------------

Matrix matmat(const HodlrMatrix& m, const Matrix& x) {
  if (x.rows() != m.cols()) throw StructuralError("matmat: dimension mismatch");
  if (m.is_leaf()) return m.dense_block() * x;
  const Index c1 = m.child(0).cols();
  const Matrix x1 = x.topRows(c1);
  const Matrix x2 = x.bottomRows(x.rows() - c1);
  Matrix top = matmat(m.child(0), x1);
  Matrix bot = matmat(m.child(1), x2);
  const auto& b0 = m.off_block(0);
  const auto& b1 = m.off_block(1);
  if (b0.rank() > 0) top += b0.u * (b0.v.transpose() * x2);
  if (b1.rank() > 0) bot += b1.u * (b1.v.transpose() * x1);
  Matrix out(m.rows(), x.cols());
  out.topRows(top.rows()) = top;
  out.bottomRows(bot.rows()) = bot;
  return out;
}

Matrix matmat_transposed(const HodlrMatrix& m, const Matrix& x) {
  if (x.rows() != m.rows())
    throw StructuralError("matmat_transposed: dimension mismatch");
  if (m.is_leaf()) return m.dense_block().transpose() * x;
  const Index r1 = m.child(0).rows();
  const Matrix x1 = x.topRows(r1);
  const Matrix x2 = x.bottomRows(x.rows() - r1);
  Matrix top = matmat_transposed(m.child(0), x1);
  Matrix bot = matmat_transposed(m.child(1), x2);
  const auto& b0 = m.off_block(0);
  const auto& b1 = m.off_block(1);
  if (b1.rank() > 0) top += b1.v * (b1.u.transpose() * x2);
  if (b0.rank() > 0) bot += b0.v * (b0.u.transpose() * x1);
  Matrix out(m.cols(), x.cols());
  out.topRows(top.rows()) = top;
  out.bottomRows(bot.rows()) = bot;
  return out;
}

Vector matvec(const HodlrMatrix& m, const Vector& x) {
  return matmat(m, Matrix(x));
}

Vector matvec_transposed(const HodlrMatrix& m, const Vector& x) {
  return matmat_transposed(m, Matrix(x));
}

// additive ops ----------------------------------------------------------

HodlrMatrix add(const HodlrMatrix& a, const HodlrMatrix& b,
                const TruncationConfig& cfg) {
  if (!same_row_structure(a, b) || !same_col_structure(a, b))
    throw StructuralError("add: incompatible partitions");
  if (a.is_leaf()) return HodlrMatrix(a.dense_block() + b.dense_block());
  return HodlrMatrix(add(a.child(0), b.child(0), cfg),
                     add(a.child(1), b.child(1), cfg),
                     add_blocks(a.off_block(0), b.off_block(0), cfg),
                     add_blocks(a.off_block(1), b.off_block(1), cfg));
}

HodlrMatrix scale(const HodlrMatrix& m, double s) {
  if (m.is_leaf()) return HodlrMatrix(m.dense_block() * s);
  return HodlrMatrix(scale(m.child(0), s), scale(m.child(1), s),
                     scale_block(m.off_block(0), s),
                     scale_block(m.off_block(1), s));
}

HodlrMatrix add_diagonal(const HodlrMatrix& m, double s) {
  if (m.is_leaf()) {
    Matrix d = m.dense_block();
    d.diagonal().array() += s;
    return HodlrMatrix(std::move(d));
  }
  return HodlrMatrix(add_diagonal(m.child(0), s), add_diagonal(m.child(1), s),
                     m.off_block(0), m.off_block(1));
}

HodlrMatrix transpose(const HodlrMatrix& m) {
  if (m.is_leaf()) return HodlrMatrix(m.dense_block().transpose());
  const auto& b0 = m.off_block(0);
  const auto& b1 = m.off_block(1);
  return HodlrMatrix(transpose(m.child(0)), transpose(m.child(1)),
                     LowRankBlock(b1.v, b1.u), LowRankBlock(b0.v, b0.u));
}

HodlrMatrix symmetrize(const HodlrMatrix& m, const TruncationConfig& cfg) {
  if (m.rows() != m.cols())
    throw StructuralError("symmetrize: square matrix required");
  if (m.is_leaf()) {
    Matrix d = 0.5 * (m.dense_block() + m.dense_block().transpose());
    return HodlrMatrix(std::move(d));
  }
  const auto& b0 = m.off_block(0);
  const auto& b1 = m.off_block(1);
  LowRankBlock upper = truncate(
      concat(scale_block(b0, 0.5), scale_block(LowRankBlock(b1.v, b1.u), 0.5)),
      cfg);
  LowRankBlock lower(upper.v, upper.u);  // exact mirror
  return HodlrMatrix(symmetrize(m.child(0), cfg), symmetrize(m.child(1), cfg),
                     std::move(upper), std::move(lower));
}

HodlrMatrix add_low_rank(const HodlrMatrix& m, const Matrix& u, const Matrix& v,
                         const TruncationConfig& cfg) {
  if (u.rows() != m.rows() || v.rows() != m.cols() || u.cols() != v.cols())
    throw StructuralError("add_low_rank: shape mismatch");
  if (u.cols() == 0) return m;
  if (m.is_leaf()) return HodlrMatrix(m.dense_block() + u * v.transpose());
  const Index r1 = m.child(0).rows(), c1 = m.child(0).cols();
  LowRankBlock upper = add_blocks(
      m.off_block(0), LowRankBlock(u.topRows(r1), v.bottomRows(v.rows() - c1)),
      cfg);
  LowRankBlock lower = add_blocks(
      m.off_block(1), LowRankBlock(u.bottomRows(u.rows() - r1), v.topRows(c1)),
      cfg);
  return HodlrMatrix(
      add_low_rank(m.child(0), u.topRows(r1), v.topRows(c1), cfg),
      add_low_rank(m.child(1), u.bottomRows(u.rows() - r1),
                   v.bottomRows(v.rows() - c1), cfg),
      std::move(upper), std::move(lower));
}

// multiplication --------------------------------------------------------

namespace {
HodlrMatrix multiply_rec(const HodlrMatrix& a, const HodlrMatrix& b,
                         const TruncationConfig& cfg) {
  if (a.is_leaf()) return HodlrMatrix(a.dense_block() * b.dense_block());

  const auto& a1 = a.child(0);
  const auto& a2 = a.child(1);
  const auto& b1 = b.child(0);
  const auto& b2 = b.child(1);
  const auto& a12 = a.off_block(0);
  const auto& a21 = a.off_block(1);
  const auto& b12 = b.off_block(0);
  const auto& b21 = b.off_block(1);

  HodlrMatrix c11 = multiply_rec(a1, b1, cfg);
  if (a12.rank() > 0 && b21.rank() > 0)
    c11 = add_low_rank(c11, a12.u * (a12.v.transpose() * b21.u), b21.v, cfg);

  HodlrMatrix c22 = multiply_rec(a2, b2, cfg);
  if (a21.rank() > 0 && b12.rank() > 0)
    c22 = add_low_rank(c22, a21.u * (a21.v.transpose() * b12.u), b12.v, cfg);

  LowRankBlock c12 = truncate(
      concat(b12.rank() > 0 ? LowRankBlock(matmat(a1, b12.u), b12.v)
                            : LowRankBlock::zero(a1.rows(), b2.cols()),
             a12.rank() > 0 ? LowRankBlock(a12.u, matmat_transposed(b2, a12.v))
                            : LowRankBlock::zero(a1.rows(), b2.cols())),
      cfg);
  LowRankBlock c21 = truncate(
      concat(a21.rank() > 0 ? LowRankBlock(a21.u, matmat_transposed(b1, a21.v))
                            : LowRankBlock::zero(a2.rows(), b1.cols()),
             b21.rank() > 0 ? LowRankBlock(matmat(a2, b21.u), b21.v)
                            : LowRankBlock::zero(a2.rows(), b1.cols())),
      cfg);

  return HodlrMatrix(std::move(c11), std::move(c22), std::move(c12),
                     std::move(c21));
}
}  // namespace

HodlrMatrix multiply(const HodlrMatrix& a, const HodlrMatrix& b,
                     const TruncationConfig& cfg) {
  if (!cross_structure(a, b))
    throw StructuralError("multiply: incompatible partitions");
  return multiply_rec(a, b, cfg);
}

// Cholesky ----------------------------------------------------------------

namespace {
HodlrMatrix cholesky_rec(const HodlrMatrix& m, const TruncationConfig& cfg,
                         int depth, Index offset) {
  if (m.is_leaf()) {
    if (m.rows() == 0) return m;
    Eigen::LLT<Matrix> llt(m.dense_block());
    if (llt.info() != Eigen::Success)
      throw IndefiniteMatrix("cholesky: non-positive pivot in dense block",
                             depth, offset);
    return HodlrMatrix(Matrix(llt.matrixU()));
  }
  const auto& m1 = m.child(0);
  const auto& m2 = m.child(1);
  const auto& b12 = m.off_block(0);
  HodlrMatrix r1 = cholesky_rec(m1, cfg, depth + 1, offset);
  Matrix ut;
  HodlrMatrix s = m2;
  if (b12.rank() > 0) {
    ut = solve_triangular(r1, b12.u, /*transposed=*/true);
    Matrix g = ut.transpose() * ut;
    s = add_low_rank(m2, b12.v * (-g), b12.v, cfg);
    s = symmetrize(s, cfg);
  } else {
    ut = Matrix(m1.rows(), 0);
  }
  HodlrMatrix r2 = cholesky_rec(s, cfg, depth + 1, offset + m1.rows());
  LowRankBlock upper(std::move(ut), b12.v);
  LowRankBlock lower = LowRankBlock::zero(m2.rows(), m1.cols());
  return HodlrMatrix(std::move(r1), std::move(r2), std::move(upper),
                     std::move(lower));
}
}  // namespace

HodlrMatrix hodlr_cholesky(const HodlrMatrix& m, const TruncationConfig& cfg) {
  if (m.rows() != m.cols())
    throw StructuralError("cholesky: square matrix required");
  return cholesky_rec(m, cfg, 0, 0);
}

// triangular solves -------------------------------------------------------

Matrix solve_triangular(const HodlrMatrix& t, const Matrix& b, bool transposed) {
  if (t.rows() != t.cols())
    throw StructuralError("solve_triangular: square matrix required");
  if (b.rows() != t.rows())
    throw StructuralError("solve_triangular: dimension mismatch");
  if (t.is_leaf()) {
    if (t.rows() == 0) return b;
    if ((t.dense_block().diagonal().array() == 0.0).any())
      throw SingularTriangular("solve_triangular: zero diagonal entry");
    if (transposed)
      return t.dense_block()
          .triangularView<Eigen::Upper>()
          .transpose()
          .solve(b);
    return t.dense_block().triangularView<Eigen::Upper>().solve(b);
  }
  const Index n1 = t.child(0).rows();
  const auto& t12 = t.off_block(0);
  Matrix b1 = b.topRows(n1);
  Matrix b2 = b.bottomRows(b.rows() - n1);
  Matrix out(b.rows(), b.cols());
  if (!transposed) {
    Matrix x2 = solve_triangular(t.child(1), b2, false);
    if (t12.rank() > 0) b1 -= t12.u * (t12.v.transpose() * x2);
    Matrix x1 = solve_triangular(t.child(0), b1, false);
    out.topRows(n1) = x1;
    out.bottomRows(x2.rows()) = x2;
  } else {
    Matrix x1 = solve_triangular(t.child(0), b1, true);
    if (t12.rank() > 0) b2 -= t12.v * (t12.u.transpose() * x1);
    Matrix x2 = solve_triangular(t.child(1), b2, true);
    out.topRows(n1) = x1;
    out.bottomRows(x2.rows()) = x2;
  }
  return out;
}

namespace {
HodlrMatrix mtir_rec(const HodlrMatrix& m, const HodlrMatrix& t, bool transposed,
                     const TruncationConfig& cfg) {
  if (m.is_leaf()) {
    if (t.cols() == 0 || m.rows() == 0) return m;
    Matrix xt = solve_triangular(t, m.dense_block().transpose(), !transposed);
    return HodlrMatrix(Matrix(xt.transpose()));
  }
  const auto& m1 = m.child(0);
  const auto& m2 = m.child(1);
  const auto& b12 = m.off_block(0);
  const auto& b21 = m.off_block(1);
  const auto& t1 = t.child(0);
  const auto& t2 = t.child(1);
  const auto& t12 = t.off_block(0);

  if (!transposed) {
    // result = m * t^{-1}
    HodlrMatrix c11 = mtir_rec(m1, t1, false, cfg);
    LowRankBlock c21 =
        b21.rank() > 0
            ? truncate(LowRankBlock(b21.u, solve_triangular(t1, b21.v, true)),
                       cfg)
            : b21;
    Matrix w_u;  // w = t1^{-1} t12 = w_u * t12.v^T
    if (t12.rank() > 0) w_u = solve_triangular(t1, t12.u, false);
    LowRankBlock c12 = b12;
    HodlrMatrix m2p = m2;
    if (t12.rank() > 0) {
      c12 = concat(b12, LowRankBlock(-matmat(m1, w_u), t12.v));
      if (b21.rank() > 0)
        m2p = add_low_rank(m2, -b21.u * (b21.v.transpose() * w_u), t12.v, cfg);
    }
    if (c12.rank() > 0)
      c12 = truncate(LowRankBlock(c12.u, solve_triangular(t2, c12.v, true)),
                     cfg);
    HodlrMatrix c22 = mtir_rec(m2p, t2, false, cfg);
    return HodlrMatrix(std::move(c11), std::move(c22), std::move(c12),
                       std::move(c21));
  }

  // result = m * t^{-T}
  LowRankBlock c12 =
      b12.rank() > 0
          ? truncate(LowRankBlock(b12.u, solve_triangular(t2, b12.v, false)),
                     cfg)
          : b12;
  HodlrMatrix c22 = mtir_rec(m2, t2, true, cfg);
  Matrix z_v;  // z = t2^{-T} t12^T = z_v * t12.u^T
  if (t12.rank() > 0) z_v = solve_triangular(t2, t12.v, true);
  HodlrMatrix m1p = m1;
  LowRankBlock c21 = b21;
  if (t12.rank() > 0) {
    if (b12.rank() > 0)
      m1p = add_low_rank(m1, -b12.u * (b12.v.transpose() * z_v), t12.u, cfg);
    c21 = concat(b21, LowRankBlock(-matmat(m2, z_v), t12.u));
  }
  if (c21.rank() > 0)
    c21 =
        truncate(LowRankBlock(c21.u, solve_triangular(t1, c21.v, false)), cfg);
  HodlrMatrix c11 = mtir_rec(m1p, t1, true, cfg);
  return HodlrMatrix(std::move(c11), std::move(c22), std::move(c12),
                     std::move(c21));
}
}  // namespace

HodlrMatrix multiply_triangular_inverse_right(const HodlrMatrix& m,
                                              const HodlrMatrix& t,
                                              bool transposed,
                                              const TruncationConfig& cfg) {
  if (t.rows() != t.cols())
    throw StructuralError("triangular inverse: square matrix required");
  if (!cross_structure(m, t))
    throw StructuralError("triangular inverse: incompatible partitions");
  return mtir_rec(m, t, transposed, cfg);
}

// submatrices -------------------------------------------------------------

namespace {
void validate_indices(const std::vector<Index>& c, Index n) {
  for (Index idx : c)
    if (idx < 0 || idx >= n)
      throw StructuralError("index set: entry out of range");
}
}  // namespace

HodlrMatrix extract_principal_submatrix(const HodlrMatrix& m,
                                        const std::vector<Index>& c) {
  if (m.rows() != m.cols())
    throw StructuralError("principal submatrix: square matrix required");
  validate_indices(c, m.rows());
  if (m.is_leaf()) return HodlrMatrix(pick_both(m.dense_block(), c));
  const Index n1 = m.child(0).rows();
  std::vector<Index> c1, c2;
  split_indices(c, n1, c1, c2);
  const auto& b0 = m.off_block(0);
  const auto& b1 = m.off_block(1);
  return HodlrMatrix(
      extract_principal_submatrix(m.child(0), c1),
      extract_principal_submatrix(m.child(1), c2),
      LowRankBlock(pick_rows(b0.u, c1), pick_rows(b0.v, c2)),
      LowRankBlock(pick_rows(b1.u, c2), pick_rows(b1.v, c1)));
}

HodlrMatrix extract_columns(const HodlrMatrix& m, const std::vector<Index>& c) {
  validate_indices(c, m.cols());
  if (m.is_leaf()) return HodlrMatrix(pick_cols(m.dense_block(), c));
  const Index c1count = m.child(0).cols();
  std::vector<Index> c1, c2;
  split_indices(c, c1count, c1, c2);
  const auto& b0 = m.off_block(0);
  const auto& b1 = m.off_block(1);
  return HodlrMatrix(extract_columns(m.child(0), c1),
                     extract_columns(m.child(1), c2),
                     LowRankBlock(b0.u, pick_rows(b0.v, c2)),
                     LowRankBlock(b1.u, pick_rows(b1.v, c1)));
}

HodlrMatrix append_columns(const HodlrMatrix& m, const Matrix& x,
                           const TruncationConfig& cfg) {
  if (x.rows() != m.rows())
    throw StructuralError("append_columns: row count mismatch");
  if (x.cols() == 0) return m;
  if (m.is_leaf()) {
    Matrix d(m.rows(), m.cols() + x.cols());
    d << m.dense_block(), x;
    return HodlrMatrix(std::move(d));
  }
  const Index r1 = m.child(0).rows();
  const Index q = x.cols();
  const auto& b0 = m.off_block(0);
  Matrix u(b0.rows(), b0.rank() + q);
  u << b0.u, x.topRows(r1);
  Matrix v = Matrix::Zero(b0.cols() + q, b0.rank() + q);
  v.topLeftCorner(b0.cols(), b0.rank()) = b0.v;
  v.bottomRightCorner(q, q).setIdentity();
  return HodlrMatrix(m.child(0),
                     append_columns(m.child(1), x.bottomRows(x.rows() - r1), cfg),
                     truncate(LowRankBlock(std::move(u), std::move(v)), cfg),
                     m.off_block(1));
}

// repartitioning ------------------------------------------------------------

HodlrMatrix merge_bottom_level(const HodlrMatrix& m) {
  if (m.is_leaf()) return m;
  if (m.child(0).is_leaf() && m.child(1).is_leaf()) return HodlrMatrix(to_dense(m));
  return HodlrMatrix(merge_bottom_level(m.child(0)),
                     merge_bottom_level(m.child(1)), m.off_block(0),
                     m.off_block(1));
}

HodlrMatrix repartition(const HodlrMatrix& m, Index leaf_size) {
  HodlrMatrix out = m;
  while (out.level() > 0 &&
         2 * (std::max(out.rows(), out.cols()) >> out.level()) <= leaf_size)
    out = merge_bottom_level(out);
  return out;
}

double norm2_estimate(const HodlrMatrix& m, Rng& rng, int iterations) {
  if (m.rows() == 0 || m.cols() == 0) return 0.0;
  std::normal_distribution<double> gauss;
  Vector v(m.cols());
  for (Index i = 0; i < v.size(); ++i) v(i) = gauss(rng);
  v.normalize();
  double est = 0.0;
  for (int it = 0; it < iterations; ++it) {
    Vector w = matvec(m, v);
    const double next = w.norm();
    if (next == 0.0) return 0.0;
    v = matvec_transposed(m, w);
    const double nv = v.norm();
    if (nv == 0.0) return next;
    v /= nv;
    if (it > 0 && std::abs(next - est) <= 1e-3 * next) {
      est = next;
      break;
    }
    est = next;
  }
  return est;
}

}  // namespace heig
