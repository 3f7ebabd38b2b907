#include "heig/matgen.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>

namespace heig {

namespace {

void fill_uniform(Vector& out, Index lo_idx, Index count, double lo, double hi,
                  Rng& rng) {
  std::uniform_real_distribution<double> dist(lo, hi);
  for (Index i = 0; i < count; ++i) out(lo_idx + i) = dist(rng);
}

void assign_interval(Vector& out, Index lo_idx, Index count, double lo,
                     double hi, double gap, Index leaves, Rng& rng) {
  if (leaves == 1) {
    fill_uniform(out, lo_idx, count, lo, hi, rng);
    return;
  }
  const double mid = 0.5 * (lo + hi);
  const double h = 0.5 * (hi - lo) * gap;
  const Index left_count = count - count / 2;
  assign_interval(out, lo_idx, left_count, lo, mid - h, gap, leaves / 2, rng);
  assign_interval(out, lo_idx + left_count, count / 2, mid + h, hi, gap,
                  leaves / 2, rng);
}

}  // namespace

Vector gap_spectrum(const GapSpectrumSpec& spec, Rng& rng) {
  if (spec.n < 1) throw StructuralError("gap_spectrum: n must be positive");
  if (!(spec.gap > 0.0) || spec.gap >= 1.0)
    throw StructuralError("gap_spectrum: gap must be in (0, 1)");
  if (spec.n_stop < 1) throw StructuralError("gap_spectrum: bad n_stop");
  if (!(spec.lo < spec.hi)) throw StructuralError("gap_spectrum: bad interval");
  Index leaves = 1;
  while (2 * leaves <= spec.n / spec.n_stop) leaves *= 2;
  Vector out(spec.n);
  assign_interval(out, 0, spec.n, spec.lo, spec.hi, spec.gap, leaves, rng);
  std::sort(out.data(), out.data() + out.size());
  return out;
}

namespace {

// Symmetric band with one slack diagonal for the chased bulge.
// w(d, j) = A(j + d, j), 0 <= d <= cap.
struct BandWork {
  Matrix w;
  Index n, cap;

  BandWork(const Vector& diag, Index cap)
      : w(Matrix::Zero(cap + 1, diag.size())), n(diag.size()), cap(cap) {
    w.row(0) = diag.transpose();
  }

  double get(Index i, Index j) const {
    if (i < j) std::swap(i, j);
    const Index d = i - j;
    return d > cap ? 0.0 : w(d, j);
  }
  void set(Index i, Index j, double v) {
    if (i < j) std::swap(i, j);
    const Index d = i - j;
    if (d > cap) return;  // beyond slack: roundoff-level, dropped
    w(d, j) = v;
  }

  // Symmetric similarity rotation in the plane (p, p+1):
  //   row/col p   <- c * (.)_p + s * (.)_{p+1}
  //   row/col p+1 <- -s * (.)_p + c * (.)_{p+1}
  void rotate(Index p, double c, double s) {
    const Index lo = std::max<Index>(0, p - cap);
    const Index hi = std::min(n - 1, p + 1 + cap);
    const Index m = hi - lo + 1;
    Matrix block(m, m);
    for (Index i = 0; i < m; ++i)
      for (Index j = 0; j <= i; ++j) {
        block(i, j) = get(lo + i, lo + j);
        block(j, i) = block(i, j);
      }
    const Index q = p - lo;
    Eigen::RowVectorXd rp = c * block.row(q) + s * block.row(q + 1);
    Eigen::RowVectorXd rq = -s * block.row(q) + c * block.row(q + 1);
    block.row(q) = rp;
    block.row(q + 1) = rq;
    Vector cp = c * block.col(q) + s * block.col(q + 1);
    Vector cq = -s * block.col(q) + c * block.col(q + 1);
    block.col(q) = cp;
    block.col(q + 1) = cq;
    for (Index i = 0; i < m; ++i)
      for (Index j = 0; j <= i; ++j) set(lo + i, lo + j, block(i, j));
  }
};

}  // namespace

BandedMatrix banded_from_spectrum(const Vector& eigs, Index bandwidth,
                                  Rng& rng) {
  const Index n = eigs.size();
  if (bandwidth < 1)
    throw StructuralError("banded_from_spectrum: bandwidth must be >= 1");
  if (n <= bandwidth)
    throw StructuralError("banded_from_spectrum: need n > bandwidth");

  BandWork work(eigs, bandwidth + 1);
  std::uniform_real_distribution<double> angle(0.2, std::numbers::pi - 0.2);

  for (Index target = 1; target <= bandwidth; ++target) {
    for (Index p = 0; p + 1 < n; ++p) {
      const double theta = angle(rng);
      work.rotate(p, std::cos(theta), std::sin(theta));
      // The rotation widens (p, p+1) to distance `target` and may leave one
      // bulge at distance target+1 behind the front; chase it off the top.
      Index bulge_row = p + 1, bulge_col = p - target;
      while (bulge_col >= 0) {
        const double b = work.get(bulge_row, bulge_col);
        if (b == 0.0) break;
        const double a = work.get(bulge_row, bulge_col + 1);
        const double h = std::hypot(a, b);
        // mix columns (bulge_col, bulge_col+1) so that the bulge entry
        // becomes (a*b - b*a)/h = 0
        work.rotate(bulge_col, a / h, -b / h);
        bulge_row = bulge_col + 1;
        bulge_col -= target;
      }
    }
  }

  BandedMatrix out(n, bandwidth);
  for (Index j = 0; j < n; ++j)
    for (Index i = j; i <= std::min(n - 1, j + bandwidth); ++i)
      out.set_sym(i, j, work.get(i, j));
  return out;
}

NamedMatrix named_matrix_kind(const std::string& name) {
  if (name == "toeplitz121") return NamedMatrix::toeplitz121;
  if (name == "clement") return NamedMatrix::clement;
  throw StructuralError("unknown named matrix: " + name);
}

BandedMatrix named_matrix(NamedMatrix kind, Index n) {
  if (n < 2) throw StructuralError("named_matrix: n must be >= 2");
  BandedMatrix out(n, 1);
  switch (kind) {
    case NamedMatrix::toeplitz121:
      for (Index i = 0; i < n; ++i) {
        out.set(i, i, 2.0);
        if (i + 1 < n) out.set_sym(i + 1, i, 1.0);
      }
      break;
    case NamedMatrix::clement:
      for (Index i = 0; i + 1 < n; ++i) {
        const double k = static_cast<double>(i + 1);
        out.set_sym(i + 1, i, std::sqrt(k * (static_cast<double>(n) - k)));
      }
      break;
  }
  return out;
}

DenseEig dense_eig(const Matrix& m) {
  if (m.rows() != m.cols())
    throw StructuralError("dense_eig: square matrix required");
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (m + m.transpose()));
  if (es.info() != Eigen::Success)
    throw NoConvergence("dense_eig: eigensolver did not converge");
  return {es.eigenvectors(), es.eigenvalues()};
}

Vector toeplitz121_eigenvalues(Index n) {
  Vector v(n);
  for (Index k = 1; k <= n; ++k)
    v(n - k) = 2.0 + 2.0 * std::cos(static_cast<double>(k) * std::numbers::pi /
                                    static_cast<double>(n + 1));
  return v;
}

Vector clement_eigenvalues(Index n) {
  Vector v(n);
  for (Index i = 0; i < n; ++i)
    v(i) = static_cast<double>(2 * i) - static_cast<double>(n - 1);
  return v;
}

}  // namespace heig
