#include "heig/column_select.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>

namespace heig {

namespace {

double spectral_norm_sym(const Matrix& m) {
  if (m.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

Matrix gaussian(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<double> dist;
  Matrix x(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) x(i, j) = dist(rng);
  return x;
}

}  // namespace

PivotedCholesky cholp_dense(const Matrix& m, double psd_tol) {
  if (m.rows() != m.cols())
    throw StructuralError("cholp: square matrix required");
  const Index n = m.rows();
  PivotedCholesky out;
  out.r = Matrix::Zero(n, n);
  out.pivots.resize(n);
  for (Index i = 0; i < n; ++i) out.pivots[i] = i;
  if (n == 0) return out;

  Matrix s = 0.5 * (m + m.transpose());
  if (psd_tol < 0.0) psd_tol = 1e-8 * m.norm();

  for (Index k = 0; k < n; ++k) {
    Index piv = k;
    double best = s(k, k), worst = s(k, k);
    for (Index j = k + 1; j < n; ++j) {
      if (s(j, j) > best) {
        best = s(j, j);
        piv = j;
      }
      worst = std::min(worst, s(j, j));
    }
    if (worst < -psd_tol)
      throw NotPsd("cholp: negative diagonal update");
    if (best <= psd_tol) {
      out.rank = k;  // remaining diagonal treated as zero
      return out;
    }
    if (piv != k) {
      s.row(k).swap(s.row(piv));
      s.col(k).swap(s.col(piv));
      out.r.col(k).head(k).swap(out.r.col(piv).head(k));
      std::swap(out.pivots[k], out.pivots[piv]);
    }
    const double rkk = std::sqrt(s(k, k));
    out.r(k, k) = rkk;
    if (k + 1 < n) {
      out.r.row(k).segment(k + 1, n - k - 1) =
          s.row(k).segment(k + 1, n - k - 1) / rkk;
      s.bottomRightCorner(n - k - 1, n - k - 1).noalias() -=
          out.r.row(k).segment(k + 1, n - k - 1).transpose() *
          out.r.row(k).segment(k + 1, n - k - 1);
    }
    out.rank = k + 1;
  }
  return out;
}

std::vector<Index> ColumnSelection::sorted_indices() const {
  std::vector<Index> s = indices;
  std::sort(s.begin(), s.end());
  return s;
}

namespace {

ColumnSelection hcholp_rec(const HodlrMatrix& m, double delta,
                           const TruncationConfig& cfg, double psd_tol) {
  ColumnSelection out;
  out.delta = delta;
  out.diag_min = std::numeric_limits<double>::infinity();

  if (m.is_leaf()) {
    PivotedCholesky pc = cholp_dense(m.dense_block(), psd_tol);
    Index s = 0;
    while (s < pc.rank && pc.r(s, s) >= delta) ++s;
    out.indices.assign(pc.pivots.begin(), pc.pivots.begin() + s);
    out.r = HodlrMatrix(Matrix(pc.r.topLeftCorner(s, s)));
    if (s > 0) out.diag_min = pc.r.diagonal().head(s).minCoeff();
    return out;
  }

  const auto& b12 = m.off_block(0);
  ColumnSelection left = hcholp_rec(m.child(0), delta, cfg, psd_tol);
  const Index s1 = static_cast<Index>(left.indices.size());

  Matrix u_sel(s1, b12.rank());
  for (Index i = 0; i < s1; ++i) u_sel.row(i) = b12.u.row(left.indices[i]);
  Matrix ut;  // left.r^{-T} * u1(C1, :)
  if (b12.rank() > 0)
    ut = solve_triangular(left.r, u_sel, /*transposed=*/true);
  else
    ut = Matrix(s1, 0);

  HodlrMatrix schur = m.child(1);
  if (b12.rank() > 0 && s1 > 0) {
    Matrix g = ut.transpose() * ut;
    schur = add_low_rank(schur, b12.v * (-g), b12.v, cfg);
    schur = symmetrize(schur, cfg);
  }

  ColumnSelection right = hcholp_rec(schur, delta, cfg, psd_tol);
  const Index s2 = static_cast<Index>(right.indices.size());
  const Index n1 = m.child(0).rows();

  out.indices = left.indices;
  for (Index idx : right.indices) out.indices.push_back(n1 + idx);
  Matrix v_sel(s2, b12.rank());
  for (Index i = 0; i < s2; ++i) v_sel.row(i) = b12.v.row(right.indices[i]);
  out.r = HodlrMatrix(std::move(left.r), std::move(right.r),
                      LowRankBlock(ut, v_sel), LowRankBlock::zero(s2, s1));
  out.diag_min = std::min(left.diag_min, right.diag_min);
  return out;
}

}  // namespace

ColumnSelection hcholp_inc(const HodlrMatrix& m, double delta,
                           const TruncationConfig& cfg) {
  if (m.rows() != m.cols())
    throw StructuralError("hcholp_inc: square matrix required");
  if (!(delta > 0.0) || !(delta < 1.0))
    throw StructuralError("hcholp_inc: delta must be in (0, 1)");
  // Schur-complement leaves inherit truncation noise at the scale of the
  // whole operand, so the PSD tolerance is anchored to it, not to the leaf.
  const double psd_tol = 1e-8 * std::max(frobenius_norm(m), 1e-300);
  ColumnSelection sel = hcholp_rec(m, delta, cfg, psd_tol);
  if (sel.indices.empty()) sel.diag_min = 0.0;
  return sel;
}

SelectionCertificate selection_conditioning_certificate(
    const ColumnSelection& sel, const HodlrMatrix& pi, Rng& rng,
    Index dense_cap) {
  SelectionCertificate cert;
  cert.r = static_cast<Index>(sel.indices.size());
  const Index n = pi.rows();

  if (n <= dense_cap) {
    const Matrix pd = to_dense(pi);
    Matrix pcc(cert.r, cert.r);
    for (Index i = 0; i < cert.r; ++i)
      for (Index j = 0; j < cert.r; ++j)
        pcc(i, j) = pd(sel.indices[i], sel.indices[j]);
    const Matrix rd = to_dense(sel.r);
    cert.norm_e = spectral_norm_sym(pcc - rd.transpose() * rd);
    cert.norm_f = spectral_norm_sym(pd * pd - pd);
    if (cert.r > 0) {
      Matrix cols(n, cert.r);
      for (Index j = 0; j < cert.r; ++j) cols.col(j) = pd.col(sel.indices[j]);
      Eigen::BDCSVD<Matrix> svd(cols);
      const auto& sv = svd.singularValues();
      cert.kappa_measured =
          sv(sv.size() - 1) > 0.0
              ? sv(0) / sv(sv.size() - 1)
              : std::numeric_limits<double>::infinity();
    }
    cert.kappa_is_exact = true;
  } else {
    HodlrMatrix pcc = extract_principal_submatrix(pi, sel.indices);
    // ||pi(C,C) - r^T r|| via power iteration on the difference operator
    {
      std::normal_distribution<double> dist;
      Vector v(cert.r);
      for (Index i = 0; i < v.size(); ++i) v(i) = dist(rng);
      if (v.size() > 0) v.normalize();
      double est = 0.0;
      for (int it = 0; it < 20 && v.size() > 0; ++it) {
        Vector w = matvec(pcc, v) -
                   matvec_transposed(sel.r, matvec(sel.r, v));
        const double nw = w.norm();
        if (nw == 0.0) break;
        est = nw;
        v = w / nw;
      }
      cert.norm_e = est;
    }
    {
      std::normal_distribution<double> dist;
      Vector v(n);
      for (Index i = 0; i < v.size(); ++i) v(i) = dist(rng);
      v.normalize();
      double est = 0.0;
      for (int it = 0; it < 20; ++it) {
        Vector pv = matvec(pi, v);
        Vector w = matvec(pi, pv) - pv;
        const double nw = w.norm();
        if (nw == 0.0) break;
        est = nw;
        v = w / nw;
      }
      cert.norm_f = est;
    }
    // kappa^2 ~= lambda_max / lambda_min of pi(C,C)
    if (cert.r > 0) {
      double lam_max = norm2_estimate(pcc, rng);
      double lam_min = std::numeric_limits<double>::quiet_NaN();
      try {
        TruncationConfig tc;  // defaults are fine for an estimate
        HodlrMatrix w = hodlr_cholesky(symmetrize(pcc, tc), tc);
        std::normal_distribution<double> dist;
        Vector v(cert.r);
        for (Index i = 0; i < v.size(); ++i) v(i) = dist(rng);
        v.normalize();
        double inv_est = 0.0;
        for (int it = 0; it < 20; ++it) {
          Matrix y = solve_triangular(w, Matrix(v), true);
          Matrix z = solve_triangular(w, y, false);
          const double nz = z.col(0).norm();
          if (!(nz > 0.0)) break;
          inv_est = nz;
          v = z.col(0) / nz;
        }
        if (inv_est > 0.0) lam_min = 1.0 / inv_est;
      } catch (const IndefiniteMatrix&) {
        lam_min = 0.0;
      }
      cert.kappa_measured =
          lam_min > 0.0 ? std::sqrt(lam_max / lam_min)
                        : std::numeric_limits<double>::infinity();
    }
    cert.kappa_is_exact = false;
  }

  cert.eps_h = cert.norm_e + cert.norm_f;
  if (cert.r > 0) {
    const double delta2 = sel.delta * sel.delta;
    const double rr = static_cast<double>(cert.r);
    cert.hypothesis_holds = 1.0 - delta2 + cert.eps_h < 1.0 / rr;
    if (cert.hypothesis_holds)
      cert.bound = (1.0 / rr) * (1.0 + cert.eps_h) /
                   (delta2 - 1.0 + 1.0 / rr - cert.eps_h);
  }
  return cert;
}

HodlrMatrix orthonormal_basis_from_selection(const HodlrMatrix& pi,
                                             const ColumnSelection& sel,
                                             const TruncationConfig& cfg) {
  HodlrMatrix cols = extract_columns(pi, sel.indices);
  return multiply_triangular_inverse_right(cols, sel.r, false, cfg);
}

RangeBasis complete_basis(const HodlrMatrix& pi, const ColumnSelection& sel,
                          Index nu, Index oversampling, Rng& rng,
                          const TruncationConfig& cfg) {
  const Index n = pi.rows();
  const Index r = static_cast<Index>(sel.indices.size());
  if (r > nu)
    throw StructuralError("complete_basis: selection exceeds projector rank");

  RangeBasis out;
  out.selected = r;
  out.oversampling = oversampling;
  HodlrMatrix cols = extract_columns(pi, sel.indices);
  out.q = multiply_triangular_inverse_right(cols, sel.r, false, cfg);
  if (r == nu) return out;

  const Index missing = nu - r;
  Index p = std::max<Index>(oversampling, 1);
  for (int attempt = 0; attempt < 2; ++attempt) {
    Matrix x = gaussian(n, missing + p, rng);
    Matrix y = matmat(pi, x);
    Matrix z = y;
    if (r > 0) {
      Matrix t = matmat_transposed(cols, y);       // pi(C,:) * (pi x)
      t = solve_triangular(sel.r, t, true);        // r^{-T}
      t = solve_triangular(sel.r, t, false);       // r^{-1}
      z.noalias() -= matmat(cols, t);
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(z);
    qr.setThreshold(1e-4);
    if (qr.rank() >= missing) {
      Matrix qc = qr.householderQ() * Matrix::Identity(n, missing);
      out.q = append_columns(out.q, qc, cfg);
      out.completed = missing;
      out.oversampling = p;
      return out;
    }
    p *= 2;  // one retry with a fresh draw and doubled oversampling
    out.oversampling = p;
  }
  throw CompletionDeficient(
      "complete_basis: projected samples are rank deficient");
}

}  // namespace heig
