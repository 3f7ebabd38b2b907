#ifndef HEIG_COLUMN_SELECT_HPP
#define HEIG_COLUMN_SELECT_HPP

#include <vector>

#include "heig/hodlr.hpp"

namespace heig {

// Dense pivoted Cholesky for positive semidefinite matrices: picks the
// largest remaining diagonal entry each step (lowest index on ties), stops
// when the remaining diagonal drops below psd_tol and treats the trailing
// block as zero. Throws NotPsd when a diagonal update turns significantly
// negative.
struct PivotedCholesky {
  Matrix r;                     // n x n upper triangular, rows >= rank zero
  std::vector<Index> pivots;    // permutation, pivots[i] = original index
  Index rank = 0;
};
// psd_tol < 0 selects the default 1e-8 * ||m||_F. Callers factorizing Schur
// complements of a larger operand should pass a tolerance on that operand's
// scale instead, since truncation noise does not shrink with the leaf.
PivotedCholesky cholp_dense(const Matrix& m, double psd_tol = -1.0);

// Output of the incomplete hierarchical Cholesky with leaf-local pivoting.
// `indices` are ascending across leaf boundaries; within one dense leaf they
// keep the pivot order (the order in which r's diagonal is >= delta).
struct ColumnSelection {
  std::vector<Index> indices;
  HodlrMatrix r;  // |C| x |C| upper triangular, M(C,C) ~= r^T r
  double delta = 0.0;
  double diag_min = 0.0;

  std::vector<Index> sorted_indices() const;
};

ColumnSelection hcholp_inc(const HodlrMatrix& m, double delta,
                           const TruncationConfig& cfg);

// Conditioning certificate for a selection taken from a spectral projector:
// measures the factorization and idempotency perturbations, evaluates the
// explicit condition-number bound when its hypothesis holds, and compares
// against the measured kappa (dense SVD below dense_cap, randomized power
// estimates above).
struct SelectionCertificate {
  Index r = 0;
  double eps_h = 0.0;       // ||M(C,C) - R^T R||_2 + ||M^2 - M||_2
  double norm_e = 0.0;
  double norm_f = 0.0;
  bool hypothesis_holds = false;  // 1 - delta^2 + eps_h < 1/r
  double bound = 0.0;             // valid when hypothesis_holds
  double kappa_measured = 0.0;
  bool kappa_is_exact = false;    // dense SVD vs randomized estimate
};
SelectionCertificate selection_conditioning_certificate(
    const ColumnSelection& sel, const HodlrMatrix& pi, Rng& rng,
    Index dense_cap = 512);

// Q0 = pi(:, C) * r^{-1}; orthonormal when the selection is well conditioned.
HodlrMatrix orthonormal_basis_from_selection(const HodlrMatrix& pi,
                                             const ColumnSelection& sel,
                                             const TruncationConfig& cfg);

struct RangeBasis {
  HodlrMatrix q;        // n x nu, orthonormal columns
  Index selected = 0;   // |C|
  Index completed = 0;  // nu - |C|
  Index oversampling = 0;
};

// Completes the selected columns to an orthonormal basis of range(pi) by
// projecting Gaussian samples onto the orthogonal complement of the selected
// columns inside range(pi) and appending the leading QR factors. Retries once
// with doubled oversampling before throwing CompletionDeficient.
RangeBasis complete_basis(const HodlrMatrix& pi, const ColumnSelection& sel,
                          Index nu, Index oversampling, Rng& rng,
                          const TruncationConfig& cfg);

}  // namespace heig

#endif
