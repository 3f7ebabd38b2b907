#ifndef HEIG_SOLVER_HPP
#define HEIG_SOLVER_HPP

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "heig/column_select.hpp"
#include "heig/hodlr.hpp"
#include "heig/sign.hpp"

namespace heig {

struct SolverConfig {
  TruncationConfig truncation;  // epsilon defaults to 1e-10
  double stop_tol = 1e-15;      // sign-iteration stopping tolerance
  double delta = 0.4;           // column-selection threshold
  Index oversampling = 10;
  Index n_stop = 0;     // recursion cutoff; 0 = bandwidth-based default
  Index leaf_size = 0;  // HODLR leaf size; 0 = bandwidth-based default
  std::uint64_t seed = 20240801;
  int max_depth = 64;
  bool certify = true;   // per-node eps_h / kappa measurements
  Index dense_cap = 4096;
  // When set (sweep harness), every node shifts at the median of its own
  // slice of this sorted spectrum instead of the diagonal median, exactly
  // pinning each divide to the designed gap. No shift retries in this mode:
  // an unresolvable gap is meant to surface as GapTooSmall.
  std::shared_ptr<const Vector> known_spectrum;

  static Index default_n_stop(Index bandwidth);
  static Index default_leaf_size(Index bandwidth, Index n_stop);
  SolverConfig with_defaults(Index bandwidth) const;
};

// Eigenvector matrix kept as the implicit product of one orthonormal
// [H1 H2] factor per divide node and a dense orthogonal block per base-case
// leaf; never multiplied out. `perm` maps ascending-eigenvalue order to the
// recursion's natural column order.
class FactoredEigenvectors {
 public:
  struct Node {
    bool dense = true;
    Matrix q;               // base case
    HodlrMatrix h_lo, h_hi; // divide node
    std::shared_ptr<const Node> lo, hi;
  };

  FactoredEigenvectors() = default;
  FactoredEigenvectors(std::shared_ptr<const Node> root, std::vector<Index> perm);

  Index size() const { return static_cast<Index>(perm_.size()); }
  const std::vector<Index>& permutation() const { return perm_; }
  const Node& root() const { return *root_; }
  bool empty() const { return !root_; }
  int depth() const;

 private:
  std::shared_ptr<const Node> root_;
  std::vector<Index> perm_;
};

Vector apply_q(const FactoredEigenvectors& q, const Vector& v);
Vector apply_q_transpose(const FactoredEigenvectors& q, const Vector& v);
// Dense orthogonal matrix, columns in ascending-eigenvalue order; guarded by
// a size cap since this is for validation only.
Matrix materialize_q(const FactoredEigenvectors& q, Index dense_cap = 4096);
Index memory_units(const FactoredEigenvectors& q);

void write_factored_q(std::ostream& os, const FactoredEigenvectors& q);
FactoredEigenvectors read_factored_q(std::istream& is);

struct NodeDiagnostics {
  std::string path;  // "" = root, then '0'/'1' per descent
  Index n = 0;
  double shift = 0.0;
  Index nu = 0;
  Index selected_lo = 0, selected_hi = 0;
  int sign_iterations = 0;
  Index projector_rank = 0;
  double eps_h_lo = 0.0, eps_h_hi = 0.0;
  double kappa_lo = 0.0, kappa_hi = 0.0;
  double coupling = 0.0;  // randomized probe of ||Q_lo^T A Q_hi||
  double seconds = 0.0;
  std::vector<SignIterationRecord> sign_trace;
};

struct SpectralDecomposition {
  Vector eigenvalues;  // ascending
  FactoredEigenvectors q;
  std::vector<NodeDiagnostics> diagnostics;
};

double choose_shift(const HodlrMatrix& a);

struct SplitResult {
  RangeBasis q_lo, q_hi;
  HodlrMatrix a_lo, a_hi;
  Index nu = 0;
  int sign_iterations = 0;
  Index projector_rank = 0;
  std::vector<SignIterationRecord> sign_trace;
  // filled when SolverConfig::certify is set
  SelectionCertificate cert_lo, cert_hi;
  bool certified = false;
};

// One divide step at shift mu: projectors, column selection, completed bases
// and the two congruence restrictions. Throws GapTooSmall / DegenerateSplit.
SplitResult split(const HodlrMatrix& a, double mu, const SolverConfig& cfg,
                  Rng& rng);

SpectralDecomposition solve(const HodlrMatrix& a, const SolverConfig& cfg);
SpectralDecomposition solve(const BandedMatrix& a, const SolverConfig& cfg);

}  // namespace heig

#endif
