#ifndef HEIG_METRICS_HPP
#define HEIG_METRICS_HPP

#include <functional>
#include <optional>

#include "heig/matgen.hpp"
#include "heig/solver.hpp"

namespace heig {

struct ErrorReport {
  double e_lambda = 0.0;  // max |lambda_i - ref_i| / ||A||
  double e_res = 0.0;     // max ||A q_i - lambda_i q_i|| / ||A||
  double e_orth = 0.0;    // max ||Q^T q_i - e_i||
  double e_q = 0.0;       // max |1 - cos angle(q_i, ref q_i)|
  bool has_reference = false;
  bool sampled = false;   // true when only a stratified index sample was used
  Index samples = 0;
};

// Residual and orthogonality are always measured; the eigenvalue and
// eigenvector errors require `reference`. Columns are probed via apply_q on
// unit vectors: every index when n <= 2048, else 64 stratified samples.
ErrorReport error_metrics(const SpectralDecomposition& result,
                          const std::function<Vector(const Vector&)>& apply_a,
                          double norm_a, const DenseEig* reference);

ErrorReport error_metrics(const SpectralDecomposition& result,
                          const BandedMatrix& a, const DenseEig* reference);

}  // namespace heig

#endif
