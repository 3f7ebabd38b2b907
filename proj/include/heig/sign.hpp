#ifndef HEIG_SIGN_HPP
#define HEIG_SIGN_HPP

#include <vector>

#include "heig/hodlr.hpp"

namespace heig {

// Weights of one dynamically weighted Halley step, derived from the current
// lower bound l on the smallest singular value of the iterate.
struct HalleyParams {
  double a = 3.0;
  double b = 1.0;
  double c = 3.0;
  double l = 1.0;
};

struct SignConfig {
  TruncationConfig truncation;
  double stop_tol = 1e-15;
  int max_iterations = 25;
  int power_steps = 20;
  double power_tol = 1e-3;
  // Once the scalar bound has converged, keep iterating until the iterate
  // itself stagnates (guards against an overestimated l0; see hdwh).
  double stagnation_factor = 1e3;
};

struct SignIterationRecord {
  int k;
  double l, a, b, c;
  Index max_off_rank;
};

// Spectral projector pair extracted from the sign function of a symmetric
// matrix: pi_lo projects onto the invariant subspace of negative eigenvalues,
// pi_hi onto the complement. Both are exactly symmetric by construction.
struct ProjectorPair {
  HodlrMatrix pi_lo;
  HodlrMatrix pi_hi;
  Index nu = 0;  // round(trace(pi_lo))
  int iterations = 0;
  double alpha = 0.0;
  double l0 = 0.0;
  std::vector<SignIterationRecord> trace;
};

// h(l), the dynamically weighted Halley coefficient; exact closed form.
HalleyParams halley_step_params(double l);
double update_l(double l, const HalleyParams& p);

// (Scalar preview) number of iterations the l-recurrence needs from l0.
int scalar_iteration_count(double l0, double stop_tol, int max_iterations);

// alpha >~ ||a||_2 via power iteration on a^2, inflated by 5%.
double estimate_alpha(const HodlrMatrix& a, const SignConfig& cfg, Rng& rng);

// l0 <~ sigma_min(x0) via inverse power iteration on x0^T x0 (factorized
// once with the hierarchical Cholesky), deflated by 5%. Throws
// ShiftTooCloseToEigenvalue when the factorization breaks down.
double estimate_l0(const HodlrMatrix& x0, const SignConfig& cfg, Rng& rng);

// Sign-function iteration on a symmetric HODLR matrix; returns the projector
// pair of the splitting at 0. Throws GapTooSmall when the truncated
// arithmetic cannot resolve the spectral gap, NoConvergence past the
// iteration cap.
ProjectorPair hdwh(const HodlrMatrix& a, const SignConfig& cfg, Rng& rng);

}  // namespace heig

#endif
