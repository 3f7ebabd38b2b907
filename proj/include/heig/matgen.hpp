#ifndef HEIG_MATGEN_HPP
#define HEIG_MATGEN_HPP

#include <string>

#include "heig/banded.hpp"
#include "heig/types.hpp"

namespace heig {

// Eigenvalue sets whose relative gap is `gap` at every recursive halving of
// the spectrum. The interval recursion stops once the number of leaf
// intervals would exceed n / n_stop.
struct GapSpectrumSpec {
  Index n = 0;
  double gap = 1e-2;
  Index n_stop = 256;
  double lo = -1.0, hi = 1.0;
};

Vector gap_spectrum(const GapSpectrumSpec& spec, Rng& rng);

// Symmetric banded matrix with the prescribed spectrum, built from diag(eigs)
// by random plane rotations that widen the bandwidth one diagonal per sweep
// (bulges chased off the edge).
BandedMatrix banded_from_spectrum(const Vector& eigs, Index bandwidth,
                                  Rng& rng);

enum class NamedMatrix { toeplitz121, clement };
NamedMatrix named_matrix_kind(const std::string& name);  // throws on unknown
BandedMatrix named_matrix(NamedMatrix kind, Index n);

struct DenseEig {
  Matrix q;        // columns = eigenvectors, ascending order
  Vector lambda;
};

// Reference symmetric eigensolver (also the recursion base case).
DenseEig dense_eig(const Matrix& m);

// Analytic spectra for the named matrices, ascending.
Vector toeplitz121_eigenvalues(Index n);
Vector clement_eigenvalues(Index n);

}  // namespace heig

#endif
