#ifndef HEIG_TYPES_HPP
#define HEIG_TYPES_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace heig {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Rng = std::mt19937_64;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape or partition violations: dimension mismatch, incompatible trees,
// non-symmetric input where symmetry is required.
class StructuralError : public Error {
 public:
  using Error::Error;
};

// Cholesky hit a non-positive pivot. Carries the tree depth and the global
// row offset of the block where the factorization broke down.
class IndefiniteMatrix : public Error {
 public:
  IndefiniteMatrix(const std::string& what, int level, Index offset)
      : Error(what), level(level), offset(offset) {}
  int level;
  Index offset;
};

class SingularTriangular : public Error {
 public:
  using Error::Error;
};

class NotPsd : public Error {
 public:
  using Error::Error;
};

class ShiftTooCloseToEigenvalue : public Error {
 public:
  using Error::Error;
};

// Sign iteration breakdown: the spectral gap at the current shift is too
// small for the truncated arithmetic. `iteration` is -1 when the failure
// happened before the main loop (during parameter estimation).
class GapTooSmall : public Error {
 public:
  GapTooSmall(const std::string& what, int iteration, double shift)
      : Error(what), iteration(iteration), shift(shift) {}
  int iteration;
  double shift;
};

class NoConvergence : public Error {
 public:
  using Error::Error;
};

class DegenerateSplit : public Error {
 public:
  using Error::Error;
};

class CompletionDeficient : public Error {
 public:
  using Error::Error;
};

class DepthExceeded : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// FNV-1a over raw bytes; used to stamp output artifacts with a content hash.
std::uint64_t fnv1a64(const void* data, std::size_t size);
std::string fnv1a64_hex(const void* data, std::size_t size);

}  // namespace heig

#endif
