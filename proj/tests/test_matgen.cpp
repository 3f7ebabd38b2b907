#include <Eigen/Eigenvalues>

#include "doctest.h"
#include "heig/matgen.hpp"
#include "heig/metrics.hpp"
#include "test_support.hpp"

using namespace heig;
using namespace heig::test;

TEST_CASE("gap_spectrum: single split, recursion floor, measured gap") {
  Rng rng(401);
  GapSpectrumSpec two;
  two.n = 2;
  two.gap = 0.1;
  two.n_stop = 1;
  Vector e2 = gap_spectrum(two, rng);
  CHECK(e2(0) >= -1.0);
  CHECK(e2(0) <= -0.1);
  CHECK(e2(1) >= 0.1);
  CHECK(e2(1) <= 1.0);

  GapSpectrumSpec four;
  four.n = 4;
  four.gap = 0.5;
  four.n_stop = 2;
  Vector e4 = gap_spectrum(four, rng);
  CHECK(e4(1) <= -0.5);
  CHECK(e4(2) >= 0.5);
  const double relgap = (e4(2) - e4(1)) / (e4(3) - e4(0));
  CHECK(relgap >= 0.5 * (1 - 1e-12));

  GapSpectrumSpec big;
  big.n = 1024;
  big.gap = 1e-2;
  big.n_stop = 128;
  Vector eb = gap_spectrum(big, rng);
  const double mid = (eb(512) - eb(511)) / (eb(1023) - eb(0));
  CHECK(mid >= 1e-2 * (1 - 1e-12));
  CHECK(mid <= 3e-2);

  GapSpectrumSpec bad = big;
  bad.gap = 1.0;
  CHECK_THROWS_AS(gap_spectrum(bad, rng), StructuralError);
}

TEST_CASE("gap_spectrum: identical seeds give identical draws") {
  GapSpectrumSpec spec;
  spec.n = 200;
  spec.gap = 1e-3;
  spec.n_stop = 50;
  Rng r1(77), r2(77);
  Vector a = gap_spectrum(spec, r1);
  Vector b = gap_spectrum(spec, r2);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("banded_from_spectrum: scalar spectrum stays scalar") {
  Rng rng(409);
  Vector eigs = Vector::Constant(12, 2.5);
  BandedMatrix m = banded_from_spectrum(eigs, 3, rng);
  Matrix d = m.to_dense();
  CHECK((d - 2.5 * Matrix::Identity(12, 12)).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("banded_from_spectrum: tridiagonal spectrum match") {
  Rng rng(419);
  Vector eigs = random_matrix(8, 1, rng);
  std::sort(eigs.data(), eigs.data() + 8);
  BandedMatrix m = banded_from_spectrum(eigs, 1, rng);
  DenseEig de = dense_eig(m.to_dense());
  CHECK((de.lambda - eigs).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("banded_from_spectrum: bandwidth is structural") {
  Rng rng(421);
  Vector eigs = random_matrix(64, 1, rng);
  BandedMatrix m = banded_from_spectrum(eigs, 4, rng);
  Matrix d = m.to_dense();
  for (Index i = 0; i < 64; ++i)
    for (Index j = 0; j < 64; ++j)
      if (std::abs(i - j) > 4) CHECK(d(i, j) == 0.0);
  // entries just inside the band are generically populated
  double sub4 = 0.0;
  for (Index i = 4; i < 64; ++i) sub4 += std::abs(d(i, i - 4));
  CHECK(sub4 > 0.0);
}

TEST_CASE("banded_from_spectrum: spectrum preserved across bandwidths") {
  Rng rng(431);
  for (Index b : {1, 2, 8}) {
    GapSpectrumSpec spec;
    spec.n = 96;
    spec.gap = 1e-2;
    spec.n_stop = 24;
    Vector eigs = gap_spectrum(spec, rng);
    BandedMatrix m = banded_from_spectrum(eigs, b, rng);
    DenseEig de = dense_eig(m.to_dense());
    const double scale = eigs.cwiseAbs().maxCoeff();
    CHECK((de.lambda - eigs).cwiseAbs().maxCoeff() <= 96 * 1e-12 * scale);
  }
}

TEST_CASE("named matrices") {
  BandedMatrix t = named_matrix(NamedMatrix::toeplitz121, 3);
  DenseEig dt = dense_eig(t.to_dense());
  Vector want(3);
  want << 2 - std::sqrt(2.0), 2.0, 2 + std::sqrt(2.0);
  CHECK((dt.lambda - want).cwiseAbs().maxCoeff() <= 1e-13);
  CHECK(t.bandwidth() == 1);
  CHECK(t.asymmetry() == 0.0);

  BandedMatrix c = named_matrix(NamedMatrix::clement, 3);
  DenseEig dc = dense_eig(c.to_dense());
  Vector cwant(3);
  cwant << -2, 0, 2;
  CHECK((dc.lambda - cwant).cwiseAbs().maxCoeff() <= 1e-13);

  CHECK_THROWS_AS(named_matrix_kind("legendre"), StructuralError);
  CHECK(named_matrix_kind("clement") == NamedMatrix::clement);
}

TEST_CASE("clement eigenvalues come in symmetric pairs") {
  for (Index n : {6, 7, 64}) {
    BandedMatrix c = named_matrix(NamedMatrix::clement, n);
    DenseEig de = dense_eig(c.to_dense());
    Vector analytic = clement_eigenvalues(n);
    CHECK((de.lambda - analytic).cwiseAbs().maxCoeff() <= n * 1e-12 * n);
    for (Index i = 0; i < n; ++i)
      CHECK(de.lambda(i) == doctest::Approx(-de.lambda(n - 1 - i)).epsilon(1e-9));
  }
}

TEST_CASE("dense_eig: diagonal, exchange, analytic toeplitz") {
  Matrix d = Vector::LinSpaced(4, 4, 1).asDiagonal();
  DenseEig de = dense_eig(d);
  Vector want(4);
  want << 1, 2, 3, 4;
  CHECK((de.lambda - want).cwiseAbs().maxCoeff() <= 1e-14);
  // permutation structure of the eigenvectors
  CHECK((de.q.cwiseAbs() - Matrix::Identity(4, 4).colwise().reverse()).norm() <=
        1e-12);

  Matrix x(2, 2);
  x << 0, 1, 1, 0;
  DenseEig dx = dense_eig(x);
  CHECK(dx.lambda(0) == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(dx.lambda(1) == doctest::Approx(1.0).epsilon(1e-14));

  BandedMatrix t = named_matrix(NamedMatrix::toeplitz121, 16);
  DenseEig dt = dense_eig(t.to_dense());
  CHECK((dt.lambda - toeplitz121_eigenvalues(16)).cwiseAbs().maxCoeff() <=
        1e-13);

  Matrix m = dt.q * dt.lambda.asDiagonal() * dt.q.transpose();
  CHECK(snorm(m - t.to_dense()) <= 16 * 1e-13 * snorm(t.to_dense()));
}

TEST_CASE("error_metrics: reference compared against itself") {
  BandedMatrix t = named_matrix(NamedMatrix::toeplitz121, 24);
  DenseEig de = dense_eig(t.to_dense());

  auto node = std::make_shared<FactoredEigenvectors::Node>();
  node->dense = true;
  node->q = de.q;
  std::vector<Index> perm(24);
  for (Index i = 0; i < 24; ++i) perm[i] = i;
  SpectralDecomposition result;
  result.eigenvalues = de.lambda;
  result.q = FactoredEigenvectors(node, perm);

  ErrorReport rep = error_metrics(result, t, &de);
  CHECK(rep.e_lambda == 0.0);
  CHECK(rep.e_q <= 1e-13);
  CHECK(rep.e_res <= 1e-13);
  CHECK(rep.e_orth <= 1e-13);

  // flipping reference eigenvector signs must not change the angle metric
  DenseEig flipped = de;
  for (Index j = 0; j < 24; j += 2) flipped.q.col(j) *= -1.0;
  ErrorReport rep2 = error_metrics(result, t, &flipped);
  CHECK(rep2.e_q <= 1e-13);
}
