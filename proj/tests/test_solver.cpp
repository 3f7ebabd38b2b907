#include <Eigen/Eigenvalues>
#include <sstream>

#include "doctest.h"
#include "heig/matgen.hpp"
#include "heig/metrics.hpp"
#include "heig/solver.hpp"
#include "test_support.hpp"

using namespace heig;
using namespace heig::test;

namespace {
const TruncationConfig kCfg{1e-10, -1, false};

SolverConfig desk_config(Index n_stop, Index leaf_size) {
  SolverConfig cfg;
  cfg.n_stop = n_stop;
  cfg.leaf_size = leaf_size;
  cfg.seed = 12345;
  return cfg;
}
}  // namespace

TEST_CASE("choose_shift is the median of the diagonal") {
  Matrix d3 = Vector::LinSpaced(3, 1, 3).asDiagonal();
  CHECK(choose_shift(HodlrMatrix(d3)) == 2.0);
  Matrix d4 = Vector::LinSpaced(4, 1, 4).asDiagonal();
  CHECK(choose_shift(HodlrMatrix(d4)) == 2.5);
  BandedMatrix t = named_matrix(NamedMatrix::toeplitz121, 10);
  CHECK(choose_shift(build_from_banded(t, 4, kCfg)) == 2.0);
}

TEST_CASE("split: 2x2 diagonal at mu = 0") {
  Matrix a(2, 2);
  a << -1, 0, 0, 1;
  Rng rng(501);
  SolverConfig cfg = desk_config(1, 1);
  SplitResult sr = split(HodlrMatrix(a), 0.0, cfg, rng);
  CHECK(sr.nu == 1);
  CHECK(to_dense(sr.a_lo)(0, 0) == doctest::Approx(-1.0).epsilon(1e-10));
  CHECK(to_dense(sr.a_hi)(0, 0) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("split: toeplitz at its median splits in half") {
  BandedMatrix t = named_matrix(NamedMatrix::toeplitz121, 8);
  HodlrMatrix h = build_from_banded(t, 4, kCfg);
  Rng rng(503);
  SolverConfig cfg = desk_config(4, 4);
  SplitResult sr = split(h, 2.0, cfg, rng);
  CHECK(sr.nu == 4);  // eigenvalues 2 + 2cos are symmetric about 2
  CHECK(sr.a_lo.rows() == 4);
  CHECK(sr.a_hi.rows() == 4);
}

TEST_CASE("split: spectra of the two restrictions match the oracle") {
  Rng rng(509);
  GapSpectrumSpec spec;
  spec.n = 128;
  spec.gap = 1e-2;
  spec.n_stop = 32;
  Vector eigs = gap_spectrum(spec, rng);
  BandedMatrix banded = banded_from_spectrum(eigs, 3, rng);
  HodlrMatrix h = build_from_banded(banded, 16, kCfg);
  SolverConfig cfg = desk_config(32, 16);
  SplitResult sr = split(h, choose_shift(h), cfg, rng);

  DenseEig lo = dense_eig(to_dense(sr.a_lo));
  DenseEig hi = dense_eig(to_dense(sr.a_hi));
  Vector together(128);
  together << lo.lambda, hi.lambda;
  std::sort(together.data(), together.data() + 128);
  DenseEig oracle = dense_eig(banded.to_dense());
  const double scale = oracle.lambda.cwiseAbs().maxCoeff();
  CHECK((together - oracle.lambda).cwiseAbs().maxCoeff() <= 1e-8 * scale);
  // residual coupling between the two invariant subspaces
  Matrix qlod = to_dense(sr.q_lo.q);
  Matrix qhid = to_dense(sr.q_hi.q);
  CHECK(snorm(qlod.transpose() * banded.to_dense() * qhid) <= 1e-7 * scale);
}

TEST_CASE("split: degenerate shift reports DegenerateSplit") {
  Matrix a = Matrix::Zero(4, 4);
  a.diagonal() << 1, 2, 3, 4;
  HodlrMatrix h = build_from_dense(a, IndexPartition::balanced(4, 2), kCfg);
  Rng rng(521);
  SolverConfig cfg = desk_config(2, 2);
  CHECK_THROWS_AS(split(h, 10.0, cfg, rng), DegenerateSplit);
}

TEST_CASE("solve: tiny diagonal with forced recursion") {
  Matrix a = Matrix::Zero(3, 3);
  a.diagonal() << 3, 1, 2;
  HodlrMatrix h = build_from_dense(a, IndexPartition::balanced(3, 2), kCfg);
  SpectralDecomposition sd = solve(h, desk_config(1, 2));
  Vector want(3);
  want << 1, 2, 3;
  CHECK((sd.eigenvalues - want).cwiseAbs().maxCoeff() <= 1e-8);
  Matrix q = materialize_q(sd.q);
  // eigenvectors of a diagonal matrix are signed unit vectors
  Matrix p = q.cwiseAbs();
  Matrix perm_want(3, 3);
  perm_want << 0, 0, 1, 1, 0, 0, 0, 1, 0;
  CHECK((p - perm_want).norm() <= 1e-7);
}

TEST_CASE("solve: toeplitz n=512 against the analytic spectrum") {
  BandedMatrix t = named_matrix(NamedMatrix::toeplitz121, 512);
  SpectralDecomposition sd = solve(t, desk_config(128, 64));
  Vector analytic = toeplitz121_eigenvalues(512);
  const double e_lambda =
      (sd.eigenvalues - analytic).cwiseAbs().maxCoeff() / 4.0;  // ||A|| < 4
  CHECK(e_lambda <= 1e-9);

  // residuals via the factored eigenvectors, 20 probes
  Rng rng(523);
  std::uniform_int_distribution<Index> pick(0, 511);
  for (int probe = 0; probe < 20; ++probe) {
    const Index i = pick(rng);
    Vector e = Vector::Zero(512);
    e(i) = 1.0;
    Vector qi = apply_q(sd.q, e);
    CHECK((t.matvec(qi) - sd.eigenvalues(i) * qi).norm() / 4.0 <= 1e-8);
  }
}

TEST_CASE("solve: apply_q round trip and materialization agree") {
  Rng rng(541);
  GapSpectrumSpec spec;
  spec.n = 96;
  spec.gap = 1e-2;
  spec.n_stop = 24;
  Vector eigs = gap_spectrum(spec, rng);
  BandedMatrix banded = banded_from_spectrum(eigs, 2, rng);
  SpectralDecomposition sd = solve(banded, desk_config(24, 12));

  Vector v = random_matrix(96, 1, rng);
  Vector round = apply_q(sd.q, apply_q_transpose(sd.q, v));
  CHECK((round - v).norm() <= 1e-10 * v.norm());

  Matrix q = materialize_q(sd.q);
  for (Index i : {Index(0), Index(17), Index(95)}) {
    Vector e = Vector::Zero(96);
    e(i) = 1.0;
    CHECK((q.col(i) - apply_q(sd.q, e)).cwiseAbs().maxCoeff() == 0.0);
  }

  Matrix recon = q * sd.eigenvalues.asDiagonal() * q.transpose();
  Matrix ad = banded.to_dense();
  CHECK(snorm(recon - ad) <= 1e-8 * snorm(ad));
  CHECK(memory_units(sd.q) > 0);
}

TEST_CASE("solve: deterministic for a fixed seed") {
  BandedMatrix t = named_matrix(NamedMatrix::clement, 96);
  SpectralDecomposition a = solve(t, desk_config(24, 12));
  SpectralDecomposition b = solve(t, desk_config(24, 12));
  CHECK((a.eigenvalues - b.eigenvalues).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("solve: diagnostics carry per-node records") {
  BandedMatrix t = named_matrix(NamedMatrix::toeplitz121, 128);
  SpectralDecomposition sd = solve(t, desk_config(32, 16));
  REQUIRE_FALSE(sd.diagnostics.empty());
  CHECK(sd.diagnostics.front().path == "root");
  CHECK(sd.diagnostics.front().n == 128);
  CHECK(sd.diagnostics.front().nu == 64);
  CHECK(sd.diagnostics.front().sign_iterations > 0);
  for (const auto& d : sd.diagnostics) {
    CHECK(d.selected_lo <= d.nu);
    CHECK(d.selected_hi <= d.n - d.nu);
  }
}

TEST_CASE("factored eigenvectors: container round trip") {
  BandedMatrix t = named_matrix(NamedMatrix::toeplitz121, 96);
  SpectralDecomposition sd = solve(t, desk_config(24, 12));
  std::ostringstream os;
  write_factored_q(os, sd.q);
  std::istringstream is(os.str());
  FactoredEigenvectors back = read_factored_q(is);
  CHECK(back.size() == 96);
  Rng rng(547);
  Vector v = random_matrix(96, 1, rng);
  CHECK((apply_q(back, v) - apply_q(sd.q, v)).cwiseAbs().maxCoeff() == 0.0);
  std::ostringstream os2;
  write_factored_q(os2, back);
  CHECK(os.str() == os2.str());
}

TEST_CASE("solve: error metrics on a synthetic instance") {
  Rng rng(557);
  GapSpectrumSpec spec;
  spec.n = 512;
  spec.gap = 1e-2;
  spec.n_stop = 128;
  Vector eigs = gap_spectrum(spec, rng);
  BandedMatrix banded = banded_from_spectrum(eigs, 1, rng);
  SpectralDecomposition sd = solve(banded, desk_config(128, 64));
  DenseEig ref = dense_eig(banded.to_dense());
  ErrorReport rep = error_metrics(sd, banded, &ref);
  CHECK(rep.e_lambda <= 1e-8);
  CHECK(rep.e_res <= 1e-8);
  CHECK(rep.e_orth <= 1e-8);
  CHECK(rep.e_q <= 1e-8);
}
