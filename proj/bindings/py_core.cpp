#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "heig/matgen.hpp"
#include "heig/metrics.hpp"
#include "heig/sign.hpp"
#include "heig/solver.hpp"

namespace py = pybind11;
using namespace heig;

namespace {

Index detect_bandwidth(const Matrix& a) {
  Index b = 0;
  for (Index j = 0; j < a.cols(); ++j)
    for (Index i = 0; i < a.rows(); ++i)
      if (a(i, j) != 0.0) b = std::max(b, std::abs(i - j));
  return std::max<Index>(b, 1);
}

SolverConfig make_config(double epsilon, double delta, Index n_stop,
                         Index leaf_size, Index oversampling,
                         std::uint64_t seed, bool certify) {
  SolverConfig cfg;
  cfg.truncation.epsilon = epsilon;
  cfg.delta = delta;
  cfg.n_stop = n_stop;
  cfg.leaf_size = leaf_size;
  cfg.oversampling = oversampling;
  cfg.seed = seed;
  cfg.certify = certify;
  return cfg;
}

struct PySolution {
  SpectralDecomposition sd;

  Vector eigenvalues() const { return sd.eigenvalues; }
  Vector apply(const Vector& v) const { return apply_q(sd.q, v); }
  Vector apply_transpose(const Vector& v) const {
    return apply_q_transpose(sd.q, v);
  }
  Matrix materialize(Index cap) const { return materialize_q(sd.q, cap); }
  Index q_memory_units() const { return memory_units(sd.q); }
  py::list diagnostics() const {
    py::list out;
    for (const auto& d : sd.diagnostics) {
      py::dict j;
      j["path"] = d.path;
      j["n"] = d.n;
      j["shift"] = d.shift;
      j["nu"] = d.nu;
      j["selected_lo"] = d.selected_lo;
      j["selected_hi"] = d.selected_hi;
      j["sign_iterations"] = d.sign_iterations;
      j["projector_rank"] = d.projector_rank;
      j["kappa_lo"] = d.kappa_lo;
      j["kappa_hi"] = d.kappa_hi;
      out.append(j);
    }
    return out;
  }
};

BandedMatrix banded_from_numpy(const Matrix& a, Index bandwidth) {
  if (bandwidth <= 0) bandwidth = detect_bandwidth(a);
  return BandedMatrix::from_dense(a, bandwidth);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "spectral divide-and-conquer eigensolver core";

  py::register_exception<GapTooSmall>(m, "GapTooSmallError");
  py::register_exception<StructuralError>(m, "StructuralError");

  py::class_<TruncationConfig>(m, "TruncationConfig")
      .def(py::init<>())
      .def_readwrite("epsilon", &TruncationConfig::epsilon)
      .def_readwrite("max_rank", &TruncationConfig::max_rank)
      .def_readwrite("relative", &TruncationConfig::relative);

  py::class_<HodlrMatrix>(m, "Hodlr")
      .def_static(
          "from_dense",
          [](const Matrix& a, Index leaf_size, double epsilon) {
            TruncationConfig cfg;
            cfg.epsilon = epsilon;
            return build_from_dense(
                a, IndexPartition::balanced(a.rows(), leaf_size), cfg);
          },
          py::arg("a"), py::arg("leaf_size") = 64, py::arg("epsilon") = 1e-10)
      .def_static(
          "from_banded",
          [](const Matrix& a, Index bandwidth, Index leaf_size) {
            TruncationConfig cfg;
            return build_from_banded(banded_from_numpy(a, bandwidth),
                                     leaf_size, cfg);
          },
          py::arg("a"), py::arg("bandwidth") = 0, py::arg("leaf_size") = 64)
      .def("to_dense", [](const HodlrMatrix& h) { return to_dense(h); })
      .def("matvec", [](const HodlrMatrix& h, const Vector& v) {
        return matvec(h, v);
      })
      .def("rank", [](const HodlrMatrix& h) { return hodlr_rank(h); })
      .def("memory_units", [](const HodlrMatrix& h) { return memory_units(h); })
      .def("trace", [](const HodlrMatrix& h) { return hodlr_trace(h); })
      .def_property_readonly("shape",
                             [](const HodlrMatrix& h) {
                               return py::make_tuple(h.rows(), h.cols());
                             })
      .def("add",
           [](const HodlrMatrix& a, const HodlrMatrix& b, double epsilon) {
             TruncationConfig cfg;
             cfg.epsilon = epsilon;
             return add(a, b, cfg);
           },
           py::arg("other"), py::arg("epsilon") = 1e-10)
      .def("multiply",
           [](const HodlrMatrix& a, const HodlrMatrix& b, double epsilon) {
             TruncationConfig cfg;
             cfg.epsilon = epsilon;
             return multiply(a, b, cfg);
           },
           py::arg("other"), py::arg("epsilon") = 1e-10)
      .def("cholesky", [](const HodlrMatrix& a, double epsilon) {
        TruncationConfig cfg;
        cfg.epsilon = epsilon;
        return hodlr_cholesky(a, cfg);
      }, py::arg("epsilon") = 1e-10);

  py::class_<PySolution>(m, "Solution")
      .def_property_readonly("eigenvalues", &PySolution::eigenvalues)
      .def("apply", &PySolution::apply, py::arg("v"))
      .def("apply_transpose", &PySolution::apply_transpose, py::arg("v"))
      .def("materialize", &PySolution::materialize, py::arg("cap") = 4096)
      .def_property_readonly("q_memory_units", &PySolution::q_memory_units)
      .def_property_readonly("diagnostics", &PySolution::diagnostics);

  m.def(
      "solve",
      [](const Matrix& a, Index bandwidth, double epsilon, double delta,
         Index n_stop, Index leaf_size, Index oversampling, std::uint64_t seed,
         bool certify) {
        SolverConfig cfg = make_config(epsilon, delta, n_stop, leaf_size,
                                       oversampling, seed, certify);
        PySolution out;
        out.sd = solve(banded_from_numpy(a, bandwidth), cfg);
        return out;
      },
      py::arg("a"), py::arg("bandwidth") = 0, py::arg("epsilon") = 1e-10,
      py::arg("delta") = 0.4, py::arg("n_stop") = 0, py::arg("leaf_size") = 0,
      py::arg("oversampling") = 10, py::arg("seed") = 20240801,
      py::arg("certify") = false,
      "Full spectral decomposition of a symmetric banded matrix.");

  m.def(
      "spectral_projector",
      [](const Matrix& a, double shift, double epsilon, std::uint64_t seed) {
        TruncationConfig tc;
        tc.epsilon = epsilon;
        HodlrMatrix h = build_from_banded(banded_from_numpy(a, 0),
                                          SolverConfig::default_leaf_size(
                                              detect_bandwidth(a), 256),
                                          tc);
        SignConfig scfg;
        scfg.truncation = tc;
        Rng rng(seed);
        ProjectorPair pp = hdwh(add_diagonal(h, -shift), scfg, rng);
        return py::make_tuple(to_dense(pp.pi_lo), pp.nu, pp.iterations);
      },
      py::arg("a"), py::arg("shift"), py::arg("epsilon") = 1e-10,
      py::arg("seed") = 1,
      "Dense spectral projector onto eigenvalues below the shift.");

  m.def(
      "gap_spectrum",
      [](Index n, double gap, Index n_stop, double lo, double hi,
         std::uint64_t seed) {
        GapSpectrumSpec spec;
        spec.n = n;
        spec.gap = gap;
        spec.n_stop = n_stop;
        spec.lo = lo;
        spec.hi = hi;
        Rng rng(seed);
        return gap_spectrum(spec, rng);
      },
      py::arg("n"), py::arg("gap"), py::arg("n_stop") = 256,
      py::arg("lo") = -1.0, py::arg("hi") = 1.0, py::arg("seed") = 1);

  m.def(
      "banded_from_spectrum",
      [](const Vector& eigs, Index bandwidth, std::uint64_t seed) {
        Rng rng(seed);
        return banded_from_spectrum(eigs, bandwidth, rng).to_dense();
      },
      py::arg("eigenvalues"), py::arg("bandwidth"), py::arg("seed") = 1);

  m.def(
      "named_matrix",
      [](const std::string& kind, Index n) {
        return named_matrix(named_matrix_kind(kind), n).to_dense();
      },
      py::arg("kind"), py::arg("n"));

  m.def("toeplitz121_eigenvalues", &toeplitz121_eigenvalues, py::arg("n"));
  m.def("clement_eigenvalues", &clement_eigenvalues, py::arg("n"));
}
