#include "heig/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>

#include "heig/matgen.hpp"
#include "heig/serialization.hpp"

namespace heig {

Index SolverConfig::default_n_stop(Index bandwidth) {
  if (bandwidth <= 1) return 3250;
  if (bandwidth == 2) return 1750;
  return 2500;
}

Index SolverConfig::default_leaf_size(Index bandwidth, Index n_stop) {
  const Index preferred = bandwidth <= 1 ? 250 : 500;
  return std::max<Index>(2, std::min(preferred, n_stop));
}

SolverConfig SolverConfig::with_defaults(Index bandwidth) const {
  SolverConfig c = *this;
  if (c.n_stop == 0) c.n_stop = default_n_stop(bandwidth);
  if (c.leaf_size == 0) c.leaf_size = default_leaf_size(bandwidth, c.n_stop);
  c.n_stop = std::max(c.n_stop, c.leaf_size);
  return c;
}

// FactoredEigenvectors -------------------------------------------------------

FactoredEigenvectors::FactoredEigenvectors(std::shared_ptr<const Node> root,
                                           std::vector<Index> perm)
    : root_(std::move(root)), perm_(std::move(perm)) {}

int FactoredEigenvectors::depth() const {
  struct Walk {
    static int depth(const Node& n) {
      if (n.dense) return 0;
      return 1 + std::max(depth(*n.lo), depth(*n.hi));
    }
  };
  return root_ ? Walk::depth(*root_) : 0;
}

namespace {

using QNode = FactoredEigenvectors::Node;

Vector apply_node(const QNode& nd, const Vector& v) {
  if (nd.dense) return nd.q * v;
  const Index nu = nd.h_lo.cols();
  Vector lo = apply_node(*nd.lo, v.head(nu));
  Vector hi = apply_node(*nd.hi, v.tail(v.size() - nu));
  return matvec(nd.h_lo, lo) + matvec(nd.h_hi, hi);
}

Vector apply_node_transposed(const QNode& nd, const Vector& v) {
  if (nd.dense) return nd.q.transpose() * v;
  Vector lo = apply_node_transposed(*nd.lo, matvec_transposed(nd.h_lo, v));
  Vector hi = apply_node_transposed(*nd.hi, matvec_transposed(nd.h_hi, v));
  Vector out(lo.size() + hi.size());
  out << lo, hi;
  return out;
}

Index node_memory(const QNode& nd) {
  if (nd.dense) return nd.q.size();
  return memory_units(nd.h_lo) + memory_units(nd.h_hi) + node_memory(*nd.lo) +
         node_memory(*nd.hi);
}

}  // namespace

Vector apply_q(const FactoredEigenvectors& q, const Vector& v) {
  if (v.size() != q.size()) throw StructuralError("apply_q: dimension mismatch");
  const auto& perm = q.permutation();
  Vector u(v.size());
  for (Index j = 0; j < v.size(); ++j) u(perm[j]) = v(j);
  return apply_node(q.root(), u);
}

Vector apply_q_transpose(const FactoredEigenvectors& q, const Vector& v) {
  if (v.size() != q.size())
    throw StructuralError("apply_q_transpose: dimension mismatch");
  Vector w = apply_node_transposed(q.root(), v);
  const auto& perm = q.permutation();
  Vector out(v.size());
  for (Index j = 0; j < v.size(); ++j) out(j) = w(perm[j]);
  return out;
}

Matrix materialize_q(const FactoredEigenvectors& q, Index dense_cap) {
  if (q.size() > dense_cap)
    throw StructuralError("materialize_q: size exceeds dense cap");
  // column j is apply_q(e_j) by definition, bit for bit
  const Index n = q.size();
  Matrix out(n, n);
  Vector e = Vector::Zero(n);
  for (Index j = 0; j < n; ++j) {
    e(j) = 1.0;
    out.col(j) = apply_q(q, e);
    e(j) = 0.0;
  }
  return out;
}

Index memory_units(const FactoredEigenvectors& q) {
  return q.empty() ? 0 : node_memory(q.root());
}

// container -----------------------------------------------------------------

namespace {

constexpr char kQMagic[4] = {'H', 'S', 'D', 'Q'};

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw IoError("factored-q container: truncated stream");
  return v;
}

void put_qnode(std::ostream& os, const QNode& nd) {
  put<std::uint8_t>(os, nd.dense ? 0 : 1);
  if (nd.dense) {
    put<std::uint64_t>(os, nd.q.rows());
    put<std::uint64_t>(os, nd.q.cols());
    os.write(reinterpret_cast<const char*>(nd.q.data()),
             static_cast<std::streamsize>(sizeof(double)) * nd.q.size());
    return;
  }
  write_hodlr(os, nd.h_lo);
  write_hodlr(os, nd.h_hi);
  put_qnode(os, *nd.lo);
  put_qnode(os, *nd.hi);
}

std::shared_ptr<const QNode> get_qnode(std::istream& is) {
  auto nd = std::make_shared<QNode>();
  const auto tag = get<std::uint8_t>(is);
  if (tag == 0) {
    nd->dense = true;
    const auto rows = static_cast<Index>(get<std::uint64_t>(is));
    const auto cols = static_cast<Index>(get<std::uint64_t>(is));
    nd->q.resize(rows, cols);
    is.read(reinterpret_cast<char*>(nd->q.data()),
            static_cast<std::streamsize>(sizeof(double)) * nd->q.size());
    if (!is) throw IoError("factored-q container: truncated dense block");
    return nd;
  }
  if (tag != 1) throw IoError("factored-q container: bad node tag");
  nd->dense = false;
  nd->h_lo = read_hodlr(is);
  nd->h_hi = read_hodlr(is);
  nd->lo = get_qnode(is);
  nd->hi = get_qnode(is);
  return nd;
}

}  // namespace

void write_factored_q(std::ostream& os, const FactoredEigenvectors& q) {
  os.write(kQMagic, 4);
  put<std::uint32_t>(os, 1);
  put<std::uint64_t>(os, q.size());
  for (Index p : q.permutation()) put<std::uint64_t>(os, p);
  put_qnode(os, q.root());
  if (!os) throw IoError("factored-q container: write failure");
}

FactoredEigenvectors read_factored_q(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kQMagic, 4) != 0)
    throw IoError("factored-q container: bad magic");
  if (get<std::uint32_t>(is) != 1)
    throw IoError("factored-q container: unsupported version");
  const auto n = static_cast<Index>(get<std::uint64_t>(is));
  std::vector<Index> perm(n);
  for (Index i = 0; i < n; ++i)
    perm[i] = static_cast<Index>(get<std::uint64_t>(is));
  return {get_qnode(is), std::move(perm)};
}

// divide step -----------------------------------------------------------------

double choose_shift(const HodlrMatrix& a) {
  Vector d = hodlr_diagonal(a);
  std::vector<double> v(d.data(), d.data() + d.size());
  const size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double upper = v[mid];
  if (v.size() % 2 == 0) {
    const double lower =
        *std::max_element(v.begin(), v.begin() + static_cast<long>(mid));
    return 0.5 * (lower + upper);
  }
  return upper;
}

SplitResult split(const HodlrMatrix& a, double mu, const SolverConfig& cfg,
                  Rng& rng) {
  const Index n = a.rows();
  SignConfig scfg;
  scfg.truncation = cfg.truncation;
  scfg.stop_tol = cfg.stop_tol;

  ProjectorPair pp;
  try {
    pp = hdwh(add_diagonal(a, -mu), scfg, rng);
  } catch (const GapTooSmall& e) {
    throw GapTooSmall(e.what(), e.iteration, mu);
  }

  const double tr = hodlr_trace(pp.pi_lo);
  if (std::abs(tr - std::round(tr)) > 0.1)
    throw GapTooSmall("split: projector trace is not near an integer",
                      pp.iterations, mu);
  const Index nu = static_cast<Index>(std::llround(tr));
  if (nu <= 0 || nu >= n)
    throw DegenerateSplit("split: all eigenvalues on one side of the shift");

  SplitResult out;
  out.nu = nu;
  out.sign_iterations = pp.iterations;
  out.sign_trace = pp.trace;
  out.projector_rank = std::max(hodlr_rank(pp.pi_lo), hodlr_rank(pp.pi_hi));

  ColumnSelection sel_lo = hcholp_inc(pp.pi_lo, cfg.delta, cfg.truncation);
  ColumnSelection sel_hi = hcholp_inc(pp.pi_hi, cfg.delta, cfg.truncation);
  if (cfg.certify) {
    out.cert_lo = selection_conditioning_certificate(sel_lo, pp.pi_lo, rng);
    out.cert_hi = selection_conditioning_certificate(sel_hi, pp.pi_hi, rng);
    out.certified = true;
  }
  out.q_lo = complete_basis(pp.pi_lo, sel_lo, nu, cfg.oversampling, rng,
                            cfg.truncation);
  out.q_hi = complete_basis(pp.pi_hi, sel_hi, n - nu, cfg.oversampling, rng,
                            cfg.truncation);

  out.a_lo = symmetrize(
      multiply(transpose(out.q_lo.q), multiply(a, out.q_lo.q, cfg.truncation),
               cfg.truncation),
      cfg.truncation);
  out.a_hi = symmetrize(
      multiply(transpose(out.q_hi.q), multiply(a, out.q_hi.q, cfg.truncation),
               cfg.truncation),
      cfg.truncation);
  return out;
}

// full solve -------------------------------------------------------------------

namespace {

struct SolveContext {
  SolverConfig cfg;
  Rng rng;
  std::vector<NodeDiagnostics>* diagnostics;
};

std::pair<Vector, std::shared_ptr<const QNode>> solve_rec(
    const HodlrMatrix& a, SolveContext& ctx, const std::string& path,
    int depth, Index spectrum_offset) {
  const Index n = a.rows();
  if (depth > ctx.cfg.max_depth)
    throw DepthExceeded("solve: recursion depth limit reached");

  if (n <= ctx.cfg.n_stop) {
    DenseEig de = dense_eig(to_dense(a));
    auto nd = std::make_shared<QNode>();
    nd->dense = true;
    nd->q = std::move(de.q);
    return {std::move(de.lambda), std::move(nd)};
  }

  const auto t0 = std::chrono::steady_clock::now();
  SplitResult sr;
  double mu = 0.0;
  if (ctx.cfg.known_spectrum) {
    // harness mode: pin the shift to the median of this node's eigenvalues
    const Vector& s = *ctx.cfg.known_spectrum;
    mu = 0.5 * (s(spectrum_offset + n / 2 - 1) + s(spectrum_offset + n / 2));
    try {
      sr = split(a, mu, ctx.cfg, ctx.rng);
    } catch (const GapTooSmall& e) {
      throw GapTooSmall(std::string(e.what()) + " (node " +
                            (path.empty() ? std::string("root") : path) + ")",
                        e.iteration, e.shift);
    }
  } else {
    Vector diag = hodlr_diagonal(a);
    const double dmin = diag.minCoeff(), dmax = diag.maxCoeff();
    const double range = dmax - dmin;
    const double median = choose_shift(a);
    const double candidates[4] = {median, median + 0.05 * range,
                                  median - 0.05 * range, 0.5 * (dmin + dmax)};

    // A shift landing on (or too close to) an eigenvalue is retried with the
    // perturbed candidates before giving up; an adjusted shift restores the
    // gap unless the spectrum is genuinely unsplittable there.
    bool have_split = false;
    for (int attempt = 0; attempt < 4 && !have_split; ++attempt) {
      mu = candidates[attempt];
      try {
        sr = split(a, mu, ctx.cfg, ctx.rng);
        have_split = true;
      } catch (const DegenerateSplit&) {
        if (attempt == 3)
          throw GapTooSmall(
              "solve: no shift produced a two-sided split (node " +
                  (path.empty() ? std::string("root") : path) + ")",
              -1, mu);
      } catch (const GapTooSmall& e) {
        if (attempt == 3)
          throw GapTooSmall(std::string(e.what()) + " (node " +
                                (path.empty() ? std::string("root") : path) +
                                ")",
                            e.iteration, e.shift);
      }
    }
  }

  if (ctx.diagnostics) {
    NodeDiagnostics nd;
    nd.path = path.empty() ? "root" : path;
    nd.n = n;
    nd.shift = mu;
    nd.nu = sr.nu;
    nd.selected_lo = sr.q_lo.selected;
    nd.selected_hi = sr.q_hi.selected;
    nd.sign_iterations = sr.sign_iterations;
    nd.projector_rank = sr.projector_rank;
    nd.sign_trace = sr.sign_trace;
    if (sr.certified) {
      nd.eps_h_lo = sr.cert_lo.eps_h;
      nd.eps_h_hi = sr.cert_hi.eps_h;
      nd.kappa_lo = sr.cert_lo.kappa_measured;
      nd.kappa_hi = sr.cert_hi.kappa_measured;
    }
    if (ctx.cfg.certify) {
      // randomized probe of the residual coupling ||q_lo^T a q_hi||
      std::normal_distribution<double> dist;
      double coup = 0.0;
      for (int probe = 0; probe < 3; ++probe) {
        Vector v(n - sr.nu);
        for (Index i = 0; i < v.size(); ++i) v(i) = dist(ctx.rng);
        v.normalize();
        Vector w = matvec_transposed(sr.q_lo.q, matvec(a, matvec(sr.q_hi.q, v)));
        coup = std::max(coup, w.norm());
      }
      nd.coupling = coup;
    }
    nd.seconds = std::chrono::duration<double>(
                     std::chrono::steady_clock::now() - t0)
                     .count();
    ctx.diagnostics->push_back(std::move(nd));
  }

  HodlrMatrix a_lo = repartition(sr.a_lo, ctx.cfg.leaf_size);
  HodlrMatrix a_hi = repartition(sr.a_hi, ctx.cfg.leaf_size);
  auto [lam1, node1] =
      solve_rec(a_lo, ctx, path + "0", depth + 1, spectrum_offset);
  auto [lam2, node2] =
      solve_rec(a_hi, ctx, path + "1", depth + 1, spectrum_offset + sr.nu);

  if (ctx.diagnostics) {
    // record the wall time including the two children on the stored entry
    for (auto& d : *ctx.diagnostics)
      if (d.path == (path.empty() ? "root" : path))
        d.seconds = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
  }

  Vector lambda(n);
  lambda << lam1, lam2;
  auto nd = std::make_shared<QNode>();
  nd->dense = false;
  nd->h_lo = sr.q_lo.q;
  nd->h_hi = sr.q_hi.q;
  nd->lo = std::move(node1);
  nd->hi = std::move(node2);
  return {std::move(lambda), std::move(nd)};
}

SpectralDecomposition solve_impl(const HodlrMatrix& a, const SolverConfig& cfg) {
  if (cfg.known_spectrum && cfg.known_spectrum->size() != a.rows())
    throw StructuralError("solve: known spectrum size mismatch");
  SolveContext ctx{cfg, Rng(cfg.seed), nullptr};
  SpectralDecomposition out;
  ctx.diagnostics = &out.diagnostics;
  auto [lambda, root] = solve_rec(a, ctx, "", 0, 0);

  // Clean splits already produce globally ascending eigenvalues; a stable
  // merge guarantees it regardless and records the column permutation.
  const Index n = lambda.size();
  std::vector<Index> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::stable_sort(perm.begin(), perm.end(), [&lambda](Index i, Index j) {
    return lambda(i) < lambda(j);
  });
  Vector sorted(n);
  for (Index j = 0; j < n; ++j) sorted(j) = lambda(perm[j]);
  out.eigenvalues = std::move(sorted);
  out.q = FactoredEigenvectors(std::move(root), std::move(perm));
  return out;
}

}  // namespace

SpectralDecomposition solve(const HodlrMatrix& a, const SolverConfig& cfg) {
  if (a.rows() != a.cols()) throw StructuralError("solve: square matrix required");
  return solve_impl(a, cfg.with_defaults(std::max<Index>(1, hodlr_rank(a))));
}

SpectralDecomposition solve(const BandedMatrix& a, const SolverConfig& cfg) {
  SolverConfig c = cfg.with_defaults(a.bandwidth());
  HodlrMatrix h = build_from_banded(a, c.leaf_size, c.truncation);
  return solve_impl(h, c);
}

}  // namespace heig
