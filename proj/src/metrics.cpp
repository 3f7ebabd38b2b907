#include "heig/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace heig {

namespace {

std::vector<Index> probe_indices(Index n, bool& sampled) {
  std::vector<Index> idx;
  if (n <= 2048) {
    sampled = false;
    idx.resize(n);
    for (Index i = 0; i < n; ++i) idx[i] = i;
  } else {
    sampled = true;
    idx.resize(64);
    for (Index j = 0; j < 64; ++j)
      idx[j] = std::min<Index>(n - 1, (2 * j + 1) * n / 128);
  }
  return idx;
}

}  // namespace

ErrorReport error_metrics(const SpectralDecomposition& result,
                          const std::function<Vector(const Vector&)>& apply_a,
                          double norm_a, const DenseEig* reference) {
  ErrorReport rep;
  const Index n = result.eigenvalues.size();
  if (n == 0) return rep;
  if (!(norm_a > 0.0)) norm_a = 1.0;

  std::vector<Index> idx = probe_indices(n, rep.sampled);
  rep.samples = static_cast<Index>(idx.size());
  rep.has_reference = reference != nullptr;

  if (reference) {
    rep.e_lambda =
        (result.eigenvalues - reference->lambda).cwiseAbs().maxCoeff() / norm_a;
  }

  const double cluster_tol = 1e-10 * norm_a;
  for (Index i : idx) {
    Vector e = Vector::Zero(n);
    e(i) = 1.0;
    Vector qi = apply_q(result.q, e);

    Vector r = apply_a(qi) - result.eigenvalues(i) * qi;
    rep.e_res = std::max(rep.e_res, r.norm() / norm_a);

    Vector w = apply_q_transpose(result.q, qi);
    w(i) -= 1.0;
    rep.e_orth = std::max(rep.e_orth, w.norm());

    if (reference) {
      // compare against the cluster subspace when reference eigenvalues are
      // numerically repeated, so degenerate pairs do not report spurious error
      Index lo = i, hi = i;
      while (lo > 0 &&
             reference->lambda(i) - reference->lambda(lo - 1) <= cluster_tol)
        --lo;
      while (hi + 1 < n &&
             reference->lambda(hi + 1) - reference->lambda(i) <= cluster_tol)
        ++hi;
      const Index width = hi - lo + 1;
      const double qn = qi.norm();
      double cosang = 0.0;
      if (qn > 0.0) {
        Vector proj = reference->q.middleCols(lo, width).transpose() * qi;
        cosang = proj.norm() / qn;
      }
      rep.e_q = std::max(rep.e_q, std::abs(1.0 - cosang));
    }
  }
  return rep;
}

ErrorReport error_metrics(const SpectralDecomposition& result,
                          const BandedMatrix& a, const DenseEig* reference) {
  double norm_a;
  if (reference) {
    norm_a = reference->lambda.cwiseAbs().maxCoeff();
  } else {
    // power iteration on the banded operator
    Rng rng(1);
    std::normal_distribution<double> dist;
    Vector v(a.size());
    for (Index i = 0; i < v.size(); ++i) v(i) = dist(rng);
    v.normalize();
    norm_a = 0.0;
    for (int it = 0; it < 30; ++it) {
      Vector w = a.matvec(v);
      const double nw = w.norm();
      if (nw == 0.0) break;
      norm_a = nw;
      v = w / nw;
    }
  }
  return error_metrics(
      result, [&a](const Vector& x) { return a.matvec(x); }, norm_a, reference);
}

}  // namespace heig
