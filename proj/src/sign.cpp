#include "heig/sign.hpp"

#include <cmath>

namespace heig {

HalleyParams halley_step_params(double l) {
  if (!(l > 0.0)) throw StructuralError("halley params: l must be positive");
  if (l > 1.0) l = 1.0;
  HalleyParams p;
  p.l = l;
  const double l2 = l * l;
  const double gamma = std::cbrt(4.0 * (1.0 - l2) / (l2 * l2));
  const double s = std::sqrt(1.0 + gamma);
  p.a = s + 0.5 * std::sqrt(8.0 - 4.0 * gamma + 8.0 * (2.0 - l2) / (l2 * s));
  p.b = (p.a - 1.0) * (p.a - 1.0) / 4.0;
  p.c = p.a + p.b - 1.0;
  return p;
}

double update_l(double l, const HalleyParams& p) {
  const double l2 = l * l;
  double next = l * (p.a + p.b * l2) / (1.0 + p.c * l2);
  return std::min(next, 1.0);
}

int scalar_iteration_count(double l0, double stop_tol, int max_iterations) {
  double l = l0;
  int k = 0;
  while (std::abs(1.0 - l) > stop_tol && k < max_iterations) {
    l = update_l(l, halley_step_params(l));
    ++k;
  }
  return k;
}

double estimate_alpha(const HodlrMatrix& a, const SignConfig& cfg, Rng& rng) {
  std::normal_distribution<double> gauss;
  Vector v(a.cols());
  for (Index i = 0; i < v.size(); ++i) v(i) = gauss(rng);
  v.normalize();
  double est = 0.0;
  for (int it = 0; it < cfg.power_steps; ++it) {
    Vector w = matvec(a, v);
    const double next = w.norm();
    if (next == 0.0) break;
    v = matvec(a, w);  // one step of power iteration on a^2
    const double nv = v.norm();
    if (nv == 0.0) {
      est = next;
      break;
    }
    v /= nv;
    const bool settled = it > 0 && std::abs(next - est) <= cfg.power_tol * next;
    est = next;
    if (settled) break;
  }
  return 1.05 * est;
}

double estimate_l0(const HodlrMatrix& x0, const SignConfig& cfg, Rng& rng) {
  // One hierarchical Cholesky of x0^T x0, then inverse power iteration via
  // two triangular solves per step.
  HodlrMatrix g = symmetrize(multiply(transpose(x0), x0, cfg.truncation),
                             cfg.truncation);
  HodlrMatrix w;
  try {
    w = hodlr_cholesky(g, cfg.truncation);
  } catch (const IndefiniteMatrix&) {
    throw ShiftTooCloseToEigenvalue(
        "l0 estimate: squared iterate is numerically singular");
  }
  std::normal_distribution<double> gauss;
  Vector v(x0.cols());
  for (Index i = 0; i < v.size(); ++i) v(i) = gauss(rng);
  v.normalize();
  double lam_inv = 0.0;  // converges to 1 / lambda_min(g)
  for (int it = 0; it < cfg.power_steps; ++it) {
    Matrix y = solve_triangular(w, Matrix(v), true);
    Matrix z = solve_triangular(w, y, false);
    const double nz = z.col(0).norm();
    if (!(nz > 0.0) || !std::isfinite(nz))
      throw ShiftTooCloseToEigenvalue("l0 estimate: inverse iteration failed");
    const bool settled =
        it > 0 && std::abs(nz - lam_inv) <= cfg.power_tol * nz;
    lam_inv = nz;
    v = z.col(0) / nz;
    if (settled) break;
  }
  if (lam_inv == 0.0)
    throw ShiftTooCloseToEigenvalue("l0 estimate: inverse iteration stalled");
  const double sigma_min = std::sqrt(1.0 / lam_inv);
  return std::min(1.0, sigma_min / 1.05);
}

ProjectorPair hdwh(const HodlrMatrix& a, const SignConfig& cfg, Rng& rng) {
  if (a.rows() != a.cols()) throw StructuralError("hdwh: square matrix required");
  const TruncationConfig& tc = cfg.truncation;

  const double alpha = estimate_alpha(a, cfg, rng);
  if (!(alpha > 0.0)) throw StructuralError("hdwh: zero matrix");
  HodlrMatrix x = scale(a, 1.0 / alpha);
  double l;
  try {
    l = estimate_l0(x, cfg, rng);
  } catch (const ShiftTooCloseToEigenvalue& e) {
    throw GapTooSmall(e.what(), -1, 0.0);
  }

  ProjectorPair out;
  out.alpha = alpha;
  out.l0 = l;

  int k = 0;
  bool done = false;
  while (!done) {
    if (k >= cfg.max_iterations)
      throw NoConvergence("hdwh: iteration cap reached");

    const HalleyParams p = halley_step_params(l);
    HodlrMatrix g = symmetrize(multiply(transpose(x), x, tc), tc);
    HodlrMatrix m = add_diagonal(scale(g, p.c), 1.0);
    HodlrMatrix w;
    try {
      w = hodlr_cholesky(m, tc);
    } catch (const IndefiniteMatrix&) {
      throw GapTooSmall("hdwh: indefinite shifted Gram matrix", k, 0.0);
    }
    HodlrMatrix y = multiply_triangular_inverse_right(x, w, false, tc);
    HodlrMatrix v = multiply_triangular_inverse_right(y, w, true, tc);
    HodlrMatrix x_next =
        add(scale(x, p.b / p.c), scale(v, p.a - p.b / p.c), tc);

    const double diff_frob = frobenius_norm(add(x_next, scale(x, -1.0), tc));
    const double x_frob = frobenius_norm(x_next);
    x = std::move(x_next);
    ++k;
    l = update_l(l, p);
    out.trace.push_back({k, l, p.a, p.b, p.c, hodlr_rank(x)});

    // The scalar bound can reach 1 before the iterate has converged when l0
    // was an overestimate (the squared Gram matrix cannot resolve sigma_min
    // below the truncation noise). Keep stepping until the iterate itself
    // stagnates; once l = 1 the weights sit at the fixed point (3, 1, 3).
    done = std::abs(1.0 - l) <= cfg.stop_tol &&
           diff_frob <=
               cfg.stagnation_factor * tc.epsilon * std::max(x_frob, 1.0);
  }

  out.iterations = k;
  HodlrMatrix sym_x = symmetrize(x, tc);
  out.pi_lo = add_diagonal(scale(sym_x, -0.5), 0.5);
  out.pi_hi = add_diagonal(scale(sym_x, 0.5), 0.5);
  out.nu = static_cast<Index>(std::llround(hodlr_trace(out.pi_lo)));
  return out;
}

}  // namespace heig
