#include <cmath>

#include "bigrid/errors.hpp"
#include "bigrid/schemes.hpp"

namespace bigrid {

void FixedPointConfig::validate() const {
  if (kappa < 0 || kappa > 3) throw InvalidArgument("fixed point: kappa must be in [0, 3]");
  if (!(tol > 0.0)) throw InvalidArgument("fixed point: tol must be positive");
  if (max_iter == 0) throw InvalidArgument("fixed point: max_iter must be positive");
}

namespace {

double binomial(int n, int k) {
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

// Δ^order v = Σ_j C(order, j) (−1)^(order−j) φ^{(j)}(v).
Vector forward_difference(std::span<const Vector> iterates, int order) {
  Vector d(iterates[0].size(), 0.0);
  for (int j = 0; j <= order; ++j) {
    const double c = binomial(order, j) * (((order - j) % 2 == 0) ? 1.0 : -1.0);
    axpy(c, iterates[j], d);
  }
  return d;
}

bool all_finite(std::span<const double> v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace

std::optional<Vector> delta_kappa_update(std::span<const Vector> iterates, int kappa, const InnerProduct& inner) {
  if (kappa < 1 || iterates.size() < static_cast<std::size_t>(kappa) + 2) {
    throw InvalidArgument("delta_kappa_update: need kappa ≥ 1 and kappa + 2 iterates");
  }
  auto ip = [&](const Vector& a, const Vector& b) { return inner ? inner(a, b) : dot(a, b); };
  const Vector d1 = forward_difference(iterates, 1);
  const Vector dk1 = forward_difference(iterates, kappa + 1);
  const double den = ip(dk1, dk1);
  if (!(std::sqrt(std::abs(den)) > 1e-14 * std::sqrt(std::abs(ip(iterates[0], iterates[0]))))) return std::nullopt;
  const double sign = (kappa % 2 == 0) ? 1.0 : -1.0;
  const double alpha = sign * ip(d1, dk1) / den;
  const Vector dk = kappa == 1 ? d1 : forward_difference(iterates, kappa);
  Vector next = iterates[0];
  axpy(-sign * alpha, dk, next);
  return next;
}

FixedPointResult accelerated_fixed_point(const FixedPointMap& phi, Vector v0, const FixedPointConfig& fp,
                                         const IncrementNorm& norm, double scale, const InnerProduct& inner) {
  fp.validate();
  Vector v = std::move(v0);
  std::vector<Vector> iterates(static_cast<std::size_t>(fp.kappa) + 2);
  double increment = 0.0;
  double residual = 0.0;
  for (std::size_t m = 1; m <= fp.max_iter; ++m) {
    iterates[0] = v;
    iterates[1] = phi(v);
    if (!all_finite(iterates[1])) throw SolverError("fixed point: iterate is not finite", increment, m);
    Vector next;
    if (fp.kappa == 0) {
      next = iterates[1];
    } else {
      for (std::size_t j = 2; j < iterates.size(); ++j) iterates[j] = phi(iterates[j - 1]);
      auto update = delta_kappa_update(iterates, fp.kappa, inner);
      // Degenerate extrapolation falls back to a Picard step.
      next = update ? std::move(*update) : iterates[1];
      if (!all_finite(next)) throw SolverError("fixed point: iterate is not finite", increment, m);
    }
    Vector diff = iterates[1];
    axpy(-1.0, v, diff);
    residual = norm(diff);
    diff = next;
    axpy(-1.0, v, diff);
    increment = norm(diff);
    if (!std::isfinite(increment)) throw SolverError("fixed point: iterate is not finite", increment, m);
    v = std::move(next);
    if (increment <= fp.tol * scale) return {std::move(v), m, increment, residual};
  }
  throw SolverError("fixed point: no convergence", increment, fp.max_iter);
}

}  // namespace bigrid
