#include <cmath>
#include <numbers>

#include "bigrid/errors.hpp"
#include "bigrid/schemes.hpp"

namespace bigrid {

const char* to_string(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::semi_implicit: return "semi_implicit";
    case SchemeKind::implicit: return "implicit";
    case SchemeKind::stabilized: return "stabilized";
    case SchemeKind::bigrid_41: return "bigrid_41";
    case SchemeKind::bigrid_42: return "bigrid_42";
  }
  return "unknown";
}

SchemeKind scheme_kind_from_string(const std::string& name) {
  for (auto kind : {SchemeKind::semi_implicit, SchemeKind::implicit, SchemeKind::stabilized, SchemeKind::bigrid_41,
                    SchemeKind::bigrid_42}) {
    if (name == to_string(kind)) return kind;
  }
  throw InvalidArgument("unknown scheme '" + name + "'");
}

SchemeConfig::SchemeConfig(SchemeKind kind, double epsilon, double dt, double t_end, double stabilization)
    : kind_(kind), epsilon_(epsilon), dt_(dt), t_end_(t_end), stabilization_(stabilization) {
  if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
  if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
  if (!(t_end > 0.0)) throw InvalidArgument("t_end must be positive");
  if (!(stabilization >= 0.0)) throw InvalidArgument("S must be non-negative");
  tau_ = stabilization / (epsilon * epsilon);
}

std::size_t SchemeConfig::num_steps() const { return static_cast<std::size_t>(std::llround(t_end_ / dt_)); }

std::shared_ptr<const Discretization> Discretization::build(SpacePtr space) {
  auto d = std::make_shared<Discretization>();
  d->mass = assemble_mass(*space);
  d->stiffness = assemble_stiffness(*space);
  d->space = std::move(space);
  return d;
}

Vector nonlinear_load(const FemSpace& space, std::span<const double> u) {
  const QuadratureRule& rule = quadrature_rule(4);
  Vector uq = values_at_quadrature(space, u, rule);
  for (auto& v : uq) v = potential::f(v);
  return assemble_load(space, rule, uq);
}

Vector secant_load(const FemSpace& space, std::span<const double> u, std::span<const double> v) {
  const QuadratureRule& rule = quadrature_rule(4);
  Vector uq = values_at_quadrature(space, u, rule);
  const Vector vq = values_at_quadrature(space, v, rule);
  for (std::size_t i = 0; i < uq.size(); ++i) uq[i] = potential::DF(uq[i], vq[i]);
  return assemble_load(space, rule, uq);
}

OneGridIntegrator::OneGridIntegrator(std::shared_ptr<const Discretization> disc, SchemeConfig cfg)
    : disc_(std::move(disc)), cfg_(std::move(cfg)) {
  if (!disc_) throw InvalidArgument("OneGridIntegrator: null discretization");
  cfg_.fp.validate();
  const double dt = cfg_.dt();
  implicit_lhs_ = SparseMatrix::linear_combination(1.0, disc_->mass, dt, disc_->stiffness);
  stabilized_lhs_ = SparseMatrix::linear_combination(1.0 + dt * cfg_.tau(), disc_->mass, dt, disc_->stiffness);
}

SolverOptions OneGridIntegrator::solver_options() const {
  SolverOptions opts;
  opts.tol = cfg_.lin_tol;
  return opts;
}

Vector OneGridIntegrator::forcing_load(double t, const Forcing& forcing) const {
  return assemble_load(*disc_->space, [&](Point p) { return forcing(p.x, p.y, t); });
}

double OneGridIntegrator::mass_norm(std::span<const double> v) const {
  return std::sqrt(dot(v, disc_->mass * v));
}

Vector OneGridIntegrator::step_semi_implicit(std::span<const double> u, double t_next, const Forcing& forcing) const {
  const double dt = cfg_.dt();
  const double eps2 = cfg_.epsilon() * cfg_.epsilon();
  Vector rhs = disc_->mass * u;
  axpy(-dt / eps2, nonlinear_load(*disc_->space, u), rhs);
  if (forcing) axpy(dt, forcing_load(t_next, forcing), rhs);
  return solve_spd(implicit_lhs_, rhs, solver_options(), u);
}

Vector OneGridIntegrator::step_stabilized(std::span<const double> u, double t_next, const Forcing& forcing) const {
  const double dt = cfg_.dt();
  const double eps2 = cfg_.epsilon() * cfg_.epsilon();
  Vector rhs = disc_->mass * u;
  for (auto& v : rhs) v *= 1.0 + dt * cfg_.tau();
  axpy(-dt / eps2, nonlinear_load(*disc_->space, u), rhs);
  if (forcing) axpy(dt, forcing_load(t_next, forcing), rhs);
  return solve_spd(stabilized_lhs_, rhs, solver_options(), u);
}

FixedPointResult OneGridIntegrator::fixed_point_solve(std::span<const double> u, double t_next,
                                                      const Forcing& forcing) const {
  const double dt = cfg_.dt();
  const double eps2 = cfg_.epsilon() * cfg_.epsilon();
  Vector base = disc_->mass * u;
  if (forcing) axpy(dt, forcing_load(t_next, forcing), base);
  const SolverOptions opts = solver_options();
  const FemSpace& space = *disc_->space;
  auto phi = [&](const Vector& v) {
    Vector rhs = base;
    axpy(-dt / eps2, secant_load(space, u, v), rhs);
    return solve_spd(implicit_lhs_, rhs, opts, v);
  };
  auto norm = [this](std::span<const double> d) { return mass_norm(d); };
  InnerProduct inner;
  if (cfg_.fp.inner_product == FixedPointInnerProduct::mass) {
    inner = [this](std::span<const double> a, std::span<const double> b) { return dot(a, disc_->mass * b); };
  }
  const double scale = mass_norm(u) + 1.0;
  if (!cfg_.fp.newton_on_stall) {
    return accelerated_fixed_point(phi, Vector(u.begin(), u.end()), cfg_.fp, norm, scale, inner);
  }
  FixedPointResult r;
  try {
    r = accelerated_fixed_point(phi, Vector(u.begin(), u.end()), cfg_.fp, norm, scale, inner);
    if (r.picard_residual <= cfg_.fp.stall_factor * cfg_.fp.tol * scale) return r;
  } catch (const SolverError& e) {
    // Restart from u when the extrapolation neither converged nor stalled.
    r = {Vector(u.begin(), u.end()), e.iterations(), e.residual(), e.residual()};
  }

  // Newton on (M + Δt A) v + (Δt/ε²) N_DF(u, v) − b = 0.
  const QuadratureRule& rule = quadrature_rule(4);
  const Vector uq = values_at_quadrature(space, u, rule);
  Vector& v = r.value;
  for (std::size_t m = 1; m <= cfg_.fp.max_iter; ++m) {
    Vector res = implicit_lhs_ * v;
    axpy(dt / eps2, secant_load(space, u, v), res);
    axpy(-1.0, base, res);
    const Vector vq = values_at_quadrature(space, v, rule);
    Vector c(vq.size());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = potential::DF_du(vq[i], uq[i]);
    const SparseMatrix J =
        SparseMatrix::linear_combination(1.0, implicit_lhs_, dt / eps2, assemble_weighted_mass(space, rule, c));
    const Vector delta = solve_direct(J, res);
    axpy(-1.0, delta, v);
    r.last_increment = mass_norm(delta);
    ++r.iterations;
    ++r.newton_iterations;
    if (!std::isfinite(r.last_increment)) throw SolverError("fixed point: Newton iterate is not finite", 0.0, m);
    if (r.last_increment <= cfg_.fp.tol * scale) {
      Vector d = phi(v);
      axpy(-1.0, v, d);
      r.picard_residual = mass_norm(d);
      return r;
    }
  }
  throw SolverError("fixed point: Newton fallback did not converge", r.last_increment, cfg_.fp.max_iter);
}

double steady_residual(const Discretization& disc, std::span<const double> u, double epsilon) {
  if (!(epsilon > 0.0)) throw InvalidArgument("steady_residual: epsilon must be positive");
  Vector r = disc.stiffness * u;
  axpy(1.0 / (epsilon * epsilon), nonlinear_load(*disc.space, u), r);
  SolverOptions opts;
  opts.tol = 1e-12;
  const Vector y = solve_spd(disc.mass, r, opts);
  return std::sqrt(std::max(0.0, dot(r, y)));
}

double steady_residual(const FemFunction& u, double epsilon) {
  const auto disc = Discretization::build(u.space);
  return steady_residual(*disc, u.coeffs, epsilon);
}

double ManufacturedSolution::exact(double x, double y, double t) const {
  using std::numbers::pi;
  return std::cos(pi * x) * std::cos(pi * y) * std::exp(std::sin(pi * t));
}

double ManufacturedSolution::forcing(double x, double y, double t) const {
  using std::numbers::pi;
  const double u = exact(x, y, t);
  return (pi * std::cos(pi * t) + 2.0 * pi * pi) * u + (u * u * u - u) / (epsilon * epsilon);
}

Forcing ManufacturedSolution::as_forcing() const {
  return [self = *this](double x, double y, double t) { return self.forcing(x, y, t); };
}

ScalarField ManufacturedSolution::at_time(double t) const {
  return [self = *this, t](Point p) { return self.exact(p.x, p.y, t); };
}

ManufacturedSolution manufactured_forcing(double epsilon) {
  if (!(epsilon > 0.0)) throw InvalidArgument("manufactured_forcing: epsilon must be positive");
  return ManufacturedSolution{epsilon};
}

}  // namespace bigrid
