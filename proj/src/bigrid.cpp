#include "bigrid/errors.hpp"
#include "bigrid/schemes.hpp"

namespace bigrid {

namespace {

Vector fine_forcing_load(const FemSpace& space, double t, const Forcing& forcing) {
  return assemble_load(space, [&](Point p) { return forcing(p.x, p.y, t); });
}

}  // namespace

BigridIntegrator::BigridIntegrator(std::shared_ptr<const ProlongationOperator> op, SchemeConfig cfg)
    : op_(op ? std::move(op) : throw InvalidArgument("BigridIntegrator: null prolongation")),
      cfg_(std::move(cfg)),
      coarse_disc_(Discretization::build(op_->coarse())),
      fine_disc_(Discretization::build(op_->fine())),
      coarse_integrator_(coarse_disc_, cfg_) {
  const double dt = cfg_.dt();
  correction_lhs_ = SparseMatrix::linear_combination(1.0 + dt * cfg_.tau(), fine_disc_->mass, dt, fine_disc_->stiffness);
}

BigridState BigridIntegrator::initial_state(std::span<const double> u_coarse, std::span<const double> u_fine) const {
  if (u_coarse.size() != op_->coarse()->dof_count() || u_fine.size() != op_->fine()->dof_count()) {
    throw InvalidArgument("initial_state: vector sizes do not match the spaces");
  }
  BigridState s;
  s.u_coarse.assign(u_coarse.begin(), u_coarse.end());
  s.u_fine.assign(u_fine.begin(), u_fine.end());
  s.u_tilde = op_->prolong(u_coarse);
  s.z = s.u_fine;
  axpy(-1.0, s.u_tilde, s.z);
  return s;
}

std::size_t BigridIntegrator::coarse_step(const BigridState& state, const Forcing& forcing, BigridState& next) const {
  const double t_next = state.time + cfg_.dt();
  FixedPointResult r = coarse_integrator_.fixed_point_solve(state.u_coarse, t_next, forcing);
  next.u_coarse = std::move(r.value);
  next.u_tilde = op_->prolong(next.u_coarse, state.u_tilde);
  next.step = state.step + 1;
  next.time = t_next;
  return r.iterations;
}

BigridStepResult BigridIntegrator::step(const BigridState& state, BigridVariant variant, const Forcing& forcing) const {
  const double dt = cfg_.dt();
  const double eps2 = cfg_.epsilon() * cfg_.epsilon();
  const double gamma = 1.0 + dt * cfg_.tau();
  const FemSpace& space = *fine_disc_->space;
  const SparseMatrix& M = fine_disc_->mass;
  const SparseMatrix& A = fine_disc_->stiffness;

  BigridStepResult result;
  BigridState& next = result.state;
  result.fp_iterations = coarse_step(state, forcing, next);

  Vector rhs = M * state.z;
  for (auto& v : rhs) v *= gamma;
  axpy(-dt, A * next.u_tilde, rhs);
  Vector jump = next.u_tilde;
  axpy(-1.0, state.u_tilde, jump);
  axpy(-1.0, M * jump, rhs);
  if (forcing) axpy(dt, fine_forcing_load(space, next.time, forcing), rhs);

  SolverOptions opts;
  opts.tol = cfg_.lin_tol;
  if (variant == BigridVariant::scheme41) {
    axpy(-dt / eps2, nonlinear_load(space, state.u_fine), rhs);
    next.z = solve_spd(correction_lhs_, rhs, opts, state.z);
  } else {
    const QuadratureRule& rule = quadrature_rule(4);
    const Vector tq = values_at_quadrature(space, next.u_tilde, rule);
    const Vector uq = values_at_quadrature(space, state.u_fine, rule);
    Vector load(tq.size());
    Vector c(tq.size());
    for (std::size_t i = 0; i < tq.size(); ++i) {
      load[i] = potential::DF(tq[i], uq[i]);
      c[i] = cfg_.verbatim_42_coefficient ? 0.25 * (uq[i] + 2.0 * tq[i] * uq[i] + 3.0 * tq[i] - 2.0)
                                          : potential::DF_du(tq[i], uq[i]);
    }
    axpy(-dt / eps2, assemble_load(space, rule, load), rhs);
    const SparseMatrix W = assemble_weighted_mass(space, rule, c);
    const SparseMatrix lhs = SparseMatrix::linear_combination(1.0, correction_lhs_, dt / eps2, W);
    try {
      next.z = solve_general(lhs, rhs, opts, state.z);
    } catch (const SolverError&) {
      next.z = solve_direct(lhs, rhs);
    }
  }
  next.u_fine = next.u_tilde;
  axpy(1.0, next.z, next.u_fine);
  return result;
}

BigridStepResult BigridIntegrator::step_compact_41(const BigridState& state, const Forcing& forcing) const {
  const double dt = cfg_.dt();
  const double eps2 = cfg_.epsilon() * cfg_.epsilon();
  const double gamma = 1.0 + dt * cfg_.tau();
  const FemSpace& space = *fine_disc_->space;

  BigridStepResult result;
  BigridState& next = result.state;
  result.fp_iterations = coarse_step(state, forcing, next);

  Vector rhs = fine_disc_->mass * state.u_fine;
  for (auto& v : rhs) v *= gamma;
  Vector du = next.u_coarse;
  axpy(-1.0, state.u_coarse, du);
  axpy(dt * cfg_.tau(), op_->cross_mass() * du, rhs);
  axpy(-dt / eps2, nonlinear_load(space, state.u_fine), rhs);
  if (forcing) axpy(dt, fine_forcing_load(space, next.time, forcing), rhs);

  SolverOptions opts;
  opts.tol = cfg_.lin_tol;
  next.u_fine = solve_spd(correction_lhs_, rhs, opts, state.u_fine);
  next.z = next.u_fine;
  axpy(-1.0, next.u_tilde, next.z);
  return result;
}

}  // namespace bigrid
