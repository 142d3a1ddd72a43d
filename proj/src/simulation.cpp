#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "bigrid/errors.hpp"
#include "bigrid/schemes.hpp"

namespace bigrid {

std::size_t SimulationTrace::total_fp_iterations() const {
  std::size_t total = 0;
  for (const auto& r : records) total += r.fp_iters;
  return total;
}

double SimulationTrace::wall_seconds() const { return records.empty() ? 0.0 : records.back().wall_ns * 1e-9; }

void write_trace_csv(const SimulationTrace& trace, std::ostream& out) {
  out << "step,time,energy,mean,linf,fp_iters,wall_ns\n" << std::setprecision(17);
  for (const auto& r : trace.records) {
    out << r.step << ',' << r.time << ',' << r.energy << ',' << r.mean << ',' << r.linf << ',' << r.fp_iters << ','
        << r.wall_ns << '\n';
  }
}

bool is_unstable(const SimulationTrace& trace) {
  if (!trace.completed) return true;
  constexpr std::size_t window = 10;
  for (std::size_t i = 0; i < trace.records.size(); ++i) {
    const auto& r = trace.records[i];
    if (!std::isfinite(r.linf) || r.linf > 10.0 || !std::isfinite(r.energy)) return true;
    if (i >= window) {
      const double before = trace.records[i - window].energy;
      if (r.energy - before > 0.1 * std::abs(before)) return true;
    }
  }
  return false;
}

namespace {

TraceRecord make_record(const FemFunction& u, double eps, std::size_t step, double time, std::size_t iters,
                        std::int64_t wall_ns) {
  const Norms n = norms(u);
  return {step, time, compute_energy(u, eps), n.mean, n.linf, iters, wall_ns};
}

bool blown_up(std::span<const double> u, double limit) {
  for (double v : u) {
    if (!std::isfinite(v) || std::abs(v) > limit) return true;
  }
  return false;
}

}  // namespace

SimulationTrace run_simulation(const SimulationSetup& setup) {
  const SchemeConfig& cfg = setup.config;
  if (!setup.fine) throw InvalidArgument("run_simulation: fine space is required");
  if (!setup.initial) throw InvalidArgument("run_simulation: initial condition is required");
  const bool two_grid = cfg.kind() == SchemeKind::bigrid_41 || cfg.kind() == SchemeKind::bigrid_42;
  const double eps = cfg.epsilon();
  const std::size_t steps = cfg.num_steps();
  using clock = std::chrono::steady_clock;

  SimulationTrace trace;
  std::int64_t wall = 0;
  FemFunction u = interpolate(setup.fine, setup.initial);
  trace.records.push_back(make_record(u, eps, 0, 0.0, 0, 0));

  auto fail = [&](std::size_t step, const std::string& why) {
    trace.failed_step = step;
    trace.failure = why;
  };

  if (two_grid) {
    std::shared_ptr<const ProlongationOperator> op = setup.prolongation;
    if (!op) {
      if (!setup.coarse) throw InvalidArgument("run_simulation: bi-grid runs need a coarse space");
      op = std::make_shared<ProlongationOperator>(setup.coarse, setup.fine);
    }
    if (op->fine() != setup.fine) throw InvalidArgument("run_simulation: prolongation fine space mismatch");
    const BigridIntegrator integrator(op, cfg);
    const auto variant = cfg.kind() == SchemeKind::bigrid_41 ? BigridVariant::scheme41 : BigridVariant::scheme42;
    const FemFunction uc = interpolate(op->coarse(), setup.initial);
    BigridState state = integrator.initial_state(uc.coeffs, u.coeffs);
    for (std::size_t k = 1; k <= steps; ++k) {
      const auto t0 = clock::now();
      BigridStepResult r;
      try {
        r = integrator.step(state, variant, setup.forcing);
      } catch (const Error& e) {
        fail(k, e.what());
        break;
      }
      wall += std::chrono::duration_cast<std::chrono::nanoseconds>(clock::now() - t0).count();
      state = std::move(r.state);
      u.coeffs = state.u_fine;
      if (blown_up(u.coeffs, setup.blowup_linf)) {
        fail(k, "solution blew up");
        break;
      }
      trace.records.push_back(make_record(u, eps, k, state.time, r.fp_iterations, wall));
    }
    trace.final_coarse = FemFunction(op->coarse(), state.u_coarse);
  } else {
    const OneGridIntegrator integrator(Discretization::build(setup.fine), cfg);
    double time = 0.0;
    for (std::size_t k = 1; k <= steps; ++k) {
      const double t_next = time + cfg.dt();
      const auto t0 = clock::now();
      std::size_t iters = 0;
      try {
        switch (cfg.kind()) {
          case SchemeKind::semi_implicit: u.coeffs = integrator.step_semi_implicit(u.coeffs, t_next, setup.forcing); break;
          case SchemeKind::stabilized: u.coeffs = integrator.step_stabilized(u.coeffs, t_next, setup.forcing); break;
          default: {
            FixedPointResult r = integrator.step_implicit(u.coeffs, t_next, setup.forcing);
            u.coeffs = std::move(r.value);
            iters = r.iterations;
          }
        }
      } catch (const Error& e) {
        fail(k, e.what());
        break;
      }
      wall += std::chrono::duration_cast<std::chrono::nanoseconds>(clock::now() - t0).count();
      time = t_next;
      if (blown_up(u.coeffs, setup.blowup_linf)) {
        fail(k, "solution blew up");
        break;
      }
      trace.records.push_back(make_record(u, eps, k, time, iters, wall));
    }
  }
  trace.completed = !trace.failed_step.has_value();
  trace.final_field = std::move(u);
  return trace;
}

}  // namespace bigrid
