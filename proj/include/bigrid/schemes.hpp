#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bigrid/fem.hpp"
#include "bigrid/linalg.hpp"
#include "bigrid/transfer.hpp"

namespace bigrid {

/// Double-well potential F(u) = ¼(u² − 1)² and its derived quantities.
namespace potential {

constexpr double F(double u) {
  const double s = u * u - 1.0;
  return 0.25 * s * s;
}
constexpr double f(double u) { return u * u * u - u; }
constexpr double f_prime(double u) { return 3.0 * u * u - 1.0; }
/// Secant quotient (F(u) − F(v)) / (u − v) in closed form, equal to f(u) on u = v.
constexpr double DF(double u, double v) { return 0.25 * (u + v) * (u * u + v * v - 2.0); }
/// ∂DF/∂u.
constexpr double DF_du(double u, double v) { return 0.25 * (3.0 * u * u + 2.0 * u * v + v * v - 2.0); }
/// sup |f′| on [−1, 1].
inline constexpr double kLipschitz = 2.0;

}  // namespace potential

enum class SchemeKind { semi_implicit, implicit, stabilized, bigrid_41, bigrid_42 };

const char* to_string(SchemeKind kind);
SchemeKind scheme_kind_from_string(const std::string& name);

/// Inner product in the Δ^κ coefficient α.
enum class FixedPointInnerProduct { euclidean, mass };

struct FixedPointConfig {
  int kappa = 1;  ///< 0 is plain Picard, κ ≥ 1 the Δ^κ extrapolation
  double tol = 1e-8;
  std::size_t max_iter = 200;
  FixedPointInnerProduct inner_product = FixedPointInnerProduct::mass;
  /// Finish with Newton steps when the extrapolation stalls, i.e. its increment
  /// passes the test while norm(φ(v) − v) is above stall_factor·tol·scale.
  bool newton_on_stall = true;
  double stall_factor = 100.0;

  void validate() const;
};

/// Time-marching parameters. The stabilization S and τ = S/ε² are kept in
/// step by construction.
class SchemeConfig {
 public:
  SchemeConfig(SchemeKind kind, double epsilon, double dt, double t_end, double stabilization = 0.0);

  SchemeKind kind() const noexcept { return kind_; }
  double epsilon() const noexcept { return epsilon_; }
  double dt() const noexcept { return dt_; }
  double t_end() const noexcept { return t_end_; }
  double stabilization() const noexcept { return stabilization_; }
  double tau() const noexcept { return tau_; }
  std::size_t num_steps() const;

  FixedPointConfig fp;
  double lin_tol = 1e-10;
  /// bigrid_42 reaction coefficient taken as ¼(u + 2ũu + 3ũ − 2)
  /// instead of the derivative ¼(3ũ² + 2ũu + u² − 2).
  bool verbatim_42_coefficient = false;

 private:
  SchemeKind kind_;
  double epsilon_;
  double dt_;
  double t_end_;
  double stabilization_;
  double tau_;
};

/// Forcing term g(x, y, t) added to the right-hand side.
using Forcing = std::function<double(double, double, double)>;

/// Matrices of one FEM space, assembled once.
struct Discretization {
  SpacePtr space;
  SparseMatrix mass;
  SparseMatrix stiffness;

  static std::shared_ptr<const Discretization> build(SpacePtr space);
};

/// ∫ f(u) φ_i with the degree-4 rule.
Vector nonlinear_load(const FemSpace& space, std::span<const double> u);
/// ∫ DF(u, v) φ_i with the degree-4 rule.
Vector secant_load(const FemSpace& space, std::span<const double> u, std::span<const double> v);

struct FixedPointResult {
  Vector value;
  std::size_t iterations = 0;
  double last_increment = 0.0;
  /// norm(φ(v) − v) at the last iterate before the final update; large values
  /// flag an extrapolation that stalled away from the fixed point.
  double picard_residual = 0.0;
  std::size_t newton_iterations = 0;  ///< included in `iterations`
};

using FixedPointMap = std::function<Vector(const Vector&)>;
using IncrementNorm = std::function<double(std::span<const double>)>;
using InnerProduct = std::function<double(std::span<const double>, std::span<const double>)>;

/// Solves v = φ(v) from v0. κ = 0 runs Picard iterates; κ ≥ 1 replaces them by
/// v ← v − (−1)^κ α Δ^κ v with α = (−1)^κ ⟨Δ¹v, Δ^{κ+1}v⟩ / ⟨Δ^{κ+1}v, Δ^{κ+1}v⟩,
/// where Δ^j are forward differences of the compositions φ^{(i)}(v) and ⟨·,·⟩
/// is `inner` (Euclidean when empty). Stops when norm(v_{m+1} − v_m) ≤ tol·scale;
/// throws SolverError after max_iter updates or on a non-finite iterate.
FixedPointResult accelerated_fixed_point(const FixedPointMap& phi, Vector v0, const FixedPointConfig& fp,
                                         const IncrementNorm& norm, double scale = 1.0,
                                         const InnerProduct& inner = {});

/// One update of the Δ^κ scheme from v, given the compositions
/// iterates[j] = φ^{(j)}(v), j = 0..κ+1. Returns nullopt when ‖Δ^{κ+1}v‖ is
/// negligible relative to ‖v‖.
std::optional<Vector> delta_kappa_update(std::span<const Vector> iterates, int kappa, const InnerProduct& inner = {});

/// Single-grid schemes on one discretization.
class OneGridIntegrator {
 public:
  OneGridIntegrator(std::shared_ptr<const Discretization> disc, SchemeConfig cfg);

  const SchemeConfig& config() const noexcept { return cfg_; }
  const Discretization& discretization() const noexcept { return *disc_; }

  /// (M + Δt A) u⁺ = M u − (Δt/ε²) N(u) + Δt b(t⁺).
  Vector step_semi_implicit(std::span<const double> u, double t_next, const Forcing& forcing = {}) const;
  /// ((1 + Δt S/ε²) M + Δt A) u⁺ = (1 + Δt S/ε²) M u − (Δt/ε²) N(u) + Δt b(t⁺).
  Vector step_stabilized(std::span<const double> u, double t_next, const Forcing& forcing = {}) const;
  /// Implicit secant scheme (M + Δt A) u⁺ = M u − (Δt/ε²) N_DF(u, u⁺) + Δt b(t⁺),
  /// solved as a fixed point of φ(v) = (M + Δt A)⁻¹ (M u − (Δt/ε²) N_DF(u, v) + Δt b).
  FixedPointResult fixed_point_solve(std::span<const double> u, double t_next, const Forcing& forcing = {}) const;
  FixedPointResult step_implicit(std::span<const double> u, double t_next, const Forcing& forcing = {}) const {
    return fixed_point_solve(u, t_next, forcing);
  }

  /// sqrt(vᵀ M v).
  double mass_norm(std::span<const double> v) const;

 private:
  Vector forcing_load(double t, const Forcing& forcing) const;
  SolverOptions solver_options() const;

  std::shared_ptr<const Discretization> disc_;
  SchemeConfig cfg_;
  SparseMatrix implicit_lhs_;
  SparseMatrix stabilized_lhs_;
};

/// State of the two-grid schemes; u_fine = u_tilde + z holds exactly.
struct BigridState {
  Vector u_coarse;
  Vector u_tilde;
  Vector z;
  Vector u_fine;
  std::size_t step = 0;
  double time = 0.0;
};

enum class BigridVariant { scheme41 = 41, scheme42 = 42 };

struct BigridStepResult {
  BigridState state;
  std::size_t fp_iterations = 0;
};

/// Implicit secant scheme on W_H, prolongation to V_h, and a stabilized
/// correction of the fluctuation z on V_h.
class BigridIntegrator {
 public:
  BigridIntegrator(std::shared_ptr<const ProlongationOperator> op, SchemeConfig cfg);

  const SchemeConfig& config() const noexcept { return cfg_; }
  const ProlongationOperator& prolongation() const noexcept { return *op_; }
  const Discretization& coarse() const noexcept { return *coarse_disc_; }
  const Discretization& fine() const noexcept { return *fine_disc_; }

  /// ũ⁰ = P(u_H⁰), z⁰ = u_h⁰ − ũ⁰.
  BigridState initial_state(std::span<const double> u_coarse, std::span<const double> u_fine) const;

  BigridStepResult step(const BigridState& state, BigridVariant variant, const Forcing& forcing = {}) const;

  /// bigrid_41 written as a single equation for u_h without the z sequence:
  /// ((1+τΔt) M + Δt A) u⁺ = (1+τΔt) M u + τΔt B(u_H⁺ − u_H) − (Δt/ε²) N(u) + Δt b.
  BigridStepResult step_compact_41(const BigridState& state, const Forcing& forcing = {}) const;

 private:
  std::size_t coarse_step(const BigridState& state, const Forcing& forcing, BigridState& next) const;

  std::shared_ptr<const ProlongationOperator> op_;
  SchemeConfig cfg_;
  std::shared_ptr<const Discretization> coarse_disc_;
  std::shared_ptr<const Discretization> fine_disc_;
  OneGridIntegrator coarse_integrator_;
  SparseMatrix correction_lhs_;
};

/// ‖A u + ε⁻² N(u)‖ in the dual norm sqrt(rᵀ M⁻¹ r); zero at discrete steady states.
double steady_residual(const Discretization& disc, std::span<const double> u, double epsilon);
double steady_residual(const FemFunction& u, double epsilon);

/// Exact solution u = cos(πx) cos(πy) exp(sin(πt)) and the forcing
/// g = (π cos(πt) + 2π²) u + ε⁻² (u³ − u) that makes it solve the forced equation.
struct ManufacturedSolution {
  double epsilon;

  double exact(double x, double y, double t) const;
  double forcing(double x, double y, double t) const;
  Forcing as_forcing() const;
  ScalarField at_time(double t) const;
};

ManufacturedSolution manufactured_forcing(double epsilon);

struct TraceRecord {
  std::size_t step = 0;
  double time = 0.0;
  double energy = 0.0;
  double mean = 0.0;
  double linf = 0.0;
  std::size_t fp_iters = 0;
  std::int64_t wall_ns = 0;
};

struct SimulationTrace {
  std::vector<TraceRecord> records;  ///< step 0 holds the initial state
  FemFunction final_field;
  std::optional<FemFunction> final_coarse;  ///< bi-grid runs
  bool completed = false;
  std::optional<std::size_t> failed_step;
  std::string failure;

  std::size_t total_fp_iterations() const;
  double wall_seconds() const;
};

/// CSV with header `step,time,energy,mean,linf,fp_iters,wall_ns`.
void write_trace_csv(const SimulationTrace& trace, std::ostream& out);

/// linf above 10, or energy rising by more than 10 % over a 10-step window,
/// or a failed run.
bool is_unstable(const SimulationTrace& trace);

struct SimulationSetup {
  SchemeConfig config;
  SpacePtr fine;
  SpacePtr coarse;  ///< bi-grid only
  std::shared_ptr<const ProlongationOperator> prolongation;  ///< optional, built from coarse/fine when null
  ScalarField initial;
  Forcing forcing;
  /// Runs stop (as failed) once linf exceeds this value or turns non-finite.
  double blowup_linf = 1e6;
};

/// Interpolates the initial condition (on both spaces for bi-grid runs) and
/// marches to t_end. A failing step ends the run with a partial trace.
SimulationTrace run_simulation(const SimulationSetup& setup);

}  // namespace bigrid
