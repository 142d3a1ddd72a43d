#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "bigrid/fem.hpp"
#include "bigrid/schemes.hpp"

namespace bigrid {

enum class ExperimentKind {
  energy_compare,
  stability_table,
  fixed_point_timing,
  prolongation_rate,
  spectrum,
  exact_solution,
  direct_simulation
};

const char* to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(const std::string& name);

enum class ForcingKind { none, manufactured };

/// Flat experiment description. The base mesh T_H comes from `mesh_n` or
/// `mesh_file`; the fine mesh T_h is T_H refined `coarse_mesh_levels` times.
/// `S` and `dt` accept comma-separated lists for the sweep kinds
/// (stability_table sweeps S, fixed_point_timing sweeps dt); the other kinds
/// use the first entry.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::direct_simulation;
  std::optional<std::size_t> mesh_n;
  std::optional<std::string> mesh_file;
  int coarse_order = 1;
  int fine_order = 1;
  std::size_t coarse_mesh_levels = 1;
  double epsilon = 0.0;
  std::vector<double> dt;
  double t_end = 0.0;
  std::vector<double> S{0.0};
  int kappa = 1;
  double fp_tol = 1e-8;
  std::size_t fp_max_iter = 200;
  double lin_tol = 1e-10;
  std::string ic = "cos4pi";
  ForcingKind forcing = ForcingKind::none;
  bool verbatim_42_coefficient = false;
  std::string out_dir = "out";
  std::uint64_t seed = 0;

  void validate() const;
};

/// `key = value` lines, `#` starts a comment. Required keys: kind, one of
/// mesh.n / mesh.file, epsilon, dt, t_end. Throws ParseError naming the line
/// and key for unknown keys, duplicates, bad values and missing keys.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig read_config_file(const std::string& path);
/// Inverse of parse_config; numbers use the shortest round-trip form.
std::string serialize_config(const ExperimentConfig& config);

/// Named initial conditions: cos4pi, cospi, cos8x7, torus, sin72, cos44.
ScalarField initial_condition(const std::string& name);
std::vector<std::string> initial_condition_names();

struct Preset {
  std::string name;
  std::string description;
  std::string config_text;
};
const std::vector<Preset>& presets();
const Preset& find_preset(const std::string& name);

struct ExperimentOutcome {
  std::string summary_json;
  std::vector<std::string> files;  ///< paths written, summary last
  bool all_runs_completed = true;
};

/// Runs the experiment, writing trace/spectrum CSVs and summary.json into
/// config.out_dir. Run failures are recorded in the summary, not thrown.
/// Progress lines go to `log` when non-null.
ExperimentOutcome run_experiment(const ExperimentConfig& config, std::ostream* log = nullptr);

/// Largest |E_a − E_b| / |E_b| over records with time in [t0, t1], matched by step.
double relative_sup_distance(const SimulationTrace& a, const SimulationTrace& b, double t0, double t1);

/// First time the energy drops to `level` or below, if it does.
std::optional<double> first_passage_time(const SimulationTrace& trace, double level);

}  // namespace bigrid
