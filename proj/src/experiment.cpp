#include "bigrid/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "bigrid/errors.hpp"
#include "bigrid/transfer.hpp"

namespace bigrid {

using json = nlohmann::json;

const char* to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::energy_compare: return "energy_compare";
    case ExperimentKind::stability_table: return "stability_table";
    case ExperimentKind::fixed_point_timing: return "fixed_point_timing";
    case ExperimentKind::prolongation_rate: return "prolongation_rate";
    case ExperimentKind::spectrum: return "spectrum";
    case ExperimentKind::exact_solution: return "exact_solution";
    case ExperimentKind::direct_simulation: return "direct_simulation";
  }
  return "unknown";
}

ExperimentKind experiment_kind_from_string(const std::string& name) {
  for (auto kind : {ExperimentKind::energy_compare, ExperimentKind::stability_table,
                    ExperimentKind::fixed_point_timing, ExperimentKind::prolongation_rate, ExperimentKind::spectrum,
                    ExperimentKind::exact_solution, ExperimentKind::direct_simulation}) {
    if (name == to_string(kind)) return kind;
  }
  throw InvalidArgument("unknown experiment kind '" + name + "'");
}

// ---------------------------------------------------------------------------
// Config text

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string format_number(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& key, const std::string& value, std::size_t line) {
  double v = 0.0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size() || !std::isfinite(v)) {
    throw ParseError("key '" + key + "': expected a number, got '" + value + "'", line);
  }
  return v;
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& value, std::size_t line) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
    throw ParseError("key '" + key + "': expected a non-negative integer, got '" + value + "'", line);
  }
  return v;
}

std::vector<double> parse_list(const std::string& key, const std::string& value, std::size_t line) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item), line));
  if (out.empty()) throw ParseError("key '" + key + "': empty list", line);
  return out;
}

bool parse_bool(const std::string& key, const std::string& value, std::size_t line) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ParseError("key '" + key + "': expected true or false, got '" + value + "'", line);
}

std::string join(const std::vector<double>& values) {
  std::string s;
  for (std::size_t i = 0; i < values.size(); ++i) s += (i ? ", " : "") + format_number(values[i]);
  return s;
}

}  // namespace

void ExperimentConfig::validate() const {
  auto need = [](bool ok, const std::string& key, const std::string& what) {
    if (!ok) throw InvalidArgument("key '" + key + "': " + what);
  };
  need(mesh_n.has_value() != mesh_file.has_value(), "mesh.n", "exactly one of mesh.n and mesh.file is required");
  if (mesh_n) need(*mesh_n > 0, "mesh.n", "must be positive");
  need(coarse_order == 1 || coarse_order == 2, "coarse.order", "must be 1 or 2");
  need(fine_order == 1 || fine_order == 2, "fine.order", "must be 1 or 2");
  need(epsilon > 0.0, "epsilon", "must be positive");
  need(!dt.empty(), "dt", "is required");
  for (double v : dt) need(v > 0.0, "dt", "must be positive");
  need(t_end > 0.0, "t_end", "must be positive");
  need(!S.empty(), "S", "is required");
  for (double v : S) need(v >= 0.0, "S", "must be non-negative");
  need(kappa >= 0 && kappa <= 3, "kappa", "must be in [0, 3]");
  need(fp_tol > 0.0, "fp_tol", "must be positive");
  need(fp_max_iter > 0, "fp_max_iter", "must be positive");
  need(lin_tol > 0.0, "lin_tol", "must be positive");
  const auto names = initial_condition_names();
  need(std::find(names.begin(), names.end(), ic) != names.end(), "ic", "unknown initial condition '" + ic + "'");
  need(!out_dir.empty(), "out_dir", "must not be empty");
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  cfg.dt.clear();
  std::map<std::string, std::size_t> seen;
  std::istringstream in(text);
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string content = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", line);
    const std::string key = trim(content.substr(0, eq));
    const std::string value = trim(content.substr(eq + 1));
    if (key.empty()) throw ParseError("missing key", line);
    if (value.empty()) throw ParseError("key '" + key + "': missing value", line);
    if (!seen.emplace(key, line).second) throw ParseError("key '" + key + "' given twice", line);

    auto positive = [&](double v) {
      if (!(v > 0.0)) throw ParseError("key '" + key + "': must be positive", line);
      return v;
    };
    try {
      if (key == "kind") {
        cfg.kind = experiment_kind_from_string(value);
      } else if (key == "mesh.n") {
        cfg.mesh_n = parse_unsigned(key, value, line);
        if (*cfg.mesh_n == 0) throw ParseError("key 'mesh.n': must be positive", line);
      } else if (key == "mesh.file") {
        cfg.mesh_file = value;
      } else if (key == "coarse.order" || key == "fine.order") {
        const auto v = parse_unsigned(key, value, line);
        if (v != 1 && v != 2) throw ParseError("key '" + key + "': must be 1 or 2", line);
        (key == "coarse.order" ? cfg.coarse_order : cfg.fine_order) = static_cast<int>(v);
      } else if (key == "coarse.mesh_levels") {
        cfg.coarse_mesh_levels = parse_unsigned(key, value, line);
      } else if (key == "epsilon") {
        cfg.epsilon = positive(parse_double(key, value, line));
      } else if (key == "dt") {
        cfg.dt = parse_list(key, value, line);
        for (double v : cfg.dt) positive(v);
      } else if (key == "t_end") {
        cfg.t_end = positive(parse_double(key, value, line));
      } else if (key == "S") {
        cfg.S = parse_list(key, value, line);
        for (double v : cfg.S) {
          if (v < 0.0) throw ParseError("key 'S': must be non-negative", line);
        }
      } else if (key == "kappa") {
        const auto v = parse_unsigned(key, value, line);
        if (v > 3) throw ParseError("key 'kappa': must be in [0, 3]", line);
        cfg.kappa = static_cast<int>(v);
      } else if (key == "fp_tol") {
        cfg.fp_tol = positive(parse_double(key, value, line));
      } else if (key == "fp_max_iter") {
        cfg.fp_max_iter = parse_unsigned(key, value, line);
        if (cfg.fp_max_iter == 0) throw ParseError("key 'fp_max_iter': must be positive", line);
      } else if (key == "lin_tol") {
        cfg.lin_tol = positive(parse_double(key, value, line));
      } else if (key == "ic") {
        const auto names = initial_condition_names();
        if (std::find(names.begin(), names.end(), value) == names.end()) {
          throw ParseError("key 'ic': unknown initial condition '" + value + "'", line);
        }
        cfg.ic = value;
      } else if (key == "forcing") {
        if (value == "none") {
          cfg.forcing = ForcingKind::none;
        } else if (value == "manufactured") {
          cfg.forcing = ForcingKind::manufactured;
        } else {
          throw ParseError("key 'forcing': expected none or manufactured, got '" + value + "'", line);
        }
      } else if (key == "verbatim_42_coefficient") {
        cfg.verbatim_42_coefficient = parse_bool(key, value, line);
      } else if (key == "out_dir") {
        cfg.out_dir = value;
      } else if (key == "seed") {
        cfg.seed = parse_unsigned(key, value, line);
      } else {
        throw ParseError("unknown key '" + key + "'", line);
      }
    } catch (const InvalidArgument& e) {
      throw ParseError("key '" + key + "': " + e.what(), line);
    }
  }
  for (const char* key : {"kind", "epsilon", "dt", "t_end"}) {
    if (!seen.count(key)) throw ParseError(std::string("missing required key '") + key + "'", 0);
  }
  if (seen.count("mesh.n") + seen.count("mesh.file") != 1) {
    throw ParseError("exactly one of 'mesh.n' and 'mesh.file' is required", 0);
  }
  return cfg;
}

ExperimentConfig read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw NotFound("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "kind = " << to_string(c.kind) << '\n';
  if (c.mesh_n) out << "mesh.n = " << *c.mesh_n << '\n';
  if (c.mesh_file) out << "mesh.file = " << *c.mesh_file << '\n';
  out << "coarse.order = " << c.coarse_order << '\n'
      << "fine.order = " << c.fine_order << '\n'
      << "coarse.mesh_levels = " << c.coarse_mesh_levels << '\n'
      << "epsilon = " << format_number(c.epsilon) << '\n'
      << "dt = " << join(c.dt) << '\n'
      << "t_end = " << format_number(c.t_end) << '\n'
      << "S = " << join(c.S) << '\n'
      << "kappa = " << c.kappa << '\n'
      << "fp_tol = " << format_number(c.fp_tol) << '\n'
      << "fp_max_iter = " << c.fp_max_iter << '\n'
      << "lin_tol = " << format_number(c.lin_tol) << '\n'
      << "ic = " << c.ic << '\n'
      << "forcing = " << (c.forcing == ForcingKind::manufactured ? "manufactured" : "none") << '\n'
      << "verbatim_42_coefficient = " << (c.verbatim_42_coefficient ? "true" : "false") << '\n'
      << "out_dir = " << c.out_dir << '\n'
      << "seed = " << c.seed << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// Initial conditions and presets

ScalarField initial_condition(const std::string& name) {
  using std::numbers::pi;
  if (name == "cos4pi") return [](Point p) { return std::cos(4 * pi * p.x) * std::cos(4 * pi * p.y); };
  if (name == "cospi") return [](Point p) { return std::cos(pi * p.x) * std::cos(pi * p.y); };
  if (name == "cos8x7") return [](Point p) { return std::cos(8 * pi * p.x) * std::cos(7 * pi * p.y); };
  if (name == "torus") {
    return [](Point p) {
      const double r2 = p.x * p.x + p.y * p.y;
      const double c = std::cos((r2 - 1.0) * (r2 - 9.0));
      return c * c;
    };
  }
  if (name == "sin72") return [](Point p) { return std::sin(72.0 * p.x * (1 - p.x) * p.y * (1 - p.y)); };
  if (name == "cos44") return [](Point p) { return std::cos(44.0 * (1 - p.x) * p.x * p.y * (1 - p.y)); };
  throw NotFound("unknown initial condition '" + name + "'");
}

std::vector<std::string> initial_condition_names() { return {"cos4pi", "cospi", "cos8x7", "torus", "sin72", "cos44"}; }

const std::vector<Preset>& presets() {
  static const std::vector<Preset> list = {
      {"stability_table_p2", "verdict matrix for S in {0.1, 0.05, 0.01}, P2, cos4pi",
       "kind = stability_table\nmesh.n = 20\ncoarse.order = 2\nfine.order = 2\ncoarse.mesh_levels = 1\n"
       "epsilon = 0.03\ndt = 0.007\nt_end = 0.7\nS = 0.1, 0.05, 0.01\nic = cos4pi\nout_dir = out/stability_table_p2\n"},
      {"stability_table_cos8x7", "S = 0.1 with the cos(8 pi x) cos(7 pi y) data, P2",
       "kind = stability_table\nmesh.n = 20\ncoarse.order = 2\nfine.order = 2\ncoarse.mesh_levels = 1\n"
       "epsilon = 0.03\ndt = 0.01\nt_end = 0.7\nS = 0.1\nic = cos8x7\nout_dir = out/stability_table_cos8x7\n"},
      {"stability_table_p1_s10", "S = 10 at dt = 0.01 with P1 elements",
       "kind = stability_table\nmesh.n = 20\ncoarse.order = 1\nfine.order = 1\ncoarse.mesh_levels = 1\n"
       "epsilon = 0.03\ndt = 0.01\nt_end = 1\nS = 10\nic = cos4pi\nout_dir = out/stability_table_p1_s10\n"},
      {"fixed_point_timing", "Picard at dt = 3e-4 against accelerated at dt = 5e-2, P2, n = 20, T = 0.4",
       "kind = fixed_point_timing\nmesh.n = 20\nfine.order = 2\ncoarse.mesh_levels = 0\nepsilon = 0.03\n"
       "dt = 0.0003, 0.05\nt_end = 0.4\nkappa = 1\nic = cos4pi\nout_dir = out/fixed_point_timing\n"},
      {"prolongation_rate_p1", "L2 error of P(I_H u) for P1 coarse spaces H = 1/4, 1/8, 1/16, fine P2 on 1/32",
       "kind = prolongation_rate\nmesh.n = 4\ncoarse.order = 1\nfine.order = 2\ncoarse.mesh_levels = 3\n"
       "epsilon = 1\ndt = 1\nt_end = 1\nic = cospi\nout_dir = out/prolongation_rate_p1\n"},
      {"prolongation_rate_p2", "L2 error of P(I_H u) for P2 coarse spaces H = 1/4 .. 1/32, fine P2 on 1/64",
       "kind = prolongation_rate\nmesh.n = 4\ncoarse.order = 2\nfine.order = 2\ncoarse.mesh_levels = 4\n"
       "epsilon = 1\ndt = 1\nt_end = 1\nic = cospi\nout_dir = out/prolongation_rate_p2\n"},
      {"scale_separation_p1", "mean/fluctuation split of sin(72 x(1-x) y(1-y)), P1, n = 20 / 40",
       "kind = spectrum\nmesh.n = 20\ncoarse.order = 1\nfine.order = 1\ncoarse.mesh_levels = 1\n"
       "epsilon = 1\ndt = 1\nt_end = 1\nic = sin72\nseed = 1\nout_dir = out/scale_separation_p1\n"},
      {"scale_separation_p2", "mean/fluctuation split of sin(72 x(1-x) y(1-y)), P2, n = 10 / 20",
       "kind = spectrum\nmesh.n = 10\ncoarse.order = 2\nfine.order = 2\ncoarse.mesh_levels = 1\n"
       "epsilon = 1\ndt = 1\nt_end = 1\nic = sin72\nseed = 1\nout_dir = out/scale_separation_p2\n"},
      {"spectrum_cos44", "mode components of u and z for cos(44 (1-x) x y (1-y)), P1, n = 20 / 40",
       "kind = spectrum\nmesh.n = 20\ncoarse.order = 1\nfine.order = 1\ncoarse.mesh_levels = 1\n"
       "epsilon = 1\ndt = 1\nt_end = 1\nic = cos44\nseed = 1\nout_dir = out/spectrum_cos44\n"},
      {"energy_compare_cos4pi", "stabilized, implicit and bigrid_42 energies, S = 1.5, P2, cos4pi",
       "kind = energy_compare\nmesh.n = 20\ncoarse.order = 2\nfine.order = 2\ncoarse.mesh_levels = 1\n"
       "epsilon = 0.03\ndt = 0.007\nt_end = 0.7\nS = 1.5\nic = cos4pi\nout_dir = out/energy_compare_cos4pi\n"},
      {"energy_compare_cospi_s10", "stabilized, implicit and bigrid_42 energies, S = 10, P2, cospi",
       "kind = energy_compare\nmesh.n = 20\ncoarse.order = 2\nfine.order = 2\ncoarse.mesh_levels = 1\n"
       "epsilon = 0.03\ndt = 0.007\nt_end = 0.7\nS = 10\nic = cospi\nout_dir = out/energy_compare_cospi_s10\n"},
      {"energy_compare_p1p2", "same triangulation, P1 coarse and P2 fine, eps = 0.1, S = 0.1",
       "kind = energy_compare\nmesh.n = 60\ncoarse.order = 1\nfine.order = 2\ncoarse.mesh_levels = 0\n"
       "epsilon = 0.1\ndt = 0.007\nt_end = 0.7\nS = 0.1\nic = cos4pi\nout_dir = out/energy_compare_p1p2\n"},
      {"direct_simulation", "implicit against bigrid_42 on dims 6561 / 1681, tau = 5e-3",
       "kind = direct_simulation\nmesh.n = 20\ncoarse.order = 2\nfine.order = 2\ncoarse.mesh_levels = 1\n"
       "epsilon = 0.03\ndt = 0.007\nt_end = 0.7\nS = 4.5e-6\nic = cos4pi\nout_dir = out/direct_simulation\n"},
      {"exact_solution", "manufactured solution, eps = 0.5, tau = 12, dims 6561 / 1681",
       "kind = exact_solution\nmesh.n = 20\ncoarse.order = 2\nfine.order = 2\ncoarse.mesh_levels = 1\n"
       "epsilon = 0.5\ndt = 0.01\nt_end = 1\nS = 3\nforcing = manufactured\nic = cospi\nout_dir = out/exact_solution\n"},
  };
  return list;
}

const Preset& find_preset(const std::string& name) {
  for (const auto& p : presets()) {
    if (p.name == name) return p;
  }
  throw NotFound("unknown preset '" + name + "'");
}

// ---------------------------------------------------------------------------
// Trace metrics

double relative_sup_distance(const SimulationTrace& a, const SimulationTrace& b, double t0, double t1) {
  double worst = 0.0;
  bool any = false;
  const std::size_t n = std::min(a.records.size(), b.records.size());
  for (std::size_t i = 0; i < n; ++i) {
    const double t = b.records[i].time;
    if (t < t0 - 1e-12 || t > t1 + 1e-12) continue;
    const double ref = std::abs(b.records[i].energy);
    const double diff = std::abs(a.records[i].energy - b.records[i].energy);
    worst = std::max(worst, ref > 0.0 ? diff / ref : (diff > 0.0 ? INFINITY : 0.0));
    any = true;
  }
  if (!any) throw InvalidArgument("relative_sup_distance: no records in the window");
  return worst;
}

std::optional<double> first_passage_time(const SimulationTrace& trace, double level) {
  for (const auto& r : trace.records) {
    if (r.energy <= level) return r.time;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Experiments

namespace {

struct SpacePair {
  std::shared_ptr<const TriangleMesh> coarse_mesh;
  std::shared_ptr<const TriangleMesh> fine_mesh;
  SpacePtr coarse;
  SpacePtr fine;
};

std::shared_ptr<const TriangleMesh> base_mesh(const ExperimentConfig& cfg) {
  if (cfg.mesh_n) return std::make_shared<const TriangleMesh>(generate_unit_square_mesh(*cfg.mesh_n));
  std::ifstream in(*cfg.mesh_file);
  if (!in) throw NotFound("cannot open mesh file '" + *cfg.mesh_file + "'");
  return std::make_shared<const TriangleMesh>(read_mesh(in));
}

std::shared_ptr<const TriangleMesh> refine_times(std::shared_ptr<const TriangleMesh> mesh, std::size_t levels) {
  for (std::size_t i = 0; i < levels; ++i) mesh = std::make_shared<const TriangleMesh>(refine_uniform(mesh));
  return mesh;
}

SpacePair build_pair(const ExperimentConfig& cfg) {
  SpacePair p;
  p.coarse_mesh = base_mesh(cfg);
  p.fine_mesh = refine_times(p.coarse_mesh, cfg.coarse_mesh_levels);
  p.coarse = build_space(p.coarse_mesh, cfg.coarse_order);
  p.fine = build_space(p.fine_mesh, cfg.fine_order);
  return p;
}

SchemeConfig scheme_config(const ExperimentConfig& cfg, SchemeKind kind, double dt, double S) {
  SchemeConfig s(kind, cfg.epsilon, dt, cfg.t_end, S);
  s.fp.kappa = cfg.kappa;
  s.fp.tol = cfg.fp_tol;
  s.fp.max_iter = cfg.fp_max_iter;
  s.lin_tol = cfg.lin_tol;
  s.verbatim_42_coefficient = cfg.verbatim_42_coefficient;
  return s;
}

class Runner {
 public:
  Runner(const ExperimentConfig& cfg, std::ostream* log) : cfg_(cfg), log_(log), dir_(cfg.out_dir) {
    std::filesystem::create_directories(dir_);
    summary_["schema_version"] = 1;
    summary_["kind"] = to_string(cfg.kind);
    summary_["config"] = serialize_config(cfg);
    summary_["runs"] = json::array();
  }

  json& summary() { return summary_; }
  ExperimentOutcome& outcome() { return outcome_; }

  ScalarField initial() const {
    if (cfg_.forcing == ForcingKind::manufactured) return manufactured_forcing(cfg_.epsilon).at_time(0.0);
    return initial_condition(cfg_.ic);
  }
  Forcing forcing() const {
    if (cfg_.forcing == ForcingKind::manufactured) return manufactured_forcing(cfg_.epsilon).as_forcing();
    return {};
  }

  std::string write_file(const std::string& name, const std::string& content) {
    const auto path = (dir_ / name).string();
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path + "'");
    out << content;
    outcome_.files.push_back(path);
    return path;
  }

  void say(const std::string& msg) {
    if (log_) *log_ << msg << std::endl;
  }

  /// Runs one simulation, records it in the summary and returns the trace
  /// (empty records when setup itself failed).
  SimulationTrace run(const std::string& label, SimulationSetup setup, json extra = json::object()) {
    say("run " + label + " (" + to_string(setup.config.kind()) + ", dt=" + format_number(setup.config.dt()) +
        ", S=" + format_number(setup.config.stabilization()) + ")");
    json entry = std::move(extra);
    entry["label"] = label;
    entry["scheme"] = to_string(setup.config.kind());
    entry["dt"] = setup.config.dt();
    entry["S"] = setup.config.stabilization();
    entry["tau"] = setup.config.tau();
    entry["fine_dim"] = setup.fine->dof_count();
    if (setup.coarse) entry["coarse_dim"] = setup.coarse->dof_count();
    SimulationTrace trace;
    try {
      trace = run_simulation(setup);
    } catch (const Error& e) {
      trace.failure = e.what();
      trace.failed_step = 0;
    }
    entry["completed"] = trace.completed;
    entry["failure"] = trace.failure;
    entry["failed_step"] = trace.failed_step ? json(*trace.failed_step) : json(nullptr);
    entry["steps"] = trace.records.empty() ? 0 : trace.records.size() - 1;
    entry["fp_iterations"] = trace.total_fp_iterations();
    entry["stable"] = !is_unstable(trace);
    if (!trace.records.empty()) {
      entry["initial_energy"] = trace.records.front().energy;
      entry["final_energy"] = trace.records.back().energy;
      entry["final_linf"] = trace.records.back().linf;
    }
    entry["wall_seconds"] = trace.wall_seconds();
    std::ostringstream csv;
    write_trace_csv(trace, csv);
    entry["trace_file"] = write_file(label + "_trace.csv", csv.str());
    if (trace.completed) {
      std::ostringstream field;
      write_function_csv(trace.final_field, field);
      entry["final_field_file"] = write_file(label + "_final.csv", field.str());
    }
    if (!trace.completed) outcome_.all_runs_completed = false;
    say("  " + std::string(trace.completed ? "completed" : "failed: " + trace.failure) + ", " +
        std::to_string(trace.total_fp_iterations()) + " fixed-point iterations");
    summary_["runs"].push_back(entry);
    return trace;
  }

  const ExperimentConfig& cfg_;

 private:
  std::ostream* log_;
  std::filesystem::path dir_;
  json summary_;
  ExperimentOutcome outcome_;
};

SimulationSetup one_grid_setup(const Runner& r, SchemeConfig sc, SpacePtr fine) {
  return SimulationSetup{std::move(sc), std::move(fine), nullptr, nullptr, r.initial(), r.forcing()};
}

SimulationSetup bigrid_setup(const Runner& r, SchemeConfig sc, const SpacePair& pair,
                             std::shared_ptr<const ProlongationOperator> op) {
  return SimulationSetup{std::move(sc), pair.fine, pair.coarse, std::move(op), r.initial(), r.forcing()};
}

void energy_compare(Runner& r) {
  const auto& cfg = r.cfg_;
  const SpacePair pair = build_pair(cfg);
  auto op = std::make_shared<const ProlongationOperator>(pair.coarse, pair.fine);
  const double dt = cfg.dt.front();
  const double S = cfg.S.front();
  const auto stab = r.run("stabilized", one_grid_setup(r, scheme_config(cfg, SchemeKind::stabilized, dt, S), pair.fine));
  const auto impl = r.run("implicit", one_grid_setup(r, scheme_config(cfg, SchemeKind::implicit, dt, 0.0), pair.fine));
  const auto bg = r.run("bigrid_42", bigrid_setup(r, scheme_config(cfg, SchemeKind::bigrid_42, dt, S), pair, op));
  r.summary()["dr"] = static_cast<double>(pair.coarse->dof_count()) / static_cast<double>(pair.fine->dof_count());
  if (!impl.records.empty()) {
    const double level = 0.5 * impl.records.front().energy;
    json fp = json::object();
    auto put = [&](const char* name, const SimulationTrace& t) {
      const auto time = first_passage_time(t, level);
      fp[name] = time ? json(*time) : json(nullptr);
    };
    put("stabilized", stab);
    put("implicit", impl);
    put("bigrid_42", bg);
    r.summary()["first_passage"] = {{"level", level}, {"times", fp}};
  }
}

void stability_table(Runner& r) {
  const auto& cfg = r.cfg_;
  const SpacePair pair = build_pair(cfg);
  auto op = std::make_shared<const ProlongationOperator>(pair.coarse, pair.fine);
  const double dt = cfg.dt.front();
  json rows = json::array();
  for (double S : cfg.S) {
    const std::string tag = "S" + format_number(S);
    const auto one = r.run("stabilized_" + tag,
                           one_grid_setup(r, scheme_config(cfg, SchemeKind::stabilized, dt, S), pair.fine));
    const auto two = r.run("bigrid_42_" + tag,
                           bigrid_setup(r, scheme_config(cfg, SchemeKind::bigrid_42, dt, S), pair, op));
    rows.push_back({{"S", S},
                    {"tau", S / (cfg.epsilon * cfg.epsilon)},
                    {"one_grid_stabilized", is_unstable(one) ? "no" : "yes"},
                    {"bigrid_42", is_unstable(two) ? "no" : "yes"}});
  }
  r.summary()["verdicts"] = rows;
}

void fixed_point_timing(Runner& r) {
  const auto& cfg = r.cfg_;
  const SpacePair pair = build_pair(cfg);
  std::optional<std::size_t> picard, accel;
  for (std::size_t i = 0; i < cfg.dt.size(); ++i) {
    for (int kappa : {0, cfg.kappa}) {
      SchemeConfig sc = scheme_config(cfg, SchemeKind::implicit, cfg.dt[i], 0.0);
      sc.fp.kappa = kappa;
      sc.fp.newton_on_stall = false;
      const std::string label = std::string(kappa == 0 ? "picard" : "delta" + std::to_string(kappa)) + "_dt" +
                                format_number(cfg.dt[i]);
      const auto t = r.run(label, one_grid_setup(r, sc, pair.fine), {{"kappa", kappa}});
      if (i == 0 && kappa == 0 && t.completed) picard = t.total_fp_iterations();
      if (i + 1 == cfg.dt.size() && kappa == cfg.kappa && t.completed) accel = t.total_fp_iterations();
      if (kappa == cfg.kappa && cfg.kappa == 0) break;
    }
  }
  r.summary()["iteration_ratio"] =
      (picard && accel && *accel > 0) ? json(static_cast<double>(*picard) / static_cast<double>(*accel)) : json(nullptr);
}

void prolongation_rate(Runner& r) {
  const auto& cfg = r.cfg_;
  if (cfg.coarse_mesh_levels < 2) throw InvalidArgument("key 'coarse.mesh_levels': prolongation_rate needs at least 2");
  std::vector<std::shared_ptr<const TriangleMesh>> meshes{base_mesh(cfg)};
  for (std::size_t i = 0; i < cfg.coarse_mesh_levels; ++i) meshes.push_back(refine_times(meshes.back(), 1));
  const SpacePtr fine = build_space(meshes.back(), cfg.fine_order);
  const ScalarField u = initial_condition(cfg.ic);
  json levels = json::array();
  std::vector<double> logh, loge;
  for (std::size_t i = 0; i + 1 < meshes.size(); ++i) {
    const SpacePtr coarse = build_space(meshes[i], cfg.coarse_order);
    const ProlongationOperator op(coarse, fine);
    const FemFunction pu = op.prolong(interpolate(coarse, u));
    const double err = l2_error(pu, u);
    const double h = cfg.mesh_n ? 1.0 / static_cast<double>(*cfg.mesh_n << i) : std::pow(0.5, static_cast<double>(i));
    levels.push_back({{"H", h}, {"coarse_dim", coarse->dof_count()}, {"l2_error", err}});
    logh.push_back(std::log(h));
    loge.push_back(std::log(err));
    r.say("H=" + format_number(h) + " error " + format_number(err));
  }
  const double n = static_cast<double>(logh.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < logh.size(); ++i) {
    sx += logh[i];
    sy += loge[i];
    sxx += logh[i] * logh[i];
    sxy += logh[i] * loge[i];
  }
  r.summary()["levels"] = levels;
  r.summary()["fine_dim"] = fine->dof_count();
  r.summary()["slope"] = (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

void spectrum(Runner& r) {
  constexpr std::size_t kModes = 16;
  const auto& cfg = r.cfg_;
  const SpacePair pair = build_pair(cfg);
  const ProlongationOperator op(pair.coarse, pair.fine);
  const ScalarField u0 = initial_condition(cfg.ic);
  const FemFunction u = interpolate(pair.fine, u0);
  const ScaleDecomposition d = decompose(op, u, interpolate(pair.coarse, u0));
  const Norms nu = norms(u);
  const Norms nz = norms(d.fluctuation);
  const auto stiffness = assemble_stiffness(*pair.fine);
  const auto pairs = generalized_eigs_smallest(stiffness, op.fine_mass(), kModes);
  const Vector cu = spectral_components(u, pairs, op.fine_mass());
  const Vector cz = spectral_components(d.fluctuation, pairs, op.fine_mass());
  std::ostringstream csv;
  write_spectrum_csv(pairs, cu, cz, csv);
  r.summary()["spectrum_file"] = r.write_file("spectrum.csv", csv.str());
  const auto diag = estimate_alpha_beta(op, 20, cfg.seed);
  r.summary()["coarse_dim"] = diag.coarse_dim;
  r.summary()["fine_dim"] = diag.fine_dim;
  r.summary()["dr"] = diag.dr;
  r.summary()["alpha_hat"] = diag.alpha_hat;
  r.summary()["beta_hat"] = diag.beta_hat;
  r.summary()["linf_ratio"] = nz.linf / nu.linf;
  r.summary()["l2_ratio"] = nz.l2 / nu.l2;
  json modes = json::array();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    modes.push_back({{"eigenvalue", pairs[i].value}, {"component_u", cu[i]}, {"component_z", cz[i]}});
  }
  r.summary()["modes"] = modes;
  std::ostringstream mean, fluct;
  write_function_csv(d.mean, mean);
  write_function_csv(d.fluctuation, fluct);
  r.write_file("mean.csv", mean.str());
  r.write_file("fluctuation.csv", fluct.str());
}

void exact_solution(Runner& r) {
  const auto& cfg = r.cfg_;
  const SpacePair pair = build_pair(cfg);
  auto op = std::make_shared<const ProlongationOperator>(pair.coarse, pair.fine);
  const double dt = cfg.dt.front();
  const auto exact = manufactured_forcing(cfg.epsilon);
  const auto impl = r.run("implicit", one_grid_setup(r, scheme_config(cfg, SchemeKind::implicit, dt, 0.0), pair.fine));
  const auto bg =
      r.run("bigrid_42", bigrid_setup(r, scheme_config(cfg, SchemeKind::bigrid_42, dt, cfg.S.front()), pair, op));
  auto error = [&](const SimulationTrace& t) -> json {
    if (!t.completed) return nullptr;
    return l2_error(t.final_field, exact.at_time(t.records.back().time));
  };
  r.summary()["l2_error"] = {{"implicit", error(impl)}, {"bigrid_42", error(bg)}};
  r.summary()["dr"] = static_cast<double>(pair.coarse->dof_count()) / static_cast<double>(pair.fine->dof_count());
  if (impl.completed && bg.completed && impl.wall_seconds() > 0.0) {
    r.summary()["wall_ratio"] = bg.wall_seconds() / impl.wall_seconds();
  }
}

void direct_simulation(Runner& r) {
  const auto& cfg = r.cfg_;
  const SpacePair pair = build_pair(cfg);
  auto op = std::make_shared<const ProlongationOperator>(pair.coarse, pair.fine);
  const double dt = cfg.dt.front();
  const auto impl = r.run("implicit", one_grid_setup(r, scheme_config(cfg, SchemeKind::implicit, dt, 0.0), pair.fine));
  const auto bg =
      r.run("bigrid_42", bigrid_setup(r, scheme_config(cfg, SchemeKind::bigrid_42, dt, cfg.S.front()), pair, op));
  r.summary()["dr"] = static_cast<double>(pair.coarse->dof_count()) / static_cast<double>(pair.fine->dof_count());
  if (impl.completed && bg.completed) {
    r.summary()["relative_sup_distance"] = relative_sup_distance(bg, impl, 0.1 * cfg.t_end, cfg.t_end);
    if (impl.wall_seconds() > 0.0) r.summary()["wall_ratio"] = bg.wall_seconds() / impl.wall_seconds();
  }
}

}  // namespace

ExperimentOutcome run_experiment(const ExperimentConfig& config, std::ostream* log) {
  config.validate();
  Runner r(config, log);
  switch (config.kind) {
    case ExperimentKind::energy_compare: energy_compare(r); break;
    case ExperimentKind::stability_table: stability_table(r); break;
    case ExperimentKind::fixed_point_timing: fixed_point_timing(r); break;
    case ExperimentKind::prolongation_rate: prolongation_rate(r); break;
    case ExperimentKind::spectrum: spectrum(r); break;
    case ExperimentKind::exact_solution: exact_solution(r); break;
    case ExperimentKind::direct_simulation: direct_simulation(r); break;
  }
  r.summary()["all_runs_completed"] = r.outcome().all_runs_completed;
  ExperimentOutcome out = std::move(r.outcome());
  out.summary_json = r.summary().dump(2) + "\n";
  const auto path = (std::filesystem::path(config.out_dir) / "summary.json").string();
  std::ofstream f(path);
  if (!f) throw Error("cannot write '" + path + "'");
  f << out.summary_json;
  out.files.push_back(path);
  return out;
}

}  // namespace bigrid
