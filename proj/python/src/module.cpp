#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>

#include "bigrid/errors.hpp"
#include "bigrid/experiment.hpp"
#include "bigrid/schemes.hpp"

namespace py = pybind11;
using namespace bigrid;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array to_array(const Vector& v) {
  Array out(static_cast<py::ssize_t>(v.size()));
  std::memcpy(out.mutable_data(), v.data(), v.size() * sizeof(double));
  return out;
}

Vector to_vector(const Array& a) {
  if (a.ndim() != 1) throw InvalidArgument("expected a 1-d array");
  return Vector(a.data(), a.data() + a.size());
}

/// (data, indices, indptr, shape), the argument order of scipy.sparse.csr_matrix.
py::tuple csr(const SparseMatrix& m) {
  py::array_t<std::int64_t> indices(static_cast<py::ssize_t>(m.col_idx().size()));
  py::array_t<std::int64_t> indptr(static_cast<py::ssize_t>(m.row_ptr().size()));
  std::copy(m.col_idx().begin(), m.col_idx().end(), indices.mutable_data());
  std::copy(m.row_ptr().begin(), m.row_ptr().end(), indptr.mutable_data());
  return py::make_tuple(to_array(m.values()), indices, indptr, py::make_tuple(m.rows(), m.cols()));
}

FemFunction function_of(const SpacePtr& space, const Array& coeffs) {
  Vector c = to_vector(coeffs);
  if (c.size() != space->dof_count()) throw InvalidArgument("coefficient vector does not match the space");
  return FemFunction(space, std::move(c));
}

py::dict trace_dict(const SimulationTrace& t) {
  const std::size_t n = t.records.size();
  Vector step(n), time(n), energy(n), mean(n), linf(n), iters(n);
  for (std::size_t i = 0; i < n; ++i) {
    step[i] = static_cast<double>(t.records[i].step);
    time[i] = t.records[i].time;
    energy[i] = t.records[i].energy;
    mean[i] = t.records[i].mean;
    linf[i] = t.records[i].linf;
    iters[i] = static_cast<double>(t.records[i].fp_iters);
  }
  py::dict d;
  d["step"] = to_array(step);
  d["time"] = to_array(time);
  d["energy"] = to_array(energy);
  d["mean"] = to_array(mean);
  d["linf"] = to_array(linf);
  d["fp_iters"] = to_array(iters);
  d["completed"] = t.completed;
  d["failure"] = t.failure;
  d["failed_step"] = t.failed_step ? py::cast(*t.failed_step) : py::none();
  d["unstable"] = is_unstable(t);
  d["wall_seconds"] = t.wall_seconds();
  d["final"] = t.final_field.space ? py::object(to_array(t.final_field.coeffs)) : py::none();
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "2D P1/P2 finite elements and bi-grid Allen-Cahn time stepping";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<NotFound>(m, "NotFound", PyExc_LookupError);
  py::register_exception<SolverError>(m, "SolverError", base.ptr());

  py::class_<TriangleMesh, std::shared_ptr<TriangleMesh>>(m, "TriangleMesh")
      .def_property_readonly("num_vertices", &TriangleMesh::num_vertices)
      .def_property_readonly("num_triangles", &TriangleMesh::num_triangles)
      .def_property_readonly("vertices",
                             [](const TriangleMesh& mesh) {
                               py::array_t<double> out({static_cast<py::ssize_t>(mesh.num_vertices()), py::ssize_t{2}});
                               auto v = out.mutable_unchecked<2>();
                               for (std::size_t i = 0; i < mesh.num_vertices(); ++i) {
                                 v(i, 0) = mesh.vertices()[i].x;
                                 v(i, 1) = mesh.vertices()[i].y;
                               }
                               return out;
                             })
      .def_property_readonly("triangles",
                             [](const TriangleMesh& mesh) {
                               py::array_t<std::int64_t> out(
                                   {static_cast<py::ssize_t>(mesh.num_triangles()), py::ssize_t{3}});
                               auto t = out.mutable_unchecked<2>();
                               for (std::size_t i = 0; i < mesh.num_triangles(); ++i) {
                                 for (int k = 0; k < 3; ++k) t(i, k) = static_cast<std::int64_t>(mesh.triangles()[i][k]);
                               }
                               return out;
                             })
      .def("total_area", &TriangleMesh::total_area)
      .def("to_text", [](const TriangleMesh& mesh) { return write_mesh_string(mesh); });

  m.def("unit_square_mesh", [](std::size_t n) { return std::make_shared<TriangleMesh>(generate_unit_square_mesh(n)); },
        py::arg("n"));
  m.def("refine", [](std::shared_ptr<TriangleMesh> mesh) {
    return std::make_shared<TriangleMesh>(refine_uniform(std::const_pointer_cast<const TriangleMesh>(mesh)));
  });
  m.def("read_mesh", [](const std::string& text) { return std::make_shared<TriangleMesh>(read_mesh_string(text)); },
        py::arg("text"));

  py::class_<FemSpace, std::shared_ptr<FemSpace>>(m, "FemSpace")
      .def(py::init([](std::shared_ptr<TriangleMesh> mesh, int order) {
             return std::make_shared<FemSpace>(std::const_pointer_cast<const TriangleMesh>(mesh), order);
           }),
           py::arg("mesh"), py::arg("order"))
      .def_property_readonly("order", &FemSpace::order)
      .def_property_readonly("dof_count", &FemSpace::dof_count)
      .def_property_readonly("dof_coordinates", [](const FemSpace& s) {
        py::array_t<double> out({static_cast<py::ssize_t>(s.dof_count()), py::ssize_t{2}});
        auto v = out.mutable_unchecked<2>();
        for (std::size_t i = 0; i < s.dof_count(); ++i) {
          v(i, 0) = s.dof_coordinates()[i].x;
          v(i, 1) = s.dof_coordinates()[i].y;
        }
        return out;
      });

  auto space_ptr = [](const std::shared_ptr<FemSpace>& s) { return std::const_pointer_cast<const FemSpace>(s); };

  m.def("mass_matrix", [](const FemSpace& s) { return csr(assemble_mass(s)); },
        "CSR triple (data, indices, indptr, shape) of the mass matrix");
  m.def("stiffness_matrix", [](const FemSpace& s) { return csr(assemble_stiffness(s)); });
  m.def("interpolate",
        [space_ptr](const std::shared_ptr<FemSpace>& s, const std::function<double(double, double)>& f) {
          return to_array(interpolate(space_ptr(s), [&](Point p) { return f(p.x, p.y); }).coeffs);
        },
        py::arg("space"), py::arg("f"));
  m.def("initial_condition",
        [space_ptr](const std::shared_ptr<FemSpace>& s, const std::string& name) {
          return to_array(interpolate(space_ptr(s), initial_condition(name)).coeffs);
        },
        py::arg("space"), py::arg("name"));
  m.def("initial_condition_names", &initial_condition_names);
  m.def("energy",
        [space_ptr](const std::shared_ptr<FemSpace>& s, const Array& u, double eps) {
          return compute_energy(function_of(space_ptr(s), u), eps);
        },
        py::arg("space"), py::arg("u"), py::arg("epsilon"));
  m.def("norms", [space_ptr](const std::shared_ptr<FemSpace>& s, const Array& u) {
    const Norms n = norms(function_of(space_ptr(s), u));
    py::dict d;
    d["l2"] = n.l2;
    d["linf"] = n.linf;
    d["mean"] = n.mean;
    return d;
  });
  m.def("steady_residual",
        [space_ptr](const std::shared_ptr<FemSpace>& s, const Array& u, double eps) {
          return steady_residual(function_of(space_ptr(s), u), eps);
        },
        py::arg("space"), py::arg("u"), py::arg("epsilon"));

  py::class_<ProlongationOperator, std::shared_ptr<ProlongationOperator>>(m, "Prolongation")
      .def(py::init([space_ptr](const std::shared_ptr<FemSpace>& coarse, const std::shared_ptr<FemSpace>& fine) {
             return std::make_shared<ProlongationOperator>(space_ptr(coarse), space_ptr(fine));
           }),
           py::arg("coarse"), py::arg("fine"))
      .def_property_readonly("nested", &ProlongationOperator::nested)
      .def("prolong", [](const ProlongationOperator& op, const Array& u) { return to_array(op.prolong(to_vector(u))); })
      .def("restrict", [](const ProlongationOperator& op, const Array& u) {
        return to_array(op.restrict_l2(function_of(op.fine(), u)).coeffs);
      })
      .def("decompose",
           [](const ProlongationOperator& op, const Array& u_fine, const Array& u_coarse) {
             const ScaleDecomposition d = decompose(op, function_of(op.fine(), u_fine), function_of(op.coarse(), u_coarse));
             return py::make_tuple(to_array(d.mean.coeffs), to_array(d.fluctuation.coeffs));
           },
           "returns (mean, fluctuation) with mean = P(u_coarse)")
      .def("alpha_beta", [](const ProlongationOperator& op, std::size_t samples, std::uint64_t seed) {
        const auto t = estimate_alpha_beta(op, samples, seed);
        py::dict d;
        d["alpha"] = t.alpha_hat;
        d["beta"] = t.beta_hat;
        d["dr"] = t.dr;
        return d;
      });

  m.def(
      "simulate",
      [space_ptr](const std::string& scheme, const std::shared_ptr<FemSpace>& fine, double epsilon, double dt,
                  double t_end, double S, const std::string& ic, const std::shared_ptr<FemSpace>& coarse, int kappa,
                  double fp_tol, bool manufactured) {
        SchemeConfig cfg(scheme_kind_from_string(scheme), epsilon, dt, t_end, S);
        cfg.fp.kappa = kappa;
        cfg.fp.tol = fp_tol;
        SimulationSetup setup{cfg, space_ptr(fine), coarse ? space_ptr(coarse) : nullptr, nullptr, {}, {}};
        if (manufactured) {
          const auto ms = manufactured_forcing(epsilon);
          setup.initial = ms.at_time(0.0);
          setup.forcing = ms.as_forcing();
        } else {
          setup.initial = initial_condition(ic);
        }
        SimulationTrace t;
        {
          py::gil_scoped_release release;
          t = run_simulation(setup);
        }
        return trace_dict(t);
      },
      py::arg("scheme"), py::arg("fine"), py::arg("epsilon"), py::arg("dt"), py::arg("t_end"), py::arg("S") = 0.0,
      py::arg("ic") = "cos4pi", py::arg("coarse") = nullptr, py::arg("kappa") = 1, py::arg("fp_tol") = 1e-8,
      py::arg("manufactured") = false,
      "Run one scheme (semi_implicit, implicit, stabilized, bigrid_41, bigrid_42) and return its trace");

  m.def("parse_config", [](const std::string& text) { return serialize_config(parse_config(text)); },
        "Validate config text and return it in canonical form");
  m.def(
      "run_experiment",
      [](const std::string& text, const std::string& out_dir) {
        ExperimentConfig cfg = parse_config(text);
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        ExperimentOutcome out;
        {
          py::gil_scoped_release release;
          out = run_experiment(cfg);
        }
        return py::module_::import("json").attr("loads")(out.summary_json);
      },
      py::arg("config_text"), py::arg("out_dir") = "", "Run an experiment and return its summary as a dict");
  m.def("presets", [] {
    std::vector<std::string> names;
    for (const auto& p : presets()) names.push_back(p.name);
    return names;
  });
  m.def("preset", [](const std::string& name) { return find_preset(name).config_text; });
}
