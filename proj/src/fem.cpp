#include "bigrid/fem.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <numbers>
#include <ostream>

#include "bigrid/errors.hpp"

namespace bigrid {

namespace {

constexpr std::array<std::array<int, 2>, 3> kLocalEdges{{{0, 1}, {1, 2}, {2, 0}}};

// Gauss-Legendre nodes and weights on [0, 1].
void gauss_legendre_unit(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  // Legendre P_n(x) and its derivative by the three-term recurrence.
  auto legendre = [n](double x, double& dp) {
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    return p1;
  };
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      const double dx = legendre(x, dp) / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    legendre(x, dp);
    nodes[i] = 0.5 * (1.0 - x);
    weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);  // 2/((1−x²)P'²) scaled to [0, 1]
  }
}

QuadratureRule midpoint_rule() {
  QuadratureRule r;
  r.points = {{0.5, 0.5, 0.0}, {0.0, 0.5, 0.5}, {0.5, 0.0, 0.5}};
  r.weights = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  r.degree = 2;
  return r;
}

QuadratureRule six_point_rule() {
  constexpr double a1 = 0.44594849091596488632, w1 = 0.22338158967801146570;
  constexpr double a2 = 0.091576213509770743460, w2 = 0.10995174365532186764;
  QuadratureRule r;
  r.points = {{a1, a1, 1.0 - 2.0 * a1}, {a1, 1.0 - 2.0 * a1, a1}, {1.0 - 2.0 * a1, a1, a1},
              {a2, a2, 1.0 - 2.0 * a2}, {a2, 1.0 - 2.0 * a2, a2}, {1.0 - 2.0 * a2, a2, a2}};
  r.weights = {w1, w1, w1, w2, w2, w2};
  r.degree = 4;
  return r;
}

}  // namespace

QuadratureRule collapsed_gauss_rule(int n) {
  if (n < 1) throw InvalidArgument("collapsed_gauss_rule: n must be positive");
  std::vector<double> x, w;
  gauss_legendre_unit(n, x, w);
  QuadratureRule r;
  r.degree = 2 * n - 2;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double px = x[i];
      const double py = x[j] * (1.0 - x[i]);
      r.points.push_back({1.0 - px - py, px, py});
      r.weights.push_back(2.0 * w[i] * w[j] * (1.0 - x[i]));
    }
  }
  return r;
}

const QuadratureRule& quadrature_rule(int degree) {
  static const QuadratureRule deg2 = midpoint_rule();
  static const QuadratureRule deg4 = six_point_rule();
  static const QuadratureRule deg8 = collapsed_gauss_rule(5);
  static const QuadratureRule deg12 = collapsed_gauss_rule(7);
  if (degree <= 2) return deg2;
  if (degree <= 4) return deg4;
  if (degree <= 8) return deg8;
  if (degree <= 12) return deg12;
  throw InvalidArgument("quadrature_rule: degree above 12 not provided");
}

void evaluate_basis(int order, const std::array<double, 3>& l, std::span<double> out) {
  if (order == 1) {
    out[0] = l[0];
    out[1] = l[1];
    out[2] = l[2];
    return;
  }
  for (int i = 0; i < 3; ++i) out[i] = l[i] * (2.0 * l[i] - 1.0);
  for (int e = 0; e < 3; ++e) out[3 + e] = 4.0 * l[kLocalEdges[e][0]] * l[kLocalEdges[e][1]];
}

void evaluate_basis_derivatives(int order, const std::array<double, 3>& l, std::span<double> out) {
  const std::size_t nl = local_dof_count(order);
  std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(3 * nl), 0.0);
  if (order == 1) {
    for (int i = 0; i < 3; ++i) out[3 * i + i] = 1.0;
    return;
  }
  for (int i = 0; i < 3; ++i) out[3 * i + i] = 4.0 * l[i] - 1.0;
  for (int e = 0; e < 3; ++e) {
    const int a = kLocalEdges[e][0], b = kLocalEdges[e][1];
    out[3 * (3 + e) + a] = 4.0 * l[b];
    out[3 * (3 + e) + b] = 4.0 * l[a];
  }
}

FemSpace::FemSpace(std::shared_ptr<const TriangleMesh> mesh, int order) : mesh_(std::move(mesh)), order_(order) {
  if (!mesh_) throw InvalidArgument("FemSpace: null mesh");
  if (order_ != 1 && order_ != 2) throw InvalidArgument("FemSpace: order must be 1 or 2");
  const auto& tris = mesh_->triangles();
  const std::size_t nl = dofs_per_element();
  dof_coords_ = mesh_->vertices();
  element_dofs_.resize(tris.size() * nl);
  if (order_ == 2) {
    const auto edges = mesh_->unique_edges();
    const std::size_t nv = mesh_->num_vertices();
    for (const auto& e : edges) {
      const Point& a = mesh_->vertices()[e[0]];
      const Point& b = mesh_->vertices()[e[1]];
      dof_coords_.push_back({0.5 * (a.x + b.x), 0.5 * (a.y + b.y)});
    }
    for (std::size_t t = 0; t < tris.size(); ++t) {
      for (int i = 0; i < 3; ++i) element_dofs_[t * nl + i] = tris[t][i];
      for (int e = 0; e < 3; ++e) {
        std::size_t a = tris[t][kLocalEdges[e][0]], b = tris[t][kLocalEdges[e][1]];
        if (a > b) std::swap(a, b);
        const auto it = std::lower_bound(edges.begin(), edges.end(), Edge{a, b});
        element_dofs_[t * nl + 3 + e] = nv + static_cast<std::size_t>(it - edges.begin());
      }
    }
  } else {
    for (std::size_t t = 0; t < tris.size(); ++t) {
      for (int i = 0; i < 3; ++i) element_dofs_[t * nl + i] = tris[t][i];
    }
  }

  geometry_.resize(tris.size());
  for (std::size_t t = 0; t < tris.size(); ++t) {
    const Point& p0 = mesh_->vertices()[tris[t][0]];
    const Point& p1 = mesh_->vertices()[tris[t][1]];
    const Point& p2 = mesh_->vertices()[tris[t][2]];
    auto& g = geometry_[t];
    g.area = mesh_->area(t);
    const double inv = 1.0 / (2.0 * g.area);
    g.grad_lambda[0] = {(p1.y - p2.y) * inv, (p2.x - p1.x) * inv};
    g.grad_lambda[1] = {(p2.y - p0.y) * inv, (p0.x - p2.x) * inv};
    g.grad_lambda[2] = {(p0.y - p1.y) * inv, (p1.x - p0.x) * inv};
  }

  std::vector<Triplet> triplets;
  triplets.reserve(tris.size() * nl * nl);
  for (std::size_t t = 0; t < tris.size(); ++t) {
    for (std::size_t a = 0; a < nl; ++a) {
      for (std::size_t b = 0; b < nl; ++b) {
        triplets.push_back({element_dofs_[t * nl + a], element_dofs_[t * nl + b], 0.0});
      }
    }
  }
  pattern_ = SparseMatrix::from_triplets(dof_count(), dof_count(), std::move(triplets));
  element_csr_.resize(tris.size() * nl * nl);
  for (std::size_t t = 0; t < tris.size(); ++t) {
    for (std::size_t a = 0; a < nl; ++a) {
      for (std::size_t b = 0; b < nl; ++b) {
        element_csr_[(t * nl + a) * nl + b] = pattern_.index_of(element_dofs_[t * nl + a], element_dofs_[t * nl + b]);
      }
    }
  }
}

Point FemSpace::map_to_physical(std::size_t t, const std::array<double, 3>& l) const {
  const auto& tri = mesh_->triangles()[t];
  const auto& v = mesh_->vertices();
  return {l[0] * v[tri[0]].x + l[1] * v[tri[1]].x + l[2] * v[tri[2]].x,
          l[0] * v[tri[0]].y + l[1] * v[tri[1]].y + l[2] * v[tri[2]].y};
}

SpacePtr build_space(std::shared_ptr<const TriangleMesh> mesh, int order) {
  return std::make_shared<const FemSpace>(std::move(mesh), order);
}

FemFunction::FemFunction(SpacePtr s, Vector c) : space(std::move(s)), coeffs(std::move(c)) {
  if (!space) throw InvalidArgument("FemFunction: null space");
  if (coeffs.size() != space->dof_count()) throw InvalidArgument("FemFunction: coefficient count mismatch");
}

FemFunction::FemFunction(SpacePtr s) : space(std::move(s)) {
  if (!space) throw InvalidArgument("FemFunction: null space");
  coeffs.assign(space->dof_count(), 0.0);
}

namespace {

// Basis values at each point of a rule: table[q * nl + i].
std::vector<double> basis_table(int order, const QuadratureRule& rule) {
  const std::size_t nl = local_dof_count(order);
  std::vector<double> table(rule.size() * nl);
  for (std::size_t q = 0; q < rule.size(); ++q) {
    evaluate_basis(order, rule.points[q], std::span<double>(table.data() + q * nl, nl));
  }
  return table;
}

// Element mass-type matrix ∫ c φ_a φ_b accumulated into the space's pattern.
SparseMatrix assemble_weighted(const FemSpace& space, const QuadratureRule& rule,
                               const std::function<double(std::size_t, std::size_t)>& coeff) {
  const std::size_t nl = space.dofs_per_element();
  const auto phi = basis_table(space.order(), rule);
  SparseMatrix M = space.pattern();
  auto& vals = M.values();
  std::vector<double> local(nl * nl);
  for (std::size_t t = 0; t < space.num_elements(); ++t) {
    std::fill(local.begin(), local.end(), 0.0);
    const double area = space.geometry(t).area;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double w = area * rule.weights[q] * coeff(t, q);
      const double* pq = phi.data() + q * nl;
      for (std::size_t a = 0; a < nl; ++a) {
        for (std::size_t b = 0; b < nl; ++b) local[a * nl + b] += w * pq[a] * pq[b];
      }
    }
    const auto csr = space.element_csr(t);
    for (std::size_t k = 0; k < nl * nl; ++k) vals[csr[k]] += local[k];
  }
  return M;
}

double double_well(double u) {
  const double s = u * u - 1.0;
  return 0.25 * s * s;
}

}  // namespace

SparseMatrix assemble_mass(const FemSpace& space) {
  return assemble_weighted(space, quadrature_rule(2 * space.order()), [](std::size_t, std::size_t) { return 1.0; });
}

SparseMatrix assemble_stiffness(const FemSpace& space) {
  const int order = space.order();
  const std::size_t nl = space.dofs_per_element();
  const QuadratureRule& rule = quadrature_rule(2 * (order - 1));
  std::vector<double> dphi(rule.size() * 3 * nl);
  for (std::size_t q = 0; q < rule.size(); ++q) {
    evaluate_basis_derivatives(order, rule.points[q], std::span<double>(dphi.data() + q * 3 * nl, 3 * nl));
  }
  SparseMatrix A = space.pattern();
  auto& vals = A.values();
  std::vector<double> local(nl * nl);
  std::vector<std::array<double, 2>> grad(nl);
  for (std::size_t t = 0; t < space.num_elements(); ++t) {
    const auto& geo = space.geometry(t);
    std::fill(local.begin(), local.end(), 0.0);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const double* d = dphi.data() + q * 3 * nl;
      for (std::size_t a = 0; a < nl; ++a) {
        grad[a] = {0.0, 0.0};
        for (int k = 0; k < 3; ++k) {
          grad[a][0] += d[3 * a + k] * geo.grad_lambda[k][0];
          grad[a][1] += d[3 * a + k] * geo.grad_lambda[k][1];
        }
      }
      const double w = geo.area * rule.weights[q];
      for (std::size_t a = 0; a < nl; ++a) {
        for (std::size_t b = 0; b < nl; ++b) {
          local[a * nl + b] += w * (grad[a][0] * grad[b][0] + grad[a][1] * grad[b][1]);
        }
      }
    }
    const auto csr = space.element_csr(t);
    for (std::size_t k = 0; k < nl * nl; ++k) vals[csr[k]] += local[k];
  }
  return A;
}

SparseMatrix assemble_weighted_mass(const FemSpace& space, const FemFunction& c) {
  if (c.space.get() != &space) throw InvalidArgument("assemble_weighted_mass: coefficient lives on another space");
  const QuadratureRule& rule = quadrature_rule(3 * space.order());
  const Vector cq = values_at_quadrature(c, rule);
  const std::size_t nq = rule.size();
  return assemble_weighted(space, rule, [&](std::size_t t, std::size_t q) { return cq[t * nq + q]; });
}

SparseMatrix assemble_weighted_mass(const FemSpace& space, const QuadratureRule& rule,
                                    std::span<const double> c_at_points) {
  const std::size_t nq = rule.size();
  if (c_at_points.size() != space.num_elements() * nq) {
    throw InvalidArgument("assemble_weighted_mass: expected one value per quadrature point");
  }
  return assemble_weighted(space, rule, [&](std::size_t t, std::size_t q) { return c_at_points[t * nq + q]; });
}

Vector assemble_load(const FemSpace& space, const QuadratureRule& rule, std::span<const double> g_at_points) {
  const std::size_t nl = space.dofs_per_element();
  const std::size_t nq = rule.size();
  if (g_at_points.size() != space.num_elements() * nq) {
    throw InvalidArgument("assemble_load: expected one value per quadrature point");
  }
  const auto phi = basis_table(space.order(), rule);
  Vector b(space.dof_count(), 0.0);
  for (std::size_t t = 0; t < space.num_elements(); ++t) {
    const double area = space.geometry(t).area;
    const auto dofs = space.element_dofs(t);
    for (std::size_t q = 0; q < nq; ++q) {
      const double w = area * rule.weights[q] * g_at_points[t * nq + q];
      const double* pq = phi.data() + q * nl;
      for (std::size_t a = 0; a < nl; ++a) b[dofs[a]] += w * pq[a];
    }
  }
  return b;
}

Vector assemble_load(const FemSpace& space, const ScalarField& g) {
  const QuadratureRule& rule = quadrature_rule(2 * space.order() + 2);
  const std::size_t nq = rule.size();
  Vector gq(space.num_elements() * nq);
  for (std::size_t t = 0; t < space.num_elements(); ++t) {
    for (std::size_t q = 0; q < nq; ++q) gq[t * nq + q] = g(space.map_to_physical(t, rule.points[q]));
  }
  return assemble_load(space, rule, gq);
}

Vector assemble_load(const FemFunction& g) {
  const QuadratureRule& rule = quadrature_rule(2 * g.space->order());
  return assemble_load(*g.space, rule, values_at_quadrature(g, rule));
}

Vector values_at_quadrature(const FemFunction& u, const QuadratureRule& rule) {
  return values_at_quadrature(*u.space, u.coeffs, rule);
}

Vector values_at_quadrature(const FemSpace& space, std::span<const double> coeffs, const QuadratureRule& rule) {
  if (coeffs.size() != space.dof_count()) throw InvalidArgument("values_at_quadrature: coefficient count mismatch");
  const std::size_t nl = space.dofs_per_element();
  const std::size_t nq = rule.size();
  const auto phi = basis_table(space.order(), rule);
  Vector out(space.num_elements() * nq);
  for (std::size_t t = 0; t < space.num_elements(); ++t) {
    const auto dofs = space.element_dofs(t);
    for (std::size_t q = 0; q < nq; ++q) {
      const double* pq = phi.data() + q * nl;
      double s = 0.0;
      for (std::size_t a = 0; a < nl; ++a) s += coeffs[dofs[a]] * pq[a];
      out[t * nq + q] = s;
    }
  }
  return out;
}

FemFunction interpolate(SpacePtr space, const ScalarField& f) {
  Vector c(space->dof_count());
  const auto& coords = space->dof_coordinates();
  for (std::size_t i = 0; i < c.size(); ++i) c[i] = f(coords[i]);
  return FemFunction(std::move(space), std::move(c));
}

double compute_energy(const FemFunction& u, double epsilon) {
  if (!(epsilon > 0.0)) throw InvalidArgument("compute_energy: epsilon must be positive");
  const FemSpace& space = *u.space;
  const int order = space.order();
  const std::size_t nl = space.dofs_per_element();

  const QuadratureRule& grad_rule = quadrature_rule(2 * (order - 1));
  std::vector<double> dphi(grad_rule.size() * 3 * nl);
  for (std::size_t q = 0; q < grad_rule.size(); ++q) {
    evaluate_basis_derivatives(order, grad_rule.points[q], std::span<double>(dphi.data() + q * 3 * nl, 3 * nl));
  }
  double gradient_part = 0.0;
  for (std::size_t t = 0; t < space.num_elements(); ++t) {
    const auto& geo = space.geometry(t);
    const auto dofs = space.element_dofs(t);
    for (std::size_t q = 0; q < grad_rule.size(); ++q) {
      const double* d = dphi.data() + q * 3 * nl;
      std::array<double, 3> dl{0.0, 0.0, 0.0};  // ∂u/∂λ_k
      for (std::size_t a = 0; a < nl; ++a) {
        for (int k = 0; k < 3; ++k) dl[k] += u.coeffs[dofs[a]] * d[3 * a + k];
      }
      double gx = 0.0, gy = 0.0;
      for (int k = 0; k < 3; ++k) {
        gx += dl[k] * geo.grad_lambda[k][0];
        gy += dl[k] * geo.grad_lambda[k][1];
      }
      gradient_part += geo.area * grad_rule.weights[q] * (gx * gx + gy * gy);
    }
  }

  const QuadratureRule& rule = quadrature_rule(4 * order);
  const Vector uq = values_at_quadrature(u, rule);
  const std::size_t nq = rule.size();
  double well = 0.0;
  for (std::size_t t = 0; t < space.num_elements(); ++t) {
    const double area = space.geometry(t).area;
    for (std::size_t q = 0; q < nq; ++q) well += area * rule.weights[q] * double_well(uq[t * nq + q]);
  }
  return 0.5 * gradient_part + well / (epsilon * epsilon);
}

Norms norms(const FemFunction& u) {
  const FemSpace& space = *u.space;
  const QuadratureRule& rule = quadrature_rule(2 * space.order());
  const Vector uq = values_at_quadrature(u, rule);
  const std::size_t nq = rule.size();
  double sq = 0.0, integral = 0.0, area = 0.0;
  for (std::size_t t = 0; t < space.num_elements(); ++t) {
    const double a = space.geometry(t).area;
    area += a;
    for (std::size_t q = 0; q < nq; ++q) {
      const double v = uq[t * nq + q];
      sq += a * rule.weights[q] * v * v;
      integral += a * rule.weights[q] * v;
    }
  }
  Norms n;
  n.l2 = std::sqrt(sq);
  n.mean = integral / area;
  for (double c : u.coeffs) n.linf = std::max(n.linf, std::abs(c));
  return n;
}

double l2_error(const FemFunction& u, const ScalarField& f) {
  const FemSpace& space = *u.space;
  const QuadratureRule& rule = quadrature_rule(8);
  const Vector uq = values_at_quadrature(u, rule);
  const std::size_t nq = rule.size();
  double sq = 0.0;
  for (std::size_t t = 0; t < space.num_elements(); ++t) {
    const double a = space.geometry(t).area;
    for (std::size_t q = 0; q < nq; ++q) {
      const double d = uq[t * nq + q] - f(space.map_to_physical(t, rule.points[q]));
      sq += a * rule.weights[q] * d * d;
    }
  }
  return std::sqrt(sq);
}

void write_function_csv(const FemFunction& u, std::ostream& out) {
  out << "dof_index,x,y,value\n" << std::setprecision(17);
  const auto& coords = u.space->dof_coordinates();
  for (std::size_t i = 0; i < u.coeffs.size(); ++i) {
    out << i << ',' << coords[i].x << ',' << coords[i].y << ',' << u.coeffs[i] << '\n';
  }
}

}  // namespace bigrid
