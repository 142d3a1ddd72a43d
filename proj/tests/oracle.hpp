#pragma once

// Exact reference assembly for tests: basis functions are kept as polynomials
// in barycentric coordinates and integrated with the closed form
// ∫_K λ0^a λ1^b λ2^c = 2|K| a! b! c! / (a + b + c + 2)!.

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <tuple>
#include <vector>

#include "bigrid/mesh.hpp"

namespace oracle {

using Monomial = std::array<int, 3>;
using Poly = std::map<Monomial, double>;

inline Poly constant(double c) { return {{{0, 0, 0}, c}}; }

inline Poly lambda(int k) {
  Monomial m{0, 0, 0};
  m[k] = 1;
  return {{m, 1.0}};
}

inline Poly add(const Poly& a, const Poly& b, double sb = 1.0) {
  Poly r = a;
  for (const auto& [m, c] : b) r[m] += sb * c;
  return r;
}

inline Poly scale(const Poly& a, double s) {
  Poly r;
  for (const auto& [m, c] : a) r[m] = s * c;
  return r;
}

inline Poly mul(const Poly& a, const Poly& b) {
  Poly r;
  for (const auto& [ma, ca] : a) {
    for (const auto& [mb, cb] : b) r[{ma[0] + mb[0], ma[1] + mb[1], ma[2] + mb[2]}] += ca * cb;
  }
  return r;
}

inline Poly diff(const Poly& a, int k) {
  Poly r;
  for (const auto& [m, c] : a) {
    if (m[k] == 0) continue;
    Monomial d = m;
    d[k] -= 1;
    r[d] += c * m[k];
  }
  return r;
}

inline double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

inline double integrate(const Poly& p, double area) {
  double s = 0.0;
  for (const auto& [m, c] : p) {
    s += c * 2.0 * area * factorial(m[0]) * factorial(m[1]) * factorial(m[2]) /
         factorial(m[0] + m[1] + m[2] + 2);
  }
  return s;
}

/// Global dof ids and basis polynomials of one element, numbered vertices
/// first, then edges by position in the sorted unique edge list.
struct Element {
  double area = 0.0;
  std::array<std::array<double, 2>, 3> grad{};
  std::array<bigrid::Point, 3> p{};
  std::vector<std::size_t> dofs;
  std::vector<Poly> basis;
};

inline std::vector<Element> elements(const bigrid::TriangleMesh& mesh, int order) {
  const auto edges = mesh.unique_edges();
  std::vector<Element> out;
  for (const auto& tri : mesh.triangles()) {
    Element e;
    for (int k = 0; k < 3; ++k) e.p[k] = mesh.vertices()[tri[k]];
    const double x0 = e.p[0].x, y0 = e.p[0].y, x1 = e.p[1].x, y1 = e.p[1].y, x2 = e.p[2].x, y2 = e.p[2].y;
    const double twice = (x1 - x0) * (y2 - y0) - (x2 - x0) * (y1 - y0);
    e.area = 0.5 * twice;
    e.grad[0] = {(y1 - y2) / twice, (x2 - x1) / twice};
    e.grad[1] = {(y2 - y0) / twice, (x0 - x2) / twice};
    e.grad[2] = {(y0 - y1) / twice, (x1 - x0) / twice};
    for (int k = 0; k < 3; ++k) {
      e.dofs.push_back(tri[k]);
      e.basis.push_back(order == 1 ? lambda(k)
                                   : mul(lambda(k), add(scale(lambda(k), 2.0), constant(1.0), -1.0)));
    }
    if (order == 2) {
      for (int a = 0; a < 3; ++a) {
        for (int b = a + 1; b < 3; ++b) {
          const bigrid::Edge key{std::min(tri[a], tri[b]), std::max(tri[a], tri[b])};
          const auto it = std::lower_bound(edges.begin(), edges.end(), key);
          e.dofs.push_back(mesh.num_vertices() + static_cast<std::size_t>(it - edges.begin()));
          e.basis.push_back(scale(mul(lambda(a), lambda(b)), 4.0));
        }
      }
    }
    out.push_back(std::move(e));
  }
  return out;
}

inline std::size_t dof_count(const bigrid::TriangleMesh& mesh, int order) {
  return order == 1 ? mesh.num_vertices() : mesh.num_vertices() + mesh.unique_edges().size();
}

using Dense = std::vector<std::vector<double>>;

/// x and y as barycentric polynomials on an element.
inline Poly coord(const Element& e, int axis) {
  Poly r;
  for (int k = 0; k < 3; ++k) r = add(r, scale(lambda(k), axis == 0 ? e.p[k].x : e.p[k].y));
  return r;
}

inline Poly local_function(const Element& e, const std::vector<double>& coeffs) {
  Poly r;
  for (std::size_t i = 0; i < e.dofs.size(); ++i) r = add(r, scale(e.basis[i], coeffs[e.dofs[i]]));
  return r;
}

inline Dense mass(const bigrid::TriangleMesh& mesh, int order, const std::vector<double>* weight = nullptr,
                  int weight_order = 1) {
  const std::size_t n = dof_count(mesh, order);
  Dense M(n, std::vector<double>(n, 0.0));
  const auto welems = weight ? elements(mesh, weight_order) : std::vector<Element>{};
  const auto elems = elements(mesh, order);
  for (std::size_t t = 0; t < elems.size(); ++t) {
    const Element& e = elems[t];
    const Poly w = weight ? local_function(welems[t], *weight) : constant(1.0);
    for (std::size_t i = 0; i < e.dofs.size(); ++i) {
      for (std::size_t j = 0; j < e.dofs.size(); ++j) {
        M[e.dofs[i]][e.dofs[j]] += integrate(mul(w, mul(e.basis[i], e.basis[j])), e.area);
      }
    }
  }
  return M;
}

inline Dense stiffness(const bigrid::TriangleMesh& mesh, int order) {
  const std::size_t n = dof_count(mesh, order);
  Dense A(n, std::vector<double>(n, 0.0));
  for (const Element& e : elements(mesh, order)) {
    for (std::size_t i = 0; i < e.dofs.size(); ++i) {
      for (std::size_t j = 0; j < e.dofs.size(); ++j) {
        double s = 0.0;
        for (int k = 0; k < 3; ++k) {
          for (int l = 0; l < 3; ++l) {
            const double g = e.grad[k][0] * e.grad[l][0] + e.grad[k][1] * e.grad[l][1];
            s += g * integrate(mul(diff(e.basis[i], k), diff(e.basis[j], l)), e.area);
          }
        }
        A[e.dofs[i]][e.dofs[j]] += s;
      }
    }
  }
  return A;
}

/// Load ∫ g φ_i for g(x, y) = Σ c x^a y^b.
inline std::vector<double> load(const bigrid::TriangleMesh& mesh, int order,
                                const std::vector<std::tuple<double, int, int>>& g) {
  std::vector<double> b(dof_count(mesh, order), 0.0);
  for (const Element& e : elements(mesh, order)) {
    Poly gp;
    for (const auto& [c, a, bb] : g) {
      Poly term = constant(c);
      for (int i = 0; i < a; ++i) term = mul(term, coord(e, 0));
      for (int i = 0; i < bb; ++i) term = mul(term, coord(e, 1));
      gp = add(gp, term);
    }
    for (std::size_t i = 0; i < e.dofs.size(); ++i) b[e.dofs[i]] += integrate(mul(gp, e.basis[i]), e.area);
  }
  return b;
}

/// ½ uᵀ A u + ε⁻² ∫ ¼ (u² − 1)².
inline double energy(const bigrid::TriangleMesh& mesh, int order, const std::vector<double>& u, double eps) {
  const Dense A = stiffness(mesh, order);
  double grad = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    for (std::size_t j = 0; j < u.size(); ++j) grad += u[i] * A[i][j] * u[j];
  }
  double well = 0.0;
  for (const Element& e : elements(mesh, order)) {
    const Poly ul = local_function(e, u);
    const Poly s = add(mul(ul, ul), constant(1.0), -1.0);
    well += 0.25 * integrate(mul(s, s), e.area);
  }
  return 0.5 * grad + well / (eps * eps);
}

}  // namespace oracle
