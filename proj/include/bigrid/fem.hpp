#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "bigrid/linalg.hpp"
#include "bigrid/mesh.hpp"

namespace bigrid {

/// Quadrature on the reference triangle in barycentric coordinates. Weights
/// sum to one, so ∫_K f ≈ |K| Σ w_q f(x_q).
struct QuadratureRule {
  std::vector<std::array<double, 3>> points;
  std::vector<double> weights;
  int degree = 0;

  std::size_t size() const noexcept { return weights.size(); }
};

/// Collapsed Gauss-Legendre rule with n×n points, exact up to degree 2n − 2.
QuadratureRule collapsed_gauss_rule(int n);

/// A rule exact for polynomials of at least the given degree: the 3-point
/// edge-midpoint rule (degree 2), the 6-point rule (degree 4), and collapsed
/// Gauss rules above that.
const QuadratureRule& quadrature_rule(int degree);

/// Number of local basis functions for a Lagrange element of the given order.
constexpr std::size_t local_dof_count(int order) { return order == 1 ? 3 : 6; }

/// Values of the local Lagrange basis at a barycentric point. P2 ordering:
/// vertices 0,1,2, then edges (0,1), (1,2), (2,0).
void evaluate_basis(int order, const std::array<double, 3>& bary, std::span<double> out);

/// Partial derivatives ∂φ_i/∂λ_k, stored row-major as out[3 * i + k].
void evaluate_basis_derivatives(int order, const std::array<double, 3>& bary, std::span<double> out);

/// Continuous P1 or P2 Lagrange space on a triangulation. Dofs are numbered
/// vertices first, then edges in sorted (min, max) endpoint order.
class FemSpace {
 public:
  struct ElementGeometry {
    double area = 0.0;
    std::array<std::array<double, 2>, 3> grad_lambda{};
  };

  FemSpace(std::shared_ptr<const TriangleMesh> mesh, int order);

  const TriangleMesh& mesh() const noexcept { return *mesh_; }
  const std::shared_ptr<const TriangleMesh>& mesh_ptr() const noexcept { return mesh_; }
  int order() const noexcept { return order_; }
  std::size_t dof_count() const noexcept { return dof_coords_.size(); }
  std::size_t dofs_per_element() const noexcept { return local_dof_count(order_); }
  std::size_t num_elements() const noexcept { return mesh_->num_triangles(); }

  std::span<const std::size_t> element_dofs(std::size_t t) const {
    return {element_dofs_.data() + t * dofs_per_element(), dofs_per_element()};
  }
  const std::vector<Point>& dof_coordinates() const noexcept { return dof_coords_; }
  const ElementGeometry& geometry(std::size_t t) const { return geometry_[t]; }

  /// Zero-valued matrix with the sparsity of every bilinear form on this space.
  const SparseMatrix& pattern() const noexcept { return pattern_; }
  /// CSR positions of the local (a, b) entries of element t, row-major.
  std::span<const std::size_t> element_csr(std::size_t t) const {
    const std::size_t nl = dofs_per_element();
    return {element_csr_.data() + t * nl * nl, nl * nl};
  }

  /// Physical point of a barycentric coordinate inside element t.
  Point map_to_physical(std::size_t t, const std::array<double, 3>& bary) const;

 private:
  std::shared_ptr<const TriangleMesh> mesh_;
  int order_;
  std::vector<std::size_t> element_dofs_;
  std::vector<Point> dof_coords_;
  std::vector<ElementGeometry> geometry_;
  SparseMatrix pattern_;
  std::vector<std::size_t> element_csr_;
};

using SpacePtr = std::shared_ptr<const FemSpace>;

SpacePtr build_space(std::shared_ptr<const TriangleMesh> mesh, int order);

/// Coefficient vector on a space.
struct FemFunction {
  SpacePtr space;
  Vector coeffs;

  FemFunction() = default;
  FemFunction(SpacePtr s, Vector c);
  explicit FemFunction(SpacePtr s);
};

using ScalarField = std::function<double(Point)>;

SparseMatrix assemble_mass(const FemSpace& space);
SparseMatrix assemble_stiffness(const FemSpace& space);

/// ∫ c φ_i φ_j with c a function on the same space; the rule is exact for
/// degree 3·order.
SparseMatrix assemble_weighted_mass(const FemSpace& space, const FemFunction& c);
/// ∫ c φ_i φ_j with c given at the points of `rule` (element-major, see
/// `values_at_quadrature`).
SparseMatrix assemble_weighted_mass(const FemSpace& space, const QuadratureRule& rule,
                                    std::span<const double> c_at_points);

/// ∫ g φ_i for an analytic g, with a rule exact for degree 2·order + 2.
Vector assemble_load(const FemSpace& space, const ScalarField& g);
/// ∫ g φ_i for g in the same space.
Vector assemble_load(const FemFunction& g);
/// ∫ g φ_i with g given at the points of `rule`.
Vector assemble_load(const FemSpace& space, const QuadratureRule& rule, std::span<const double> g_at_points);

/// u evaluated at every quadrature point, element-major: index t * rule.size() + q.
Vector values_at_quadrature(const FemFunction& u, const QuadratureRule& rule);
Vector values_at_quadrature(const FemSpace& space, std::span<const double> coeffs, const QuadratureRule& rule);

FemFunction interpolate(SpacePtr space, const ScalarField& f);

/// ½∫|∇u|² + ε⁻² ∫ ¼(u² − 1)², the double-well term with a rule exact for degree 4·order.
double compute_energy(const FemFunction& u, double epsilon);

struct Norms {
  double l2 = 0.0;
  double linf = 0.0;  ///< over dof values
  double mean = 0.0;
};
Norms norms(const FemFunction& u);

/// L² norm of u − f for an analytic f, using a degree-8 rule.
double l2_error(const FemFunction& u, const ScalarField& f);

/// CSV with header `dof_index,x,y,value`.
void write_function_csv(const FemFunction& u, std::ostream& out);

}  // namespace bigrid
