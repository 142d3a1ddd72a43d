#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace bigrid {

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

using Triangle = std::array<std::size_t, 3>;
using Edge = std::array<std::size_t, 2>;

/// Barycentric slack used by point location.
inline constexpr double kBarycentricSlack = 1e-10;

/// A conforming 2D triangulation. Immutable once constructed; the constructor
/// validates orientation, conformity and the boundary edge set.
///
/// A mesh produced by `refine_uniform` remembers its parent and, for each
/// child triangle, the parent triangle it lies in. Transfer operators use
/// this provenance to detect nested spaces without comparing coordinates.
class TriangleMesh {
 public:
  TriangleMesh(std::vector<Point> vertices, std::vector<Triangle> triangles,
               std::vector<Edge> boundary_edges);

  const std::vector<Point>& vertices() const noexcept { return vertices_; }
  const std::vector<Triangle>& triangles() const noexcept { return triangles_; }
  const std::vector<Edge>& boundary_edges() const noexcept { return boundary_edges_; }

  std::size_t num_vertices() const noexcept { return vertices_.size(); }
  std::size_t num_triangles() const noexcept { return triangles_.size(); }

  /// Signed area of triangle t (positive for valid meshes).
  double area(std::size_t t) const;
  double total_area() const;
  Point centroid(std::size_t t) const;

  /// Unique undirected edges, each stored as (min, max), sorted lexicographically.
  std::vector<Edge> unique_edges() const;

  /// Parent mesh when this mesh came from `refine_uniform`, else null.
  const std::shared_ptr<const TriangleMesh>& parent() const noexcept { return parent_; }
  /// Index of the parent triangle containing child triangle t.
  std::size_t parent_triangle(std::size_t t) const { return parent_triangle_.at(t); }

  /// If `ancestor` is this mesh or reachable through the parent chain, maps
  /// every triangle of this mesh to the ancestor triangle containing it.
  std::optional<std::vector<std::size_t>> ancestor_map(const TriangleMesh& ancestor) const;

 private:
  friend TriangleMesh refine_uniform(const std::shared_ptr<const TriangleMesh>& mesh);

  void validate() const;

  std::vector<Point> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<Edge> boundary_edges_;
  std::shared_ptr<const TriangleMesh> parent_;
  std::vector<std::size_t> parent_triangle_;
};

struct PointLocation {
  std::size_t triangle_index = 0;
  std::array<double, 3> barycentric{};
};

/// Structured mesh of the unit square with n intervals per side. Each cell is
/// split along its lower-left to upper-right diagonal.
TriangleMesh generate_unit_square_mesh(std::size_t n);

/// Splits every triangle into four through its edge midpoints. Parent vertices
/// keep their indices; midpoints follow in sorted-edge order.
TriangleMesh refine_uniform(const std::shared_ptr<const TriangleMesh>& mesh);

/// Barycentric coordinates of p with respect to triangle t.
std::array<double, 3> barycentric(const TriangleMesh& mesh, std::size_t t, Point p);

/// Lowest-index triangle containing p (within kBarycentricSlack). Throws NotFound.
PointLocation locate_point(const TriangleMesh& mesh, Point p);

TriangleMesh read_mesh(std::istream& in);
TriangleMesh read_mesh_string(const std::string& text);
void write_mesh(const TriangleMesh& mesh, std::ostream& out);
std::string write_mesh_string(const TriangleMesh& mesh);

}  // namespace bigrid
