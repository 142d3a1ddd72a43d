#include <doctest.h>

#include <memory>
#include <set>

#include "bigrid/errors.hpp"
#include "bigrid/mesh.hpp"

using namespace bigrid;

TEST_CASE("unit square mesh counts and area") {
  const TriangleMesh m = generate_unit_square_mesh(2);
  CHECK(m.num_vertices() == 9);
  CHECK(m.num_triangles() == 8);
  CHECK(m.boundary_edges().size() == 8);
  CHECK(m.unique_edges().size() == 16);
  CHECK(m.total_area() == doctest::Approx(1.0).epsilon(1e-14));
  for (std::size_t t = 0; t < m.num_triangles(); ++t) CHECK(m.area(t) > 0.0);
}

TEST_CASE("unique edges are sorted pairs") {
  const TriangleMesh m = generate_unit_square_mesh(3);
  const auto edges = m.unique_edges();
  for (const auto& e : edges) CHECK(e[0] < e[1]);
  CHECK(std::is_sorted(edges.begin(), edges.end()));
  CHECK(std::set<Edge>(edges.begin(), edges.end()).size() == edges.size());
  // Euler: V - E + F = 1 for a disk.
  CHECK(m.num_vertices() + m.num_triangles() == edges.size() + 1);
}

TEST_CASE("uniform refinement keeps provenance") {
  auto coarse = std::make_shared<const TriangleMesh>(generate_unit_square_mesh(2));
  auto fine = std::make_shared<const TriangleMesh>(refine_uniform(coarse));
  CHECK(fine->num_triangles() == 32);
  CHECK(fine->num_vertices() == 25);
  CHECK(fine->boundary_edges().size() == 16);
  CHECK(fine->parent() == coarse);
  CHECK(fine->total_area() == doctest::Approx(1.0).epsilon(1e-14));
  for (std::size_t t = 0; t < fine->num_triangles(); ++t) {
    const std::size_t p = fine->parent_triangle(t);
    const auto b = barycentric(*coarse, p, fine->centroid(t));
    for (double l : b) CHECK(l > 0.0);
    CHECK(fine->area(t) == doctest::Approx(coarse->area(p) / 4));
  }
  auto finer = std::make_shared<const TriangleMesh>(refine_uniform(fine));
  const auto map = finer->ancestor_map(*coarse);
  REQUIRE(map.has_value());
  CHECK(map->size() == finer->num_triangles());
  CHECK_FALSE(coarse->ancestor_map(*fine).has_value());
  const TriangleMesh unrelated = generate_unit_square_mesh(8);
  CHECK_FALSE(unrelated.ancestor_map(*coarse).has_value());
}

TEST_CASE("point location") {
  const TriangleMesh m = generate_unit_square_mesh(4);
  const auto loc = locate_point(m, {0.3, 0.7});
  double sum = 0.0;
  Point p{};
  for (int k = 0; k < 3; ++k) {
    sum += loc.barycentric[k];
    const Point v = m.vertices()[m.triangles()[loc.triangle_index][k]];
    p.x += loc.barycentric[k] * v.x;
    p.y += loc.barycentric[k] * v.y;
  }
  CHECK(sum == doctest::Approx(1.0));
  CHECK(p.x == doctest::Approx(0.3));
  CHECK(p.y == doctest::Approx(0.7));
  CHECK_THROWS_AS(locate_point(m, {1.5, 0.5}), NotFound);
}

TEST_CASE("mesh text round trip") {
  const TriangleMesh m = generate_unit_square_mesh(3);
  const TriangleMesh r = read_mesh_string(write_mesh_string(m));
  CHECK(r.vertices() == m.vertices());
  CHECK(r.triangles() == m.triangles());
  CHECK(r.boundary_edges().size() == m.boundary_edges().size());
}

TEST_CASE("invalid meshes are rejected") {
  // clockwise triangle
  CHECK_THROWS_AS(TriangleMesh({{0, 0}, {1, 0}, {0, 1}}, {{0, 2, 1}}, {{0, 1}, {1, 2}, {0, 2}}), InvalidArgument);
  // vertex index out of range
  CHECK_THROWS(TriangleMesh({{0, 0}, {1, 0}, {0, 1}}, {{0, 1, 5}}, {}));
  CHECK_THROWS_AS(read_mesh_string("3 1 3\n0 0\n1 0\n"), ParseError);
  CHECK_THROWS_AS(generate_unit_square_mesh(0), InvalidArgument);
}
