#include "bigrid/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "bigrid/errors.hpp"

namespace bigrid {

namespace {

Edge make_edge(std::size_t a, std::size_t b) { return a < b ? Edge{a, b} : Edge{b, a}; }

double signed_area(const Point& a, const Point& b, const Point& c) {
  return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

// Edge -> incident triangle count.
std::map<Edge, int> count_edges(const std::vector<Triangle>& triangles) {
  std::map<Edge, int> counts;
  for (const auto& t : triangles) {
    for (int k = 0; k < 3; ++k) ++counts[make_edge(t[k], t[(k + 1) % 3])];
  }
  return counts;
}

}  // namespace

TriangleMesh::TriangleMesh(std::vector<Point> vertices, std::vector<Triangle> triangles,
                           std::vector<Edge> boundary_edges)
    : vertices_(std::move(vertices)),
      triangles_(std::move(triangles)),
      boundary_edges_(std::move(boundary_edges)) {
  validate();
}

void TriangleMesh::validate() const {
  const std::size_t nv = vertices_.size();
  if (triangles_.empty()) throw InvalidArgument("mesh has no triangles");
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    for (std::size_t v : triangles_[t]) {
      if (v >= nv) throw InvalidArgument("triangle " + std::to_string(t) + " vertex index out of range");
    }
    if (!(area(t) > 0.0)) {
      throw InvalidArgument("triangle " + std::to_string(t) + " has non-positive area");
    }
  }
  const auto counts = count_edges(triangles_);
  std::vector<Edge> expected;
  for (const auto& [edge, count] : counts) {
    if (count > 2) throw InvalidArgument("edge shared by more than two triangles");
    if (count == 1) expected.push_back(edge);
  }
  std::vector<Edge> given;
  given.reserve(boundary_edges_.size());
  for (const auto& e : boundary_edges_) {
    if (e[0] >= nv || e[1] >= nv) throw InvalidArgument("boundary edge vertex index out of range");
    given.push_back(make_edge(e[0], e[1]));
  }
  std::sort(given.begin(), given.end());
  if (given != expected) {
    throw InvalidArgument("boundary edges do not match the edges with one incident triangle");
  }
}

double TriangleMesh::area(std::size_t t) const {
  const auto& tri = triangles_.at(t);
  return signed_area(vertices_[tri[0]], vertices_[tri[1]], vertices_[tri[2]]);
}

double TriangleMesh::total_area() const {
  double sum = 0.0;
  for (std::size_t t = 0; t < triangles_.size(); ++t) sum += area(t);
  return sum;
}

Point TriangleMesh::centroid(std::size_t t) const {
  const auto& tri = triangles_.at(t);
  const Point& a = vertices_[tri[0]];
  const Point& b = vertices_[tri[1]];
  const Point& c = vertices_[tri[2]];
  return {(a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0};
}

std::vector<Edge> TriangleMesh::unique_edges() const {
  std::vector<Edge> edges;
  edges.reserve(3 * triangles_.size());
  for (const auto& t : triangles_) {
    for (int k = 0; k < 3; ++k) edges.push_back(make_edge(t[k], t[(k + 1) % 3]));
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

std::optional<std::vector<std::size_t>> TriangleMesh::ancestor_map(const TriangleMesh& ancestor) const {
  std::vector<std::size_t> map(triangles_.size());
  for (std::size_t t = 0; t < map.size(); ++t) map[t] = t;
  const TriangleMesh* current = this;
  while (current != nullptr) {
    if (current == &ancestor) return map;
    if (!current->parent_) break;
    for (auto& m : map) m = current->parent_triangle_[m];
    current = current->parent_.get();
  }
  return std::nullopt;
}

TriangleMesh generate_unit_square_mesh(std::size_t n) {
  if (n == 0) throw InvalidArgument("generate_unit_square_mesh: n must be at least 1");
  const double nd = static_cast<double>(n);
  std::vector<Point> vertices;
  vertices.reserve((n + 1) * (n + 1));
  for (std::size_t j = 0; j <= n; ++j) {
    for (std::size_t i = 0; i <= n; ++i) {
      vertices.push_back({static_cast<double>(i) / nd, static_cast<double>(j) / nd});
    }
  }
  auto id = [n](std::size_t i, std::size_t j) { return j * (n + 1) + i; };
  std::vector<Triangle> triangles;
  triangles.reserve(2 * n * n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
      triangles.push_back({a, b, c});
      triangles.push_back({a, c, d});
    }
  }
  std::vector<Edge> boundary;
  boundary.reserve(4 * n);
  for (std::size_t i = 0; i < n; ++i) {
    boundary.push_back({id(i, 0), id(i + 1, 0)});
    boundary.push_back({id(n, i), id(n, i + 1)});
    boundary.push_back({id(i + 1, n), id(i, n)});
    boundary.push_back({id(0, i + 1), id(0, i)});
  }
  return TriangleMesh(std::move(vertices), std::move(triangles), std::move(boundary));
}

TriangleMesh refine_uniform(const std::shared_ptr<const TriangleMesh>& mesh) {
  if (!mesh) throw InvalidArgument("refine_uniform: null mesh");
  const auto edges = mesh->unique_edges();
  std::vector<Point> vertices = mesh->vertices();
  const std::size_t nv = vertices.size();
  vertices.reserve(nv + edges.size());
  for (const auto& e : edges) {
    const Point& a = vertices[e[0]];
    const Point& b = vertices[e[1]];
    vertices.push_back({0.5 * (a.x + b.x), 0.5 * (a.y + b.y)});
  }
  auto midpoint = [&](std::size_t a, std::size_t b) {
    const Edge key = make_edge(a, b);
    const auto it = std::lower_bound(edges.begin(), edges.end(), key);
    return nv + static_cast<std::size_t>(it - edges.begin());
  };

  std::vector<Triangle> triangles;
  std::vector<std::size_t> parent_of;
  triangles.reserve(4 * mesh->num_triangles());
  parent_of.reserve(4 * mesh->num_triangles());
  for (std::size_t t = 0; t < mesh->num_triangles(); ++t) {
    const auto [a, b, c] = mesh->triangles()[t];
    const std::size_t ab = midpoint(a, b), bc = midpoint(b, c), ca = midpoint(c, a);
    triangles.push_back({a, ab, ca});
    triangles.push_back({ab, b, bc});
    triangles.push_back({ca, bc, c});
    triangles.push_back({ab, bc, ca});
    parent_of.insert(parent_of.end(), 4, t);
  }

  std::vector<Edge> boundary;
  boundary.reserve(2 * mesh->boundary_edges().size());
  for (const auto& e : mesh->boundary_edges()) {
    const std::size_t m = midpoint(e[0], e[1]);
    boundary.push_back({e[0], m});
    boundary.push_back({m, e[1]});
  }

  TriangleMesh refined(std::move(vertices), std::move(triangles), std::move(boundary));
  refined.parent_ = mesh;
  refined.parent_triangle_ = std::move(parent_of);
  return refined;
}

std::array<double, 3> barycentric(const TriangleMesh& mesh, std::size_t t, Point p) {
  const auto& tri = mesh.triangles().at(t);
  const Point& a = mesh.vertices()[tri[0]];
  const Point& b = mesh.vertices()[tri[1]];
  const Point& c = mesh.vertices()[tri[2]];
  const double det = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
  const double l1 = ((p.x - a.x) * (c.y - a.y) - (c.x - a.x) * (p.y - a.y)) / det;
  const double l2 = ((b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y)) / det;
  return {1.0 - l1 - l2, l1, l2};
}

PointLocation locate_point(const TriangleMesh& mesh, Point p) {
  for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
    auto bary = barycentric(mesh, t, p);
    if (bary[0] >= -kBarycentricSlack && bary[1] >= -kBarycentricSlack &&
        bary[2] >= -kBarycentricSlack) {
      return {t, bary};
    }
  }
  std::ostringstream msg;
  msg << "point (" << p.x << ", " << p.y << ") lies outside the mesh";
  throw NotFound(msg.str());
}

// Mesh text format: "nv nt nb", then nv "x y" lines, nt "i j k" lines and nb
// "i j" lines. Lines starting with '#' and blank lines are skipped.
TriangleMesh read_mesh(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&](std::istringstream& fields, const char* what) {
    while (std::getline(in, line)) {
      ++line_no;
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      fields.clear();
      fields.str(line);
      return;
    }
    throw ParseError(std::string("unexpected end of input, expected ") + what, line_no + 1);
  };
  auto expect_end = [&](std::istringstream& fields) {
    std::string extra;
    if (fields >> extra) throw ParseError("unexpected trailing token '" + extra + "'", line_no);
  };

  std::istringstream fields;
  next_line(fields, "header");
  long long nv = -1, nt = -1, nb = -1;
  if (!(fields >> nv >> nt >> nb) || nv < 0 || nt < 0 || nb < 0) {
    throw ParseError("malformed header, expected 'nv nt nb'", line_no);
  }
  expect_end(fields);

  std::vector<Point> vertices(static_cast<std::size_t>(nv));
  for (auto& v : vertices) {
    next_line(fields, "vertex");
    if (!(fields >> v.x >> v.y)) throw ParseError("malformed vertex, expected 'x y'", line_no);
    expect_end(fields);
  }
  auto read_index = [&](std::istringstream& f) {
    long long i = -1;
    if (!(f >> i)) throw ParseError("malformed index", line_no);
    if (i < 0 || i >= nv) throw ParseError("vertex index " + std::to_string(i) + " out of range", line_no);
    return static_cast<std::size_t>(i);
  };
  std::vector<Triangle> triangles(static_cast<std::size_t>(nt));
  for (auto& t : triangles) {
    next_line(fields, "triangle");
    for (auto& v : t) v = read_index(fields);
    expect_end(fields);
    if (!(signed_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]) > 0.0)) {
      throw ParseError("triangle has zero or negative area", line_no);
    }
  }
  std::vector<Edge> boundary(static_cast<std::size_t>(nb));
  for (auto& e : boundary) {
    next_line(fields, "boundary edge");
    for (auto& v : e) v = read_index(fields);
    expect_end(fields);
  }
  try {
    return TriangleMesh(std::move(vertices), std::move(triangles), std::move(boundary));
  } catch (const InvalidArgument& err) {
    throw ParseError(err.what(), line_no);
  }
}

TriangleMesh read_mesh_string(const std::string& text) {
  std::istringstream in(text);
  return read_mesh(in);
}

void write_mesh(const TriangleMesh& mesh, std::ostream& out) {
  out << mesh.num_vertices() << ' ' << mesh.num_triangles() << ' ' << mesh.boundary_edges().size()
      << '\n';
  out << std::setprecision(17);
  for (const auto& v : mesh.vertices()) out << v.x << ' ' << v.y << '\n';
  for (const auto& t : mesh.triangles()) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  for (const auto& e : mesh.boundary_edges()) out << e[0] << ' ' << e[1] << '\n';
}

std::string write_mesh_string(const TriangleMesh& mesh) {
  std::ostringstream out;
  write_mesh(mesh, out);
  return out.str();
}

}  // namespace bigrid
