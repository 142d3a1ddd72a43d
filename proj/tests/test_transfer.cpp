#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>
#include <sstream>

#include "bigrid/errors.hpp"
#include "bigrid/transfer.hpp"

using namespace bigrid;

namespace {

using MeshPtr = std::shared_ptr<const TriangleMesh>;

MeshPtr square(std::size_t n) { return std::make_shared<const TriangleMesh>(generate_unit_square_mesh(n)); }
MeshPtr refined(const MeshPtr& m) { return std::make_shared<const TriangleMesh>(refine_uniform(m)); }

Vector random_vector(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1, 1);
  Vector v(n);
  for (auto& x : v) x = U(rng);
  return v;
}

// Coarse P1 function evaluated pointwise through point location.
double eval_p1(const TriangleMesh& mesh, std::span<const double> c, Point p) {
  const auto loc = locate_point(mesh, p);
  const auto& t = mesh.triangles()[loc.triangle_index];
  return loc.barycentric[0] * c[t[0]] + loc.barycentric[1] * c[t[1]] + loc.barycentric[2] * c[t[2]];
}

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("nesting is decided by provenance") {
  const MeshPtr c = square(2);
  const MeshPtr f = refined(c);
  CHECK(meshes_nested(*build_space(c, 1), *build_space(f, 1)));
  CHECK(meshes_nested(*build_space(c, 1), *build_space(c, 2)));
  CHECK_FALSE(meshes_nested(*build_space(f, 1), *build_space(c, 1)));
  // same coordinates as f, but generated independently
  CHECK_FALSE(meshes_nested(*build_space(c, 1), *build_space(square(4), 1)));
}

TEST_CASE("cross mass: entries sum to the area and both paths agree") {
  const MeshPtr c = square(2);
  const MeshPtr f = refined(c);
  for (int co : {1, 2}) {
    for (int fo : {1, 2}) {
      const auto cs = build_space(c, co);
      const auto fs = build_space(f, fo);
      const SparseMatrix Bn = build_cross_mass(*cs, *fs, CrossMassPath::nested);
      const SparseMatrix Bg = build_cross_mass(*cs, *fs, CrossMassPath::general);
      double sum = 0.0;
      for (double v : Bn.values()) sum += v;
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-13));
      const Vector x = random_vector(cs->dof_count(), 5);
      CHECK(max_abs_diff(Bn * x, Bg * x) < 1e-13);
    }
  }
  CHECK_THROWS(build_cross_mass(*build_space(square(4), 1), *build_space(c, 1), CrossMassPath::nested));
}

TEST_CASE("nested prolongation reproduces the coarse function") {
  const MeshPtr c = square(3);
  const MeshPtr f = refined(c);
  const auto cs = build_space(c, 1);
  const auto fs = build_space(f, 2);
  const ProlongationOperator op(cs, fs);
  CHECK(op.nested());
  const Vector uc = random_vector(cs->dof_count(), 7);
  const Vector pu = op.prolong(uc);
  Vector expected(fs->dof_count());
  for (std::size_t i = 0; i < expected.size(); ++i) expected[i] = eval_p1(*c, uc, fs->dof_coordinates()[i]);
  CHECK(max_abs_diff(pu, expected) < 1e-9);

  const FemFunction back = op.restrict_l2(FemFunction(fs, pu));
  CHECK(max_abs_diff(back.coeffs, uc) < 1e-9);
}

TEST_CASE("prolongation between unrelated meshes is an L2 projection") {
  const auto cs = build_space(square(3), 1);
  const auto fs = build_space(square(5), 1);
  const ProlongationOperator op(cs, fs);
  CHECK_FALSE(op.nested());
  const Vector one = op.prolong(Vector(cs->dof_count(), 1.0));
  for (double v : one) CHECK(v == doctest::Approx(1.0).epsilon(1e-9));

  const FemFunction uc(cs, random_vector(cs->dof_count(), 11));
  const FemFunction pu = op.prolong(uc);
  CHECK(norms(pu).l2 <= norms(uc).l2 * (1.0 + 1e-10));
  // Galerkin orthogonality: M_h P u = B u
  const Vector lhs = op.fine_mass() * pu.coeffs;
  const Vector rhs = op.cross_mass() * uc.coeffs;
  CHECK(max_abs_diff(lhs, rhs) < 1e-11);
}

TEST_CASE("decomposition and transfer diagnostics") {
  const MeshPtr c = square(4);
  const auto cs = build_space(c, 1);
  const auto fs = build_space(refined(c), 1);
  const ProlongationOperator op(cs, fs);
  const ScalarField g = [](Point p) { return std::sin(2 * p.x) * p.y; };
  const FemFunction u = interpolate(fs, g);
  const ScaleDecomposition d = decompose(op, u, interpolate(cs, g));
  Vector sum = d.mean.coeffs;
  axpy(1.0, d.fluctuation.coeffs, sum);
  CHECK(max_abs_diff(sum, u.coeffs) < 1e-14);
  CHECK(norms(d.fluctuation).l2 < 0.05 * norms(u).l2);

  const auto diag = estimate_alpha_beta(op, 10, 42);
  CHECK(diag.coarse_dim == 25);
  CHECK(diag.fine_dim == 81);
  CHECK(diag.dr == doctest::Approx(25.0 / 81.0));
  CHECK(diag.alpha_hat == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(diag.beta_hat == doctest::Approx(1.0).epsilon(1e-9));
  const auto again = estimate_alpha_beta(op, 10, 42);
  CHECK(again.alpha_hat == diag.alpha_hat);
}

TEST_CASE("spectral components and CSV") {
  const auto s = build_space(square(4), 1);
  const SparseMatrix M = assemble_mass(*s);
  const auto pairs = generalized_eigs_smallest(assemble_stiffness(*s), M, 4);
  REQUIRE(pairs.size() == 4);
  CHECK(std::abs(pairs[0].value) < 1e-10);
  // the first eigenvector is constant; its component of 1 is ±|Ω|^{1/2}
  const Vector cu = spectral_components(FemFunction(s, Vector(s->dof_count(), 1.0)), pairs, M);
  CHECK(std::abs(cu[0]) == doctest::Approx(1.0));
  for (std::size_t i = 1; i < 4; ++i) CHECK(std::abs(cu[i]) < 1e-10);
  std::ostringstream out;
  write_spectrum_csv(pairs, cu, cu, out);
  CHECK(out.str().rfind("mode_index,eigenvalue,component_u,component_z\n", 0) == 0);
}

TEST_CASE("transfer argument checks") {
  const auto s = build_space(square(2), 1);
  CHECK_THROWS_AS(ProlongationOperator(nullptr, s), InvalidArgument);
  const ProlongationOperator op(s, s);
  CHECK_THROWS(op.prolong(Vector(3, 0.0)));
}
