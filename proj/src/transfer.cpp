#include "bigrid/transfer.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>

#include "bigrid/errors.hpp"

namespace bigrid {

bool meshes_nested(const FemSpace& coarse, const FemSpace& fine) {
  return fine.mesh().ancestor_map(coarse.mesh()).has_value();
}

SparseMatrix build_cross_mass(const FemSpace& coarse, const FemSpace& fine, CrossMassPath path) {
  std::optional<std::vector<std::size_t>> ancestors;
  if (path != CrossMassPath::general) ancestors = fine.mesh().ancestor_map(coarse.mesh());
  if (path == CrossMassPath::nested && !ancestors) {
    throw InvalidArgument("build_cross_mass: nested path requested for non-nested meshes");
  }

  const QuadratureRule& rule = quadrature_rule(4);
  const std::size_t nf = fine.dofs_per_element();
  const std::size_t nc = coarse.dofs_per_element();
  std::vector<double> fine_phi(rule.size() * nf);
  for (std::size_t q = 0; q < rule.size(); ++q) {
    evaluate_basis(fine.order(), rule.points[q], std::span<double>(fine_phi.data() + q * nf, nf));
  }

  std::vector<Triplet> triplets;
  triplets.reserve(fine.num_elements() * rule.size() * nf * nc);
  std::vector<double> coarse_psi(nc);
  for (std::size_t t = 0; t < fine.num_elements(); ++t) {
    const double area = fine.geometry(t).area;
    const auto fine_dofs = fine.element_dofs(t);
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const Point x = fine.map_to_physical(t, rule.points[q]);
      PointLocation loc;
      if (ancestors) {
        loc.triangle_index = (*ancestors)[t];
        loc.barycentric = barycentric(coarse.mesh(), loc.triangle_index, x);
      } else {
        loc = locate_point(coarse.mesh(), x);
      }
      evaluate_basis(coarse.order(), loc.barycentric, coarse_psi);
      const auto coarse_dofs = coarse.element_dofs(loc.triangle_index);
      const double w = area * rule.weights[q];
      for (std::size_t a = 0; a < nf; ++a) {
        const double wa = w * fine_phi[q * nf + a];
        for (std::size_t b = 0; b < nc; ++b) triplets.push_back({fine_dofs[a], coarse_dofs[b], wa * coarse_psi[b]});
      }
    }
  }
  return SparseMatrix::from_triplets(fine.dof_count(), coarse.dof_count(), std::move(triplets));
}

ProlongationOperator::ProlongationOperator(SpacePtr coarse, SpacePtr fine, CrossMassPath path)
    : coarse_(std::move(coarse)), fine_(std::move(fine)) {
  if (!coarse_ || !fine_) throw InvalidArgument("ProlongationOperator: null space");
  cross_mass_ = build_cross_mass(*coarse_, *fine_, path);
  fine_mass_ = assemble_mass(*fine_);
  coarse_mass_ = assemble_mass(*coarse_);
  nested_ = meshes_nested(*coarse_, *fine_) && coarse_->order() <= fine_->order();
}

Vector ProlongationOperator::prolong(std::span<const double> u_coarse, std::span<const double> guess) const {
  if (u_coarse.size() != coarse_->dof_count()) throw InvalidArgument("prolong: coarse vector has wrong size");
  const Vector rhs = cross_mass_ * u_coarse;
  SolverOptions opts;
  opts.tol = kSolveTolerance;
  return solve_spd(fine_mass_, rhs, opts, guess);
}

FemFunction ProlongationOperator::prolong(const FemFunction& u_coarse) const {
  if (u_coarse.space != coarse_) throw InvalidArgument("prolong: function is not on the coarse space");
  return FemFunction(fine_, prolong(std::span<const double>(u_coarse.coeffs)));
}

FemFunction ProlongationOperator::restrict_l2(const FemFunction& u_fine) const {
  if (u_fine.space != fine_) throw InvalidArgument("restrict_l2: function is not on the fine space");
  const Vector rhs = cross_mass_.multiply_transpose(u_fine.coeffs);
  SolverOptions opts;
  opts.tol = kSolveTolerance;
  return FemFunction(coarse_, solve_spd(coarse_mass_, rhs, opts));
}

ScaleDecomposition decompose(const ProlongationOperator& op, const FemFunction& u_fine, const FemFunction& u_coarse) {
  if (u_fine.space != op.fine()) throw InvalidArgument("decompose: fine function is not on the fine space");
  ScaleDecomposition d{op.prolong(u_coarse), FemFunction(op.fine()), u_coarse};
  for (std::size_t i = 0; i < u_fine.coeffs.size(); ++i) {
    d.fluctuation.coeffs[i] = u_fine.coeffs[i] - d.mean.coeffs[i];
  }
  return d;
}

TransferDiagnostics estimate_alpha_beta(const ProlongationOperator& op, std::size_t n_samples, std::uint64_t seed) {
  if (n_samples == 0) throw InvalidArgument("estimate_alpha_beta: need at least one sample");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  TransferDiagnostics diag;
  diag.coarse_dim = op.coarse()->dof_count();
  diag.fine_dim = op.fine()->dof_count();
  diag.dr = static_cast<double>(diag.coarse_dim) / static_cast<double>(diag.fine_dim);
  diag.alpha_hat = 1.0;
  diag.beta_hat = 0.0;
  Vector u(diag.coarse_dim);
  for (std::size_t s = 0; s < n_samples; ++s) {
    for (auto& v : u) v = dist(rng);
    const Vector p = op.prolong(u);
    const double coarse_norm = std::sqrt(dot(u, op.coarse_mass() * u));
    const double fine_norm = std::sqrt(dot(p, op.fine_mass() * p));
    if (fine_norm == 0.0 || coarse_norm == 0.0) {
      diag.alpha_hat = 0.0;
      continue;
    }
    const double r = dot(p, op.cross_mass() * u) / (coarse_norm * fine_norm);
    diag.alpha_hat = std::min(diag.alpha_hat, r);
    diag.beta_hat = std::max(diag.beta_hat, r);
  }
  diag.beta_hat = std::max(diag.beta_hat, diag.alpha_hat);
  return diag;
}

Vector spectral_components(const FemFunction& u, const std::vector<EigenPair>& pairs, const SparseMatrix& mass) {
  if (mass.rows() != u.coeffs.size()) throw InvalidArgument("spectral_components: dimension mismatch");
  const Vector Mu = mass * u.coeffs;
  Vector c(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].vector.size() != Mu.size()) throw InvalidArgument("spectral_components: dimension mismatch");
    c[i] = dot(pairs[i].vector, Mu);
  }
  return c;
}

void write_spectrum_csv(const std::vector<EigenPair>& pairs, std::span<const double> component_u,
                        std::span<const double> component_z, std::ostream& out) {
  if (component_u.size() != pairs.size() || component_z.size() != pairs.size()) {
    throw InvalidArgument("write_spectrum_csv: dimension mismatch");
  }
  out << "mode_index,eigenvalue,component_u,component_z\n" << std::setprecision(17);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    out << i << ',' << pairs[i].value << ',' << component_u[i] << ',' << component_z[i] << '\n';
  }
}

}  // namespace bigrid
