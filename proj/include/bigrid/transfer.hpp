#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "bigrid/fem.hpp"
#include "bigrid/linalg.hpp"

namespace bigrid {

enum class CrossMassPath {
  automatic,  ///< nested when the coarse mesh is an ancestor of the fine mesh, else general
  nested,     ///< coarse basis evaluated exactly on the ancestor triangle
  general,    ///< coarse basis evaluated through point location
};

/// True when the coarse mesh is the fine mesh or one of its refinement
/// ancestors. Decided from refinement provenance, never from coordinates.
bool meshes_nested(const FemSpace& coarse, const FemSpace& fine);

/// B_ij = ∫ φ_i ψ_j with φ_i the fine basis and ψ_j the coarse basis, shape
/// dim(fine) × dim(coarse). Integrated on fine triangles with the degree-4
/// rule. Throws NotFound if a fine quadrature point is outside the coarse mesh.
SparseMatrix build_cross_mass(const FemSpace& coarse, const FemSpace& fine,
                              CrossMassPath path = CrossMassPath::automatic);

/// L² prolongation from a coarse space W_H to a fine space V_h, defined by
/// (u_H − P u_H, φ_h) = 0 for all φ_h in V_h, i.e. M_h P u_H = B u_H.
class ProlongationOperator {
 public:
  ProlongationOperator(SpacePtr coarse, SpacePtr fine, CrossMassPath path = CrossMassPath::automatic);

  const SpacePtr& coarse() const noexcept { return coarse_; }
  const SpacePtr& fine() const noexcept { return fine_; }
  const SparseMatrix& cross_mass() const noexcept { return cross_mass_; }
  const SparseMatrix& fine_mass() const noexcept { return fine_mass_; }
  const SparseMatrix& coarse_mass() const noexcept { return coarse_mass_; }
  /// W_H ⊂ V_h: nested meshes and coarse order not above fine order.
  bool nested() const noexcept { return nested_; }

  FemFunction prolong(const FemFunction& u_coarse) const;
  /// Raw form; `guess` warm-starts the mass solve.
  Vector prolong(std::span<const double> u_coarse, std::span<const double> guess = {}) const;
  /// L² projection of a fine function onto W_H: M_H v = Bᵀ u.
  FemFunction restrict_l2(const FemFunction& u_fine) const;

  static constexpr double kSolveTolerance = 1e-12;

 private:
  SpacePtr coarse_;
  SpacePtr fine_;
  SparseMatrix cross_mass_;
  SparseMatrix fine_mass_;
  SparseMatrix coarse_mass_;
  bool nested_ = false;
};

/// u = mean + fluctuation with mean = P(u_coarse).
struct ScaleDecomposition {
  FemFunction mean;
  FemFunction fluctuation;
  FemFunction coarse;
};

ScaleDecomposition decompose(const ProlongationOperator& op, const FemFunction& u_fine,
                             const FemFunction& u_coarse);

/// Sampled estimates of the bounds α ‖u_H‖ ≤ ‖P u_H‖ ≤ β ‖u_H‖.
struct TransferDiagnostics {
  double alpha_hat = 0.0;  ///< min over samples of (P u_H, u_H) / (‖u_H‖ ‖P u_H‖)
  double beta_hat = 0.0;   ///< max over the same samples
  double dr = 0.0;         ///< dim(W_H) / dim(V_h)
  std::size_t coarse_dim = 0;
  std::size_t fine_dim = 0;
};

TransferDiagnostics estimate_alpha_beta(const ProlongationOperator& op, std::size_t n_samples, std::uint64_t seed);

/// Components (w_i, u) = w_iᵀ M u for each eigenpair.
Vector spectral_components(const FemFunction& u, const std::vector<EigenPair>& pairs, const SparseMatrix& mass);

/// CSV with header `mode_index,eigenvalue,component_u,component_z`.
void write_spectrum_csv(const std::vector<EigenPair>& pairs, std::span<const double> component_u,
                        std::span<const double> component_z, std::ostream& out);

}  // namespace bigrid
