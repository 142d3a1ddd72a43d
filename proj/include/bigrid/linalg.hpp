#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace bigrid {

using Vector = std::vector<double>;

struct Triplet {
  std::size_t row;
  std::size_t col;
  double value;
};

/// Compressed sparse row matrix. Column indices are sorted and unique within
/// each row. The pattern is fixed after construction; values may be updated
/// in place through `values()`, which is how assembly reuses a pattern.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_ptr,
               std::vector<std::size_t> col_idx, std::vector<double> values);

  /// Duplicate entries are summed.
  static SparseMatrix from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> triplets);
  static SparseMatrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t nnz() const noexcept { return values_.size(); }

  const std::vector<std::size_t>& row_ptr() const noexcept { return row_ptr_; }
  const std::vector<std::size_t>& col_idx() const noexcept { return col_idx_; }
  const std::vector<double>& values() const noexcept { return values_; }
  std::vector<double>& values() noexcept { return values_; }

  /// Entry (i, j), zero when not stored.
  double at(std::size_t i, std::size_t j) const;
  /// Position of (i, j) in the value array. Throws if not in the pattern.
  std::size_t index_of(std::size_t i, std::size_t j) const;

  void multiply(std::span<const double> x, std::span<double> y) const;
  Vector operator*(std::span<const double> x) const;
  /// y = Aᵀ x.
  Vector multiply_transpose(std::span<const double> x) const;

  Vector diagonal() const;
  SparseMatrix transpose() const;
  bool same_pattern(const SparseMatrix& other) const noexcept;

  /// a·A + b·B for matrices sharing a pattern.
  static SparseMatrix linear_combination(double a, const SparseMatrix& A, double b, const SparseMatrix& B);

  /// MatrixMarket coordinate format, general real.
  void write_matrix_market(std::ostream& out) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_ptr_{0};
  std::vector<std::size_t> col_idx_;
  std::vector<double> values_;
};

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
/// y += a·x
void axpy(double a, std::span<const double> x, std::span<double> y);

struct SolverOptions {
  double tol = 1e-10;        ///< relative residual ‖Ax − b‖ ≤ tol·‖b‖
  std::size_t max_iter = 0;  ///< 0 means 10·n
  std::size_t restart = 60;  ///< GMRES only
};

struct SolveStats {
  std::size_t iterations = 0;
  double relative_residual = 0.0;
};

/// Jacobi-preconditioned conjugate gradients. `guess` seeds the iteration when
/// non-empty. Throws SolverError on non-convergence.
Vector solve_spd(const SparseMatrix& A, std::span<const double> b, const SolverOptions& opts = {},
                 std::span<const double> guess = {}, SolveStats* stats = nullptr);

/// Restarted GMRES with right Jacobi preconditioning, for symmetric indefinite
/// or mildly nonsymmetric systems.
Vector solve_general(const SparseMatrix& A, std::span<const double> b, const SolverOptions& opts = {},
                     std::span<const double> guess = {}, SolveStats* stats = nullptr);

/// Sparse LU factorization and solve, for systems the iterative solvers
/// handle poorly. Throws SolverError on a singular matrix.
Vector solve_direct(const SparseMatrix& A, std::span<const double> b);

struct EigenPair {
  double value = 0.0;
  Vector vector;  ///< M-normalized
};

/// Systems below this size use a dense generalized solver.
inline constexpr std::size_t kDenseEigenLimit = 4000;

/// The m smallest eigenpairs of A w = λ M w, ascending and M-orthonormal.
/// A is symmetric positive definite (or semi-definite for the dense path), M SPD.
std::vector<EigenPair> generalized_eigs_smallest(const SparseMatrix& A, const SparseMatrix& M,
                                                 std::size_t m, double tol = 1e-10);

/// Dense path, exposed for cross-checks.
std::vector<EigenPair> generalized_eigs_dense(const SparseMatrix& A, const SparseMatrix& M, std::size_t m);

}  // namespace bigrid
