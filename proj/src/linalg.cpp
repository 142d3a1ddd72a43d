#include "bigrid/linalg.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>

#include "bigrid/errors.hpp"

namespace bigrid {

SparseMatrix::SparseMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_ptr,
                           std::vector<std::size_t> col_idx, std::vector<double> values)
    : rows_(rows),
      cols_(cols),
      row_ptr_(std::move(row_ptr)),
      col_idx_(std::move(col_idx)),
      values_(std::move(values)) {
  if (row_ptr_.size() != rows_ + 1 || row_ptr_.front() != 0 || row_ptr_.back() != col_idx_.size() ||
      col_idx_.size() != values_.size()) {
    throw InvalidArgument("SparseMatrix: inconsistent CSR arrays");
  }
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      if (col_idx_[k] >= cols_) throw InvalidArgument("SparseMatrix: column index out of range");
      if (k > row_ptr_[i] && col_idx_[k] <= col_idx_[k - 1]) {
        throw InvalidArgument("SparseMatrix: column indices must be sorted and unique");
      }
    }
  }
}

SparseMatrix SparseMatrix::from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> triplets) {
  for (const auto& t : triplets) {
    if (t.row >= rows || t.col >= cols) throw InvalidArgument("from_triplets: index out of range");
  }
  std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  std::vector<std::size_t> row_ptr(rows + 1, 0);
  std::vector<std::size_t> col_idx;
  std::vector<double> values;
  col_idx.reserve(triplets.size());
  values.reserve(triplets.size());
  for (std::size_t k = 0; k < triplets.size(); ++k) {
    const auto& t = triplets[k];
    if (k > 0 && t.row == triplets[k - 1].row && t.col == triplets[k - 1].col) {
      values.back() += t.value;
      continue;
    }
    col_idx.push_back(t.col);
    values.push_back(t.value);
    ++row_ptr[t.row + 1];
  }
  std::partial_sum(row_ptr.begin(), row_ptr.end(), row_ptr.begin());
  return SparseMatrix(rows, cols, std::move(row_ptr), std::move(col_idx), std::move(values));
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
  std::vector<std::size_t> row_ptr(n + 1);
  std::vector<std::size_t> col_idx(n);
  std::iota(row_ptr.begin(), row_ptr.end(), std::size_t{0});
  std::iota(col_idx.begin(), col_idx.end(), std::size_t{0});
  return SparseMatrix(n, n, std::move(row_ptr), std::move(col_idx), std::vector<double>(n, 1.0));
}

double SparseMatrix::at(std::size_t i, std::size_t j) const {
  if (i >= rows_ || j >= cols_) throw InvalidArgument("SparseMatrix::at: index out of range");
  const auto first = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i]);
  const auto last = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[i + 1]);
  const auto it = std::lower_bound(first, last, j);
  return (it != last && *it == j) ? values_[static_cast<std::size_t>(it - col_idx_.begin())] : 0.0;
}

std::size_t SparseMatrix::index_of(std::size_t i, std::size_t j) const {
  const auto first = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_.at(i));
  const auto last = col_idx_.begin() + static_cast<std::ptrdiff_t>(row_ptr_.at(i + 1));
  const auto it = std::lower_bound(first, last, j);
  if (it == last || *it != j) throw InvalidArgument("SparseMatrix::index_of: entry not in pattern");
  return static_cast<std::size_t>(it - col_idx_.begin());
}

void SparseMatrix::multiply(std::span<const double> x, std::span<double> y) const {
  if (x.size() != cols_ || y.size() != rows_) throw InvalidArgument("spmv: dimension mismatch");
  for (std::size_t i = 0; i < rows_; ++i) {
    double sum = 0.0;
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) sum += values_[k] * x[col_idx_[k]];
    y[i] = sum;
  }
}

Vector SparseMatrix::operator*(std::span<const double> x) const {
  Vector y(rows_);
  multiply(x, y);
  return y;
}

Vector SparseMatrix::multiply_transpose(std::span<const double> x) const {
  if (x.size() != rows_) throw InvalidArgument("spmv transpose: dimension mismatch");
  Vector y(cols_, 0.0);
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) y[col_idx_[k]] += values_[k] * x[i];
  }
  return y;
}

Vector SparseMatrix::diagonal() const {
  Vector d(std::min(rows_, cols_), 0.0);
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = at(i, i);
  return d;
}

SparseMatrix SparseMatrix::transpose() const {
  std::vector<std::size_t> row_ptr(cols_ + 1, 0);
  for (std::size_t c : col_idx_) ++row_ptr[c + 1];
  std::partial_sum(row_ptr.begin(), row_ptr.end(), row_ptr.begin());
  std::vector<std::size_t> next(row_ptr.begin(), row_ptr.end() - 1);
  std::vector<std::size_t> col_idx(nnz());
  std::vector<double> values(nnz());
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      const std::size_t pos = next[col_idx_[k]]++;
      col_idx[pos] = i;
      values[pos] = values_[k];
    }
  }
  return SparseMatrix(cols_, rows_, std::move(row_ptr), std::move(col_idx), std::move(values));
}

bool SparseMatrix::same_pattern(const SparseMatrix& other) const noexcept {
  return rows_ == other.rows_ && cols_ == other.cols_ && row_ptr_ == other.row_ptr_ &&
         col_idx_ == other.col_idx_;
}

SparseMatrix SparseMatrix::linear_combination(double a, const SparseMatrix& A, double b, const SparseMatrix& B) {
  if (!A.same_pattern(B)) throw InvalidArgument("linear_combination: patterns differ");
  SparseMatrix C = A;
  for (std::size_t k = 0; k < C.values_.size(); ++k) C.values_[k] = a * A.values_[k] + b * B.values_[k];
  return C;
}

void SparseMatrix::write_matrix_market(std::ostream& out) const {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << rows_ << ' ' << cols_ << ' ' << nnz() << '\n';
  out << std::setprecision(17);
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      out << i + 1 << ' ' << col_idx_[k] + 1 << ' ' << values_[k] << '\n';
    }
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidArgument("dot: dimension mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void axpy(double a, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw InvalidArgument("axpy: dimension mismatch");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

namespace {

void check_square_system(const SparseMatrix& A, std::span<const double> b, std::span<const double> guess,
                         const char* who) {
  if (A.rows() != A.cols()) throw InvalidArgument(std::string(who) + ": matrix is not square");
  if (b.size() != A.rows()) throw InvalidArgument(std::string(who) + ": dimension mismatch");
  if (!guess.empty() && guess.size() != A.rows()) {
    throw InvalidArgument(std::string(who) + ": initial guess has wrong size");
  }
}

Vector inverse_diagonal(const SparseMatrix& A) {
  Vector d = A.diagonal();
  for (auto& v : d) v = (v != 0.0 && std::isfinite(v)) ? 1.0 / v : 1.0;
  return d;
}

}  // namespace

Vector solve_spd(const SparseMatrix& A, std::span<const double> b, const SolverOptions& opts,
                 std::span<const double> guess, SolveStats* stats) {
  check_square_system(A, b, guess, "solve_spd");
  const std::size_t n = A.rows();
  const std::size_t max_iter = opts.max_iter > 0 ? opts.max_iter : 10 * n;
  const double bnorm = norm2(b);
  if (!std::isfinite(bnorm)) throw SolverError("solve_spd: right-hand side is not finite", bnorm, 0);
  Vector x = guess.empty() ? Vector(n, 0.0) : Vector(guess.begin(), guess.end());
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    if (stats) *stats = {0, 0.0};
    return x;
  }
  const Vector dinv = inverse_diagonal(A);
  Vector r(n), z(n), p(n), q(n);
  A.multiply(x, r);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - r[i];
  double rnorm = norm2(r);
  const double target = opts.tol * bnorm;
  std::size_t it = 0;
  if (rnorm > target) {
    for (std::size_t i = 0; i < n; ++i) z[i] = dinv[i] * r[i];
    p = z;
    double rz = dot(r, z);
    for (it = 1; it <= max_iter; ++it) {
      A.multiply(p, q);
      const double pq = dot(p, q);
      if (!(pq > 0.0)) throw SolverError("solve_spd: matrix is not positive definite", rnorm / bnorm, it);
      const double alpha = rz / pq;
      axpy(alpha, p, x);
      axpy(-alpha, q, r);
      rnorm = norm2(r);
      if (!std::isfinite(rnorm)) throw SolverError("solve_spd: breakdown", rnorm, it);
      if (rnorm <= target) break;
      for (std::size_t i = 0; i < n; ++i) z[i] = dinv[i] * r[i];
      const double rz_new = dot(r, z);
      const double beta = rz_new / rz;
      rz = rz_new;
      for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    if (rnorm > target) throw SolverError("solve_spd: no convergence", rnorm / bnorm, max_iter);
  }
  if (stats) *stats = {it, rnorm / bnorm};
  return x;
}

Vector solve_general(const SparseMatrix& A, std::span<const double> b, const SolverOptions& opts,
                     std::span<const double> guess, SolveStats* stats) {
  check_square_system(A, b, guess, "solve_general");
  const std::size_t n = A.rows();
  const std::size_t max_iter = opts.max_iter > 0 ? opts.max_iter : 10 * n;
  const std::size_t restart = std::max<std::size_t>(1, std::min(opts.restart, n));
  const double bnorm = norm2(b);
  if (!std::isfinite(bnorm)) throw SolverError("solve_general: right-hand side is not finite", bnorm, 0);
  Vector x = guess.empty() ? Vector(n, 0.0) : Vector(guess.begin(), guess.end());
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    if (stats) *stats = {0, 0.0};
    return x;
  }
  const Vector dinv = inverse_diagonal(A);
  const double target = opts.tol * bnorm;

  std::vector<Vector> V(restart + 1, Vector(n));
  std::vector<Vector> H(restart + 1, Vector(restart, 0.0));
  Vector cs(restart), sn(restart), g(restart + 1), w(n), zv(n);
  std::size_t total = 0;
  double rnorm = 0.0;

  while (true) {
    A.multiply(x, w);
    for (std::size_t i = 0; i < n; ++i) V[0][i] = b[i] - w[i];
    rnorm = norm2(V[0]);
    if (!std::isfinite(rnorm)) throw SolverError("solve_general: breakdown", rnorm / bnorm, total);
    if (rnorm <= target) break;
    if (total >= max_iter) throw SolverError("solve_general: no convergence", rnorm / bnorm, total);
    for (auto& v : V[0]) v /= rnorm;
    std::fill(g.begin(), g.end(), 0.0);
    g[0] = rnorm;

    std::size_t j = 0;
    for (; j < restart && total < max_iter; ++j, ++total) {
      for (std::size_t i = 0; i < n; ++i) zv[i] = dinv[i] * V[j][i];
      A.multiply(zv, w);
      for (std::size_t i = 0; i <= j; ++i) {  // modified Gram-Schmidt
        H[i][j] = dot(w, V[i]);
        axpy(-H[i][j], V[i], w);
      }
      H[j + 1][j] = norm2(w);
      if (H[j + 1][j] > 0.0) {
        for (std::size_t i = 0; i < n; ++i) V[j + 1][i] = w[i] / H[j + 1][j];
      }
      for (std::size_t i = 0; i < j; ++i) {
        const double tmp = cs[i] * H[i][j] + sn[i] * H[i + 1][j];
        H[i + 1][j] = -sn[i] * H[i][j] + cs[i] * H[i + 1][j];
        H[i][j] = tmp;
      }
      const double denom = std::hypot(H[j][j], H[j + 1][j]);
      if (denom == 0.0) {
        ++j;
        ++total;
        break;
      }
      cs[j] = H[j][j] / denom;
      sn[j] = H[j + 1][j] / denom;
      H[j][j] = denom;
      H[j + 1][j] = 0.0;
      g[j + 1] = -sn[j] * g[j];
      g[j] = cs[j] * g[j];
      if (std::abs(g[j + 1]) <= target) {
        ++j;
        ++total;
        break;
      }
    }
    // Back substitution on the j×j triangular system, skipping singular pivots.
    Vector y(j, 0.0);
    for (std::size_t ii = j; ii-- > 0;) {
      double s = g[ii];
      for (std::size_t k = ii + 1; k < j; ++k) s -= H[ii][k] * y[k];
      y[ii] = H[ii][ii] != 0.0 ? s / H[ii][ii] : 0.0;
    }
    std::fill(zv.begin(), zv.end(), 0.0);
    for (std::size_t k = 0; k < j; ++k) axpy(y[k], V[k], zv);
    for (std::size_t i = 0; i < n; ++i) x[i] += dinv[i] * zv[i];
  }
  if (stats) *stats = {total, rnorm / bnorm};
  return x;
}

namespace {

Eigen::MatrixXd to_dense(const SparseMatrix& A) {
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(A.rows()), static_cast<Eigen::Index>(A.cols()));
  for (std::size_t i = 0; i < A.rows(); ++i) {
    for (std::size_t k = A.row_ptr()[i]; k < A.row_ptr()[i + 1]; ++k) {
      D(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(A.col_idx()[k])) = A.values()[k];
    }
  }
  return D;
}

// Deterministic sign: the entry of largest magnitude is positive.
void fix_sign(Vector& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (std::abs(v[i]) > std::abs(v[best]) + 1e-12) best = i;
  }
  if (!v.empty() && v[best] < 0.0) {
    for (auto& x : v) x = -x;
  }
}

void check_pencil(const SparseMatrix& A, const SparseMatrix& M, std::size_t m) {
  if (A.rows() != A.cols() || M.rows() != M.cols() || A.rows() != M.rows()) {
    throw InvalidArgument("generalized_eigs: matrices must be square and of equal size");
  }
  if (m == 0 || m > A.rows()) throw InvalidArgument("generalized_eigs: requested count out of range");
}

}  // namespace

Vector solve_direct(const SparseMatrix& A, std::span<const double> b) {
  check_square_system(A, b, {}, "solve_direct");
  const auto n = static_cast<Eigen::Index>(A.rows());
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(A.nnz());
  for (std::size_t i = 0; i < A.rows(); ++i) {
    for (std::size_t k = A.row_ptr()[i]; k < A.row_ptr()[i + 1]; ++k) {
      entries.emplace_back(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(A.col_idx()[k]), A.values()[k]);
    }
  }
  Eigen::SparseMatrix<double> S(n, n);
  S.setFromTriplets(entries.begin(), entries.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(S);
  if (lu.info() != Eigen::Success) throw SolverError("solve_direct: factorization failed", 0.0, 0);
  const Eigen::VectorXd x = lu.solve(Eigen::Map<const Eigen::VectorXd>(b.data(), n));
  if (lu.info() != Eigen::Success) throw SolverError("solve_direct: solve failed", 0.0, 0);
  return Vector(x.data(), x.data() + n);
}

std::vector<EigenPair> generalized_eigs_dense(const SparseMatrix& A, const SparseMatrix& M, std::size_t m) {
  check_pencil(A, M, m);
  const Eigen::MatrixXd Ad = to_dense(A);
  const Eigen::MatrixXd Md = to_dense(M);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(Ad, Md);
  if (solver.info() != Eigen::Success) throw SolverError("generalized_eigs_dense: failed", 0.0, 0);
  std::vector<EigenPair> pairs(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto col = solver.eigenvectors().col(static_cast<Eigen::Index>(i));
    pairs[i].value = solver.eigenvalues()(static_cast<Eigen::Index>(i));
    pairs[i].vector.assign(col.data(), col.data() + col.size());
    fix_sign(pairs[i].vector);
  }
  return pairs;
}

// Inverse subspace iteration with Rayleigh-Ritz projection. Each sweep solves
// A Y = M X column by column with CG, so A must be positive definite here.
std::vector<EigenPair> generalized_eigs_smallest(const SparseMatrix& A, const SparseMatrix& M,
                                                 std::size_t m, double tol) {
  check_pencil(A, M, m);
  const std::size_t n = A.rows();
  if (n < kDenseEigenLimit) return generalized_eigs_dense(A, M, m);

  const std::size_t p = std::min(n, std::max(2 * m, m + 8));
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<Vector> X(p, Vector(n));
  for (auto& x : X) {
    for (auto& v : x) v = dist(rng);
  }
  std::vector<Vector> Y(p, Vector(n, 0.0));
  SolverOptions inner;
  inner.tol = std::min(1e-12, 1e-2 * tol);
  const std::size_t max_sweeps = 500;
  Eigen::MatrixXd Ar(p, p), Mr(p, p);
  std::vector<EigenPair> pairs(m);
  Vector ritz(p, 0.0);

  for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
    for (std::size_t j = 0; j < p; ++j) {
      const Vector rhs = M * X[j];
      // X[j] approximates an eigenvector, so X[j]/λ is a good starting point.
      Vector guess = X[j];
      for (auto& v : guess) v = ritz[j] > 0.0 ? v / ritz[j] : 0.0;
      Y[j] = solve_spd(A, rhs, inner, guess);
      const double s = std::sqrt(dot(Y[j], M * Y[j]));
      for (auto& v : Y[j]) v /= s;
    }
    std::vector<Vector> AY(p), MY(p);
    for (std::size_t j = 0; j < p; ++j) {
      AY[j] = A * Y[j];
      MY[j] = M * Y[j];
    }
    for (std::size_t i = 0; i < p; ++i) {
      for (std::size_t j = i; j < p; ++j) {
        Ar(i, j) = Ar(j, i) = 0.5 * (dot(Y[i], AY[j]) + dot(Y[j], AY[i]));
        Mr(i, j) = Mr(j, i) = 0.5 * (dot(Y[i], MY[j]) + dot(Y[j], MY[i]));
      }
    }
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> rr(Ar, Mr);
    if (rr.info() != Eigen::Success) throw SolverError("generalized_eigs: Rayleigh-Ritz failed", 0.0, sweep);
    const Eigen::MatrixXd& Q = rr.eigenvectors();
    for (std::size_t j = 0; j < p; ++j) ritz[j] = rr.eigenvalues()(static_cast<Eigen::Index>(j));
    for (std::size_t j = 0; j < p; ++j) {
      std::fill(X[j].begin(), X[j].end(), 0.0);
      for (std::size_t k = 0; k < p; ++k) axpy(Q(k, j), Y[k], X[j]);
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double lambda = rr.eigenvalues()(i);
      const Vector Ax = A * X[i];
      const Vector Mx = M * X[i];
      Vector res = Ax;
      axpy(-lambda, Mx, res);
      worst = std::max(worst, norm2(res) / norm2(Ax));
      pairs[i].value = lambda;
    }
    if (worst <= tol) {
      for (std::size_t i = 0; i < m; ++i) {
        pairs[i].vector = X[i];
        fix_sign(pairs[i].vector);
      }
      return pairs;
    }
    if (sweep + 1 == max_sweeps) throw SolverError("generalized_eigs: no convergence", worst, max_sweeps);
  }
  return pairs;
}

}  // namespace bigrid
