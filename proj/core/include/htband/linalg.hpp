#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace htband {

/// Square row-major matrix. Symmetric use is by convention; nothing here
/// enforces it.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  explicit DenseMatrix(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}

  static DenseMatrix identity(std::size_t n);
  static DenseMatrix diagonal(std::span<const double> d);

  std::size_t size() const { return n_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
  std::span<double> row(std::size_t i) { return {data_.data() + i * n_, n_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * n_, n_}; }
  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  /// Sets (i,j) and (j,i).
  void set_symmetric(std::size_t i, std::size_t j, double v) {
    (*this)(i, j) = v;
    (*this)(j, i) = v;
  }

  bool is_symmetric() const;
  std::vector<double> multiply(std::span<const double> x) const;
  DenseMatrix multiply(const DenseMatrix& other) const;
  DenseMatrix principal_submatrix(std::span<const std::size_t> indices) const;
  double trace() const;
  double frobenius_norm() const;
  /// max_i sum_j |a_ij|.
  double max_abs_row_sum() const;

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
/// y += a x
void axpy(double a, std::span<const double> x, std::span<double> y);

/// Eigen-decomposition of a symmetric tridiagonal matrix by implicit-shift
/// QL. On return `diag` holds eigenvalues (unsorted); if `z` is non-null it
/// must hold an n x n matrix whose columns are rotated alongside (pass the
/// identity to obtain eigenvectors of the tridiagonal matrix).
/// `off` holds the sub-diagonal in off[1..n-1]; it is destroyed.
/// Throws NumericError once the total sweep budget of 30 n is exhausted.
void tridiagonal_ql(std::vector<double>& diag, std::vector<double>& off, DenseMatrix* z);

/// As tridiagonal_ql but only tracks the given rows of the rotation matrix
/// (each row starts as the corresponding identity row). Used to obtain the
/// last components of tridiagonal eigenvectors in O(n^2).
void tridiagonal_ql_rows(std::vector<double>& diag, std::vector<double>& off,
                         std::vector<std::vector<double>>& rows);

/// Householder reduction of a symmetric matrix to tridiagonal form. On
/// return `diag` and `off` (off[0] = 0) describe the tridiagonal matrix and,
/// when `want_vectors`, `a` is overwritten by the orthogonal transform;
/// otherwise `a` is left in an unspecified state.
void householder_tridiagonalize(DenseMatrix& a, std::vector<double>& diag,
                                std::vector<double>& off, bool want_vectors);

struct SymmetricEigen {
  std::vector<double> values;  ///< descending
  DenseMatrix vectors;         ///< column k belongs to values[k]; empty if not requested
};

/// Full symmetric eigen-decomposition (Householder + QL), sorted descending.
SymmetricEigen symmetric_eigen(DenseMatrix a, bool want_vectors);

/// Largest |eigenvalue| of a small symmetric matrix.
double spectral_radius(const DenseMatrix& a);

}  // namespace htband
