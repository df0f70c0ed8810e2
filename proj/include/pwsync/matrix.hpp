#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace pwsync {

using Vector = std::vector<double>;

/// Dense row-major real matrix. Sizes in this library are small (n <= 50),
/// so everything is stored by value.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> d);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool square() const noexcept { return rows_ == cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }
  std::span<const double> data() const noexcept { return data_; }

  Matrix transpose() const;

  friend Matrix operator+(const Matrix& a, const Matrix& b);
  friend Matrix operator-(const Matrix& a, const Matrix& b);
  friend Matrix operator*(const Matrix& a, const Matrix& b);
  friend Matrix operator*(double s, const Matrix& a);
  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Vector operator*(const Matrix& a, std::span<const double> x);

/// (A + Aᵀ) / 2
Matrix sym_part(const Matrix& a);

/// max_ij |a_ij - b_ij|; dimensions must agree.
double max_abs_diff(const Matrix& a, const Matrix& b);

/// Frobenius norm.
double frobenius_norm(const Matrix& a);

/// Euclidean norm of a vector.
double norm2(std::span<const double> x);

/// xᵀ A y
double bilinear(std::span<const double> x, const Matrix& a, std::span<const double> y);

/// Square matrix whose symmetry (|a_ij - a_ji| <= 1e-12) was verified at
/// construction.
class SymMatrix {
 public:
  static constexpr double kSymmetryTolerance = 1e-12;

  /// Throws SymmetryError if `m` is not square and symmetric.
  explicit SymMatrix(Matrix m);
  SymMatrix(std::initializer_list<std::initializer_list<double>> rows);

  /// Symmetric part of an arbitrary square matrix.
  static SymMatrix from_sym_part(const Matrix& m);
  static SymMatrix identity(std::size_t n) { return SymMatrix(Matrix::identity(n)); }
  static SymMatrix diagonal(std::span<const double> d) { return SymMatrix(Matrix::diagonal(d)); }

  std::size_t size() const noexcept { return m_.rows(); }
  double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
  const Matrix& matrix() const noexcept { return m_; }
  operator const Matrix&() const noexcept { return m_; }

 private:
  Matrix m_;
};

/// Eigen-decomposition of a symmetric matrix: eigenvalues ascending, the
/// matching orthonormal eigenvectors stored as columns of `vectors`.
struct Spectrum {
  Vector values;
  Matrix vectors;

  double min() const { return values.front(); }
  double max() const { return values.back(); }
};

/// Cyclic Jacobi eigensolver. Sweeps the upper triangle row by row in a fixed
/// order, so results are reproducible on a given platform.
Spectrum sym_eigen(const SymMatrix& a);

/// Checks symmetry first; throws SymmetryError carrying the largest
/// asymmetry found.
Spectrum sym_eigen(const Matrix& a);

/// Induced 2-norm: sqrt(λ_max(AᵀA)).
double spectral_norm(const Matrix& a);

double lambda_min(const SymMatrix& a);
double lambda_max(const SymMatrix& a);
bool positive_definite(const SymMatrix& a);

}  // namespace pwsync
