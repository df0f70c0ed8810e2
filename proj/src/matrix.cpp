#include "pwsync/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/core.h>

#include "pwsync/errors.hpp"

namespace pwsync {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ParameterError("Matrix: ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> d) {
  Matrix m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw ParameterError(fmt::format("{}: shape mismatch {}x{} vs {}x{}", op, a.rows(),
                                     a.cols(), b.rows(), b.cols()));
}

}  // namespace

Matrix operator+(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "operator+");
  Matrix r = a;
  for (std::size_t k = 0; k < r.data_.size(); ++k) r.data_[k] += b.data_[k];
  return r;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "operator-");
  Matrix r = a;
  for (std::size_t k = 0; k < r.data_.size(); ++k) r.data_[k] -= b.data_[k];
  return r;
}

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows())
    throw ParameterError(fmt::format("operator*: inner dimensions {} and {} differ", a.cols(),
                                     b.rows()));
  Matrix r(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      for (std::size_t j = 0; j < b.cols(); ++j) r(i, j) += aik * b(k, j);
    }
  return r;
}

Matrix operator*(double s, const Matrix& a) {
  Matrix r = a;
  for (double& v : r.data_) v *= s;
  return r;
}

Vector operator*(const Matrix& a, std::span<const double> x) {
  if (a.cols() != x.size())
    throw ParameterError(
        fmt::format("matrix-vector: {} columns vs vector of {}", a.cols(), x.size()));
  Vector y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) s += a(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

Matrix sym_part(const Matrix& a) {
  if (!a.square()) throw ParameterError("sym_part: matrix is not square");
  Matrix s(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) s(i, j) = 0.5 * (a(i, j) + a(j, i));
  return s;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) m = std::max(m, std::abs(a(i, j) - b(i, j)));
  return m;
}

double frobenius_norm(const Matrix& a) { return norm2(a.data()); }

double norm2(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

double bilinear(std::span<const double> x, const Matrix& a, std::span<const double> y) {
  if (a.rows() != x.size() || a.cols() != y.size())
    throw ParameterError("bilinear: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) row += a(i, j) * y[j];
    s += x[i] * row;
  }
  return s;
}

namespace {

double max_asymmetry(const Matrix& m) {
  double worst = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = i + 1; j < m.cols(); ++j)
      worst = std::max(worst, std::abs(m(i, j) - m(j, i)));
  return worst;
}

void require_symmetric(const Matrix& m) {
  if (!m.square())
    throw SymmetryError(fmt::format("matrix is {}x{}, not square", m.rows(), m.cols()), 0.0);
  const double asym = max_asymmetry(m);
  if (asym > SymMatrix::kSymmetryTolerance)
    throw SymmetryError(
        fmt::format("matrix is not symmetric: max |a_ij - a_ji| = {:.3e}", asym), asym);
}

}  // namespace

SymMatrix::SymMatrix(Matrix m) : m_(std::move(m)) { require_symmetric(m_); }

SymMatrix::SymMatrix(std::initializer_list<std::initializer_list<double>> rows)
    : SymMatrix(Matrix(rows)) {}

SymMatrix SymMatrix::from_sym_part(const Matrix& m) { return SymMatrix(sym_part(m)); }

Spectrum sym_eigen(const SymMatrix& sym) {
  const std::size_t n = sym.size();
  Matrix a = sym.matrix();
  Matrix v = Matrix::identity(n);

  const double scale = std::max(frobenius_norm(a), 1e-300);
  constexpr int kMaxSweeps = 100;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (std::sqrt(off) <= 1e-15 * scale) break;

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Rotation angle chosen so that the (p, q) entry vanishes; the
        // smaller root of t² + 2θt - 1 = 0 keeps |angle| <= π/4.
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });

  Spectrum out;
  out.values.resize(n);
  out.vectors = Matrix(n, n);
  for (std::size_t col = 0; col < n; ++col) {
    const std::size_t src = order[col];
    out.values[col] = a(src, src);
    // Sign convention: the largest-magnitude component is positive.
    std::size_t arg = 0;
    for (std::size_t k = 1; k < n; ++k)
      if (std::abs(v(k, src)) > std::abs(v(arg, src))) arg = k;
    const double sign = v(arg, src) < 0.0 ? -1.0 : 1.0;
    for (std::size_t k = 0; k < n; ++k) out.vectors(k, col) = sign * v(k, src);
  }
  return out;
}

Spectrum sym_eigen(const Matrix& a) { return sym_eigen(SymMatrix(a)); }

double spectral_norm(const Matrix& a) {
  if (!a.square()) throw ParameterError("spectral_norm: matrix is not square");
  if (a.rows() == 0) return 0.0;
  const Matrix ata = a.transpose() * a;
  // AᵀA is symmetric only up to rounding; symmetrize before the solver.
  const double top = sym_eigen(SymMatrix::from_sym_part(ata)).max();
  return std::sqrt(std::max(top, 0.0));
}

double lambda_min(const SymMatrix& a) { return sym_eigen(a).min(); }
double lambda_max(const SymMatrix& a) { return sym_eigen(a).max(); }
bool positive_definite(const SymMatrix& a) { return a.size() > 0 && lambda_min(a) > 0.0; }

}  // namespace pwsync
