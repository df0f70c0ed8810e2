#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "pwsync/graph.hpp"
#include "pwsync/matrix.hpp"
#include "pwsync/rng.hpp"

namespace testing {

using pwsync::Matrix;
using pwsync::Vector;

inline Matrix random_matrix(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  pwsync::Rng rng(seed);
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m(i, j) = rng.uniform(-scale, scale);
  return m;
}

inline Matrix random_symmetric(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  return pwsync::sym_part(random_matrix(n, seed, scale));
}

/// B Bᵀ + n·I for random B: symmetric positive definite.
inline Matrix random_spd(std::size_t n, std::uint64_t seed) {
  const Matrix b = random_matrix(n, seed);
  return b * b.transpose() + static_cast<double>(n) * Matrix::identity(n);
}

inline Vector random_vector(std::size_t n, pwsync::Rng& rng, double lo = -1.0, double hi = 1.0) {
  Vector v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

/// Orthogonal matrix from Gram-Schmidt on a random matrix.
inline Matrix random_orthogonal(std::size_t n, std::uint64_t seed) {
  Matrix q = random_matrix(n, seed);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < j; ++k) {
      double dot = 0.0;
      for (std::size_t i = 0; i < n; ++i) dot += q(i, j) * q(i, k);
      for (std::size_t i = 0; i < n; ++i) q(i, j) -= dot * q(i, k);
    }
    double norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) norm += q(i, j) * q(i, j);
    norm = std::sqrt(norm);
    for (std::size_t i = 0; i < n; ++i) q(i, j) /= norm;
  }
  return q;
}

/// Exact structural checks; returns an empty string when all hold.
inline std::string laplacian_violation(const pwsync::LaplacianMatrix& L) {
  const std::size_t N = L.size();
  for (std::size_t i = 0; i < N; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < N; ++j) {
      row += L(i, j);
      if (L(i, j) != L(j, i)) return "asymmetric";
      if (i != j && L(i, j) != 0.0 && L(i, j) != -1.0) return "off-diagonal not in {0,-1}";
    }
    if (row != 0.0) return "nonzero row sum";
  }
  if (std::abs(L.spectrum().values[0]) > 1e-9) return "lambda_1 != 0";
  return {};
}

}  // namespace testing
