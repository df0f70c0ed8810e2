#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "pwsync/matrix.hpp"

namespace pwsync {

/// Undirected edge between 0-indexed nodes, stored with first < second.
using Edge = std::pair<std::size_t, std::size_t>;

/// Laplacian of an undirected unweighted graph, L = D - A.
///
/// Construction checks the structural invariants (symmetry, zero row sums,
/// off-diagonals in {0, -1}) and computes the spectrum eagerly; instances are
/// immutable and can be shared across threads.
class LaplacianMatrix {
 public:
  /// Throws ParameterError if any invariant fails.
  explicit LaplacianMatrix(Matrix entries);

  /// Duplicate edges and self-loops are rejected.
  static LaplacianMatrix from_edges(std::size_t nodes, std::span<const Edge> edges);

  std::size_t size() const noexcept { return entries_.rows(); }
  double operator()(std::size_t i, std::size_t j) const { return entries_(i, j); }
  const Matrix& matrix() const noexcept { return entries_; }

  /// Edges (i < j) in lexicographic order.
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  std::size_t degree(std::size_t i) const { return static_cast<std::size_t>(entries_(i, i)); }

  const Spectrum& spectrum() const noexcept { return spectrum_; }
  double algebraic_connectivity() const { return size() < 2 ? 0.0 : spectrum_.values[1]; }
  /// λ_2 > 1e-9.
  bool connected() const { return algebraic_connectivity() > 1e-9; }

 private:
  Matrix entries_;
  std::vector<Edge> edges_;
  Spectrum spectrum_;
};

/// Ring where node i links to i±1..i±k (mod N). Requires N >= 2 and
/// 1 <= k <= floor((N-1)/2).
LaplacianMatrix build_ring_k_nearest(std::size_t nodes, std::size_t k);

LaplacianMatrix build_path(std::size_t nodes);

LaplacianMatrix build_complete(std::size_t nodes);

struct RandomGraph {
  LaplacianMatrix laplacian;
  /// Number of rejected (disconnected) draws before the accepted one.
  std::size_t retries = 0;
};

inline constexpr std::size_t kErdosRenyiMaxRetries = 64;

/// G(N, p) with each unordered pair linked independently. Draw r uses the
/// sub-seed mix_seed(seed, {r}); disconnected draws are rejected. Throws
/// ConnectivityError after kErdosRenyiMaxRetries rejections.
RandomGraph build_erdos_renyi(std::size_t nodes, double p, std::uint64_t seed);

/// Breadth-first connectivity test on an edge list.
bool is_connected(std::size_t nodes, std::span<const Edge> edges);

/// Plain-text edge list: `N <count>` then one `i j` line per edge.
void write_edge_list(std::ostream& os, const LaplacianMatrix& laplacian);
LaplacianMatrix read_edge_list(std::istream& is);

}  // namespace pwsync
