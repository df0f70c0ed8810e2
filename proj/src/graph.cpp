#include "pwsync/graph.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <queue>
#include <string>

#include <fmt/core.h>

#include "pwsync/errors.hpp"
#include "pwsync/rng.hpp"

namespace pwsync {

LaplacianMatrix::LaplacianMatrix(Matrix entries) : entries_(std::move(entries)) {
  const std::size_t n = entries_.rows();
  if (n == 0 || !entries_.square())
    throw ParameterError("Laplacian must be a nonempty square matrix");
  for (std::size_t i = 0; i < n; ++i) {
    double row_sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double v = entries_(i, j);
      row_sum += v;
      if (i == j) continue;
      if (v != 0.0 && v != -1.0)
        throw ParameterError(
            fmt::format("Laplacian off-diagonal ({}, {}) = {} is not 0 or -1", i, j, v));
      if (v != entries_(j, i))
        throw ParameterError(fmt::format("Laplacian is not symmetric at ({}, {})", i, j));
      if (j > i && v == -1.0) edges_.emplace_back(i, j);
    }
    if (std::abs(row_sum) > 1e-10)
      throw ParameterError(fmt::format("Laplacian row {} sums to {}", i, row_sum));
  }
  spectrum_ = sym_eigen(SymMatrix(entries_));
}

LaplacianMatrix LaplacianMatrix::from_edges(std::size_t nodes, std::span<const Edge> edges) {
  if (nodes == 0) throw ParameterError("graph needs at least one node");
  Matrix m(nodes, nodes);
  for (auto [a, b] : edges) {
    if (a >= nodes || b >= nodes)
      throw ParameterError(fmt::format("edge ({}, {}) out of range for N = {}", a, b, nodes));
    if (a == b) throw ParameterError(fmt::format("self-loop at node {}", a));
    if (m(a, b) != 0.0) throw ParameterError(fmt::format("duplicate edge ({}, {})", a, b));
    m(a, b) = m(b, a) = -1.0;
    m(a, a) += 1.0;
    m(b, b) += 1.0;
  }
  return LaplacianMatrix(std::move(m));
}

LaplacianMatrix build_ring_k_nearest(std::size_t nodes, std::size_t k) {
  if (nodes < 2) throw ParameterError("ring needs N >= 2");
  if (k < 1 || k > (nodes - 1) / 2)
    throw ParameterError(
        fmt::format("ring neighbourhood k = {} outside [1, {}] for N = {}", k, (nodes - 1) / 2, nodes));
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < nodes; ++i)
    for (std::size_t d = 1; d <= k; ++d) {
      const std::size_t j = (i + d) % nodes;
      edges.emplace_back(std::min(i, j), std::max(i, j));
    }
  std::sort(edges.begin(), edges.end());
  return LaplacianMatrix::from_edges(nodes, edges);
}

LaplacianMatrix build_path(std::size_t nodes) {
  if (nodes < 2) throw ParameterError("path needs N >= 2");
  std::vector<Edge> edges;
  for (std::size_t i = 0; i + 1 < nodes; ++i) edges.emplace_back(i, i + 1);
  return LaplacianMatrix::from_edges(nodes, edges);
}

LaplacianMatrix build_complete(std::size_t nodes) {
  if (nodes < 2) throw ParameterError("complete graph needs N >= 2");
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < nodes; ++i)
    for (std::size_t j = i + 1; j < nodes; ++j) edges.emplace_back(i, j);
  return LaplacianMatrix::from_edges(nodes, edges);
}

bool is_connected(std::size_t nodes, std::span<const Edge> edges) {
  if (nodes == 0) return false;
  std::vector<std::vector<std::size_t>> adj(nodes);
  for (auto [a, b] : edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<bool> seen(nodes, false);
  std::queue<std::size_t> frontier;
  frontier.push(0);
  seen[0] = true;
  std::size_t reached = 1;
  while (!frontier.empty()) {
    const std::size_t u = frontier.front();
    frontier.pop();
    for (std::size_t w : adj[u])
      if (!seen[w]) {
        seen[w] = true;
        ++reached;
        frontier.push(w);
      }
  }
  return reached == nodes;
}

RandomGraph build_erdos_renyi(std::size_t nodes, double p, std::uint64_t seed) {
  if (nodes < 1) throw ParameterError("Erdos-Renyi graph needs N >= 1");
  if (!(p >= 0.0 && p <= 1.0))
    throw ParameterError(fmt::format("link probability p = {} outside [0, 1]", p));
  for (std::size_t attempt = 0; attempt <= kErdosRenyiMaxRetries; ++attempt) {
    Rng rng(mix_seed(seed, {attempt}));
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < nodes; ++i)
      for (std::size_t j = i + 1; j < nodes; ++j)
        if (rng.uniform01() < p) edges.emplace_back(i, j);
    if (is_connected(nodes, edges))
      return RandomGraph{LaplacianMatrix::from_edges(nodes, edges), attempt};
  }
  throw ConnectivityError(fmt::format(
      "no connected G({}, {}) draw within {} retries (seed {})", nodes, p, kErdosRenyiMaxRetries, seed));
}

void write_edge_list(std::ostream& os, const LaplacianMatrix& laplacian) {
  os << "N " << laplacian.size() << '\n';
  for (auto [a, b] : laplacian.edges()) os << a << ' ' << b << '\n';
}

LaplacianMatrix read_edge_list(std::istream& is) {
  std::string tag;
  std::size_t nodes = 0;
  if (!(is >> tag >> nodes) || tag != "N")
    throw ParameterError("edge list must start with `N <count>`");
  std::vector<Edge> edges;
  std::size_t a = 0;
  std::size_t b = 0;
  while (is >> a >> b) edges.emplace_back(std::min(a, b), std::max(a, b));
  if (!is.eof()) throw ParameterError("malformed edge list line");
  return LaplacianMatrix::from_edges(nodes, edges);
}

}  // namespace pwsync
