#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "pwsync/dynamics.hpp"
#include "pwsync/graph.hpp"
#include "pwsync/integrator.hpp"
#include "pwsync/matrix.hpp"

namespace pwsync {

/// Two coupling layers on the same node set: linear diffusive c·Γ(x_j - x_i)
/// over L and discontinuous c_d·Γ_d·sign(x_j - x_i) over L_d.
struct MultiplexCoupling {
  double c = 0.0;
  Matrix gamma;
  LaplacianMatrix laplacian;
  double cd = 0.0;
  Matrix gamma_d;
  LaplacianMatrix laplacian_d;
};

struct NetworkModel {
  VectorFieldSpec node;
  MultiplexCoupling coupling;

  std::size_t nodes() const { return coupling.laplacian.size(); }
  std::size_t state_dim() const { return nodes() * node.dim; }
  /// Throws ParameterError on negative gains or inconsistent dimensions.
  void validate() const;
};

/// Assembled network field
///   ẋ_i = f(x_i; t) - c Σ_j L_ij Γ (x_j - x_i) - c_d Σ_j Ld_ij Γ_d sign(x_j - x_i).
///
/// Diagonal terms (j = i) are dropped since the coupling of a node with
/// itself is zero. Neighbour sums run in ascending j. Each discontinuous edge
/// (i < j) owns one switch per component, v = x_j - x_i; node j receives the
/// negated sign, which keeps the coupling antisymmetric for any sign(0)
/// value. Switches are ordered: node relays (node-major), then edges × n.
///
/// Evaluation uses internal scratch space: one instance per thread.
class NetworkField final : public DynamicalSystem {
 public:
  NetworkField(NetworkModel model, SignPolicy policy = {});

  std::size_t dimension() const override { return model_.state_dim(); }
  std::size_t switch_count() const override;
  void switching_values(std::span<const double> x, double t, std::span<double> out) const override;
  void derivative(std::span<const double> x, double t, const SignSelector& sign,
                  std::span<double> dxdt) const override;

  /// Stateless evaluation under the policy given at construction.
  Vector operator()(std::span<const double> x, double t) const;

  /// Coupling contribution only (field minus the node dynamics).
  Vector coupling_term(std::span<const double> x, double t) const;

  const NetworkModel& model() const noexcept { return model_; }

 private:
  struct Neighbour {
    std::size_t node;
    double weight;  // -L_ij
  };

  void coupling_into(std::span<const double> x, const SignSelector& sign, std::span<double> out) const;

  NetworkModel model_;
  SignPolicy policy_;
  bool gamma_identity_ = false;
  bool gamma_d_identity_ = false;
  std::vector<std::vector<Neighbour>> diffusive_;
  std::vector<Edge> discontinuous_edges_;
  mutable std::vector<double> scratch_;
};

NetworkField assemble(const NetworkModel& model, const SignPolicy& policy = {});

struct SyncError {
  double e_s = 0.0;
  /// e_i = x_i - x̄, stacked.
  Vector deviations;
  /// ‖e_i‖₂ per node.
  Vector node_errors;
};

/// e_s = (1/N) Σ ‖x_i - x̄‖₂ over the N = states.size() / n node states.
SyncError sync_error(std::span<const double> states, std::size_t node_dim);

/// e_s only, without allocation of the per-node vectors.
double sync_error_value(std::span<const double> states, std::size_t node_dim);

struct SyncMetrics {
  std::vector<double> e_s;
};

struct Simulation {
  Trajectory trajectory;
  SyncMetrics metrics;

  /// Mean e_s over the trailing `window_fraction` of the recorded horizon.
  double trailing_error(double window_fraction = 0.1) const;
};

/// N node states drawn with Rng(seed), entry k uniform in
/// [lo[k mod n], hi[k mod n]) in storage order.
Vector random_network_state(std::size_t nodes, const Vector& lo, const Vector& hi, std::uint64_t seed);

Simulation simulate(const NetworkModel& model, std::span<const double> x0, const IntegratorConfig& cfg);

/// CSV `t,e_s[,x_1_1,...,x_N_n]`.
void write_simulation_csv(std::ostream& os, const Simulation& sim, std::size_t node_dim,
                          bool with_states);

}  // namespace pwsync
