#include "pwsync/network.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <fmt/core.h>
#include <fmt/ostream.h>

#include "pwsync/errors.hpp"
#include "pwsync/rng.hpp"

namespace pwsync {

void NetworkModel::validate() const {
  const std::size_t n = node.dim;
  const auto& cp = coupling;
  if (n == 0) throw ParameterError("node field has dimension 0");
  if (cp.laplacian.size() != cp.laplacian_d.size())
    throw ParameterError(fmt::format("layer sizes differ: L is {}x{}, L_d is {}x{}", cp.laplacian.size(),
                                     cp.laplacian.size(), cp.laplacian_d.size(), cp.laplacian_d.size()));
  if (cp.gamma.rows() != n || cp.gamma.cols() != n)
    throw ParameterError(fmt::format("Gamma must be {}x{}", n, n));
  if (cp.gamma_d.rows() != n || cp.gamma_d.cols() != n)
    throw ParameterError(fmt::format("Gamma_d must be {}x{}", n, n));
  if (!(cp.c >= 0.0)) throw ParameterError(fmt::format("diffusive gain c = {} must be >= 0", cp.c));
  if (!(cp.cd >= 0.0)) throw ParameterError(fmt::format("discontinuous gain c_d = {} must be >= 0", cp.cd));
}

namespace {

bool is_identity(const Matrix& m) { return m == Matrix::identity(m.rows()); }

}  // namespace

NetworkField::NetworkField(NetworkModel model, SignPolicy policy)
    : model_(std::move(model)), policy_(policy) {
  model_.validate();
  policy_.validate();
  const std::size_t N = model_.nodes();
  const auto& L = model_.coupling.laplacian;
  diffusive_.resize(N);
  for (std::size_t i = 0; i < N; ++i)
    for (std::size_t j = 0; j < N; ++j)
      if (j != i && L(i, j) != 0.0) diffusive_[i].push_back({j, -L(i, j)});
  discontinuous_edges_ = model_.coupling.laplacian_d.edges();
  gamma_identity_ = is_identity(model_.coupling.gamma);
  gamma_d_identity_ = is_identity(model_.coupling.gamma_d);
  scratch_.resize(model_.node.dim * (N + 1));
}

std::size_t NetworkField::switch_count() const {
  return model_.nodes() * model_.node.switch_count() + discontinuous_edges_.size() * model_.node.dim;
}

void NetworkField::switching_values(std::span<const double> x, double, std::span<double> out) const {
  const std::size_t n = model_.node.dim;
  const std::size_t r = model_.node.switch_count();
  for (std::size_t i = 0; i < model_.nodes(); ++i)
    pwsync::switching_values(model_.node, x.subspan(i * n, n), out.subspan(i * r, r));
  std::size_t k = model_.nodes() * r;
  for (auto [i, j] : discontinuous_edges_)
    for (std::size_t h = 0; h < n; ++h) out[k++] = x[j * n + h] - x[i * n + h];
}

void NetworkField::coupling_into(std::span<const double> x, const SignSelector& sign,
                                 std::span<double> out) const {
  const std::size_t n = model_.node.dim;
  const std::size_t N = model_.nodes();
  const auto& cp = model_.coupling;
  std::span<double> diff(scratch_.data(), n);
  std::span<double> acc(scratch_.data() + n, N * n);

  if (cp.c != 0.0) {
    for (std::size_t i = 0; i < N; ++i) {
      std::fill(diff.begin(), diff.end(), 0.0);
      for (const Neighbour& nb : diffusive_[i])
        for (std::size_t h = 0; h < n; ++h) diff[h] += nb.weight * (x[nb.node * n + h] - x[i * n + h]);
      if (gamma_identity_) {
        for (std::size_t h = 0; h < n; ++h) out[i * n + h] += cp.c * diff[h];
      } else {
        for (std::size_t h = 0; h < n; ++h) {
          double s = 0.0;
          for (std::size_t l = 0; l < n; ++l) s += cp.gamma(h, l) * diff[l];
          out[i * n + h] += cp.c * s;
        }
      }
    }
  }

  if (cp.cd != 0.0 && !discontinuous_edges_.empty()) {
    // Accumulate Σ_j sign(x_j - x_i) per node in `acc`, then apply c_d Γ_d.
    std::fill(acc.begin(), acc.end(), 0.0);
    std::size_t k = N * model_.node.switch_count();
    for (auto [i, j] : discontinuous_edges_) {
      for (std::size_t h = 0; h < n; ++h, ++k) {
        const double s = sign(k, x[j * n + h] - x[i * n + h]);
        acc[i * n + h] += s;
        acc[j * n + h] -= s;
      }
    }
    for (std::size_t i = 0; i < N; ++i) {
      if (gamma_d_identity_) {
        for (std::size_t h = 0; h < n; ++h) out[i * n + h] += cp.cd * acc[i * n + h];
      } else {
        for (std::size_t h = 0; h < n; ++h) {
          double s = 0.0;
          for (std::size_t l = 0; l < n; ++l) s += cp.gamma_d(h, l) * acc[i * n + l];
          out[i * n + h] += cp.cd * s;
        }
      }
    }
  }
}

void NetworkField::derivative(std::span<const double> x, double t, const SignSelector& sign,
                              std::span<double> dxdt) const {
  const std::size_t n = model_.node.dim;
  const std::size_t r = model_.node.switch_count();
  for (std::size_t i = 0; i < model_.nodes(); ++i)
    eval_field_into(model_.node, x.subspan(i * n, n), t, sign, i * r, dxdt.subspan(i * n, n));
  coupling_into(x, sign, dxdt);
}

Vector NetworkField::operator()(std::span<const double> x, double t) const {
  if (x.size() != dimension())
    throw ParameterError(fmt::format("network state has {} entries, expected {}", x.size(), dimension()));
  Vector out(dimension(), 0.0);
  derivative(x, t, SignSelector(policy_), out);
  return out;
}

Vector NetworkField::coupling_term(std::span<const double> x, double) const {
  if (x.size() != dimension())
    throw ParameterError(fmt::format("network state has {} entries, expected {}", x.size(), dimension()));
  Vector out(dimension(), 0.0);
  coupling_into(x, SignSelector(policy_), out);
  return out;
}

NetworkField assemble(const NetworkModel& model, const SignPolicy& policy) {
  return NetworkField(model, policy);
}

SyncError sync_error(std::span<const double> states, std::size_t node_dim) {
  if (node_dim == 0 || states.size() % node_dim != 0 || states.empty())
    throw ParameterError(fmt::format("state length {} is not a positive multiple of n = {}", states.size(), node_dim));
  const std::size_t N = states.size() / node_dim;
  // x̄ = x_1 + mean(x_i - x_1): exactly x_1 when all states coincide.
  Vector mean(node_dim, 0.0);
  for (std::size_t i = 1; i < N; ++i)
    for (std::size_t h = 0; h < node_dim; ++h) mean[h] += states[i * node_dim + h] - states[h];
  for (std::size_t h = 0; h < node_dim; ++h) mean[h] = states[h] + mean[h] / static_cast<double>(N);

  SyncError out;
  out.deviations.resize(states.size());
  out.node_errors.resize(N);
  double total = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    double sq = 0.0;
    for (std::size_t h = 0; h < node_dim; ++h) {
      const double e = states[i * node_dim + h] - mean[h];
      out.deviations[i * node_dim + h] = e;
      sq += e * e;
    }
    out.node_errors[i] = std::sqrt(sq);
    total += out.node_errors[i];
  }
  out.e_s = total / static_cast<double>(N);
  return out;
}

double sync_error_value(std::span<const double> states, std::size_t node_dim) {
  return sync_error(states, node_dim).e_s;
}

double Simulation::trailing_error(double window_fraction) const {
  return trailing_mean(trajectory.times, metrics.e_s, window_fraction);
}

Vector random_network_state(std::size_t nodes, const Vector& lo, const Vector& hi, std::uint64_t seed) {
  const std::size_t n = lo.size();
  if (n == 0 || hi.size() != n) throw ParameterError("box bounds must be nonempty and of equal length");
  Rng rng(seed);
  Vector x(nodes * n);
  for (std::size_t k = 0; k < x.size(); ++k) x[k] = rng.uniform(lo[k % n], hi[k % n]);
  return x;
}

Simulation simulate(const NetworkModel& model, std::span<const double> x0, const IntegratorConfig& cfg) {
  const NetworkField field(model, cfg.sign_policy);
  Simulation sim;
  sim.trajectory = integrate(field, x0, cfg);
  sim.metrics.e_s.reserve(sim.trajectory.size());
  for (std::size_t k = 0; k < sim.trajectory.size(); ++k)
    sim.metrics.e_s.push_back(sync_error_value(sim.trajectory.state(k), model.node.dim));
  return sim;
}

void write_simulation_csv(std::ostream& os, const Simulation& sim, std::size_t node_dim, bool with_states) {
  const Trajectory& traj = sim.trajectory;
  os << "t,e_s";
  if (with_states) {
    const std::size_t N = traj.dim / node_dim;
    for (std::size_t i = 1; i <= N; ++i)
      for (std::size_t h = 1; h <= node_dim; ++h) os << ",x_" << i << '_' << h;
  }
  os << '\n';
  for (std::size_t k = 0; k < traj.size(); ++k) {
    fmt::print(os, "{:.17g},{:.17g}", traj.times[k], sim.metrics.e_s[k]);
    if (with_states)
      for (double v : traj.state(k)) fmt::print(os, ",{:.17g}", v);
    os << '\n';
  }
}

}  // namespace pwsync
