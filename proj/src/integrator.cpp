#include "pwsync/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <fmt/core.h>
#include <fmt/ostream.h>

#include "pwsync/errors.hpp"

namespace pwsync {

void DynamicalSystem::switching_values(std::span<const double>, double, std::span<double>) const {}

std::string_view to_string(Scheme scheme) { return scheme == Scheme::rk4 ? "rk4" : "euler"; }

Scheme parse_scheme(std::string_view name) {
  if (name == "rk4") return Scheme::rk4;
  if (name == "euler") return Scheme::euler;
  throw ParameterError(fmt::format("unknown integration scheme '{}'", name));
}

void IntegratorConfig::validate() const {
  if (!(dt > 0.0)) throw ParameterError(fmt::format("dt = {} must be > 0", dt));
  if (!(t_end > 0.0)) throw ParameterError(fmt::format("t_end = {} must be > 0", t_end));
  if (record_stride < 1) throw ParameterError("record_stride must be >= 1");
  sign_policy.validate();
}

std::size_t IntegratorConfig::step_count() const {
  return static_cast<std::size_t>(std::llround(t_end / dt));
}

namespace {

double latch_from(double value, const SignPolicy& policy) {
  if (value > 0.0) return 1.0;
  if (value < 0.0) return -1.0;
  return policy.at_zero;
}

class Stepper {
 public:
  Stepper(const DynamicalSystem& field, const IntegratorConfig& cfg)
      : field_(field),
        cfg_(cfg),
        dim_(field.dimension()),
        k1_(dim_), k2_(dim_), k3_(dim_), k4_(dim_), tmp_(dim_),
        latches_(cfg.sign_policy.hysteresis_band > 0.0 ? field.switch_count() : 0),
        switch_values_(latches_.size()) {}

  void init_latches(std::span<const double> x, double t) {
    if (latches_.empty()) return;
    field_.switching_values(x, t, switch_values_);
    for (std::size_t k = 0; k < latches_.size(); ++k)
      latches_[k] = latch_from(switch_values_[k], cfg_.sign_policy);
  }

  void update_latches(std::span<const double> x, double t) {
    if (latches_.empty()) return;
    field_.switching_values(x, t, switch_values_);
    const double band = cfg_.sign_policy.hysteresis_band;
    for (std::size_t k = 0; k < latches_.size(); ++k)
      if (std::abs(switch_values_[k]) > band) latches_[k] = switch_values_[k] > 0.0 ? 1.0 : -1.0;
  }

  void step(std::vector<double>& x, double t) {
    const SignSelector sign(cfg_.sign_policy, latches_);
    const double h = cfg_.dt;
    field_.derivative(x, t, sign, k1_);
    if (cfg_.scheme == Scheme::euler) {
      for (std::size_t i = 0; i < dim_; ++i) x[i] += h * k1_[i];
      return;
    }
    for (std::size_t i = 0; i < dim_; ++i) tmp_[i] = x[i] + 0.5 * h * k1_[i];
    field_.derivative(tmp_, t + 0.5 * h, sign, k2_);
    for (std::size_t i = 0; i < dim_; ++i) tmp_[i] = x[i] + 0.5 * h * k2_[i];
    field_.derivative(tmp_, t + 0.5 * h, sign, k3_);
    for (std::size_t i = 0; i < dim_; ++i) tmp_[i] = x[i] + h * k3_[i];
    field_.derivative(tmp_, t + h, sign, k4_);
    for (std::size_t i = 0; i < dim_; ++i)
      x[i] += (h / 6.0) * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
  }

 private:
  const DynamicalSystem& field_;
  const IntegratorConfig& cfg_;
  std::size_t dim_;
  std::vector<double> k1_, k2_, k3_, k4_, tmp_;
  std::vector<double> latches_;
  std::vector<double> switch_values_;
};

void check_finite(std::span<const double> x, double t) {
  double sq = 0.0;
  for (double v : x) sq += v * v;
  if (!std::isfinite(sq))
    throw DivergenceError(fmt::format("state became non-finite at t = {}", t), t);
  if (sq > kDivergenceBound * kDivergenceBound)
    throw DivergenceError(fmt::format("state norm exceeded {:g} at t = {}", kDivergenceBound, t), t);
}

}  // namespace

Trajectory integrate(const DynamicalSystem& field, std::span<const double> x0, const IntegratorConfig& cfg) {
  cfg.validate();
  const std::size_t dim = field.dimension();
  if (x0.size() != dim)
    throw ParameterError(fmt::format("initial state has {} entries, field dimension is {}", x0.size(), dim));

  const std::size_t steps = cfg.step_count();
  if (steps == 0) throw ParameterError("t_end shorter than half a step");

  Trajectory traj;
  traj.dim = dim;
  traj.dt_used = cfg.dt;
  traj.scheme_used = cfg.scheme;
  const std::size_t samples = steps / cfg.record_stride + 2;
  traj.times.reserve(samples);
  traj.states.reserve(samples * dim);

  std::vector<double> x(x0.begin(), x0.end());
  check_finite(x, 0.0);
  traj.times.push_back(0.0);
  traj.states.insert(traj.states.end(), x.begin(), x.end());

  Stepper stepper(field, cfg);
  stepper.init_latches(x, 0.0);
  for (std::size_t s = 0; s < steps; ++s) {
    const double t = static_cast<double>(s) * cfg.dt;
    stepper.step(x, t);
    const double t_next = static_cast<double>(s + 1) * cfg.dt;
    check_finite(x, t_next);
    stepper.update_latches(x, t_next);
    if ((s + 1) % cfg.record_stride == 0 || s + 1 == steps) {
      traj.times.push_back(t_next);
      traj.states.insert(traj.states.end(), x.begin(), x.end());
    }
  }
  return traj;
}

double trailing_mean(std::span<const double> times, std::span<const double> values, double window_fraction) {
  if (times.empty()) throw ParameterError("trailing mean of an empty series");
  if (times.size() != values.size()) throw ParameterError("trailing mean: times and values differ in length");
  if (!(window_fraction > 0.0 && window_fraction <= 1.0))
    throw ParameterError(fmt::format("window fraction {} outside (0, 1]", window_fraction));
  const double t0 = times.front();
  const double t1 = times.back();
  const double cutoff = t1 - window_fraction * (t1 - t0);
  // A cutoff landing on a grid point includes it despite rounding.
  const double slack = 1e-9 * std::max(1.0, std::abs(t1));
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (times[k] + slack < cutoff) continue;
    sum += values[k];
    ++count;
  }
  return sum / static_cast<double>(count);
}

double steady_state_stat(const Trajectory& traj, const StateMetric& metric, double window_fraction) {
  if (traj.empty()) throw ParameterError("steady_state_stat: empty trajectory");
  std::vector<double> values(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) values[k] = metric(traj.times[k], traj.state(k));
  return trailing_mean(traj.times, values, window_fraction);
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  os << 't';
  for (std::size_t i = 1; i <= traj.dim; ++i) os << ",x_" << i;
  os << '\n';
  for (std::size_t k = 0; k < traj.size(); ++k) {
    fmt::print(os, "{:.17g}", traj.times[k]);
    for (double v : traj.state(k)) fmt::print(os, ",{:.17g}", v);
    os << '\n';
  }
}

}  // namespace pwsync
