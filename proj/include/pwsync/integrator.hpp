#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "pwsync/dynamics.hpp"

namespace pwsync {

/// Right-hand side of a (possibly discontinuous) ODE on R^d.
///
/// Discontinuities are expressed through switching functions: the field asks
/// the SignSelector for sign(k, v_k) and the integrator owns whatever latch
/// state the selector consults.
class DynamicalSystem {
 public:
  virtual ~DynamicalSystem() = default;

  virtual std::size_t dimension() const = 0;
  virtual std::size_t switch_count() const { return 0; }
  /// Current switching values v_k(x, t), k < switch_count().
  virtual void switching_values(std::span<const double> x, double t, std::span<double> out) const;
  virtual void derivative(std::span<const double> x, double t, const SignSelector& sign,
                          std::span<double> dxdt) const = 0;
};

/// Adapter for ad-hoc fields given as callables.
class FunctionSystem final : public DynamicalSystem {
 public:
  using Derivative = std::function<void(std::span<const double>, double, const SignSelector&, std::span<double>)>;
  using Switching = std::function<void(std::span<const double>, double, std::span<double>)>;

  FunctionSystem(std::size_t dim, Derivative f, std::size_t switches = 0, Switching sw = {})
      : dim_(dim), switches_(switches), f_(std::move(f)), sw_(std::move(sw)) {}

  std::size_t dimension() const override { return dim_; }
  std::size_t switch_count() const override { return switches_; }
  void switching_values(std::span<const double> x, double t, std::span<double> out) const override {
    if (sw_) sw_(x, t, out);
  }
  void derivative(std::span<const double> x, double t, const SignSelector& sign,
                  std::span<double> dxdt) const override {
    f_(x, t, sign, dxdt);
  }

 private:
  std::size_t dim_;
  std::size_t switches_;
  Derivative f_;
  Switching sw_;
};

/// A single node ẋ = f(x; t).
class NodeSystem final : public DynamicalSystem {
 public:
  explicit NodeSystem(VectorFieldSpec spec) : spec_(std::move(spec)) {}

  std::size_t dimension() const override { return spec_.dim; }
  std::size_t switch_count() const override { return spec_.switch_count(); }
  void switching_values(std::span<const double> x, double, std::span<double> out) const override {
    pwsync::switching_values(spec_, x, out);
  }
  void derivative(std::span<const double> x, double t, const SignSelector& sign,
                  std::span<double> dxdt) const override {
    eval_field_into(spec_, x, t, sign, 0, dxdt);
  }

 private:
  VectorFieldSpec spec_;
};

enum class Scheme { rk4, euler };

std::string_view to_string(Scheme scheme);
Scheme parse_scheme(std::string_view name);

struct IntegratorConfig {
  double dt = 1e-3;
  double t_end = 1.0;
  Scheme scheme = Scheme::rk4;
  SignPolicy sign_policy{};
  /// Keep every k-th step, plus t = 0 and the final step.
  std::size_t record_stride = 10;

  void validate() const;
  /// round(t_end / dt)
  std::size_t step_count() const;
};

/// Recorded samples of an integration; state k occupies
/// states[k*dim, (k+1)*dim).
struct Trajectory {
  std::vector<double> times;
  std::vector<double> states;
  std::size_t dim = 0;
  double dt_used = 0.0;
  Scheme scheme_used = Scheme::rk4;

  std::size_t size() const noexcept { return times.size(); }
  bool empty() const noexcept { return times.empty(); }
  std::span<const double> state(std::size_t k) const { return {states.data() + k * dim, dim}; }
  std::span<const double> back() const { return state(size() - 1); }
};

/// ‖x‖ above this aborts the integration with DivergenceError.
inline constexpr double kDivergenceBound = 1e9;

/// Fixed-step explicit integration from t = 0 to cfg.t_end. Signs are
/// resolved with cfg.sign_policy at every stage; hysteresis latches update at
/// step boundaries only and hold for every stage of a step.
Trajectory integrate(const DynamicalSystem& field, std::span<const double> x0, const IntegratorConfig& cfg);

using StateMetric = std::function<double(double t, std::span<const double> state)>;

/// Mean of values[k] over the samples with
/// times[k] >= t_last - window·(t_last - t_first).
double trailing_mean(std::span<const double> times, std::span<const double> values, double window_fraction);

/// Mean of `metric` over the samples with t >= t_last - window·(t_last - t_first).
double steady_state_stat(const Trajectory& traj, const StateMetric& metric, double window_fraction);

/// CSV with header `t,x_1,...,x_d`, 17 significant digits.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj);

}  // namespace pwsync
