#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "pwsync/matrix.hpp"

namespace pwsync {

enum class SystemKind { relay, pws_oscillator, sprott, bistable, affine_relay };

std::string_view to_string(SystemKind kind);
/// Accepts relay, pws_oscillator, sprott, bistable, affine_relay.
SystemKind parse_system_kind(std::string_view name);

/// Contributes gain · sign(switchingᵀ x) to the field.
struct RelayTerm {
  Vector gain;
  Vector switching;
};

/// Node dynamics ẋ = f(x; t).
///
/// Every kind except pws_oscillator is stored in affine-relay normal form
/// f(x) = A x + b + Σ_k d_k sign(w_kᵀ x). The oscillator is continuous
/// piecewise-linear with an explicit sin(t) term and is evaluated by its own
/// branch formula; its `A`, `b` and `relays` are empty.
struct VectorFieldSpec {
  SystemKind kind = SystemKind::affine_relay;
  std::size_t dim = 0;
  Matrix A;
  Vector b;
  std::vector<RelayTerm> relays;

  std::size_t switch_count() const noexcept { return relays.size(); }
};

/// Validates shapes and builds a generic affine-relay field.
VectorFieldSpec make_affine_relay(Matrix A, Vector b, std::vector<RelayTerm> relays);

VectorFieldSpec builtin_spec(SystemKind kind);
VectorFieldSpec builtin_spec(std::string_view name);

/// Selection rule for sign(·) on and near switching surfaces.
///
/// `at_zero` is the value used for sign(0). With `hysteresis_band` ε > 0 the
/// sign is a relay with memory: the latched value flips only once |v| > ε.
struct SignPolicy {
  double at_zero = 0.0;
  double hysteresis_band = 0.0;

  /// Throws ParameterError unless at_zero ∈ [-1, 1] and ε >= 0.
  void validate() const;
};

/// Applies a SignPolicy, optionally against per-switch latch state owned by
/// the caller. With latches and a positive band every query returns the
/// latch, so all stages of a step see the same relay state; the owner
/// updates latches between steps. Without latches the plain sign rule applies.
class SignSelector {
 public:
  explicit SignSelector(SignPolicy policy, std::span<const double> latches = {})
      : policy_(policy), latches_(latches) {}

  double operator()(std::size_t switch_index, double value) const {
    if (policy_.hysteresis_band > 0.0 && !latches_.empty()) return latches_[switch_index];
    if (value > 0.0) return 1.0;
    if (value < 0.0) return -1.0;
    return policy_.at_zero;
  }

  const SignPolicy& policy() const noexcept { return policy_; }

 private:
  SignPolicy policy_;
  std::span<const double> latches_;
};

/// Writes f(x; t) into `out`. Switch k of this field is looked up as
/// `sign(switch_offset + k, ·)`, so a network can place every node's switches
/// in one latch array.
void eval_field_into(const VectorFieldSpec& spec, std::span<const double> x, double t,
                     const SignSelector& sign, std::size_t switch_offset, std::span<double> out);

/// f(x; t) with `policy` applied statelessly. Throws ParameterError on a
/// dimension mismatch.
Vector eval_field(const VectorFieldSpec& spec, std::span<const double> x, double t,
                  const SignPolicy& policy = {});

/// w_kᵀ x for every relay term, written to `out` (size switch_count()).
void switching_values(const VectorFieldSpec& spec, std::span<const double> x, std::span<double> out);

/// Branch function of the oscillator's second coordinate:
/// -x-2 for x <= -1, x for |x| < 1, -x+2 for x >= 1.
double oscillator_branch(double x2);

}  // namespace pwsync
