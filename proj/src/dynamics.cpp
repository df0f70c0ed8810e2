#include "pwsync/dynamics.hpp"

#include <cmath>
#include <string>

#include <fmt/core.h>

#include "pwsync/errors.hpp"

namespace pwsync {

std::string_view to_string(SystemKind kind) {
  switch (kind) {
    case SystemKind::relay: return "relay";
    case SystemKind::pws_oscillator: return "pws_oscillator";
    case SystemKind::sprott: return "sprott";
    case SystemKind::bistable: return "bistable";
    case SystemKind::affine_relay: return "affine_relay";
  }
  return "unknown";
}

SystemKind parse_system_kind(std::string_view name) {
  for (SystemKind k : {SystemKind::relay, SystemKind::pws_oscillator, SystemKind::sprott,
                       SystemKind::bistable, SystemKind::affine_relay})
    if (to_string(k) == name) return k;
  throw ParameterError(fmt::format("unknown system '{}'", name));
}

VectorFieldSpec make_affine_relay(Matrix A, Vector b, std::vector<RelayTerm> relays) {
  if (!A.square() || A.rows() == 0) throw ParameterError("affine relay: A must be square and nonempty");
  const std::size_t n = A.rows();
  if (b.empty()) b.assign(n, 0.0);
  if (b.size() != n) throw ParameterError(fmt::format("affine relay: b has {} entries, expected {}", b.size(), n));
  for (std::size_t k = 0; k < relays.size(); ++k)
    if (relays[k].gain.size() != n || relays[k].switching.size() != n)
      throw ParameterError(fmt::format("affine relay: relay term {} must have length-{} vectors", k, n));
  for (double v : A.data())
    if (!std::isfinite(v)) throw ParameterError("affine relay: non-finite entry in A");
  VectorFieldSpec spec;
  spec.kind = SystemKind::affine_relay;
  spec.dim = n;
  spec.A = std::move(A);
  spec.b = std::move(b);
  spec.relays = std::move(relays);
  return spec;
}

VectorFieldSpec builtin_spec(SystemKind kind) {
  VectorFieldSpec spec;
  switch (kind) {
    case SystemKind::relay:
      // ẋ = [[-1,-1],[2,3]] x - [0, 2 sign(x1 + x2)]ᵀ
      spec = make_affine_relay({{-1.0, -1.0}, {2.0, 3.0}}, {}, {{{0.0, -2.0}, {1.0, 1.0}}});
      break;
    case SystemKind::sprott:
      spec = make_affine_relay({{0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}, {-1.0, -1.0, -0.5}}, {},
                               {{{0.0, 0.0, 1.0}, {1.0, 0.0, 0.0}}});
      break;
    case SystemKind::bistable:
      spec = make_affine_relay({{0.0, 1.0}, {-1.0, -1.0}}, {}, {{{0.0, 1.0}, {1.0, 0.0}}});
      break;
    case SystemKind::pws_oscillator:
      spec.dim = 2;
      break;
    case SystemKind::affine_relay:
      throw ParameterError("affine_relay is not a builtin; use make_affine_relay");
  }
  spec.kind = kind;
  return spec;
}

VectorFieldSpec builtin_spec(std::string_view name) { return builtin_spec(parse_system_kind(name)); }

void SignPolicy::validate() const {
  if (!(at_zero >= -1.0 && at_zero <= 1.0))
    throw ParameterError(fmt::format("sign(0) value {} outside [-1, 1]", at_zero));
  if (!(hysteresis_band >= 0.0))
    throw ParameterError(fmt::format("hysteresis band {} must be >= 0", hysteresis_band));
}

double oscillator_branch(double x2) {
  if (x2 <= -1.0) return -x2 - 2.0;
  if (x2 >= 1.0) return -x2 + 2.0;
  return x2;
}

void eval_field_into(const VectorFieldSpec& spec, std::span<const double> x, double t,
                     const SignSelector& sign, std::size_t switch_offset, std::span<double> out) {
  if (spec.kind == SystemKind::pws_oscillator) {
    out[0] = -x[0] + 2.0 * x[1] * std::sin(t);
    out[1] = oscillator_branch(x[1]);
    return;
  }
  const std::size_t n = spec.dim;
  for (std::size_t i = 0; i < n; ++i) {
    double s = spec.b[i];
    const auto row = spec.A.row(i);
    for (std::size_t j = 0; j < n; ++j) s += row[j] * x[j];
    out[i] = s;
  }
  for (std::size_t k = 0; k < spec.relays.size(); ++k) {
    const RelayTerm& term = spec.relays[k];
    double w = 0.0;
    for (std::size_t j = 0; j < n; ++j) w += term.switching[j] * x[j];
    const double sg = sign(switch_offset + k, w);
    if (sg == 0.0) continue;
    for (std::size_t i = 0; i < n; ++i) out[i] += term.gain[i] * sg;
  }
}

Vector eval_field(const VectorFieldSpec& spec, std::span<const double> x, double t,
                  const SignPolicy& policy) {
  policy.validate();
  if (x.size() != spec.dim)
    throw ParameterError(fmt::format("{} field has dimension {}, state has {}", to_string(spec.kind),
                                     spec.dim, x.size()));
  Vector out(spec.dim, 0.0);
  eval_field_into(spec, x, t, SignSelector(policy), 0, out);
  return out;
}

void switching_values(const VectorFieldSpec& spec, std::span<const double> x, std::span<double> out) {
  for (std::size_t k = 0; k < spec.relays.size(); ++k) {
    double w = 0.0;
    for (std::size_t j = 0; j < spec.dim; ++j) w += spec.relays[k].switching[j] * x[j];
    out[k] = w;
  }
}

}  // namespace pwsync
