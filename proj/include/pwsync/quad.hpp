#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pwsync/dynamics.hpp"
#include "pwsync/graph.hpp"
#include "pwsync/matrix.hpp"

namespace pwsync {

// ---------------------------------------------------------------------------
// Sampled condition checks
// ---------------------------------------------------------------------------

enum class QuadCondition { quad, relaxed_quad, coupling };

std::string_view to_string(QuadCondition condition);

/// Axis-aligned box in R^n.
struct Box {
  Vector lo;
  Vector hi;

  std::size_t dim() const noexcept { return lo.size(); }
  void validate() const;
  /// [-r, r]^n
  static Box symmetric(std::size_t n, double r);
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct SamplingOptions {
  std::size_t samples = 100000;
  std::uint64_t seed = 0;
  /// Distinct time points drawn uniformly from the time range for
  /// non-autonomous fields.
  std::size_t time_points = 32;
};

/// Result of a falsification run. A pass means no sample violated the
/// inequality; it is not a proof.
struct QuadReport {
  static constexpr double kPassTolerance = 1e-9;

  QuadCondition condition = QuadCondition::quad;
  std::size_t samples = 0;
  /// Smallest slack (right side minus left side) seen; negative = violated.
  double min_margin = 0.0;
  Vector witness_xi1;
  Vector witness_xi2;
  double witness_t = 0.0;
  bool passed = false;
  /// Always true: the verdict comes from sampling.
  bool sampled_only = true;
};

/// Falsifies f ∈ QUAD(P, Q): (ξ1-ξ2)ᵀP[f(ξ1;t)-f(ξ2;t)] <= (ξ1-ξ2)ᵀQ(ξ1-ξ2).
///
/// Half the pairs are uniform in the box; the other half reflect a uniform
/// ξ1 across a switching surface w_kᵀx = 0 (cycling k) and clamp to the box.
/// Fields without switching surfaces use uniform pairs only. Per-sample
/// randomness is derived from (seed, sample index). Throws ParameterError
/// unless P is symmetric positive definite.
QuadReport check_quad(const VectorFieldSpec& spec, const SymMatrix& P, const Matrix& Q, const Box& domain,
                      Interval t_range, const SamplingOptions& options = {},
                      const SignPolicy& policy = {});

/// As check_quad with + mᵀ|ξ1-ξ2| added to the right side; m >= 0.
QuadReport check_relaxed_quad(const VectorFieldSpec& spec, const SymMatrix& P, const Matrix& Q,
                              const Vector& m, const Box& domain, Interval t_range,
                              const SamplingOptions& options = {}, const SignPolicy& policy = {});

/// Linear diffusive coupling g(ξ1, ξ2) = cΓ(ξ2 - ξ1).
struct DiffusiveCoupling {
  Matrix gamma;
  double c = 1.0;
};

struct CouplingReport {
  QuadReport bound;
  /// g(ξ, ξ) == 0 exactly on every sample.
  bool vanishes_on_diagonal = false;
  /// g(ξ1, ξ2) == -g(ξ2, ξ1) exactly on every sample.
  bool antisymmetric = false;
  /// The G actually used (sym(PΓ) unless supplied).
  Matrix G;
};

/// Checks the three coupling requirements: zero on the diagonal,
/// antisymmetry, and (ξ2-ξ1)ᵀP g(ξ1,ξ2) >= (ξ1-ξ2)ᵀ cG (ξ1-ξ2) by sampling.
/// `bound.passed` is the conjunction of all three.
CouplingReport check_coupling_assumption(const DiffusiveCoupling& g, const SymMatrix& P,
                                         const std::optional<SymMatrix>& G, const Box& domain,
                                         const SamplingOptions& options = {});

void write_key_values(std::ostream& os, const QuadReport& report);

// ---------------------------------------------------------------------------
// Thresholds
// ---------------------------------------------------------------------------

enum class Theorem { T1, T2, C1, T3, T4 };

std::string_view to_string(Theorem theorem);
Theorem parse_theorem(std::string_view name);

enum class Comparison { strict, non_strict };

std::string_view to_string(Comparison comparison);  // ">" or ">="

/// Quantities a threshold was computed from.
struct ThresholdInputs {
  std::optional<double> q_norm;
  Vector q_prime_eigenvalues;  // paired with g_eigenvalues, common-basis order
  Vector g_eigenvalues;
  std::optional<double> lambda2;
  std::optional<double> lambda_min_g;
  Vector m;
  Vector gamma_d;
};

struct ThresholdReport {
  Theorem theorem = Theorem::T1;
  double c_star = 0.0;
  Comparison c_comparison = Comparison::strict;
  /// Present iff theorem is T3 or T4; always compared with ">=".
  std::optional<double> cd_star;
  ThresholdInputs inputs;

  /// True when (c, c_d) satisfies the theorem's gain conditions.
  bool satisfied_by(double c, double cd = 0.0) const;
};

/// Q = Q⁻ + Q′ with sym(Q⁻) negative definite and Q′ symmetric.
class QSplit {
 public:
  /// Throws HypothesisViolation if λ_max(sym(Q⁻)) >= 0.
  QSplit(Matrix q_minus, SymMatrix q_prime);
  /// Additionally checks Q⁻ + Q′ == Q within 1e-12.
  static QSplit of(const Matrix& q, Matrix q_minus, SymMatrix q_prime);

  const Matrix& q_minus() const noexcept { return q_minus_; }
  const SymMatrix& q_prime() const noexcept { return q_prime_; }
  Matrix total() const { return q_minus_ + q_prime_.matrix(); }

 private:
  Matrix q_minus_;
  SymMatrix q_prime_;
};

/// Orthogonal T with TᵀQ′T and TᵀGT diagonal.
struct CommonBasis {
  Matrix T;
  Vector q_prime_diag;
  Vector g_diag;
};

struct SimultaneousDiagResult {
  std::optional<CommonBasis> basis;
  double commutator_norm = 0.0;

  explicit operator bool() const noexcept { return basis.has_value(); }
};

/// Succeeds iff ‖Q′G - GQ′‖ <= 1e-9·(‖Q′‖‖G‖ + 1). The basis is the
/// eigenbasis of G, refined inside repeated-eigenvalue blocks by
/// diagonalizing Q′ restricted to the block.
SimultaneousDiagResult simultaneous_diag(const SymMatrix& q_prime, const SymMatrix& G);

/// c* = ‖Q‖ / (λ_2(L) λ_min(G)), strict.
ThresholdReport threshold_t1(const Matrix& Q, double lambda2, const SymMatrix& G);
ThresholdReport threshold_t1(const Matrix& Q, const LaplacianMatrix& L, const SymMatrix& G);

/// c* = max_{h: λ_h(Q′)>0} λ_h(Q′)/λ_h(G) / λ_2(L), pairs taken per common
/// eigenvector; 0 if Q′ has no positive eigenvalue. Non-strict.
ThresholdReport threshold_t2(const QSplit& split, const SymMatrix& G, double lambda2);
ThresholdReport threshold_t2(const QSplit& split, const SymMatrix& G, const LaplacianMatrix& L);

/// Diagonal special case of T2 with Q′ = diag(q), Γ = diag(γ). Non-strict.
ThresholdReport threshold_c1(const Vector& q, const Vector& gamma, double lambda2);
ThresholdReport threshold_c1(const Vector& q, const Vector& gamma, const LaplacianMatrix& L);

/// Two-node thresholds with discontinuous coupling:
/// c* = ‖Q‖ / (2 λ_min(sym(PΓ))) (strict), c_d* = ½ max_{h: m_h>0} m_h/γ_d,h
/// where PΓ_d = diag(γ_d).
ThresholdReport threshold_t3(const Matrix& Q, const Vector& m, const SymMatrix& P, const Matrix& gamma,
                             const Matrix& gamma_d);

/// T4: c* = ½ max_{h: λ_h(Q′)>0} λ_h(Q′)/λ_h(G) with G = PΓ (strict);
/// c_d* as in T3.
ThresholdReport threshold_t4(const QSplit& split, const Vector& m, const SymMatrix& P, const Matrix& gamma,
                             const Matrix& gamma_d);

void write_key_values(std::ostream& os, const ThresholdReport& report);
/// `theorem,c_star,c_op,cd_star,q_norm,lambda2,lambda_min_g`
void write_csv_header(std::ostream& os);
void write_csv_row(std::ostream& os, const ThresholdReport& report);

}  // namespace pwsync
