#include "pwsync/quad.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <fmt/core.h>
#include <fmt/ostream.h>

#include "pwsync/errors.hpp"
#include "pwsync/rng.hpp"

namespace pwsync {

std::string_view to_string(QuadCondition condition) {
  switch (condition) {
    case QuadCondition::quad: return "quad";
    case QuadCondition::relaxed_quad: return "relaxed_quad";
    case QuadCondition::coupling: return "coupling";
  }
  return "unknown";
}

void Box::validate() const {
  if (lo.size() != hi.size() || lo.empty()) throw ParameterError("box bounds must be nonempty and of equal length");
  for (std::size_t i = 0; i < lo.size(); ++i)
    if (!(lo[i] <= hi[i])) throw ParameterError(fmt::format("box coordinate {}: lo {} > hi {}", i, lo[i], hi[i]));
}

Box Box::symmetric(std::size_t n, double r) { return Box{Vector(n, -r), Vector(n, r)}; }

namespace {

void require_pd(const SymMatrix& P, const char* what) {
  if (!positive_definite(P)) throw ParameterError(fmt::format("{} must be positive definite", what));
}

Vector uniform_point(Rng& rng, const Box& box) {
  Vector x(box.dim());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform(box.lo[i], box.hi[i]);
  return x;
}

Vector reflect_across(const Vector& x, const Vector& w, const Box& box) {
  double wx = 0.0;
  double ww = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    wx += w[i] * x[i];
    ww += w[i] * w[i];
  }
  Vector r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i)
    r[i] = std::clamp(x[i] - 2.0 * wx / ww * w[i], box.lo[i], box.hi[i]);
  return r;
}

bool time_dependent(const VectorFieldSpec& spec) { return spec.kind == SystemKind::pws_oscillator; }

QuadReport sample_quad(QuadCondition condition, const VectorFieldSpec& spec, const SymMatrix& P, const Matrix& Q,
                       const Vector* m, const Box& domain, Interval t_range, const SamplingOptions& options,
                       const SignPolicy& policy) {
  const std::size_t n = spec.dim;
  domain.validate();
  policy.validate();
  if (domain.dim() != n) throw ParameterError(fmt::format("domain has dimension {}, field has {}", domain.dim(), n));
  if (P.size() != n || Q.rows() != n || Q.cols() != n)
    throw ParameterError(fmt::format("P and Q must be {}x{}", n, n));
  if (!(t_range.lo <= t_range.hi)) throw ParameterError("time range is reversed");
  if (options.samples == 0) throw ParameterError("need at least one sample");
  require_pd(P, "P");

  const bool timed = time_dependent(spec) && options.time_points > 1;
  const std::size_t switches = spec.switch_count();

  QuadReport report;
  report.condition = condition;
  report.samples = options.samples;
  report.min_margin = std::numeric_limits<double>::infinity();

  Vector e(n);
  Vector abs_e(n);
  for (std::size_t s = 0; s < options.samples; ++s) {
    Rng rng(mix_seed(options.seed, {s}));
    double t = t_range.lo;
    if (timed) {
      const auto k = rng.below(options.time_points);
      t = t_range.lo + (t_range.hi - t_range.lo) * static_cast<double>(k) /
                           static_cast<double>(options.time_points - 1);
    }
    const Vector xi1 = uniform_point(rng, domain);
    Vector xi2;
    if (switches > 0 && s % 2 == 1)
      xi2 = reflect_across(xi1, spec.relays[(s / 2) % switches].switching, domain);
    else
      xi2 = uniform_point(rng, domain);

    const Vector f1 = eval_field(spec, xi1, t, policy);
    const Vector f2 = eval_field(spec, xi2, t, policy);
    Vector df(n);
    for (std::size_t i = 0; i < n; ++i) {
      e[i] = xi1[i] - xi2[i];
      abs_e[i] = std::abs(e[i]);
      df[i] = f1[i] - f2[i];
    }
    double margin = bilinear(e, Q, e) - bilinear(e, P.matrix(), df);
    if (m != nullptr)
      for (std::size_t i = 0; i < n; ++i) margin += (*m)[i] * abs_e[i];

    if (margin < report.min_margin) {
      report.min_margin = margin;
      report.witness_xi1 = xi1;
      report.witness_xi2 = xi2;
      report.witness_t = t;
    }
  }
  report.passed = report.min_margin >= -QuadReport::kPassTolerance;
  return report;
}

}  // namespace

QuadReport check_quad(const VectorFieldSpec& spec, const SymMatrix& P, const Matrix& Q, const Box& domain,
                      Interval t_range, const SamplingOptions& options, const SignPolicy& policy) {
  return sample_quad(QuadCondition::quad, spec, P, Q, nullptr, domain, t_range, options, policy);
}

QuadReport check_relaxed_quad(const VectorFieldSpec& spec, const SymMatrix& P, const Matrix& Q, const Vector& m,
                              const Box& domain, Interval t_range, const SamplingOptions& options,
                              const SignPolicy& policy) {
  if (m.size() != spec.dim) throw ParameterError(fmt::format("m has {} entries, field has dimension {}", m.size(), spec.dim));
  for (double v : m)
    if (!(v >= 0.0)) throw ParameterError("m must be componentwise nonnegative");
  return sample_quad(QuadCondition::relaxed_quad, spec, P, Q, &m, domain, t_range, options, policy);
}

CouplingReport check_coupling_assumption(const DiffusiveCoupling& g, const SymMatrix& P,
                                         const std::optional<SymMatrix>& G, const Box& domain,
                                         const SamplingOptions& options) {
  const std::size_t n = P.size();
  domain.validate();
  if (g.gamma.rows() != n || g.gamma.cols() != n) throw ParameterError(fmt::format("Gamma must be {}x{}", n, n));
  if (domain.dim() != n) throw ParameterError("domain dimension differs from P");
  if (G && G->size() != n) throw ParameterError(fmt::format("G must be {}x{}", n, n));
  if (!(g.c >= 0.0)) throw ParameterError("coupling gain must be >= 0");
  if (options.samples == 0) throw ParameterError("need at least one sample");

  CouplingReport out;
  out.G = G ? G->matrix() : sym_part(P.matrix() * g.gamma);
  out.vanishes_on_diagonal = true;
  out.antisymmetric = true;

  auto coupling = [&](const Vector& a, const Vector& b) {
    Vector d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = b[i] - a[i];
    Vector y = g.gamma * d;
    for (double& v : y) v *= g.c;
    return y;
  };

  QuadReport& rep = out.bound;
  rep.condition = QuadCondition::coupling;
  rep.samples = options.samples;
  rep.min_margin = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < options.samples; ++s) {
    Rng rng(mix_seed(options.seed, {s}));
    const Vector xi1 = uniform_point(rng, domain);
    const Vector xi2 = uniform_point(rng, domain);

    const Vector self = coupling(xi1, xi1);
    if (std::any_of(self.begin(), self.end(), [](double v) { return v != 0.0; })) out.vanishes_on_diagonal = false;

    const Vector g12 = coupling(xi1, xi2);
    const Vector g21 = coupling(xi2, xi1);
    for (std::size_t i = 0; i < n; ++i)
      if (g12[i] != -g21[i]) out.antisymmetric = false;

    Vector e21(n);
    Vector e12(n);
    for (std::size_t i = 0; i < n; ++i) {
      e21[i] = xi2[i] - xi1[i];
      e12[i] = -e21[i];
    }
    const double margin = bilinear(e21, P.matrix(), g12) - g.c * bilinear(e12, out.G, e12);
    if (margin < rep.min_margin) {
      rep.min_margin = margin;
      rep.witness_xi1 = xi1;
      rep.witness_xi2 = xi2;
    }
  }
  rep.passed = out.vanishes_on_diagonal && out.antisymmetric && rep.min_margin >= -QuadReport::kPassTolerance;
  return out;
}

void write_key_values(std::ostream& os, const QuadReport& r) {
  auto vec = [](const Vector& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += fmt::format("{}{:.17g}", i ? ", " : "", v[i]);
    return s + "]";
  };
  fmt::print(os, "condition = {}\n", to_string(r.condition));
  fmt::print(os, "samples = {}\n", r.samples);
  fmt::print(os, "min_margin = {:.17g}\n", r.min_margin);
  fmt::print(os, "witness_xi1 = {}\n", vec(r.witness_xi1));
  fmt::print(os, "witness_xi2 = {}\n", vec(r.witness_xi2));
  fmt::print(os, "witness_t = {:.17g}\n", r.witness_t);
  fmt::print(os, "passed = {}\n", r.passed);
  fmt::print(os, "note = {}\n", r.passed ? "no violation found in the sampled domain (not a proof)"
                                         : "violation found; witness attached");
}

// ---------------------------------------------------------------------------

std::string_view to_string(Theorem theorem) {
  switch (theorem) {
    case Theorem::T1: return "T1";
    case Theorem::T2: return "T2";
    case Theorem::C1: return "C1";
    case Theorem::T3: return "T3";
    case Theorem::T4: return "T4";
  }
  return "unknown";
}

Theorem parse_theorem(std::string_view name) {
  for (Theorem t : {Theorem::T1, Theorem::T2, Theorem::C1, Theorem::T3, Theorem::T4}) {
    const auto s = to_string(t);
    if (name.size() == s.size() &&
        std::equal(name.begin(), name.end(), s.begin(), [](char a, char b) { return std::toupper(a) == b; }))
      return t;
  }
  throw ParameterError(fmt::format("unknown theorem '{}' (expected t1, t2, c1, t3 or t4)", name));
}

std::string_view to_string(Comparison comparison) { return comparison == Comparison::strict ? ">" : ">="; }

bool ThresholdReport::satisfied_by(double c, double cd) const {
  const bool c_ok = c_comparison == Comparison::strict ? c > c_star : c >= c_star;
  return c_ok && (!cd_star || cd >= *cd_star);
}

QSplit::QSplit(Matrix q_minus, SymMatrix q_prime) : q_minus_(std::move(q_minus)), q_prime_(std::move(q_prime)) {
  if (q_minus_.rows() != q_prime_.size() || !q_minus_.square())
    throw ParameterError("Q- and Q' must be square of equal size");
  const double top = lambda_max(SymMatrix::from_sym_part(q_minus_));
  if (!(top < 0.0))
    throw HypothesisViolation(fmt::format("Q- is not negative definite (largest eigenvalue of sym(Q-) is {})", top));
}

QSplit QSplit::of(const Matrix& q, Matrix q_minus, SymMatrix q_prime) {
  QSplit split(std::move(q_minus), std::move(q_prime));
  if (q.rows() != split.q_minus_.rows() || q.cols() != split.q_minus_.cols())
    throw ParameterError("Q has a different size than its split");
  const double gap = max_abs_diff(split.total(), q);
  if (gap > 1e-12) throw HypothesisViolation(fmt::format("Q- + Q' differs from Q by {:.3e}", gap));
  return split;
}

SimultaneousDiagResult simultaneous_diag(const SymMatrix& q_prime, const SymMatrix& G) {
  if (q_prime.size() != G.size()) throw ParameterError("Q' and G differ in size");
  const std::size_t n = G.size();
  const Matrix& A = q_prime.matrix();
  const Matrix& B = G.matrix();

  SimultaneousDiagResult out;
  out.commutator_norm = spectral_norm(A * B - B * A);
  const double norm_a = spectral_norm(A);
  const double norm_b = spectral_norm(B);
  if (out.commutator_norm > 1e-9 * (norm_a * norm_b + 1.0)) return out;

  const Spectrum sg = sym_eigen(G);
  Matrix T = sg.vectors;
  const double block_tol = 1e-8 * std::max(1.0, norm_b);
  std::size_t start = 0;
  while (start < n) {
    std::size_t end = start + 1;
    while (end < n && sg.values[end] - sg.values[end - 1] <= block_tol) ++end;
    const std::size_t b = end - start;
    if (b > 1) {
      Matrix V(n, b);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t k = 0; k < b; ++k) V(r, k) = T(r, start + k);
      const Matrix restricted = V.transpose() * A * V;
      const Spectrum sr = sym_eigen(SymMatrix::from_sym_part(restricted));
      const Matrix refined = V * sr.vectors;
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t k = 0; k < b; ++k) T(r, start + k) = refined(r, k);
    }
    start = end;
  }

  const Matrix dq = T.transpose() * A * T;
  const Matrix dg = T.transpose() * B * T;
  const double tol = 1e-8 * std::max({1.0, norm_a, norm_b});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && (std::abs(dq(i, j)) > tol || std::abs(dg(i, j)) > tol)) return out;

  CommonBasis basis;
  basis.T = std::move(T);
  for (std::size_t i = 0; i < n; ++i) {
    basis.q_prime_diag.push_back(dq(i, i));
    basis.g_diag.push_back(dg(i, i));
  }
  out.basis = std::move(basis);
  return out;
}

namespace {

void require_connected(double lambda2) {
  if (!(lambda2 > 0.0))
    throw HypothesisViolation(fmt::format("lambda_2(L) = {} <= 0: the graph is disconnected", lambda2));
}

double positivity_tol(const Vector& v) {
  double scale = 1.0;
  for (double x : v) scale = std::max(scale, std::abs(x));
  return 1e-12 * scale;
}

/// max over h with q_h > 0 of q_h / g_h; 0 if no q_h is positive.
double max_positive_ratio(const Vector& q, const Vector& g, const char* g_name) {
  const double tol = positivity_tol(q);
  double best = 0.0;
  for (std::size_t h = 0; h < q.size(); ++h) {
    if (!(q[h] > tol)) continue;
    if (!(g[h] > 0.0))
      throw HypothesisViolation(fmt::format("direction {} has positive Q' eigenvalue {} but {} = {} is not positive",
                                            h, q[h], g_name, g[h]));
    best = std::max(best, q[h] / g[h]);
  }
  return best;
}

CommonBasis common_basis_or_throw(const SymMatrix& q_prime, const SymMatrix& G) {
  auto res = simultaneous_diag(q_prime, G);
  if (!res)
    throw HypothesisViolation(fmt::format("Q' and G are not simultaneously diagonalisable (commutator norm {:.3e})",
                                          res.commutator_norm));
  return *res.basis;
}

/// γ_d from PΓ_d, which must be diagonal, nonnegative, positive where m_h > 0.
Vector discontinuous_gains(const Vector& m, const SymMatrix& P, const Matrix& gamma_d) {
  const std::size_t n = P.size();
  if (gamma_d.rows() != n || gamma_d.cols() != n) throw ParameterError(fmt::format("Gamma_d must be {}x{}", n, n));
  if (m.size() != n) throw ParameterError(fmt::format("m must have {} entries", n));
  if (std::all_of(m.begin(), m.end(), [](double v) { return v == 0.0; }))
    throw HypothesisViolation("m must be nonzero");
  const Matrix pgd = P.matrix() * gamma_d;
  Vector gd(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      if (std::abs(pgd(i, j)) > 1e-12)
        throw HypothesisViolation(fmt::format("P*Gamma_d is not diagonal: entry ({}, {}) = {}", i, j, pgd(i, j)));
    }
  for (std::size_t h = 0; h < n; ++h) {
    gd[h] = pgd(h, h);
    if (gd[h] < 0.0) throw HypothesisViolation(fmt::format("gamma_d[{}] = {} is negative", h, gd[h]));
    if (m[h] > 0.0 && !(gd[h] > 0.0))
      throw HypothesisViolation(fmt::format("m[{}] = {} > 0 requires gamma_d[{}] > 0", h, m[h], h));
  }
  return gd;
}

double discontinuous_threshold(const Vector& m, const Vector& gd) {
  double best = 0.0;
  for (std::size_t h = 0; h < m.size(); ++h)
    if (m[h] > 0.0) best = std::max(best, m[h] / gd[h]);
  return 0.5 * best;
}

}  // namespace

ThresholdReport threshold_t1(const Matrix& Q, double lambda2, const SymMatrix& G) {
  if (!Q.square() || Q.rows() != G.size()) throw ParameterError("Q and G must be square of equal size");
  require_connected(lambda2);
  const double gmin = lambda_min(G);
  if (!(gmin > 0.0)) throw HypothesisViolation(fmt::format("G is not positive definite (lambda_min = {})", gmin));
  ThresholdReport r;
  r.theorem = Theorem::T1;
  r.c_comparison = Comparison::strict;
  r.inputs.q_norm = spectral_norm(Q);
  r.inputs.lambda2 = lambda2;
  r.inputs.lambda_min_g = gmin;
  r.c_star = *r.inputs.q_norm / (lambda2 * gmin);
  return r;
}

ThresholdReport threshold_t1(const Matrix& Q, const LaplacianMatrix& L, const SymMatrix& G) {
  return threshold_t1(Q, L.algebraic_connectivity(), G);
}

ThresholdReport threshold_t2(const QSplit& split, const SymMatrix& G, double lambda2) {
  if (split.q_prime().size() != G.size()) throw ParameterError("Q' and G differ in size");
  require_connected(lambda2);
  const CommonBasis basis = common_basis_or_throw(split.q_prime(), G);
  ThresholdReport r;
  r.theorem = Theorem::T2;
  r.c_comparison = Comparison::non_strict;
  r.inputs.q_prime_eigenvalues = basis.q_prime_diag;
  r.inputs.g_eigenvalues = basis.g_diag;
  r.inputs.lambda2 = lambda2;
  r.c_star = max_positive_ratio(basis.q_prime_diag, basis.g_diag, "lambda_h(G)") / lambda2;
  return r;
}

ThresholdReport threshold_t2(const QSplit& split, const SymMatrix& G, const LaplacianMatrix& L) {
  return threshold_t2(split, G, L.algebraic_connectivity());
}

ThresholdReport threshold_c1(const Vector& q, const Vector& gamma, double lambda2) {
  if (q.size() != gamma.size() || q.empty()) throw ParameterError("q and gamma must be nonempty and of equal length");
  require_connected(lambda2);
  for (std::size_t h = 0; h < gamma.size(); ++h)
    if (gamma[h] < 0.0) throw HypothesisViolation(fmt::format("gamma[{}] = {} is negative", h, gamma[h]));
  ThresholdReport r;
  r.theorem = Theorem::C1;
  r.c_comparison = Comparison::non_strict;
  r.inputs.q_prime_eigenvalues = q;
  r.inputs.g_eigenvalues = gamma;
  r.inputs.lambda2 = lambda2;
  r.c_star = max_positive_ratio(q, gamma, "gamma") / lambda2;
  return r;
}

ThresholdReport threshold_c1(const Vector& q, const Vector& gamma, const LaplacianMatrix& L) {
  return threshold_c1(q, gamma, L.algebraic_connectivity());
}

ThresholdReport threshold_t3(const Matrix& Q, const Vector& m, const SymMatrix& P, const Matrix& gamma,
                             const Matrix& gamma_d) {
  const std::size_t n = P.size();
  if (!Q.square() || Q.rows() != n) throw ParameterError(fmt::format("Q must be {}x{}", n, n));
  if (gamma.rows() != n || gamma.cols() != n) throw ParameterError(fmt::format("Gamma must be {}x{}", n, n));
  if (!positive_definite(P)) throw HypothesisViolation("P is not positive definite");
  const double gmin = lambda_min(SymMatrix::from_sym_part(P.matrix() * gamma));
  if (!(gmin > 0.0))
    throw HypothesisViolation(fmt::format("sym(P*Gamma) is not positive definite (lambda_min = {})", gmin));
  const Vector gd = discontinuous_gains(m, P, gamma_d);

  ThresholdReport r;
  r.theorem = Theorem::T3;
  r.c_comparison = Comparison::strict;
  r.inputs.q_norm = spectral_norm(Q);
  r.inputs.lambda_min_g = gmin;
  r.inputs.m = m;
  r.inputs.gamma_d = gd;
  r.c_star = *r.inputs.q_norm / (2.0 * gmin);
  r.cd_star = discontinuous_threshold(m, gd);
  return r;
}

ThresholdReport threshold_t4(const QSplit& split, const Vector& m, const SymMatrix& P, const Matrix& gamma,
                             const Matrix& gamma_d) {
  const std::size_t n = P.size();
  if (split.q_prime().size() != n) throw ParameterError(fmt::format("Q' must be {}x{}", n, n));
  if (gamma.rows() != n || gamma.cols() != n) throw ParameterError(fmt::format("Gamma must be {}x{}", n, n));
  if (!positive_definite(P)) throw HypothesisViolation("P is not positive definite");
  const Matrix pg = P.matrix() * gamma;
  std::optional<SymMatrix> G;
  try {
    G.emplace(pg);
  } catch (const SymmetryError& e) {
    throw HypothesisViolation(fmt::format("G = P*Gamma must be symmetric: {}", e.what()));
  }
  const Vector gd = discontinuous_gains(m, P, gamma_d);
  const CommonBasis basis = common_basis_or_throw(split.q_prime(), *G);

  ThresholdReport r;
  r.theorem = Theorem::T4;
  r.c_comparison = Comparison::strict;
  r.inputs.q_prime_eigenvalues = basis.q_prime_diag;
  r.inputs.g_eigenvalues = basis.g_diag;
  r.inputs.m = m;
  r.inputs.gamma_d = gd;
  r.c_star = 0.5 * max_positive_ratio(basis.q_prime_diag, basis.g_diag, "lambda_h(G)");
  r.cd_star = discontinuous_threshold(m, gd);
  return r;
}

namespace {

std::string list(const Vector& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += fmt::format("{}{:.17g}", i ? ", " : "", v[i]);
  return s + "]";
}

std::string opt(const std::optional<double>& v) { return v ? fmt::format("{:.17g}", *v) : std::string{}; }

}  // namespace

void write_key_values(std::ostream& os, const ThresholdReport& r) {
  fmt::print(os, "theorem = {}\n", to_string(r.theorem));
  fmt::print(os, "c_star = {:.17g}\n", r.c_star);
  fmt::print(os, "c_condition = c {} c_star\n", to_string(r.c_comparison));
  if (r.cd_star) {
    fmt::print(os, "cd_star = {:.17g}\n", *r.cd_star);
    fmt::print(os, "cd_condition = c_d >= cd_star\n");
  }
  const auto& in = r.inputs;
  if (in.q_norm) fmt::print(os, "q_norm = {:.17g}\n", *in.q_norm);
  if (!in.q_prime_eigenvalues.empty()) fmt::print(os, "q_prime_eigenvalues = {}\n", list(in.q_prime_eigenvalues));
  if (!in.g_eigenvalues.empty()) fmt::print(os, "g_eigenvalues = {}\n", list(in.g_eigenvalues));
  if (in.lambda2) fmt::print(os, "lambda2 = {:.17g}\n", *in.lambda2);
  if (in.lambda_min_g) fmt::print(os, "lambda_min_g = {:.17g}\n", *in.lambda_min_g);
  if (!in.m.empty()) fmt::print(os, "m = {}\n", list(in.m));
  if (!in.gamma_d.empty()) fmt::print(os, "gamma_d = {}\n", list(in.gamma_d));
}

void write_csv_header(std::ostream& os) { os << "theorem,c_star,c_op,cd_star,q_norm,lambda2,lambda_min_g\n"; }

void write_csv_row(std::ostream& os, const ThresholdReport& r) {
  fmt::print(os, "{},{:.17g},{},{},{},{},{}\n", to_string(r.theorem), r.c_star, to_string(r.c_comparison),
             opt(r.cd_star), opt(r.inputs.q_norm), opt(r.inputs.lambda2), opt(r.inputs.lambda_min_g));
}

}  // namespace pwsync
