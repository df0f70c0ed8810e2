#include "commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <ostream>

#include <fmt/core.h>
#include <fmt/ostream.h>

#include "pwsync/errors.hpp"

namespace pwsync::cli {

namespace {

std::ofstream open_output(const RunOptions& opts, const std::string& file) {
  std::filesystem::create_directories(opts.out_dir);
  const auto path = std::filesystem::path(opts.out_dir) / file;
  std::ofstream os(path);
  if (!os) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
  return os;
}

std::size_t require_count(const Config& cfg, std::string_view section, std::string_view key) {
  const auto v = cfg.count(section, key);
  if (!v) throw ConfigError(fmt::format("{}.{} is required", section, key));
  return static_cast<std::size_t>(*v);
}

double require_number(const Config& cfg, std::string_view section, std::string_view key) {
  const auto v = cfg.number(section, key);
  if (!v) throw ConfigError(fmt::format("{}.{} is required", section, key));
  return *v;
}

Matrix require_matrix(const Config& cfg, std::string_view section, std::string_view key, std::size_t n) {
  auto m = cfg.matrix(section, key, n);
  if (!m) throw ConfigError(fmt::format("{}.{} is required", section, key));
  return *m;
}

Vector require_vector(const Config& cfg, std::string_view section, std::string_view key) {
  auto v = cfg.vector(section, key);
  if (!v) throw ConfigError(fmt::format("{}.{} is required", section, key));
  return *v;
}

std::vector<Edge> edge_list(const Config& cfg, std::string_view key) {
  const auto* j = cfg.raw("graph", key);
  if (!j) throw ConfigError(fmt::format("graph.{} is required", key));
  if (!j->is_array()) throw ConfigError(fmt::format("graph.{}: expected a list of [i, j] pairs", key));
  std::vector<Edge> edges;
  for (const auto& e : *j) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_unsigned() || !e[1].is_number_unsigned())
      throw ConfigError(fmt::format("graph.{}: bad edge {}", key, e.dump()));
    edges.emplace_back(e[0].get<std::size_t>(), e[1].get<std::size_t>());
  }
  return edges;
}

Matrix gamma_of(const Config& cfg, std::string_view key, std::size_t n) {
  return cfg.matrix("coupling", key, n).value_or(Matrix::identity(n));
}

SymMatrix weight_p(const Config& cfg, std::size_t n) {
  return SymMatrix(cfg.matrix("certify", "P", n).value_or(Matrix::identity(n)));
}

QSplit split_of(const Config& cfg, std::size_t n) {
  const SymMatrix q_prime(require_matrix(cfg, "certify", "Q_prime", n));
  const auto q = cfg.matrix("certify", "Q", n);
  if (auto q_minus = cfg.matrix("certify", "Q_minus", n)) {
    if (q) return QSplit::of(*q, std::move(*q_minus), q_prime);
    return QSplit(std::move(*q_minus), q_prime);
  }
  if (!q) throw ConfigError("certify.Q_minus or certify.Q is required for this theorem");
  return QSplit(*q - q_prime.matrix(), q_prime);
}

double lambda2_of(const Config& cfg, const LaplacianMatrix* laplacian) {
  if (auto l2 = cfg.number("certify", "lambda2")) return *l2;
  if (!laplacian) throw ConfigError("this theorem needs lambda_2: set certify.lambda2 or provide [graph]");
  return laplacian->algebraic_connectivity();
}

std::string summary(const ThresholdReport& r) {
  std::string s = fmt::format("c* = {:.2g}", r.c_star);
  if (r.cd_star) s += fmt::format(", c_d* = {:.2g}", *r.cd_star);
  return s;
}

std::vector<double> grid_of(const Config& cfg, std::string_view grid_key, std::string_view range_key) {
  if (cfg.has("sweep", grid_key) && cfg.has("sweep", range_key))
    throw ConfigError(fmt::format("set either sweep.{} or sweep.{}, not both", grid_key, range_key));
  if (auto g = cfg.vector("sweep", grid_key)) return *g;
  const Vector range = cfg.vector("sweep", range_key).value_or(Vector{0.0, 2.0, 21.0});
  if (range.size() != 3 || range[2] < 1.0 || range[2] != std::floor(range[2]))
    throw ConfigError(fmt::format("sweep.{} must be [lo, hi, count] with integer count >= 1", range_key));
  const auto count = static_cast<std::size_t>(range[2]);
  std::vector<double> grid(count);
  for (std::size_t i = 0; i < count; ++i)
    grid[i] = count == 1 ? range[0]
                         : range[0] + (range[1] - range[0]) * static_cast<double>(i) / static_cast<double>(count - 1);
  return grid;
}

/// ics.lo / ics.hi, defaulting to [0,1]×[0,0.5]×[0,0.5] for sprott and
/// [-1,1]^n otherwise.
Box ic_box(const Config& cfg, const VectorFieldSpec& spec) {
  Box box;
  if (spec.kind == SystemKind::sprott) {
    box = Box{{0.0, 0.0, 0.0}, {1.0, 0.5, 0.5}};
  } else {
    box = Box::symmetric(spec.dim, 1.0);
  }
  if (auto lo = cfg.vector("ics", "lo")) box.lo = *lo;
  if (auto hi = cfg.vector("ics", "hi")) box.hi = *hi;
  box.validate();
  if (box.dim() != spec.dim)
    throw ConfigError(fmt::format("ics.lo/ics.hi have {} entries, expected {}", box.dim(), spec.dim));
  return box;
}

std::optional<Vector> explicit_state(const Config& cfg, const NetworkModel& model) {
  const auto states = cfg.rows("ics", "states");
  if (!states) return std::nullopt;
  if (cfg.has("ics", "lo") || cfg.has("ics", "hi"))
    throw ConfigError("set either ics.states or ics.lo/ics.hi, not both");
  if (states->size() != model.nodes())
    throw ConfigError(fmt::format("ics.states has {} nodes, graph has {}", states->size(), model.nodes()));
  Vector x;
  for (const Vector& s : *states) {
    if (s.size() != model.node.dim)
      throw ConfigError(fmt::format("ics.states entries must have {} values", model.node.dim));
    x.insert(x.end(), s.begin(), s.end());
  }
  return x;
}

}  // namespace

VectorFieldSpec build_system(const Config& cfg) {
  const auto name = cfg.text("system", "name");
  if (!name) throw ConfigError("system.name is required");
  const SystemKind kind = parse_system_kind(*name);
  if (kind != SystemKind::affine_relay) {
    for (auto key : {"A", "b", "relays"})
      if (cfg.has("system", key)) throw ConfigError(fmt::format("system.{} only applies to affine_relay", key));
    return builtin_spec(kind);
  }
  const auto rows = cfg.rows("system", "A");
  if (!rows) throw ConfigError("system.A is required for affine_relay");
  const std::size_t n = rows->size();
  const Matrix A = require_matrix(cfg, "system", "A", n);
  const Vector b = cfg.vector("system", "b").value_or(Vector(n, 0.0));
  std::vector<RelayTerm> relays;
  if (const auto* j = cfg.raw("system", "relays")) {
    if (!j->is_array()) throw ConfigError("system.relays: expected a list of {\"gain\", \"switching\"} objects");
    for (const auto& r : *j) {
      if (!r.is_object() || !r.contains("gain") || !r.contains("switching") || r.size() != 2)
        throw ConfigError(fmt::format("system.relays: bad entry {}", r.dump()));
      try {
        relays.push_back({r["gain"].get<Vector>(), r["switching"].get<Vector>()});
      } catch (const nlohmann::json::exception&) {
        throw ConfigError(fmt::format("system.relays: bad entry {}", r.dump()));
      }
    }
  }
  return make_affine_relay(A, b, std::move(relays));
}

BuiltGraph build_graph(const Config& cfg, bool second, const LaplacianMatrix* first) {
  const std::string prefix = second ? "d_" : "";
  const std::string kind = cfg.text("graph", prefix + "kind", second ? "same" : "");
  if (second && kind == "same") {
    if (!first) throw ConfigError("graph.d_kind = same needs the first layer");
    return {*first, 0};
  }
  if (kind.empty()) throw ConfigError(fmt::format("graph.{}kind is required", prefix));
  const std::size_t N = require_count(cfg, "graph", "N");
  if (kind == "er") {
    const auto g = build_erdos_renyi(N, require_number(cfg, "graph", prefix + "p"), cfg.count("graph", prefix + "seed", 0));
    return {g.laplacian, g.retries};
  }
  if (kind == "ring") return {build_ring_k_nearest(N, require_count(cfg, "graph", prefix + "k")), 0};
  if (kind == "path") return {build_path(N), 0};
  if (kind == "complete") return {build_complete(N), 0};
  if (kind == "edges") return {LaplacianMatrix::from_edges(N, edge_list(cfg, prefix + "edges")), 0};
  throw ConfigError(fmt::format("graph.{}kind: unknown graph kind '{}'", prefix, kind));
}

NetworkModel build_model(const Config& cfg) {
  VectorFieldSpec node = build_system(cfg);
  const std::size_t n = node.dim;
  const BuiltGraph L = build_graph(cfg, false);
  const BuiltGraph Ld = build_graph(cfg, true, &L.laplacian);
  NetworkModel model{std::move(node),
                     MultiplexCoupling{cfg.number("coupling", "c", 0.0), gamma_of(cfg, "Gamma", n), L.laplacian,
                                       cfg.number("coupling", "cd", 0.0), gamma_of(cfg, "Gamma_d", n), Ld.laplacian}};
  model.validate();
  return model;
}

ThresholdReport compute_thresholds(const Config& cfg, const VectorFieldSpec& spec, const LaplacianMatrix* laplacian) {
  const std::size_t n = spec.dim;
  const auto name = cfg.text("certify", "theorem");
  if (!name) throw ConfigError("certify.theorem is required");
  const Matrix gamma = gamma_of(cfg, "Gamma", n);
  const Matrix gamma_d = gamma_of(cfg, "Gamma_d", n);
  auto g_matrix = [&] {
    if (auto g = cfg.matrix("certify", "G", n)) return SymMatrix(*g);
    return SymMatrix::from_sym_part(weight_p(cfg, n).matrix() * gamma);
  };
  switch (parse_theorem(*name)) {
    case Theorem::T1:
      return threshold_t1(require_matrix(cfg, "certify", "Q", n), lambda2_of(cfg, laplacian), g_matrix());
    case Theorem::T2:
      return threshold_t2(split_of(cfg, n), g_matrix(), lambda2_of(cfg, laplacian));
    case Theorem::C1: {
      Vector g;
      if (auto v = cfg.vector("certify", "gamma")) {
        g = *v;
      } else {
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j)
            if (i != j && gamma(i, j) != 0.0)
              throw HypothesisViolation("Corollary C1 needs a diagonal Gamma; set certify.gamma or use t2");
        for (std::size_t i = 0; i < n; ++i) g.push_back(gamma(i, i));
      }
      return threshold_c1(require_vector(cfg, "certify", "q"), g, lambda2_of(cfg, laplacian));
    }
    case Theorem::T3:
      return threshold_t3(require_matrix(cfg, "certify", "Q", n), require_vector(cfg, "certify", "m"),
                          weight_p(cfg, n), gamma, gamma_d);
    case Theorem::T4:
      return threshold_t4(split_of(cfg, n), require_vector(cfg, "certify", "m"), weight_p(cfg, n), gamma, gamma_d);
  }
  throw ConfigError("unreachable theorem");
}

void resolve_gains(const Config& cfg, NetworkModel& model) {
  const auto cf = cfg.number("coupling", "c_factor");
  const auto cdf = cfg.number("coupling", "cd_factor");
  if (cf && cfg.has("coupling", "c")) throw ConfigError("set either coupling.c or coupling.c_factor, not both");
  if (cdf && cfg.has("coupling", "cd")) throw ConfigError("set either coupling.cd or coupling.cd_factor, not both");
  if (!cf && !cdf) return;
  const ThresholdReport r = compute_thresholds(cfg, model.node, &model.coupling.laplacian);
  if (cf) model.coupling.c = *cf * r.c_star;
  if (cdf) {
    if (!r.cd_star) throw ConfigError(fmt::format("coupling.cd_factor needs a theorem with c_d* (t3 or t4), got {}",
                                                  to_string(r.theorem)));
    model.coupling.cd = *cdf * *r.cd_star;
  }
  model.validate();
}

IntegratorConfig build_integrator(const Config& cfg, double default_t_end) {
  IntegratorConfig ic;
  ic.dt = cfg.number("integrate", "dt", 1e-3);
  ic.t_end = cfg.number("integrate", "t_end", default_t_end);
  ic.scheme = parse_scheme(cfg.text("integrate", "scheme", "rk4"));
  ic.record_stride = cfg.count("integrate", "record_stride", 10);
  ic.sign_policy.at_zero = cfg.number("integrate", "sign_at_zero", 0.0);
  ic.sign_policy.hysteresis_band = cfg.number("integrate", "hysteresis", 0.0);
  ic.validate();
  return ic;
}

Vector build_initial_state(const Config& cfg, const NetworkModel& model, const RunOptions& opts) {
  if (auto x = explicit_state(cfg, model)) return *x;
  const Box box = ic_box(cfg, model.node);
  return random_network_state(model.nodes(), box.lo, box.hi, opts.seed.value_or(cfg.count("ics", "seed", 0)));
}

SweepSpec build_sweep(const Config& cfg, const RunOptions& opts) {
  if (cfg.has("coupling", "c") || cfg.has("coupling", "cd") || cfg.has("coupling", "c_factor") ||
      cfg.has("coupling", "cd_factor"))
    throw ConfigError("sweep takes its gains from [sweep] grids; remove coupling.c/cd/c_factor/cd_factor");
  SweepSpec spec{.model = build_model(cfg)};
  spec.c_grid = grid_of(cfg, "c_grid", "c_range");
  spec.cd_grid = grid_of(cfg, "cd_grid", "cd_range");
  spec.n_ic = cfg.count("sweep", "n_ic", 5);
  spec.seed = opts.seed.value_or(cfg.count("sweep", "seed", 0));
  spec.integrator = build_integrator(cfg, 200.0);
  spec.window_fraction = cfg.number("integrate", "window", 0.1);
  if (auto x = explicit_state(cfg, spec.model)) {
    spec.ic_list = {*x};
  } else {
    spec.ic_box = ic_box(cfg, spec.model.node);
  }
  spec.validate();
  return spec;
}

int cmd_thresholds(const Config& cfg, const RunOptions& opts, std::ostream& out) {
  const VectorFieldSpec spec = build_system(cfg);
  std::optional<BuiltGraph> graph;
  if (cfg.has_section("graph") && !cfg.has("certify", "lambda2")) graph = build_graph(cfg, false);
  const ThresholdReport report = compute_thresholds(cfg, spec, graph ? &graph->laplacian : nullptr);

  fmt::print(out, "{}\n", summary(report));
  write_key_values(out, report);
  {
    auto csv = open_output(opts, "thresholds.csv");
    write_csv_header(csv);
    write_csv_row(csv, report);
    auto kv = open_output(opts, "thresholds.txt");
    write_key_values(kv, report);
  }

  const auto samples = cfg.count("certify", "check_samples", 0);
  if (samples == 0) return kOk;
  const std::size_t n = spec.dim;
  const Matrix Q = require_matrix(cfg, "certify", "Q", n);
  const SymMatrix P = weight_p(cfg, n);
  const Box box = Box::symmetric(n, cfg.number("certify", "check_radius", 3.0));
  const Interval t{cfg.number("certify", "t_min", 0.0), cfg.number("certify", "t_max", 2.0 * std::numbers::pi)};
  const SamplingOptions so{samples, cfg.count("certify", "check_seed", 0), 32};
  const SignPolicy policy{cfg.number("integrate", "sign_at_zero", 0.0), 0.0};
  const auto m = cfg.vector("certify", "m");
  const QuadReport q = m ? check_relaxed_quad(spec, P, Q, *m, box, t, so, policy) : check_quad(spec, P, Q, box, t, so, policy);
  write_key_values(out, q);
  auto kv = open_output(opts, "quad_check.txt");
  write_key_values(kv, q);
  if (!q.passed)
    throw HypothesisViolation(fmt::format("sampled {} check found a violation (min margin {:.3g})",
                                          to_string(q.condition), q.min_margin));
  return kOk;
}

int cmd_simulate(const Config& cfg, const RunOptions& opts, std::ostream& out) {
  NetworkModel model = build_model(cfg);
  resolve_gains(cfg, model);
  const IntegratorConfig ic = build_integrator(cfg, 100.0);
  const double window = cfg.number("integrate", "window", 0.1);
  if (!(window > 0.0 && window <= 1.0)) throw ConfigError("integrate.window must lie in (0, 1]");
  const Vector x0 = build_initial_state(cfg, model, opts);

  const Simulation sim = simulate(model, x0, ic);
  {
    auto csv = open_output(opts, "simulation.csv");
    write_simulation_csv(csv, sim, model.node.dim, cfg.flag("integrate", "write_states", true));
  }
  fmt::print(out, "c = {:.6g}, c_d = {:.6g}, trailing e_s = {:.3g}\n", model.coupling.c, model.coupling.cd,
             sim.trailing_error(window));
  fmt::print(out, "c = {:.17g}\ncd = {:.17g}\ntrailing_e_s = {:.17g}\nfinal_e_s = {:.17g}\nwindow = {:.17g}\n",
             model.coupling.c, model.coupling.cd, sim.trailing_error(window), sim.metrics.e_s.back(), window);
  return kOk;
}

int cmd_sweep(const Config& cfg, const RunOptions& opts, std::ostream& out) {
  const SweepSpec spec = build_sweep(cfg, opts);
  const SweepResult result = run_sweep(spec, opts.workers);
  {
    auto csv = open_output(opts, "sweep.csv");
    write_sweep_csv(csv, result);
    auto manifest = open_output(opts, "sweep_manifest.txt");
    write_manifest(manifest, spec);
  }
  const double tol = cfg.number("sweep", "sync_tol", 1e-2);
  std::size_t divergent = 0;
  for (std::size_t k = 0; k < result.e_s_mean.size(); ++k) divergent += std::isnan(result.e_s_mean[k]);
  fmt::print(out, "cells = {}, synchronized (e_s < {:g}) = {}, all-divergent = {}\n", result.e_s_mean.size(), tol,
             result.count_below(tol), divergent);
  return kOk;
}

int cmd_graph(const Config& cfg, const RunOptions& opts, std::ostream& out, std::ostream& err) {
  const BuiltGraph L = build_graph(cfg, false);
  const bool second = cfg.text("graph", "d_kind", "same") != "same";
  auto report = [&](const BuiltGraph& g, std::string_view tag, const std::string& file) {
    const auto& lap = g.laplacian;
    fmt::print(out, "layer = {}\nN = {}\nedges = {}\nretries = {}\nlambda2 = {:.17g}\nspectrum = [", tag, lap.size(),
               lap.edges().size(), g.retries, lap.algebraic_connectivity());
    for (std::size_t i = 0; i < lap.size(); ++i) fmt::print(out, "{}{:.17g}", i ? ", " : "", lap.spectrum().values[i]);
    fmt::print(out, "]\n");
    if (!lap.connected())
      fmt::print(err, "warning: layer {} is disconnected (lambda2 = {:.3g})\n", tag, lap.algebraic_connectivity());
    auto os = open_output(opts, file);
    write_edge_list(os, lap);
  };
  report(L, "L", "graph.txt");
  if (second) report(build_graph(cfg, true, &L.laplacian), "L_d", "graph_d.txt");
  return kOk;
}

int guarded(const std::function<int()>& body, std::ostream& err) {
  try {
    return body();
  } catch (const DivergenceError& e) {
    fmt::print(err, "error: divergence: {}\n", e.what());
    return kDivergence;
  } catch (const HypothesisViolation& e) {
    fmt::print(err, "error: hypothesis violated: {}\n", e.what());
    return kHypothesisViolation;
  } catch (const ConnectivityError& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kConfigError;
  } catch (const ParameterError& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kConfigError;
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", e.what());
    return kFailure;
  }
}

}  // namespace pwsync::cli
