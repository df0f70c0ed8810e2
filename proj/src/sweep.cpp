#include "pwsync/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>

#include <fmt/core.h>
#include <fmt/ostream.h>

#include "pwsync/errors.hpp"
#include "pwsync/rng.hpp"

namespace pwsync {

namespace {

void require_grid(const std::vector<double>& grid, const char* name) {
  if (grid.empty()) throw ParameterError(fmt::format("{} is empty", name));
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0)) throw ParameterError(fmt::format("{} entries must be >= 0", name));
    if (i > 0 && !(grid[i] > grid[i - 1])) throw ParameterError(fmt::format("{} must be strictly ascending", name));
  }
}

}  // namespace

void SweepSpec::validate() const {
  model.validate();
  integrator.validate();
  require_grid(c_grid, "c_grid");
  require_grid(cd_grid, "cd_grid");
  if (!(window_fraction > 0.0 && window_fraction <= 1.0))
    throw ParameterError(fmt::format("window_fraction = {} must lie in (0, 1]", window_fraction));
  if (ic_list.empty()) {
    if (n_ic == 0) throw ParameterError("n_ic must be >= 1");
    ic_box.validate();
    if (ic_box.dim() != model.node.dim)
      throw ParameterError(fmt::format("ic box has dimension {}, node field has {}", ic_box.dim(), model.node.dim));
  } else {
    for (const Vector& x : ic_list)
      if (x.size() != model.state_dim())
        throw ParameterError(fmt::format("initial state has {} entries, expected {}", x.size(), model.state_dim()));
  }
}

Vector sweep_initial_state(const SweepSpec& spec, std::size_t ci, std::size_t cdi, std::size_t ic) {
  if (!spec.ic_list.empty()) return spec.ic_list.at(ic);
  return random_network_state(spec.model.nodes(), spec.ic_box.lo, spec.ic_box.hi, mix_seed(spec.seed, {ci, cdi, ic}));
}

bool SweepResult::divergent(std::size_t ci, std::size_t cdi) const { return std::isnan(mean(ci, cdi)); }

std::size_t SweepResult::count_below(double tolerance) const {
  return static_cast<std::size_t>(
      std::count_if(e_s_mean.begin(), e_s_mean.end(), [&](double v) { return std::isfinite(v) && v < tolerance; }));
}

SweepResult run_sweep(const SweepSpec& spec, std::size_t workers) {
  spec.validate();
  const std::size_t nc = spec.c_grid.size();
  const std::size_t ncd = spec.cd_grid.size();
  const std::size_t runs = spec.ic_count();
  const std::size_t tasks = nc * ncd * runs;

  // One slot per run; NaN marks divergence.
  std::vector<double> outcome(tasks, 0.0);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};

  auto work = [&] {
    for (;;) {
      const std::size_t task = next.fetch_add(1);
      if (task >= tasks || failed.load()) return;
      const std::size_t ic = task % runs;
      const std::size_t cell = task / runs;
      const std::size_t ci = cell / ncd;
      const std::size_t cdi = cell % ncd;
      try {
        NetworkModel model = spec.model;
        model.coupling.c = spec.c_grid[ci];
        model.coupling.cd = spec.cd_grid[cdi];
        const Vector x0 = sweep_initial_state(spec, ci, cdi, ic);
        try {
          outcome[task] = simulate(model, x0, spec.integrator).trailing_error(spec.window_fraction);
        } catch (const DivergenceError&) {
          outcome[task] = std::numeric_limits<double>::quiet_NaN();
        }
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
        return;
      }
    }
  };

  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, tasks);
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);

  SweepResult result;
  result.c_grid = spec.c_grid;
  result.cd_grid = spec.cd_grid;
  result.e_s_mean.resize(nc * ncd);
  result.n_diverged.resize(nc * ncd);
  result.provenance = {spec.seed, spec.integrator.dt, spec.integrator.t_end, spec.integrator.scheme,
                       spec.window_fraction, runs};
  for (std::size_t cell = 0; cell < nc * ncd; ++cell) {
    double sum = 0.0;
    std::size_t ok = 0;
    for (std::size_t ic = 0; ic < runs; ++ic) {
      const double v = outcome[cell * runs + ic];
      if (std::isnan(v)) continue;
      sum += v;
      ++ok;
    }
    result.n_diverged[cell] = runs - ok;
    result.e_s_mean[cell] = ok ? sum / static_cast<double>(ok) : std::numeric_limits<double>::quiet_NaN();
  }
  return result;
}

void write_sweep_csv(std::ostream& os, const SweepResult& r) {
  os << "c,c_d,e_s_mean,n_diverged\n";
  for (std::size_t ci = 0; ci < r.c_grid.size(); ++ci)
    for (std::size_t cdi = 0; cdi < r.cd_grid.size(); ++cdi) {
      const double m = r.mean(ci, cdi);
      fmt::print(os, "{:.17g},{:.17g},{},{}\n", r.c_grid[ci], r.cd_grid[cdi],
                 std::isnan(m) ? std::string("nan") : fmt::format("{:.17g}", m), r.diverged(ci, cdi));
    }
}

namespace {

double parse_number(const std::string& s, std::size_t line) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw ParameterError(fmt::format("sweep csv line {}: bad number '{}'", line, s));
  return v;
}

}  // namespace

SweepResult read_sweep_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "c,c_d,e_s_mean,n_diverged")
    throw ParameterError("sweep csv: missing header 'c,c_d,e_s_mean,n_diverged'");
  SweepResult r;
  std::vector<double> cs;
  std::vector<double> cds;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
    if (fields.size() != 4) throw ParameterError(fmt::format("sweep csv line {}: expected 4 fields", lineno));
    cs.push_back(parse_number(fields[0], lineno));
    cds.push_back(parse_number(fields[1], lineno));
    r.e_s_mean.push_back(parse_number(fields[2], lineno));
    r.n_diverged.push_back(static_cast<std::size_t>(parse_number(fields[3], lineno)));
  }
  if (cs.empty()) throw ParameterError("sweep csv has no rows");
  for (std::size_t k = 0; k < cs.size() && cs[k] == cs[0]; ++k) r.cd_grid.push_back(cds[k]);
  if (cs.size() % r.cd_grid.size() != 0) throw ParameterError("sweep csv rows do not form a grid");
  for (std::size_t k = 0; k < cs.size(); k += r.cd_grid.size()) r.c_grid.push_back(cs[k]);
  for (std::size_t k = 0; k < cs.size(); ++k)
    if (cs[k] != r.c_grid[k / r.cd_grid.size()] || cds[k] != r.cd_grid[k % r.cd_grid.size()])
      throw ParameterError(fmt::format("sweep csv row {} breaks the c-major grid order", k + 2));
  return r;
}

namespace {

std::string join(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += fmt::format("{}{:.17g}", i ? ", " : "", v[i]);
  return s + "]";
}

}  // namespace

void write_manifest(std::ostream& os, const SweepSpec& spec) {
  const auto& m = spec.model;
  fmt::print(os, "system = {}\n", to_string(m.node.kind));
  fmt::print(os, "n = {}\n", m.node.dim);
  fmt::print(os, "N = {}\n", m.nodes());
  fmt::print(os, "edges = {}\n", m.coupling.laplacian.edges().size());
  fmt::print(os, "lambda2 = {:.17g}\n", m.coupling.laplacian.algebraic_connectivity());
  fmt::print(os, "edges_d = {}\n", m.coupling.laplacian_d.edges().size());
  fmt::print(os, "lambda2_d = {:.17g}\n", m.coupling.laplacian_d.algebraic_connectivity());
  fmt::print(os, "c_grid = {}\n", join(spec.c_grid));
  fmt::print(os, "cd_grid = {}\n", join(spec.cd_grid));
  fmt::print(os, "runs_per_cell = {}\n", spec.ic_count());
  if (spec.ic_list.empty()) {
    fmt::print(os, "ic_lo = {}\n", join(spec.ic_box.lo));
    fmt::print(os, "ic_hi = {}\n", join(spec.ic_box.hi));
  } else {
    fmt::print(os, "ic_list = explicit\n");
  }
  fmt::print(os, "seed = {}\n", spec.seed);
  fmt::print(os, "seed_mixing = splitmix64 fold over (seed, c_index, cd_index, ic_index)\n");
  fmt::print(os, "dt = {:.17g}\n", spec.integrator.dt);
  fmt::print(os, "t_end = {:.17g}\n", spec.integrator.t_end);
  fmt::print(os, "scheme = {}\n", to_string(spec.integrator.scheme));
  fmt::print(os, "record_stride = {}\n", spec.integrator.record_stride);
  fmt::print(os, "sign_at_zero = {:.17g}\n", spec.integrator.sign_policy.at_zero);
  fmt::print(os, "hysteresis_band = {:.17g}\n", spec.integrator.sign_policy.hysteresis_band);
  fmt::print(os, "window_fraction = {:.17g}\n", spec.window_fraction);
}

}  // namespace pwsync
