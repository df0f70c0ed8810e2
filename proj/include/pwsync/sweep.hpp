#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "pwsync/integrator.hpp"
#include "pwsync/network.hpp"
#include "pwsync/quad.hpp"

namespace pwsync {

struct SweepSpec {
  /// Gains c and c_d in the template are ignored.
  NetworkModel model;
  std::vector<double> c_grid{};
  std::vector<double> cd_grid{};
  std::size_t n_ic = 5;
  /// Per-coordinate box for one node; every node is drawn from it.
  Box ic_box{};
  /// Explicit network states (N·n each). When nonempty they replace the box
  /// draws and n_ic is ignored.
  std::vector<Vector> ic_list{};
  std::uint64_t seed = 0;
  IntegratorConfig integrator{.dt = 1e-3, .t_end = 200.0};
  double window_fraction = 0.1;

  std::size_t ic_count() const { return ic_list.empty() ? n_ic : ic_list.size(); }
  void validate() const;
};

/// Initial state for run (ci, cdi, ic): explicit list entry, or a box draw
/// seeded by mix_seed(seed, {ci, cdi, ic}).
Vector sweep_initial_state(const SweepSpec& spec, std::size_t ci, std::size_t cdi, std::size_t ic);

struct SweepProvenance {
  std::uint64_t seed = 0;
  double dt = 0.0;
  double t_end = 0.0;
  Scheme scheme = Scheme::rk4;
  double window_fraction = 0.0;
  std::size_t runs_per_cell = 0;
};

/// Cells stored row-major over c then c_d.
struct SweepResult {
  std::vector<double> c_grid{};
  std::vector<double> cd_grid{};
  /// Mean trailing e_s over non-divergent runs; NaN when every run diverged.
  std::vector<double> e_s_mean;
  std::vector<std::size_t> n_diverged;
  SweepProvenance provenance;

  std::size_t index(std::size_t ci, std::size_t cdi) const { return ci * cd_grid.size() + cdi; }
  double mean(std::size_t ci, std::size_t cdi) const { return e_s_mean[index(ci, cdi)]; }
  std::size_t diverged(std::size_t ci, std::size_t cdi) const { return n_diverged[index(ci, cdi)]; }
  /// Every run in the cell diverged.
  bool divergent(std::size_t ci, std::size_t cdi) const;
  /// Cells with a finite mean below `tolerance`.
  std::size_t count_below(double tolerance) const;
};

/// Runs every (c, c_d, ic) simulation on `workers` threads (0 = hardware
/// concurrency). The result does not depend on the worker count.
SweepResult run_sweep(const SweepSpec& spec, std::size_t workers = 1);

/// `c,c_d,e_s_mean,n_diverged`, 17 significant digits, NaN as `nan`.
void write_sweep_csv(std::ostream& os, const SweepResult& result);
/// Parses the CSV back; grids are recovered from the row order.
SweepResult read_sweep_csv(std::istream& is);

/// Key-value echo of the spec for provenance.
void write_manifest(std::ostream& os, const SweepSpec& spec);

}  // namespace pwsync
