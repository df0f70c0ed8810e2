#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>

#include "config.hpp"
#include "pwsync/integrator.hpp"
#include "pwsync/network.hpp"
#include "pwsync/quad.hpp"
#include "pwsync/sweep.hpp"

namespace pwsync::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kConfigError = 2, kHypothesisViolation = 3, kDivergence = 4 };

struct RunOptions {
  std::string out_dir = ".";
  std::size_t workers = 1;
  /// Overrides ics.seed and sweep.seed.
  std::optional<std::uint64_t> seed;
};

VectorFieldSpec build_system(const Config& cfg);

struct BuiltGraph {
  LaplacianMatrix laplacian;
  std::size_t retries = 0;
};

/// [graph] layer; `second` reads the d_* keys (d_kind = same copies `first`).
BuiltGraph build_graph(const Config& cfg, bool second, const LaplacianMatrix* first = nullptr);

/// Model with gains taken from coupling.c / coupling.cd (factors not applied).
NetworkModel build_model(const Config& cfg);

/// Threshold for [certify]. λ_2 comes from certify.lambda2 or `laplacian`.
ThresholdReport compute_thresholds(const Config& cfg, const VectorFieldSpec& spec, const LaplacianMatrix* laplacian);

/// Applies coupling.c_factor / cd_factor against compute_thresholds.
void resolve_gains(const Config& cfg, NetworkModel& model);

IntegratorConfig build_integrator(const Config& cfg, double default_t_end);

/// Explicit [ics] states, or a box draw with ics.seed.
Vector build_initial_state(const Config& cfg, const NetworkModel& model, const RunOptions& opts);

SweepSpec build_sweep(const Config& cfg, const RunOptions& opts);

int cmd_thresholds(const Config& cfg, const RunOptions& opts, std::ostream& out);
int cmd_simulate(const Config& cfg, const RunOptions& opts, std::ostream& out);
int cmd_sweep(const Config& cfg, const RunOptions& opts, std::ostream& out);
int cmd_graph(const Config& cfg, const RunOptions& opts, std::ostream& out, std::ostream& err);

/// Runs `body`, printing `error: ...` to err and mapping exception types to
/// exit codes.
int guarded(const std::function<int()>& body, std::ostream& err);

}  // namespace pwsync::cli
