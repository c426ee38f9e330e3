#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hmmgraph/config.hpp"
#include "hmmgraph/filters.hpp"
#include "hmmgraph/metrics.hpp"
#include "hmmgraph/models.hpp"

namespace hmmgraph {

/// Everything recorded for one Monte Carlo run. Only the sample run keeps the
/// full observation matrix and histories; the digest identifies the stream.
struct RunArtifact {
  std::size_t run = 0;
  StateTrajectory trajectory;
  std::string observation_digest;  // SHA-256 of the little-endian observation bytes
  ObservationMatrix observations;
  std::vector<FilterHistory> histories;  // centralized first, then strategies in config order
  std::vector<RunDivergences> divergences;  // one per configured strategy
  // Log beliefs at the true state after the final step: the centralized filter
  // and, per configured strategy, every agent.
  double centralized_final_log_belief = 0.0;
  std::vector<Eigen::VectorXd> final_log_beliefs;
};

struct StrategyOutcome {
  std::string name;
  StrategyKind kind = StrategyKind::kDiffusion;
  double gamma = 0.0;  // diffusion only
  double delta = 0.0;  // ASL only
  RiskTrace risk;
  std::optional<TheoremBound> bound;        // diffusion with an ergodic chain
  std::optional<CorollaryReport> corollary;  // diffusion with a bound, at the final time
};

struct TopologyOutcome {
  std::string name;
  std::size_t num_agents = 0;
  double rho2 = 0.0;
  std::vector<StrategyOutcome> strategies;
  RunArtifact sample;
};

struct ExperimentResult {
  std::string name;
  double kappa = 0.0;
  std::vector<TopologyOutcome> topologies;
  std::vector<std::string> notes;  // e.g. why bounds were skipped
};

struct RunOptions {
  std::size_t workers = 0;  // overrides the config when nonzero
  /// Called after each finished block of runs with (runs done, runs total).
  std::function<void(std::size_t, std::size_t)> progress;
};

/// Number of runs reduced together before blocks are merged in index order.
/// Fixed, so results do not depend on the worker count.
inline constexpr std::size_t kRunsPerBlock = 50;

/// Simulates one run: chain from stream (seed, run, chain), observations from
/// (seed, run, observation, k). All strategies consume the same observations.
RunArtifact simulate_run(const ExperimentConfig& config, const Topology& topology, std::size_t run,
                         bool keep_histories);

/// Runs every topology of the config, comparing each configured strategy to
/// the centralized filter on shared data. Deterministic given the config.
ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

struct GammaSweepEntry {
  double gamma = 0.0;
  double lambda = 0.0;
  StrategyOutcome outcome;
  FilterHistory sample_history;
};

struct GammaSweepResult {
  std::string topology;
  std::size_t num_agents = 0;
  double rho2 = 0.0;
  std::vector<GammaSweepEntry> entries;
  FilterHistory centralized_history;
  StateTrajectory sample_trajectory;
};

/// Replaces the configured strategies by one diffusion filter per gamma (paired
/// seeds) and runs the first topology of the config.
GammaSweepResult gamma_sweep(const ExperimentConfig& config, const std::vector<double>& gammas,
                             const RunOptions& options = {});

}  // namespace hmmgraph
