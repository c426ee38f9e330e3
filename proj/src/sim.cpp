#include "hmmgraph/sim.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>

#include <fmt/format.h>

#include "hmmgraph/io.hpp"

namespace hmmgraph {

namespace {

std::string observation_digest(const ObservationMatrix& obs) {
  std::string bytes;
  bytes.reserve(static_cast<std::size_t>(obs.size()) * 8);
  for (Eigen::Index i = 0; i < obs.rows(); ++i) {
    for (Eigen::Index k = 0; k < obs.cols(); ++k) {
      const auto bits = std::bit_cast<std::uint64_t>(obs(i, k));
      for (int b = 0; b < 8; ++b) bytes.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
    }
  }
  return sha256_hex(bytes);
}

std::vector<StrategySpec> strategy_specs(const ExperimentConfig& config, std::size_t num_agents) {
  const std::size_t h = config.num_hypotheses();
  std::vector<StrategySpec> specs;
  StrategySpec central;
  central.name = "chmm";
  central.kind = StrategyKind::kCentralized;
  central.initial = config.centralized_prior.materialize(1, h);
  specs.push_back(std::move(central));
  for (const auto& s : config.strategies) {
    StrategySpec spec;
    spec.name = s.name;
    spec.kind = s.kind;
    spec.gamma = s.gamma_for(num_agents);
    spec.delta = s.delta;
    spec.initial = s.prior.materialize(num_agents, h);
    specs.push_back(std::move(spec));
  }
  return specs;
}

ReadoutWindow window_for(const ExperimentConfig& config) {
  if (config.window) return {config.window->first, config.window->second};
  return ReadoutWindow::final_fifth(config.horizon);
}

struct BlockResult {
  std::vector<RiskAccumulator> accumulators;
  Eigen::MatrixXd final_agent_log;         // rows: runs in block; cols: strategy-major agents
  Eigen::VectorXd final_centralized_log;   // runs in block
};

}  // namespace

RunArtifact simulate_run(const ExperimentConfig& config, const Topology& topology, std::size_t run,
                         bool keep_histories) {
  const std::size_t k_count = topology.num_agents();
  const std::size_t h = config.num_hypotheses();
  const TransitionModel transition = config.transition_model();
  FilterBankModel model{transition, metropolis_weights(topology), config.likelihood.build(k_count, h)};
  const std::vector<StrategySpec> specs = strategy_specs(config, k_count);

  RunArtifact artifact;
  artifact.run = run;
  Rng chain_rng(StreamKey{config.base_seed, run, StreamPurpose::kChain, 0});
  artifact.trajectory = sample_trajectory(transition, config.horizon, chain_rng);
  ObservationMatrix obs = sample_observations(model.likelihoods, artifact.trajectory,
                                              StreamKey{config.base_seed, run, StreamPurpose::kObservation, 0});
  artifact.observation_digest = observation_digest(obs);

  FilterBank bank(model, specs);
  const std::size_t n = config.horizon;
  for (std::size_t s = 1; s < specs.size(); ++s) {
    RunDivergences d;
    d.with_prior = specs[s].kind != StrategyKind::kAsl;
    d.posterior.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k_count));
    if (d.with_prior) d.prior.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k_count));
    artifact.divergences.push_back(std::move(d));
  }
  if (keep_histories) {
    for (std::size_t s = 0; s < specs.size(); ++s) {
      FilterHistory hist;
      hist.name = specs[s].name;
      hist.kind = specs[s].kind;
      hist.beliefs.push_back(bank.beliefs()[s]);
      artifact.histories.push_back(std::move(hist));
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    bank.step(obs.row(static_cast<Eigen::Index>(i)));
    const Belief& mu_star = bank.beliefs()[0].agents.front();
    const Belief& eta_star = bank.etas()[0].front();
    for (std::size_t s = 1; s < specs.size(); ++s) {
      RunDivergences& d = artifact.divergences[s - 1];
      const auto& agents = bank.beliefs()[s].agents;
      for (std::size_t k = 0; k < k_count; ++k) {
        const auto r = static_cast<Eigen::Index>(i);
        const auto c = static_cast<Eigen::Index>(k);
        d.posterior(r, c) = kl_divergence(mu_star, agents[k]);
        if (d.with_prior) d.prior(r, c) = kl_divergence(eta_star, bank.etas()[s][k]);
      }
    }
    if (keep_histories) {
      for (std::size_t s = 0; s < specs.size(); ++s) {
        artifact.histories[s].beliefs.push_back(bank.beliefs()[s]);
        if (specs[s].kind != StrategyKind::kAsl) artifact.histories[s].etas.push_back(bank.etas()[s]);
      }
    }
  }

  if (n > 0) {
    const Hypothesis truth = artifact.trajectory.states.back();
    artifact.centralized_final_log_belief = bank.beliefs()[0].agents.front().log_probability(truth);
    for (std::size_t s = 1; s < specs.size(); ++s) {
      Eigen::VectorXd logs(static_cast<Eigen::Index>(k_count));
      for (std::size_t k = 0; k < k_count; ++k) {
        logs(static_cast<Eigen::Index>(k)) = bank.beliefs()[s].agents[k].log_probability(truth);
      }
      artifact.final_log_beliefs.push_back(std::move(logs));
    }
  }
  if (keep_histories) artifact.observations = std::move(obs);
  return artifact;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  ExperimentResult result;
  result.name = config.name;
  const TransitionModel transition = config.transition_model();
  result.kappa = dobrushin_coefficient(transition);
  const std::size_t h = config.num_hypotheses();
  const ReadoutWindow window = window_for(config);
  const std::size_t n = config.horizon;

  std::size_t workers = options.workers ? options.workers : config.workers;
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());

  if (result.kappa >= 1.0) {
    result.notes.push_back(fmt::format(
        "risk bounds skipped: Dobrushin coefficient {} is not < 1, the chain is not geometrically ergodic",
        result.kappa));
  }

  for (const auto& topo_spec : config.topologies) {
    const Topology topology = build_topology(topo_spec, config.fixture_dir);
    const std::size_t k_count = topology.num_agents();
    const CombinationMatrix combination = metropolis_weights(topology);
    const std::vector<StrategySpec> specs = strategy_specs(config, k_count);
    const std::size_t num_strategies = specs.size() - 1;

    TopologyOutcome outcome;
    outcome.name = topo_spec.name;
    outcome.num_agents = k_count;
    outcome.rho2 = second_eigenvalue_magnitude(combination);
    outcome.sample = simulate_run(config, topology, 0, true);

    const std::size_t num_blocks = (config.runs + kRunsPerBlock - 1) / kRunsPerBlock;
    std::vector<std::optional<BlockResult>> blocks(num_blocks);
    std::atomic<std::size_t> next_block{0};
    std::atomic<std::size_t> runs_done{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::mutex progress_mutex;

    auto worker = [&] {
      while (true) {
        const std::size_t b = next_block.fetch_add(1);
        if (b >= num_blocks) return;
        try {
          const std::size_t first = b * kRunsPerBlock;
          const std::size_t last = std::min(config.runs, first + kRunsPerBlock);
          BlockResult block;
          for (std::size_t s = 1; s < specs.size(); ++s) {
            block.accumulators.emplace_back(n, k_count, specs[s].kind != StrategyKind::kAsl, window);
          }
          block.final_agent_log.resize(static_cast<Eigen::Index>(last - first),
                                       static_cast<Eigen::Index>(num_strategies * k_count));
          block.final_centralized_log.resize(static_cast<Eigen::Index>(last - first));
          for (std::size_t run = first; run < last; ++run) {
            const RunArtifact a = run == 0 ? outcome.sample : simulate_run(config, topology, run, false);
            for (std::size_t s = 0; s < num_strategies; ++s) block.accumulators[s].add(a.divergences[s]);
            const auto row = static_cast<Eigen::Index>(run - first);
            if (n > 0) {
              block.final_centralized_log(row) = a.centralized_final_log_belief;
              for (std::size_t s = 0; s < num_strategies; ++s) {
                block.final_agent_log.row(row).segment(static_cast<Eigen::Index>(s * k_count),
                                                       static_cast<Eigen::Index>(k_count)) =
                    a.final_log_beliefs[s].transpose();
              }
            }
          }
          blocks[b] = std::move(block);
          const std::size_t done = runs_done.fetch_add(last - first) + (last - first);
          if (options.progress) {
            std::lock_guard lock(progress_mutex);
            options.progress(done, config.runs);
          }
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          next_block.store(num_blocks);
          return;
        }
      }
    };

    const std::size_t thread_count = std::min(workers, num_blocks);
    if (thread_count <= 1) {
      worker();
    } else {
      std::vector<std::thread> threads;
      for (std::size_t t = 0; t < thread_count; ++t) threads.emplace_back(worker);
      for (auto& t : threads) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    std::vector<RiskAccumulator> totals;
    for (std::size_t s = 1; s < specs.size(); ++s) totals.emplace_back(n, k_count, specs[s].kind != StrategyKind::kAsl, window);
    TrueStateLogBeliefs true_state;
    true_state.agent.resize(static_cast<Eigen::Index>(config.runs), static_cast<Eigen::Index>(num_strategies * k_count));
    true_state.centralized.resize(static_cast<Eigen::Index>(config.runs));
    for (std::size_t b = 0; b < num_blocks; ++b) {
      const BlockResult& block = *blocks[b];
      for (std::size_t s = 0; s < num_strategies; ++s) totals[s].merge(block.accumulators[s]);
      const auto first = static_cast<Eigen::Index>(b * kRunsPerBlock);
      const auto rows = block.final_centralized_log.size();
      true_state.agent.middleRows(first, rows) = block.final_agent_log;
      true_state.centralized.segment(first, rows) = block.final_centralized_log;
    }

    const LikelihoodSet likelihoods = config.likelihood.build(k_count, h);
    std::optional<Eigen::VectorXd> stationary;
    if (result.kappa < 1.0) stationary = stationary_distribution(transition);

    for (std::size_t s = 0; s < num_strategies; ++s) {
      const StrategySpec& spec = specs[s + 1];
      StrategyOutcome so;
      so.name = spec.name;
      so.kind = spec.kind;
      if (spec.kind == StrategyKind::kDiffusion) so.gamma = spec.gamma;
      if (spec.kind == StrategyKind::kAsl) so.delta = spec.delta;
      so.risk = totals[s].finish();
      if (spec.kind == StrategyKind::kDiffusion && stationary) {
        so.bound = theorem1_bound(transition, combination, spec.gamma, likelihoods, *stationary,
                                  config.bound_samples, config.base_seed);
        if (n > 0) {
          TrueStateLogBeliefs samples;
          samples.centralized = true_state.centralized;
          samples.agent = true_state.agent.middleCols(static_cast<Eigen::Index>(s * k_count),
                                                      static_cast<Eigen::Index>(k_count));
          std::vector<double> eps = epsilon_from_spread(samples, config.corollary_epsilon_factor);
          // Identical beliefs give a zero spread; any positive epsilon then
          // yields p = 1.
          for (double& e : eps) {
            if (!(e > 0.0)) e = 1.0;
          }
          so.corollary = corollary1_check(samples, eps, so.bound->posterior_bound);
        }
      }
      outcome.strategies.push_back(std::move(so));
    }
    result.topologies.push_back(std::move(outcome));
  }
  return result;
}

GammaSweepResult gamma_sweep(const ExperimentConfig& config, const std::vector<double>& gammas,
                             const RunOptions& options) {
  if (gammas.empty()) throw std::invalid_argument("gamma sweep needs at least one gamma");
  if (config.topologies.empty()) throw std::invalid_argument("gamma sweep needs a topology");
  ExperimentConfig sweep = config;
  sweep.topologies.resize(1);
  PriorSpec prior;
  for (const auto& s : config.strategies) {
    if (s.kind == StrategyKind::kDiffusion) {
      prior = s.prior;
      break;
    }
  }
  sweep.strategies.clear();
  for (double g : gammas) {
    if (!(g > 0.0)) throw std::invalid_argument(fmt::format("gamma sweep: gamma > 0 required (got {})", g));
    StrategyConfig s;
    s.name = fmt::format("gamma={}", format_real(g));
    s.kind = StrategyKind::kDiffusion;
    s.gamma = g;
    s.prior = prior;
    sweep.strategies.push_back(std::move(s));
  }
  ExperimentResult r = run_experiment(sweep, options);
  TopologyOutcome& t = r.topologies.front();
  GammaSweepResult out;
  out.topology = t.name;
  out.num_agents = t.num_agents;
  out.rho2 = t.rho2;
  out.centralized_history = t.sample.histories.front();
  out.sample_trajectory = t.sample.trajectory;
  for (std::size_t i = 0; i < gammas.size(); ++i) {
    GammaSweepEntry e;
    e.gamma = gammas[i];
    e.lambda = bound_lambda(t.num_agents, gammas[i], t.rho2);
    e.outcome = std::move(t.strategies[i]);
    e.sample_history = t.sample.histories[i + 1];
    out.entries.push_back(std::move(e));
  }
  return out;
}

}  // namespace hmmgraph
