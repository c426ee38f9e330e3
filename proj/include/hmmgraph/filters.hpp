#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hmmgraph/graph.hpp"
#include "hmmgraph/models.hpp"

namespace hmmgraph {

/// Probability vector over H hypotheses, stored as normalized log weights
/// (log-sum-exp equal to zero). Entries may be -inf for zero probability.
class Belief {
 public:
  Belief() = default;

  /// Normalizes arbitrary finite-or-(-inf) log weights. Throws
  /// std::invalid_argument if all weights are -inf or any is NaN/+inf.
  static Belief from_log_weights(Eigen::VectorXd log_weights);
  static Belief from_probabilities(const Eigen::Ref<const Eigen::VectorXd>& probabilities);
  static Belief uniform(std::size_t num_hypotheses);
  static Belief point_mass(std::size_t num_hypotheses, Hypothesis theta);

  std::size_t size() const { return static_cast<std::size_t>(log_p_.size()); }
  const Eigen::VectorXd& log_probabilities() const { return log_p_; }
  double log_probability(Hypothesis theta) const { return log_p_(static_cast<Eigen::Index>(theta)); }
  double probability(Hypothesis theta) const;
  Eigen::VectorXd probabilities() const;

  bool strictly_positive() const;

  /// Most probable hypothesis; ties go to the lowest index. Reporting only.
  Hypothesis map_estimate() const;

 private:
  explicit Belief(Eigen::VectorXd normalized) : log_p_(std::move(normalized)) {}

  Eigen::VectorXd log_p_;
};

/// log-sum-exp of a vector, -inf for an all -inf input.
double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& values);

struct NetworkBeliefState {
  std::vector<Belief> agents;
  std::size_t time = 0;

  std::size_t num_agents() const { return agents.size(); }
};

/// K x H matrix of log L_k(xi_{k,i} | theta) for one time instant.
using LogLikelihoodMatrix = Eigen::MatrixXd;

struct DiffusionConfig {
  double gamma = 1.0;
  CombinationMatrix combination;
  TransitionModel transition;
  LikelihoodSet likelihoods;

  /// gamma > 0 and K agrees across combination and likelihoods. Throws
  /// std::invalid_argument.
  void validate() const;
};

struct AslConfig {
  double delta = 0.1;
  CombinationMatrix combination;
  LikelihoodSet likelihoods;

  void validate() const;
};

// Centralized optimal filter.

/// eta(theta) = sum_prev T(theta | prev) mu(prev).
Belief centralized_evolve(const Belief& prior, const TransitionModel& transition);

/// log mu = sum_k log L_k(xi_k | theta) + log eta, normalized.
Belief centralized_adapt(const Belief& eta, const LogLikelihoodMatrix& log_likelihoods);
Belief centralized_adapt(const Belief& eta, const Eigen::Ref<const Eigen::RowVectorXd>& joint_observation,
                         const LikelihoodSet& likelihoods);

struct CentralizedStep {
  Belief posterior;
  Belief eta;
};

CentralizedStep centralized_step(const Belief& previous, const LogLikelihoodMatrix& log_likelihoods,
                                 const TransitionModel& transition);

// Diffusion HMM filter: evolve, adapt, combine.

std::vector<Belief> diffusion_evolve(const NetworkBeliefState& state, const TransitionModel& transition);

/// log psi_k = gamma log L_k(xi_k | theta) + log eta_k, normalized per agent.
std::vector<Belief> diffusion_adapt(std::span<const Belief> etas, const LogLikelihoodMatrix& log_likelihoods,
                                    double gamma);

/// log mu_k = sum_l a_{lk} log psi_l, normalized per agent.
std::vector<Belief> diffusion_combine(std::span<const Belief> psis, const CombinationMatrix& combination);

struct DiffusionStep {
  NetworkBeliefState state;
  std::vector<Belief> etas;
};

DiffusionStep diffusion_step(const NetworkBeliefState& state, const LogLikelihoodMatrix& log_likelihoods,
                             const DiffusionConfig& config);
/// Same step from raw observations, evaluated through config.likelihoods.
DiffusionStep diffusion_step_from_observations(const NetworkBeliefState& state,
                                               const Eigen::Ref<const Eigen::RowVectorXd>& observation_row,
                                               const DiffusionConfig& config);

// Adaptive social learning baseline. No evolve stage:
//   log psi_k = (1 - delta) log mu_k + delta log L_k(xi_k | theta)
// followed by the same log-linear combine.

NetworkBeliefState asl_step(const NetworkBeliefState& state, const LogLikelihoodMatrix& log_likelihoods,
                            const AslConfig& config);
NetworkBeliefState asl_step_from_observations(const NetworkBeliefState& state,
                                              const Eigen::Ref<const Eigen::RowVectorXd>& observation_row,
                                              const AslConfig& config);

// Driving several strategies over one shared observation stream.

enum class StrategyKind { kCentralized, kDiffusion, kAsl };

struct StrategySpec {
  std::string name;
  StrategyKind kind = StrategyKind::kDiffusion;
  double gamma = 1.0;  // diffusion
  double delta = 0.1;  // ASL
  std::vector<Belief> initial;  // per agent; a single entry for centralized
};

/// Belief history of one strategy. beliefs[i] is the state after i steps
/// (beliefs[0] holds the priors); etas[i-1] are the time-adjusted priors of
/// step i, empty for strategies without an evolve stage. The centralized
/// filter is recorded as a one-agent network.
struct FilterHistory {
  std::string name;
  StrategyKind kind = StrategyKind::kDiffusion;
  std::vector<NetworkBeliefState> beliefs;
  std::vector<std::vector<Belief>> etas;
};

struct FilterBankModel {
  TransitionModel transition;
  CombinationMatrix combination;
  LikelihoodSet likelihoods;
};

/// Steps every strategy once per observation row, in order. The callback sees
/// the log-likelihood matrix shared by all strategies and each strategy's new
/// state.
class FilterBank {
 public:
  struct StepView {
    std::size_t time;
    const std::vector<NetworkBeliefState>& beliefs;
    const std::vector<std::vector<Belief>>& etas;  // empty vector for ASL
  };

  /// Validates positivity of every initial belief, hypothesis counts and
  /// strategy parameters; throws std::invalid_argument listing the offender.
  FilterBank(FilterBankModel model, std::vector<StrategySpec> strategies);

  const std::vector<StrategySpec>& strategies() const { return strategies_; }
  const std::vector<NetworkBeliefState>& beliefs() const { return beliefs_; }
  const std::vector<std::vector<Belief>>& etas() const { return etas_; }
  std::size_t time() const { return time_; }

  void step(const Eigen::Ref<const Eigen::RowVectorXd>& observation_row);

 private:
  FilterBankModel model_;
  std::vector<StrategySpec> strategies_;
  std::vector<NetworkBeliefState> beliefs_;
  std::vector<std::vector<Belief>> etas_;
  std::size_t time_ = 0;
};

/// Runs all strategies over the same observations and keeps full histories.
std::vector<FilterHistory> run_filters(const FilterBankModel& model, const std::vector<StrategySpec>& strategies,
                                       const ObservationMatrix& observations);

}  // namespace hmmgraph
