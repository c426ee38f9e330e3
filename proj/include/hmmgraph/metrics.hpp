#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hmmgraph/divergence.hpp"
#include "hmmgraph/filters.hpp"
#include "hmmgraph/graph.hpp"
#include "hmmgraph/models.hpp"

namespace hmmgraph {

/// Per-run divergences from the centralized filter. Row i corresponds to time
/// i+1. posterior(i, k) = D(mu*_i || mu_{k,i}); prior(i, k) = D(eta*_i ||
/// eta_{k,i}), left empty (0 x 0) for strategies without time-adjusted priors.
struct RunDivergences {
  Eigen::MatrixXd posterior;
  Eigen::MatrixXd prior;
  bool with_prior = false;

  bool has_prior() const { return with_prior; }
};

/// Computes the divergences of one distributed history against a centralized
/// history recorded on the same observations.
RunDivergences divergences_from_histories(const FilterHistory& centralized, const FilterHistory& distributed);

/// Inclusive time window [first, last] (1-based times) used for the asymptotic
/// read-out.
struct ReadoutWindow {
  std::size_t first = 1;
  std::size_t last = 1;

  /// Final fifth of a horizon, [N - N/5 + 1, N] with at least one step.
  static ReadoutWindow final_fifth(std::size_t horizon);
};

/// Monte Carlo estimates of J_i and J~_i per time and agent.
struct RiskTrace {
  std::size_t runs = 0;
  Eigen::MatrixXd j_mean;       // horizon x K
  Eigen::MatrixXd j_stderr;     // NaN when runs < 2
  Eigen::MatrixXd jt_mean;      // empty without priors
  Eigen::MatrixXd jt_stderr;
  bool with_prior = false;
  ReadoutWindow window;
  // Network-average, window-averaged risk: mean over runs and its standard
  // error over runs.
  double asymptotic_j = 0.0;
  double asymptotic_j_stderr = 0.0;
  double asymptotic_jt = 0.0;
  double asymptotic_jt_stderr = 0.0;

  std::size_t horizon() const { return static_cast<std::size_t>(j_mean.rows()); }
  std::size_t num_agents() const { return static_cast<std::size_t>(j_mean.cols()); }
  bool has_prior() const { return with_prior; }
  bool has_stderr() const { return runs >= 2; }

  /// Window average of the per-agent mean risk.
  Eigen::VectorXd asymptotic_per_agent() const;
};

/// Streaming accumulator over runs. Runs are summed in the order added; the
/// harness adds them in run-index order, which fixes the floating-point
/// reduction independently of worker scheduling.
class RiskAccumulator {
 public:
  RiskAccumulator(std::size_t horizon, std::size_t num_agents, bool with_prior, ReadoutWindow window);

  void add(const RunDivergences& run);
  void merge(const RiskAccumulator& other);
  RiskTrace finish() const;

  std::size_t runs() const { return runs_; }

 private:
  std::size_t runs_ = 0;
  bool with_prior_;
  ReadoutWindow window_;
  Eigen::MatrixXd j_sum_, j_sq_, jt_sum_, jt_sq_;
  double asym_j_sum_ = 0.0, asym_j_sq_ = 0.0, asym_jt_sum_ = 0.0, asym_jt_sq_ = 0.0;
};

/// Throws std::invalid_argument when the runs disagree in shape.
RiskTrace estimate_risks(std::span<const RunDivergences> runs, ReadoutWindow window);

struct TheoremBound {
  double lambda = 0.0;
  double kappa = 0.0;
  double rho2 = 0.0;
  double gamma = 0.0;
  std::size_t num_agents = 0;
  double sup_expected_linf = 0.0;         // E ||L_xi||_inf under the stationary chain
  double sup_expected_linf_stderr = 0.0;
  std::size_t samples = 0;
  double posterior_bound = 0.0;           // bound on limsup J
  double prior_bound = 0.0;               // bound on limsup J~, = kappa * posterior_bound
};

/// lambda = max(|1 - K / gamma|, rho2).
double bound_lambda(std::size_t num_agents, double gamma, double rho2);

/// Evaluates the asymptotic risk bounds. The expected sup-norm of the stacked
/// log-likelihood vector is estimated by drawing theta from `stationary`, one
/// observation per agent, and taking the largest |log L_l(xi_l | theta')| over
/// every agent l and every hypothesis theta'. Throws std::invalid_argument when
/// the chain is not geometrically ergodic (Dobrushin coefficient >= 1).
TheoremBound theorem1_bound(const TransitionModel& transition, const CombinationMatrix& combination, double gamma,
                            const LikelihoodSet& likelihoods, const Eigen::VectorXd& stationary,
                            std::size_t mc_samples, std::uint64_t seed);

/// Flat "key = value" rendering.
void write_bound(std::ostream& out, const TheoremBound& bound, const std::string& prefix = {});

struct CorollaryAgentReport {
  double mean_log_ratio = 0.0;
  double variance = 0.0;
  double epsilon = 0.0;
  double theoretical_p = 0.0;
  double empirical_fraction = 0.0;
  double violation_rate = 0.0;
  double binomial_stderr = 0.0;
  bool informative = true;  // theoretical_p > 0
  bool satisfied = true;    // empirical >= theoretical - 3 stderr
};

struct CorollaryReport {
  double bound_b = 0.0;
  std::size_t runs = 0;
  std::vector<CorollaryAgentReport> agents;

  bool all_satisfied() const;
  bool all_informative() const;
};

/// Log-ratios log mu*_i(theta_i) - log mu_{k,i}(theta_i) at the true state of
/// each run, runs x K, together with the log of the centralized belief at the
/// true state (needed for the lower-bound event).
struct TrueStateLogBeliefs {
  Eigen::MatrixXd agent;        // runs x K: log mu_{k,i}(theta_i)
  Eigen::VectorXd centralized;  // runs: log mu*_i(theta_i)
};

/// Checks mu_{k,i}(theta) >= mu*_i(theta) exp(-eps - B) across runs against the
/// Chebyshev probability 1 - Var / eps^2. `epsilon` has one entry per agent,
/// or a single entry shared by all agents.
CorollaryReport corollary1_check(const TrueStateLogBeliefs& samples, std::span<const double> epsilon, double bound_b);

/// epsilon_k = factor * (sample standard deviation of agent k's log-ratio).
std::vector<double> epsilon_from_spread(const TrueStateLogBeliefs& samples, double factor);

}  // namespace hmmgraph
