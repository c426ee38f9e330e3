#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hmmgraph/rng.hpp"

namespace hmmgraph {

using Hypothesis = std::size_t;

/// Known Markov chain over the hypotheses {0, ..., H-1}. Row p of the matrix
/// holds T(. | p), the law of the next state given the previous state p.
class TransitionModel {
 public:
  /// Throws std::invalid_argument unless H >= 2, every row and the initial
  /// distribution are probability vectors (sum 1 within 1e-12), and shapes
  /// agree. An empty initial distribution means uniform.
  TransitionModel(Eigen::MatrixXd matrix, Eigen::VectorXd initial_distribution = {});

  std::size_t num_hypotheses() const { return static_cast<std::size_t>(matrix_.rows()); }
  const Eigen::MatrixXd& matrix() const { return matrix_; }
  const Eigen::VectorXd& initial_distribution() const { return initial_; }
  double operator()(Hypothesis next, Hypothesis previous) const { return matrix_(previous, next); }

  TransitionModel with_initial_distribution(Eigen::VectorXd initial) const {
    return TransitionModel(matrix_, std::move(initial));
  }

 private:
  Eigen::MatrixXd matrix_;
  Eigen::VectorXd initial_;
};

/// Two states; stay with probability 1-delta, flip with probability delta.
TransitionModel binary_symmetric_transition(double delta);

/// Largest total-variation distance between two rows of T.
double dobrushin_coefficient(const TransitionModel& transition);

/// Stationary law by power iteration on the rows. Converges geometrically when
/// the Dobrushin coefficient is below one; throws std::invalid_argument
/// otherwise.
Eigen::VectorXd stationary_distribution(const TransitionModel& transition);

struct StateTrajectory {
  std::vector<Hypothesis> states;

  std::size_t size() const { return states.size(); }
  Hypothesis operator[](std::size_t i) const { return states[i]; }
};

/// Draws one hypothesis from a probability vector by inverting its CDF.
Hypothesis sample_categorical(const Eigen::Ref<const Eigen::VectorXd>& probabilities, Rng& rng);

StateTrajectory sample_trajectory(const TransitionModel& transition, std::size_t length, Rng& rng);

/// Per-agent observation family L_k(xi | theta). Observation is the type of a
/// single private measurement.
template <typename Observation>
class LikelihoodModel {
 public:
  virtual ~LikelihoodModel() = default;

  virtual std::size_t num_hypotheses() const = 0;

  /// log L(xi | theta). Implementations throw std::domain_error for
  /// observations outside the declared support.
  virtual double log_likelihood(const Observation& xi, Hypothesis theta) const = 0;

  virtual Observation sample(Hypothesis theta, Rng& rng) const = 0;

  /// alpha with |log L(xi | theta)| <= alpha on the whole support.
  virtual double log_bound() const = 0;

  double likelihood(const Observation& xi, Hypothesis theta) const;
};

template <typename Observation>
double LikelihoodModel<Observation>::likelihood(const Observation& xi, Hypothesis theta) const {
  return std::exp(log_likelihood(xi, theta));
}

using ScalarLikelihood = LikelihoodModel<double>;
using LikelihoodSet = std::vector<std::shared_ptr<const ScalarLikelihood>>;

/// Gaussian N(mean_theta, sigma^2) restricted to [lo, hi] and renormalized by
/// Z_theta, the Gaussian mass of the interval.
class TruncatedGaussianLikelihood final : public ScalarLikelihood {
 public:
  TruncatedGaussianLikelihood(std::vector<double> means, double sigma, double lo, double hi);

  /// Means theta + 1, sigma 1, support [-1, 2] for the given hypothesis count.
  static TruncatedGaussianLikelihood shifted_unit(std::size_t num_hypotheses);

  std::size_t num_hypotheses() const override { return means_.size(); }
  double log_likelihood(const double& xi, Hypothesis theta) const override;
  double sample(Hypothesis theta, Rng& rng) const override;
  double log_bound() const override { return log_bound_; }

  double evaluate(double xi, Hypothesis theta) const { return std::exp(log_likelihood(xi, theta)); }
  double normalizer(Hypothesis theta) const { return normalizers_.at(theta); }
  double mean_parameter(Hypothesis theta) const { return means_.at(theta); }
  double sigma() const { return sigma_; }
  double lower() const { return lo_; }
  double upper() const { return hi_; }

 private:
  std::vector<double> means_;
  double sigma_;
  double lo_;
  double hi_;
  std::vector<double> normalizers_;
  std::vector<double> log_normalizers_;
  double log_bound_ = 0.0;
};

/// Observation matrix: row i holds the joint observation at time i+1, column k
/// belongs to agent k.
using ObservationMatrix = Eigen::MatrixXd;

/// Entry (i, k) drawn from L_k(. | states[i]); agent k's draws come from its
/// own stream so that adding agents leaves existing columns unchanged.
ObservationMatrix sample_observations(const LikelihoodSet& likelihoods, const StateTrajectory& trajectory,
                                      std::span<Rng> agent_streams);

/// Convenience overload deriving one stream per agent from a base key.
ObservationMatrix sample_observations(const LikelihoodSet& likelihoods, const StateTrajectory& trajectory,
                                      const StreamKey& base);

/// K x H matrix of log L_k(xi_k | theta) for one joint observation.
Eigen::MatrixXd evaluate_log_likelihoods(const LikelihoodSet& likelihoods,
                                         const Eigen::Ref<const Eigen::RowVectorXd>& observation_row);

}  // namespace hmmgraph
