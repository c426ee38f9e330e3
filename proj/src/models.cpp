#include "hmmgraph/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>
#include <fmt/format.h>

#include "hmmgraph/divergence.hpp"

namespace hmmgraph {

namespace {

constexpr double kSimplexTolerance = 1e-12;

void require_probability_vector(const Eigen::Ref<const Eigen::VectorXd>& v, const std::string& what) {
  if (!v.allFinite() || (v.array() < 0.0).any()) {
    throw std::invalid_argument(fmt::format("{} must be finite and nonnegative", what));
  }
  if (std::abs(v.sum() - 1.0) > kSimplexTolerance) {
    throw std::invalid_argument(fmt::format("{} must sum to 1 (got {:.17g})", what, v.sum()));
  }
}

double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

}  // namespace

TransitionModel::TransitionModel(Eigen::MatrixXd matrix, Eigen::VectorXd initial_distribution)
    : matrix_(std::move(matrix)), initial_(std::move(initial_distribution)) {
  if (matrix_.rows() < 2 || matrix_.rows() != matrix_.cols()) {
    throw std::invalid_argument("transition matrix must be square with at least two hypotheses");
  }
  for (Eigen::Index r = 0; r < matrix_.rows(); ++r) {
    require_probability_vector(matrix_.row(r).transpose(), fmt::format("transition row {}", r));
  }
  if (initial_.size() == 0) {
    initial_ = Eigen::VectorXd::Constant(matrix_.rows(), 1.0 / static_cast<double>(matrix_.rows()));
  }
  if (initial_.size() != matrix_.rows()) {
    throw std::invalid_argument("initial distribution length differs from the number of hypotheses");
  }
  require_probability_vector(initial_, "initial distribution");
}

TransitionModel binary_symmetric_transition(double delta) {
  if (!(delta >= 0.0 && delta <= 1.0)) {
    throw std::invalid_argument(fmt::format("flip probability delta={} outside [0, 1]", delta));
  }
  Eigen::MatrixXd m(2, 2);
  m << 1.0 - delta, delta, delta, 1.0 - delta;
  return TransitionModel(std::move(m));
}

double dobrushin_coefficient(const TransitionModel& transition) {
  const auto h = transition.num_hypotheses();
  const Eigen::MatrixXd& m = transition.matrix();
  // Row-major copy so each row is a contiguous span.
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = m;
  double worst = 0.0;
  for (std::size_t a = 0; a < h; ++a) {
    for (std::size_t b = a + 1; b < h; ++b) {
      std::span<const double> ra(rows.data() + a * h, h);
      std::span<const double> rb(rows.data() + b * h, h);
      worst = std::max(worst, total_variation(ra, rb));
    }
  }
  return std::clamp(worst, 0.0, 1.0);
}

Eigen::VectorXd stationary_distribution(const TransitionModel& transition) {
  const double kappa = dobrushin_coefficient(transition);
  if (kappa >= 1.0) {
    throw std::invalid_argument("stationary law requires a geometrically ergodic chain (Dobrushin coefficient < 1)");
  }
  Eigen::VectorXd pi = transition.initial_distribution();
  for (int iter = 0; iter < 100000; ++iter) {
    Eigen::VectorXd next = transition.matrix().transpose() * pi;
    next /= next.sum();
    const double change = (next - pi).cwiseAbs().sum();
    pi = std::move(next);
    if (change < 1e-15) break;
  }
  return pi;
}

Hypothesis sample_categorical(const Eigen::Ref<const Eigen::VectorXd>& probabilities, Rng& rng) {
  const double u = rng.uniform();
  double cumulative = 0.0;
  const auto n = static_cast<std::size_t>(probabilities.size());
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = probabilities(static_cast<Eigen::Index>(i));
    if (p <= 0.0) continue;
    last_positive = i;
    cumulative += p;
    if (u < cumulative) return i;
  }
  // Rounding left the cumulative sum just below u.
  return last_positive;
}

StateTrajectory sample_trajectory(const TransitionModel& transition, std::size_t length, Rng& rng) {
  StateTrajectory trajectory;
  trajectory.states.reserve(length);
  if (length == 0) return trajectory;
  trajectory.states.push_back(sample_categorical(transition.initial_distribution(), rng));
  for (std::size_t i = 1; i < length; ++i) {
    const auto previous = static_cast<Eigen::Index>(trajectory.states.back());
    trajectory.states.push_back(sample_categorical(transition.matrix().row(previous).transpose(), rng));
  }
  return trajectory;
}

TruncatedGaussianLikelihood::TruncatedGaussianLikelihood(std::vector<double> means, double sigma, double lo,
                                                         double hi)
    : means_(std::move(means)), sigma_(sigma), lo_(lo), hi_(hi) {
  if (means_.size() < 2) throw std::invalid_argument("truncated Gaussian needs at least two hypotheses");
  if (!(sigma_ > 0.0) || !std::isfinite(sigma_)) throw std::invalid_argument("sigma must be positive");
  if (!(lo_ < hi_) || !std::isfinite(lo_) || !std::isfinite(hi_)) {
    throw std::invalid_argument("truncation interval must be finite with lo < hi");
  }
  for (double m : means_) {
    if (!std::isfinite(m)) throw std::invalid_argument("means must be finite");
    const double a = (lo_ - m) / sigma_;
    const double b = (hi_ - m) / sigma_;
    // Evaluate in whichever tail keeps the difference well conditioned.
    const double z = (a > 0.0) ? standard_normal_cdf(-a) - standard_normal_cdf(-b)
                               : standard_normal_cdf(b) - standard_normal_cdf(a);
    if (!(z > 0.0)) throw std::invalid_argument("truncation interval carries no Gaussian mass");
    normalizers_.push_back(z);
    log_normalizers_.push_back(std::log(z));
  }
  // log L is concave in xi, so |log L| peaks at the clipped mode or an endpoint.
  for (Hypothesis theta = 0; theta < means_.size(); ++theta) {
    const double mode = std::clamp(means_[theta], lo_, hi_);
    for (double xi : {lo_, hi_, mode}) log_bound_ = std::max(log_bound_, std::abs(log_likelihood(xi, theta)));
  }
}

TruncatedGaussianLikelihood TruncatedGaussianLikelihood::shifted_unit(std::size_t num_hypotheses) {
  std::vector<double> means(num_hypotheses);
  for (std::size_t theta = 0; theta < num_hypotheses; ++theta) means[theta] = static_cast<double>(theta) + 1.0;
  return TruncatedGaussianLikelihood(std::move(means), 1.0, -1.0, 2.0);
}

double TruncatedGaussianLikelihood::log_likelihood(const double& xi, Hypothesis theta) const {
  if (theta >= means_.size()) throw std::out_of_range("hypothesis index out of range");
  if (!(xi >= lo_ && xi <= hi_)) {
    throw std::domain_error(fmt::format("observation {} outside the support [{}, {}]", xi, lo_, hi_));
  }
  const double z = (xi - means_[theta]) / sigma_;
  return -0.5 * z * z - std::log(sigma_) - 0.5 * std::log(2.0 * std::numbers::pi) - log_normalizers_[theta];
}

double TruncatedGaussianLikelihood::sample(Hypothesis theta, Rng& rng) const {
  if (theta >= means_.size()) throw std::out_of_range("hypothesis index out of range");
  static const boost::math::normal_distribution<double> standard;
  const double m = means_[theta];
  double a = (lo_ - m) / sigma_;
  double b = (hi_ - m) / sigma_;
  const double u = rng.uniform();
  // Invert in the lower tail: reflect when the interval lies right of zero.
  const bool reflect = a > 0.0;
  if (reflect) {
    std::swap(a, b);
    a = -a;
    b = -b;
  }
  const double cdf_a = standard_normal_cdf(a);
  const double p = cdf_a + u * normalizers_[theta];
  double z = boost::math::quantile(standard, std::clamp(p, cdf_a, standard_normal_cdf(b)));
  z = std::clamp(z, a, b);
  if (reflect) z = -z;
  return std::clamp(m + sigma_ * z, lo_, hi_);
}

ObservationMatrix sample_observations(const LikelihoodSet& likelihoods, const StateTrajectory& trajectory,
                                      std::span<Rng> agent_streams) {
  const auto k_count = likelihoods.size();
  if (agent_streams.size() != k_count) throw std::invalid_argument("one random stream per agent is required");
  ObservationMatrix obs(static_cast<Eigen::Index>(trajectory.size()), static_cast<Eigen::Index>(k_count));
  for (std::size_t k = 0; k < k_count; ++k) {
    for (std::size_t i = 0; i < trajectory.size(); ++i) {
      obs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          likelihoods[k]->sample(trajectory[i], agent_streams[k]);
    }
  }
  return obs;
}

ObservationMatrix sample_observations(const LikelihoodSet& likelihoods, const StateTrajectory& trajectory,
                                      const StreamKey& base) {
  std::vector<Rng> streams;
  streams.reserve(likelihoods.size());
  for (std::size_t k = 0; k < likelihoods.size(); ++k) {
    StreamKey key = base;
    key.index = k;
    streams.emplace_back(key);
  }
  return sample_observations(likelihoods, trajectory, streams);
}

Eigen::MatrixXd evaluate_log_likelihoods(const LikelihoodSet& likelihoods,
                                         const Eigen::Ref<const Eigen::RowVectorXd>& observation_row) {
  const auto k_count = static_cast<Eigen::Index>(likelihoods.size());
  if (observation_row.size() != k_count) throw std::invalid_argument("observation row length differs from K");
  if (k_count == 0) return {};
  const auto h = static_cast<Eigen::Index>(likelihoods.front()->num_hypotheses());
  Eigen::MatrixXd out(k_count, h);
  for (Eigen::Index k = 0; k < k_count; ++k) {
    for (Eigen::Index theta = 0; theta < h; ++theta) {
      out(k, theta) = likelihoods[static_cast<std::size_t>(k)]->log_likelihood(observation_row(k),
                                                                                static_cast<Hypothesis>(theta));
    }
  }
  return out;
}

}  // namespace hmmgraph
