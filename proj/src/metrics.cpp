#include "hmmgraph/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include <fmt/format.h>

namespace hmmgraph {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double kl_from_logs(const Eigen::Ref<const Eigen::VectorXd>& log_p, const Eigen::Ref<const Eigen::VectorXd>& log_q) {
  if (log_p.size() != log_q.size()) throw std::invalid_argument("kl_divergence: size mismatch");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < log_p.size(); ++i) {
    if (log_p(i) == kNegInf) continue;
    if (log_q(i) == kNegInf) {
      throw std::domain_error(fmt::format("kl_divergence: q vanishes at hypothesis {} where p is positive", i));
    }
    sum += std::exp(log_p(i)) * (log_p(i) - log_q(i));
  }
  // Rounding can leave a tiny negative value for p ~ q.
  return std::max(sum, 0.0);
}

double standard_error(double sum, double sum_sq, std::size_t n) {
  if (n < 2) return kNaN;
  const double nn = static_cast<double>(n);
  const double mean = sum / nn;
  const double var = std::max((sum_sq - nn * mean * mean) / (nn - 1.0), 0.0);
  return std::sqrt(var / nn);
}

}  // namespace

double kl_divergence(const Belief& p, const Belief& q) { return kl_from_logs(p.log_probabilities(), q.log_probabilities()); }

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("kl_divergence: size mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < 0.0 || q[i] < 0.0) throw std::invalid_argument("kl_divergence: negative probability");
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) {
      throw std::domain_error(fmt::format("kl_divergence: q vanishes at hypothesis {} where p is positive", i));
    }
    sum += p[i] * (std::log(p[i]) - std::log(q[i]));
  }
  return std::max(sum, 0.0);
}

double total_variation(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("total_variation: size mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) sum += std::abs(p[i] - q[i]);
  return 0.5 * sum;
}

RunDivergences divergences_from_histories(const FilterHistory& centralized, const FilterHistory& distributed) {
  if (centralized.beliefs.size() != distributed.beliefs.size()) {
    throw std::invalid_argument("histories cover different horizons");
  }
  const std::size_t horizon = centralized.beliefs.size() - 1;
  const std::size_t k_count = distributed.beliefs.front().num_agents();
  const bool with_prior = distributed.kind != StrategyKind::kAsl && centralized.kind == StrategyKind::kCentralized;
  RunDivergences out;
  out.with_prior = with_prior;
  out.posterior.resize(static_cast<Eigen::Index>(horizon), static_cast<Eigen::Index>(k_count));
  if (with_prior) out.prior.resize(static_cast<Eigen::Index>(horizon), static_cast<Eigen::Index>(k_count));
  for (std::size_t i = 0; i < horizon; ++i) {
    const Belief& mu_star = centralized.beliefs[i + 1].agents.front();
    for (std::size_t k = 0; k < k_count; ++k) {
      const auto r = static_cast<Eigen::Index>(i);
      const auto c = static_cast<Eigen::Index>(k);
      out.posterior(r, c) = kl_divergence(mu_star, distributed.beliefs[i + 1].agents[k]);
      if (with_prior) out.prior(r, c) = kl_divergence(centralized.etas[i].front(), distributed.etas[i][k]);
    }
  }
  return out;
}

ReadoutWindow ReadoutWindow::final_fifth(std::size_t horizon) {
  if (horizon == 0) return {1, 0};
  const std::size_t span = std::max<std::size_t>(horizon / 5, 1);
  return {horizon - span + 1, horizon};
}

Eigen::VectorXd RiskTrace::asymptotic_per_agent() const {
  if (window.last < window.first || window.last > horizon()) return Eigen::VectorXd::Zero(j_mean.cols());
  const auto first = static_cast<Eigen::Index>(window.first - 1);
  const auto len = static_cast<Eigen::Index>(window.last - window.first + 1);
  return j_mean.middleRows(first, len).colwise().mean().transpose();
}

RiskAccumulator::RiskAccumulator(std::size_t horizon, std::size_t num_agents, bool with_prior, ReadoutWindow window)
    : with_prior_(with_prior), window_(window) {
  const auto n = static_cast<Eigen::Index>(horizon);
  const auto k = static_cast<Eigen::Index>(num_agents);
  j_sum_ = Eigen::MatrixXd::Zero(n, k);
  j_sq_ = Eigen::MatrixXd::Zero(n, k);
  if (with_prior_) {
    jt_sum_ = Eigen::MatrixXd::Zero(n, k);
    jt_sq_ = Eigen::MatrixXd::Zero(n, k);
  }
}

void RiskAccumulator::add(const RunDivergences& run) {
  if (run.posterior.rows() != j_sum_.rows() || run.posterior.cols() != j_sum_.cols() ||
      run.has_prior() != with_prior_ ||
      (with_prior_ && (run.prior.rows() != jt_sum_.rows() || run.prior.cols() != jt_sum_.cols()))) {
    throw std::invalid_argument("run divergences do not match the accumulator shape");
  }
  ++runs_;
  j_sum_ += run.posterior;
  j_sq_ += run.posterior.cwiseProduct(run.posterior);
  if (with_prior_) {
    jt_sum_ += run.prior;
    jt_sq_ += run.prior.cwiseProduct(run.prior);
  }
  const auto horizon = static_cast<std::size_t>(j_sum_.rows());
  if (window_.first >= 1 && window_.first <= window_.last && window_.last <= horizon) {
    const auto first = static_cast<Eigen::Index>(window_.first - 1);
    const auto len = static_cast<Eigen::Index>(window_.last - window_.first + 1);
    const double aj = run.posterior.middleRows(first, len).mean();
    asym_j_sum_ += aj;
    asym_j_sq_ += aj * aj;
    if (with_prior_) {
      const double ajt = run.prior.middleRows(first, len).mean();
      asym_jt_sum_ += ajt;
      asym_jt_sq_ += ajt * ajt;
    }
  }
}

void RiskAccumulator::merge(const RiskAccumulator& other) {
  if (other.j_sum_.rows() != j_sum_.rows() || other.j_sum_.cols() != j_sum_.cols() ||
      other.with_prior_ != with_prior_) {
    throw std::invalid_argument("cannot merge accumulators of different shapes");
  }
  runs_ += other.runs_;
  j_sum_ += other.j_sum_;
  j_sq_ += other.j_sq_;
  if (with_prior_) {
    jt_sum_ += other.jt_sum_;
    jt_sq_ += other.jt_sq_;
  }
  asym_j_sum_ += other.asym_j_sum_;
  asym_j_sq_ += other.asym_j_sq_;
  asym_jt_sum_ += other.asym_jt_sum_;
  asym_jt_sq_ += other.asym_jt_sq_;
}

RiskTrace RiskAccumulator::finish() const {
  if (runs_ == 0) throw std::logic_error("risk estimate needs at least one run");
  RiskTrace t;
  t.runs = runs_;
  t.window = window_;
  t.with_prior = with_prior_;
  const double n = static_cast<double>(runs_);
  auto stderr_matrix = [&](const Eigen::MatrixXd& sum, const Eigen::MatrixXd& sq) {
    Eigen::MatrixXd out(sum.rows(), sum.cols());
    for (Eigen::Index r = 0; r < sum.rows(); ++r)
      for (Eigen::Index c = 0; c < sum.cols(); ++c) out(r, c) = standard_error(sum(r, c), sq(r, c), runs_);
    return out;
  };
  t.j_mean = j_sum_ / n;
  t.j_stderr = stderr_matrix(j_sum_, j_sq_);
  if (with_prior_) {
    t.jt_mean = jt_sum_ / n;
    t.jt_stderr = stderr_matrix(jt_sum_, jt_sq_);
  }
  t.asymptotic_j = asym_j_sum_ / n;
  t.asymptotic_j_stderr = standard_error(asym_j_sum_, asym_j_sq_, runs_);
  t.asymptotic_jt = with_prior_ ? asym_jt_sum_ / n : kNaN;
  t.asymptotic_jt_stderr = with_prior_ ? standard_error(asym_jt_sum_, asym_jt_sq_, runs_) : kNaN;
  return t;
}

RiskTrace estimate_risks(std::span<const RunDivergences> runs, ReadoutWindow window) {
  if (runs.empty()) throw std::invalid_argument("estimate_risks needs at least one run");
  const auto& first = runs.front();
  RiskAccumulator acc(static_cast<std::size_t>(first.posterior.rows()), static_cast<std::size_t>(first.posterior.cols()),
                      first.has_prior(), window);
  for (const auto& run : runs) acc.add(run);
  return acc.finish();
}

double bound_lambda(std::size_t num_agents, double gamma, double rho2) {
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma > 0 required");
  return std::max(std::abs(1.0 - static_cast<double>(num_agents) / gamma), rho2);
}

TheoremBound theorem1_bound(const TransitionModel& transition, const CombinationMatrix& combination, double gamma,
                            const LikelihoodSet& likelihoods, const Eigen::VectorXd& stationary,
                            std::size_t mc_samples, std::uint64_t seed) {
  const double kappa = dobrushin_coefficient(transition);
  if (kappa >= 1.0) {
    throw std::invalid_argument(fmt::format(
        "risk bounds require a geometrically ergodic transition model (Dobrushin coefficient {} is not < 1)", kappa));
  }
  if (!(gamma > 0.0)) throw std::invalid_argument("gamma > 0 required");
  if (mc_samples == 0) throw std::invalid_argument("at least one Monte Carlo sample is required");
  const std::size_t k_count = combination.num_agents();
  if (likelihoods.size() != k_count) throw std::invalid_argument("one likelihood per agent is required");
  const std::size_t h = transition.num_hypotheses();
  if (static_cast<std::size_t>(stationary.size()) != h) throw std::invalid_argument("stationary law has wrong length");

  TheoremBound b;
  b.kappa = kappa;
  b.gamma = gamma;
  b.num_agents = k_count;
  b.rho2 = second_eigenvalue_magnitude(combination);
  b.lambda = bound_lambda(k_count, gamma, b.rho2);
  b.samples = mc_samples;

  double alpha = 0.0;
  for (const auto& l : likelihoods) alpha = std::max(alpha, l->log_bound());

  Rng state_rng(StreamKey{seed, 0, StreamPurpose::kBoundEstimation, 0});
  std::vector<Rng> agent_rngs;
  for (std::size_t k = 0; k < k_count; ++k) agent_rngs.emplace_back(StreamKey{seed, 1, StreamPurpose::kBoundEstimation, k});

  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t s = 0; s < mc_samples; ++s) {
    const Hypothesis theta = sample_categorical(stationary, state_rng);
    double norm = 0.0;
    for (std::size_t l = 0; l < k_count; ++l) {
      const double xi = likelihoods[l]->sample(theta, agent_rngs[l]);
      for (Hypothesis other = 0; other < h; ++other) {
        norm = std::max(norm, std::abs(likelihoods[l]->log_likelihood(xi, other)));
      }
    }
    if (norm > alpha * (1.0 + 1e-12)) {
      throw std::logic_error(fmt::format("sampled log-likelihood {} exceeds the declared bound {}", norm, alpha));
    }
    sum += norm;
    sum_sq += norm * norm;
  }
  const double n = static_cast<double>(mc_samples);
  b.sup_expected_linf = sum / n;
  b.sup_expected_linf_stderr = mc_samples > 1 ? standard_error(sum, sum_sq, mc_samples) : 0.0;
  b.posterior_bound = 2.0 * static_cast<double>(k_count) * gamma * b.lambda * b.sup_expected_linf / (1.0 - kappa);
  b.prior_bound = kappa * b.posterior_bound;
  return b;
}

void write_bound(std::ostream& out, const TheoremBound& b, const std::string& prefix) {
  const auto line = [&](const char* key, double v) { out << fmt::format("{}{} = {:.17g}\n", prefix, key, v); };
  out << fmt::format("{}num_agents = {}\n", prefix, b.num_agents);
  line("gamma", b.gamma);
  line("rho2", b.rho2);
  line("lambda", b.lambda);
  line("kappa", b.kappa);
  line("expected_linf", b.sup_expected_linf);
  line("expected_linf_stderr", b.sup_expected_linf_stderr);
  out << fmt::format("{}samples = {}\n", prefix, b.samples);
  line("posterior_bound", b.posterior_bound);
  line("prior_bound", b.prior_bound);
  line("prior_to_posterior_ratio", b.posterior_bound > 0.0 ? b.prior_bound / b.posterior_bound : kNaN);
}

bool CorollaryReport::all_satisfied() const {
  return std::all_of(agents.begin(), agents.end(), [](const auto& a) { return a.satisfied; });
}

bool CorollaryReport::all_informative() const {
  return std::all_of(agents.begin(), agents.end(), [](const auto& a) { return a.informative; });
}

namespace {

void check_samples(const TrueStateLogBeliefs& samples) {
  if (samples.agent.rows() == 0 || samples.agent.rows() != samples.centralized.size()) {
    throw std::invalid_argument("corollary check needs matching, non-empty run samples");
  }
}

}  // namespace

std::vector<double> epsilon_from_spread(const TrueStateLogBeliefs& samples, double factor) {
  check_samples(samples);
  const auto runs = samples.agent.rows();
  std::vector<double> eps;
  for (Eigen::Index k = 0; k < samples.agent.cols(); ++k) {
    const Eigen::VectorXd ratio = samples.centralized - samples.agent.col(k);
    const double mean = ratio.mean();
    const double var = runs > 1 ? (ratio.array() - mean).square().sum() / static_cast<double>(runs - 1) : 0.0;
    eps.push_back(factor * std::sqrt(var));
  }
  return eps;
}

CorollaryReport corollary1_check(const TrueStateLogBeliefs& samples, std::span<const double> epsilon, double bound_b) {
  check_samples(samples);
  const auto runs = samples.agent.rows();
  const auto k_count = samples.agent.cols();
  if (epsilon.size() != 1 && epsilon.size() != static_cast<std::size_t>(k_count)) {
    throw std::invalid_argument("epsilon needs one entry or one per agent");
  }
  CorollaryReport report;
  report.bound_b = bound_b;
  report.runs = static_cast<std::size_t>(runs);
  const double n = static_cast<double>(runs);
  for (Eigen::Index k = 0; k < k_count; ++k) {
    const double eps = epsilon.size() == 1 ? epsilon[0] : epsilon[static_cast<std::size_t>(k)];
    if (!(eps > 0.0)) throw std::invalid_argument("epsilon must be positive");
    CorollaryAgentReport a;
    a.epsilon = eps;
    const Eigen::VectorXd ratio = samples.centralized - samples.agent.col(k);
    a.mean_log_ratio = ratio.mean();
    a.variance = runs > 1 ? (ratio.array() - a.mean_log_ratio).square().sum() / (n - 1.0) : 0.0;
    a.theoretical_p = 1.0 - a.variance / (eps * eps);
    a.informative = a.theoretical_p > 0.0;
    // mu_k >= mu* exp(-eps - B)  <=>  log mu* - log mu_k <= eps + B
    Eigen::Index hits = 0;
    for (Eigen::Index r = 0; r < runs; ++r) {
      if (ratio(r) <= eps + bound_b) ++hits;
    }
    a.empirical_fraction = static_cast<double>(hits) / n;
    a.violation_rate = 1.0 - a.empirical_fraction;
    const double p = std::clamp(a.theoretical_p, 0.0, 1.0);
    a.binomial_stderr = std::sqrt(p * (1.0 - p) / n);
    a.satisfied = a.empirical_fraction >= a.theoretical_p - 3.0 * a.binomial_stderr;
    report.agents.push_back(a);
  }
  return report;
}

}  // namespace hmmgraph
