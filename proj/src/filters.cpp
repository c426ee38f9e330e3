#include "hmmgraph/filters.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

namespace hmmgraph {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw std::invalid_argument(fmt::format("{}: size mismatch ({} vs {})", what, a, b));
}

}  // namespace

double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& values) {
  if (values.size() == 0) return kNegInf;
  const double top = values.maxCoeff();
  if (top == kNegInf) return kNegInf;
  return top + std::log((values.array() - top).exp().sum());
}

Belief Belief::from_log_weights(Eigen::VectorXd log_weights) {
  if (log_weights.size() == 0) throw std::invalid_argument("belief needs at least one hypothesis");
  for (double w : log_weights) {
    if (std::isnan(w) || w == std::numeric_limits<double>::infinity()) {
      throw std::invalid_argument("belief log weights must not be NaN or +inf");
    }
  }
  const double norm = log_sum_exp(log_weights);
  if (norm == kNegInf) throw std::invalid_argument("belief has no mass");
  log_weights.array() -= norm;
  return Belief(std::move(log_weights));
}

Belief Belief::from_probabilities(const Eigen::Ref<const Eigen::VectorXd>& probabilities) {
  if ((probabilities.array() < 0.0).any() || !probabilities.allFinite()) {
    throw std::invalid_argument("belief probabilities must be finite and nonnegative");
  }
  return from_log_weights(probabilities.array().log().matrix());
}

Belief Belief::uniform(std::size_t num_hypotheses) {
  return Belief(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(num_hypotheses),
                                          -std::log(static_cast<double>(num_hypotheses))));
}

Belief Belief::point_mass(std::size_t num_hypotheses, Hypothesis theta) {
  Eigen::VectorXd w = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(num_hypotheses), kNegInf);
  w(static_cast<Eigen::Index>(theta)) = 0.0;
  return Belief(std::move(w));
}

// Goes through probabilities() so both accessors agree to the bit.
double Belief::probability(Hypothesis theta) const { return probabilities()(static_cast<Eigen::Index>(theta)); }

Eigen::VectorXd Belief::probabilities() const {
  Eigen::VectorXd p = log_p_.unaryExpr([](double x) { return std::exp(x); });
  return p / p.sum();
}

bool Belief::strictly_positive() const {
  return log_p_.size() > 0 && (log_p_.array() > kNegInf).all();
}

Hypothesis Belief::map_estimate() const {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < log_p_.size(); ++i) {
    if (log_p_(i) > log_p_(best)) best = i;
  }
  return static_cast<Hypothesis>(best);
}

void DiffusionConfig::validate() const {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw std::invalid_argument(fmt::format("diffusion step-size must satisfy gamma > 0 (got {})", gamma));
  }
  require_same_size(combination.num_agents(), likelihoods.size(), "diffusion config agents");
  for (const auto& l : likelihoods) require_same_size(l->num_hypotheses(), transition.num_hypotheses(), "hypotheses");
}

void AslConfig::validate() const {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument(fmt::format("ASL step-size must satisfy 0 < delta < 1 (got {})", delta));
  }
  require_same_size(combination.num_agents(), likelihoods.size(), "ASL config agents");
}

Belief centralized_evolve(const Belief& prior, const TransitionModel& transition) {
  const auto h = static_cast<Eigen::Index>(transition.num_hypotheses());
  require_same_size(prior.size(), transition.num_hypotheses(), "centralized_evolve");
  const Eigen::VectorXd& log_prior = prior.log_probabilities();
  const Eigen::MatrixXd& t = transition.matrix();
  Eigen::VectorXd out(h);
  Eigen::VectorXd terms(h);
  for (Eigen::Index next = 0; next < h; ++next) {
    for (Eigen::Index prev = 0; prev < h; ++prev) {
      const double w = t(prev, next);
      terms(prev) = w > 0.0 ? log_prior(prev) + std::log(w) : kNegInf;
    }
    out(next) = log_sum_exp(terms);
  }
  return Belief::from_log_weights(std::move(out));
}

Belief centralized_adapt(const Belief& eta, const LogLikelihoodMatrix& log_likelihoods) {
  require_same_size(static_cast<std::size_t>(log_likelihoods.cols()), eta.size(), "centralized_adapt");
  Eigen::VectorXd w = eta.log_probabilities() + log_likelihoods.colwise().sum().transpose();
  return Belief::from_log_weights(std::move(w));
}

Belief centralized_adapt(const Belief& eta, const Eigen::Ref<const Eigen::RowVectorXd>& joint_observation,
                         const LikelihoodSet& likelihoods) {
  return centralized_adapt(eta, evaluate_log_likelihoods(likelihoods, joint_observation));
}

CentralizedStep centralized_step(const Belief& previous, const LogLikelihoodMatrix& log_likelihoods,
                                 const TransitionModel& transition) {
  Belief eta = centralized_evolve(previous, transition);
  Belief posterior = centralized_adapt(eta, log_likelihoods);
  return {std::move(posterior), std::move(eta)};
}

std::vector<Belief> diffusion_evolve(const NetworkBeliefState& state, const TransitionModel& transition) {
  std::vector<Belief> etas;
  etas.reserve(state.agents.size());
  for (const auto& mu : state.agents) etas.push_back(centralized_evolve(mu, transition));
  return etas;
}

std::vector<Belief> diffusion_adapt(std::span<const Belief> etas, const LogLikelihoodMatrix& log_likelihoods,
                                    double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("diffusion step-size must satisfy gamma > 0");
  require_same_size(etas.size(), static_cast<std::size_t>(log_likelihoods.rows()), "diffusion_adapt");
  std::vector<Belief> psis;
  psis.reserve(etas.size());
  for (std::size_t k = 0; k < etas.size(); ++k) {
    const auto row = static_cast<Eigen::Index>(k);
    Eigen::VectorXd w = etas[k].log_probabilities() + gamma * log_likelihoods.row(row).transpose();
    psis.push_back(Belief::from_log_weights(std::move(w)));
  }
  return psis;
}

std::vector<Belief> diffusion_combine(std::span<const Belief> psis, const CombinationMatrix& combination) {
  require_same_size(psis.size(), combination.num_agents(), "diffusion_combine");
  std::vector<Belief> mus;
  mus.reserve(psis.size());
  if (psis.empty()) return mus;
  const auto h = static_cast<Eigen::Index>(psis.front().size());
  for (std::size_t k = 0; k < psis.size(); ++k) {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(h);
    // Only neighbors with positive weight contribute, so a -inf entry outside
    // the neighborhood never meets a zero weight.
    for (const auto& [from, a] : combination.incoming(k)) w += a * psis[from].log_probabilities();
    mus.push_back(Belief::from_log_weights(std::move(w)));
  }
  return mus;
}

DiffusionStep diffusion_step(const NetworkBeliefState& state, const LogLikelihoodMatrix& log_likelihoods,
                             const DiffusionConfig& config) {
  std::vector<Belief> etas = diffusion_evolve(state, config.transition);
  const std::vector<Belief> psis = diffusion_adapt(etas, log_likelihoods, config.gamma);
  NetworkBeliefState next{diffusion_combine(psis, config.combination), state.time + 1};
  return {std::move(next), std::move(etas)};
}

DiffusionStep diffusion_step_from_observations(const NetworkBeliefState& state,
                                               const Eigen::Ref<const Eigen::RowVectorXd>& observation_row,
                                               const DiffusionConfig& config) {
  return diffusion_step(state, evaluate_log_likelihoods(config.likelihoods, observation_row), config);
}

namespace {

NetworkBeliefState asl_update(const NetworkBeliefState& state, const LogLikelihoodMatrix& log_likelihoods,
                              double delta, const CombinationMatrix& combination) {
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("ASL step-size must satisfy 0 < delta < 1");
  require_same_size(state.agents.size(), static_cast<std::size_t>(log_likelihoods.rows()), "asl_step");
  std::vector<Belief> psis;
  psis.reserve(state.agents.size());
  for (std::size_t k = 0; k < state.agents.size(); ++k) {
    const auto row = static_cast<Eigen::Index>(k);
    Eigen::VectorXd w =
        (1.0 - delta) * state.agents[k].log_probabilities() + delta * log_likelihoods.row(row).transpose();
    psis.push_back(Belief::from_log_weights(std::move(w)));
  }
  return {diffusion_combine(psis, combination), state.time + 1};
}

}  // namespace

NetworkBeliefState asl_step(const NetworkBeliefState& state, const LogLikelihoodMatrix& log_likelihoods,
                            const AslConfig& config) {
  return asl_update(state, log_likelihoods, config.delta, config.combination);
}

NetworkBeliefState asl_step_from_observations(const NetworkBeliefState& state,
                                              const Eigen::Ref<const Eigen::RowVectorXd>& observation_row,
                                              const AslConfig& config) {
  return asl_step(state, evaluate_log_likelihoods(config.likelihoods, observation_row), config);
}

FilterBank::FilterBank(FilterBankModel model, std::vector<StrategySpec> strategies)
    : model_(std::move(model)), strategies_(std::move(strategies)) {
  const std::size_t k_count = model_.likelihoods.size();
  const std::size_t h = model_.transition.num_hypotheses();
  require_same_size(model_.combination.num_agents(), k_count, "filter bank agents");
  for (const auto& l : model_.likelihoods) require_same_size(l->num_hypotheses(), h, "likelihood hypotheses");

  for (const auto& s : strategies_) {
    const std::size_t expected = s.kind == StrategyKind::kCentralized ? 1 : k_count;
    if (s.initial.size() != expected) {
      throw std::invalid_argument(
          fmt::format("strategy '{}': expected {} initial beliefs, got {}", s.name, expected, s.initial.size()));
    }
    for (std::size_t k = 0; k < s.initial.size(); ++k) {
      if (s.initial[k].size() != h) {
        throw std::invalid_argument(fmt::format("strategy '{}': initial belief {} has wrong length", s.name, k));
      }
      if (!s.initial[k].strictly_positive()) {
        throw std::invalid_argument(fmt::format(
            "strategy '{}': initial belief of agent {} must be strictly positive at every hypothesis", s.name, k));
      }
    }
    if (s.kind == StrategyKind::kDiffusion && !(s.gamma > 0.0)) {
      throw std::invalid_argument(fmt::format("strategy '{}': gamma > 0 required", s.name));
    }
    if (s.kind == StrategyKind::kAsl && !(s.delta > 0.0 && s.delta < 1.0)) {
      throw std::invalid_argument(fmt::format("strategy '{}': 0 < delta < 1 required", s.name));
    }
    beliefs_.push_back(NetworkBeliefState{s.initial, 0});
    etas_.emplace_back();
  }
}

void FilterBank::step(const Eigen::Ref<const Eigen::RowVectorXd>& observation_row) {
  const LogLikelihoodMatrix log_lik = evaluate_log_likelihoods(model_.likelihoods, observation_row);
  for (std::size_t s = 0; s < strategies_.size(); ++s) {
    const StrategySpec& spec = strategies_[s];
    switch (spec.kind) {
      case StrategyKind::kCentralized: {
        CentralizedStep out = centralized_step(beliefs_[s].agents.front(), log_lik, model_.transition);
        beliefs_[s] = NetworkBeliefState{{std::move(out.posterior)}, time_ + 1};
        etas_[s] = {std::move(out.eta)};
        break;
      }
      case StrategyKind::kDiffusion: {
        std::vector<Belief> etas = diffusion_evolve(beliefs_[s], model_.transition);
        const std::vector<Belief> psis = diffusion_adapt(etas, log_lik, spec.gamma);
        beliefs_[s] = NetworkBeliefState{diffusion_combine(psis, model_.combination), time_ + 1};
        etas_[s] = std::move(etas);
        break;
      }
      case StrategyKind::kAsl: {
        beliefs_[s] = asl_update(beliefs_[s], log_lik, spec.delta, model_.combination);
        break;
      }
    }
  }
  ++time_;
}

std::vector<FilterHistory> run_filters(const FilterBankModel& model, const std::vector<StrategySpec>& strategies,
                                       const ObservationMatrix& observations) {
  FilterBank bank(model, strategies);
  std::vector<FilterHistory> histories;
  for (std::size_t s = 0; s < strategies.size(); ++s) {
    FilterHistory h;
    h.name = strategies[s].name;
    h.kind = strategies[s].kind;
    h.beliefs.push_back(bank.beliefs()[s]);
    histories.push_back(std::move(h));
  }
  for (Eigen::Index i = 0; i < observations.rows(); ++i) {
    bank.step(observations.row(i));
    for (std::size_t s = 0; s < strategies.size(); ++s) {
      histories[s].beliefs.push_back(bank.beliefs()[s]);
      if (strategies[s].kind != StrategyKind::kAsl) histories[s].etas.push_back(bank.etas()[s]);
    }
  }
  return histories;
}

}  // namespace hmmgraph
