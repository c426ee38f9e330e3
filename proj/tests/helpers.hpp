#pragma once

#include <algorithm>
#include <cstddef>
#include <memory>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "hmmgraph/filters.hpp"
#include "hmmgraph/models.hpp"
#include "hmmgraph/rng.hpp"

namespace testing {

inline Eigen::VectorXd random_simplex(std::size_t n, hmmgraph::Rng& rng, double floor = 0.0) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for (auto& x : v) x = floor + rng.uniform();
  return v / v.sum();
}

/// Row-stochastic with every entry positive, hence kappa < 1.
inline Eigen::MatrixXd random_ergodic_transition(std::size_t h, hmmgraph::Rng& rng) {
  Eigen::MatrixXd t(static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(h));
  for (Eigen::Index r = 0; r < t.rows(); ++r) t.row(r) = random_simplex(h, rng, 0.05).transpose();
  return t;
}

inline hmmgraph::Belief random_belief(std::size_t h, hmmgraph::Rng& rng) {
  return hmmgraph::Belief::from_probabilities(random_simplex(h, rng, 0.01));
}

inline Eigen::MatrixXd random_loglik(std::size_t k, std::size_t h, hmmgraph::Rng& rng, double scale = 3.0) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(h));
  for (auto& x : m.reshaped()) x = scale * (rng.uniform() - 0.5);
  return m;
}

inline std::vector<std::size_t> random_permutation(std::size_t n, hmmgraph::Rng& rng) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[rng.below(i)]);
  return p;
}

inline hmmgraph::LikelihoodSet shifted_unit_set(std::size_t k, std::size_t h) {
  auto model = std::make_shared<const hmmgraph::TruncatedGaussianLikelihood>(
      hmmgraph::TruncatedGaussianLikelihood::shifted_unit(h));
  return hmmgraph::LikelihoodSet(k, model);
}

inline double max_abs_diff(const hmmgraph::Belief& a, const hmmgraph::Belief& b) {
  return (a.probabilities() - b.probabilities()).cwiseAbs().maxCoeff();
}

}  // namespace testing
