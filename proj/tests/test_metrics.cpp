#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "helpers.hpp"
#include "hmmgraph/metrics.hpp"
#include "oracles.hpp"

using namespace hmmgraph;

namespace {

std::vector<double> as_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

RunDivergences fake_run(Rng& rng, std::size_t n, std::size_t k, bool prior) {
  RunDivergences r;
  r.posterior = Eigen::MatrixXd(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  for (auto& x : r.posterior.reshaped()) x = rng.uniform();
  if (prior) {
    r.prior = r.posterior * 0.5;
    r.with_prior = true;
  }
  return r;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("kl divergence basics") {
  const Belief p = Belief::from_probabilities(Eigen::Vector2d(1.0, 0.0));
  const Belief u = Belief::uniform(2);
  CHECK(kl_divergence(u, u) == 0.0);
  CHECK(kl_divergence(p, u) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK_THROWS_AS(kl_divergence(u, p), std::domain_error);
  const std::vector<double> a{0.2, 0.8}, b{0.5, 0.5};
  CHECK(kl_divergence(a, b) == doctest::Approx(0.2 * std::log(0.4) + 0.8 * std::log(1.6)));
}

TEST_CASE("kl divergence against 50-digit summation") {
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t h = 2 + rng.below(8);
    const Belief p = testing::random_belief(h, rng);
    const Belief q = testing::random_belief(h, rng);
    const double ref = static_cast<double>(oracle::kl50(as_std(p.probabilities()), as_std(q.probabilities())));
    const double got = kl_divergence(p, q);
    CHECK(std::abs(got - ref) <= 1e-12);
    CHECK(got > 0.0);
    CHECK(std::abs(kl_divergence(p, p)) <= 1e-12);
  }
}

TEST_CASE("total variation") {
  const std::vector<double> a{0.9, 0.1}, b{0.1, 0.9}, c{1.0, 0.0}, d{0.0, 1.0};
  CHECK(total_variation(a, a) == 0.0);
  CHECK(total_variation(c, d) == 1.0);
  CHECK(total_variation(a, b) == doctest::Approx(0.8).epsilon(1e-15));
}

TEST_CASE("readout window") {
  const auto w = ReadoutWindow::final_fifth(500);
  CHECK(w.first == 401);
  CHECK(w.last == 500);
  const auto s = ReadoutWindow::final_fifth(3);
  CHECK(s.first == 3);
  CHECK(s.last == 3);
}

TEST_CASE("risk estimation") {
  Rng rng(22);
  const std::size_t n = 20, k = 3;
  const ReadoutWindow w{11, 20};

  SUBCASE("single run") {
    const auto r = fake_run(rng, n, k, true);
    const auto trace = estimate_risks(std::span(&r, 1), w);
    CHECK(trace.runs == 1);
    CHECK(trace.j_mean == r.posterior);
    CHECK(trace.jt_mean == r.prior);
    CHECK_FALSE(trace.has_stderr());
    CHECK(std::isnan(trace.j_stderr(0, 0)));
    CHECK(trace.asymptotic_j == doctest::Approx(r.posterior.bottomRows(10).mean()).epsilon(1e-14));
  }
  SUBCASE("mean, standard error and ordering") {
    std::vector<RunDivergences> runs;
    for (int i = 0; i < 30; ++i) runs.push_back(fake_run(rng, n, k, true));
    const auto trace = estimate_risks(runs, w);
    Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(n, k);
    for (const auto& r : runs) mean += r.posterior / 30.0;
    CHECK((trace.j_mean - mean).cwiseAbs().maxCoeff() < 1e-14);
    double var = 0.0;
    for (const auto& r : runs) var += std::pow(r.posterior(4, 1) - mean(4, 1), 2) / 29.0;
    CHECK(trace.j_stderr(4, 1) == doctest::Approx(std::sqrt(var / 30.0)).epsilon(1e-12));
    CHECK((trace.j_mean.array() >= 0.0).all());

    std::vector<RunDivergences> reversed(runs.rbegin(), runs.rend());
    const auto back = estimate_risks(reversed, w);
    CHECK((back.j_mean - trace.j_mean).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(back.asymptotic_j == doctest::Approx(trace.asymptotic_j).epsilon(1e-13));

    // Merging partial accumulators in order equals one pass.
    RiskAccumulator left(n, k, true, w), right(n, k, true, w);
    for (int i = 0; i < 30; ++i) (i < 12 ? left : right).add(runs[static_cast<std::size_t>(i)]);
    left.merge(right);
    CHECK((left.finish().j_mean - trace.j_mean).cwiseAbs().maxCoeff() < 1e-14);
  }
  SUBCASE("shape mismatch") {
    std::vector<RunDivergences> runs{fake_run(rng, n, k, true), fake_run(rng, n, k + 1, true)};
    CHECK_THROWS_AS(estimate_risks(runs, w), std::invalid_argument);
  }
}

TEST_CASE("divergences from histories") {
  const std::size_t k = 4;
  FilterBankModel model{binary_symmetric_transition(0.1), CombinationMatrix::uniform(k), testing::shifted_unit_set(k, 2)};
  std::vector<StrategySpec> specs = {
      {"chmm", StrategyKind::kCentralized, 1.0, 0.1, {Belief::uniform(2)}},
      {"dhmm", StrategyKind::kDiffusion, static_cast<double>(k), 0.1, std::vector<Belief>(k, Belief::uniform(2))},
      {"asl", StrategyKind::kAsl, 1.0, 0.1, std::vector<Belief>(k, Belief::uniform(2))},
  };
  Rng rng(3);
  const auto traj = sample_trajectory(model.transition, 50, rng);
  const auto obs = sample_observations(model.likelihoods, traj, StreamKey{3, 0, StreamPurpose::kObservation, 0});
  const auto h = run_filters(model, specs, obs);
  const auto d = divergences_from_histories(h[0], h[1]);
  CHECK(d.posterior.rows() == 50);
  CHECK(d.has_prior());
  CHECK(d.posterior.cwiseAbs().maxCoeff() < 1e-9);
  CHECK(d.prior.cwiseAbs().maxCoeff() < 1e-9);
  const auto a = divergences_from_histories(h[0], h[2]);
  CHECK_FALSE(a.has_prior());
  CHECK(a.posterior.minCoeff() > 0.0);
  CHECK(a.posterior(7, 2) == doctest::Approx(kl_divergence(h[0].beliefs[8].agents[0], h[2].beliefs[8].agents[2])));
}

TEST_CASE("lambda") {
  CHECK(bound_lambda(10, 10.0, 0.86) == 0.86);
  CHECK(bound_lambda(10, 5.0, 0.86) == 1.0);
  CHECK(bound_lambda(10, 20.0, 0.3) == 0.5);
  CHECK(bound_lambda(10, 10.0, 0.0) == 0.0);
}

TEST_CASE("theorem bound") {
  const auto t = binary_symmetric_transition(0.1);
  const Eigen::VectorXd pi = stationary_distribution(t);
  const std::size_t k = 10;
  const auto likelihoods = testing::shifted_unit_set(k, 2);

  SUBCASE("zero for the exact centralized case") {
    const auto b = theorem1_bound(t, metropolis_weights(Topology::fully_connected(k)), 10.0, likelihoods, pi, 2000, 1);
    CHECK(b.lambda == 0.0);
    CHECK(b.posterior_bound == 0.0);
    CHECK(b.prior_bound == 0.0);
  }
  SUBCASE("memoryless chain has no prior bound") {
    const auto flat = binary_symmetric_transition(0.5);
    const auto b = theorem1_bound(flat, metropolis_weights(Topology::ring(k)), 3.0, likelihoods,
                                  stationary_distribution(flat), 2000, 1);
    CHECK(b.kappa == 0.0);
    CHECK(b.posterior_bound > 0.0);
    CHECK(b.prior_bound == 0.0);
  }
  SUBCASE("arithmetic and ratio") {
    const auto a = metropolis_weights(load_topology_fixture("reference10"));
    const auto b = theorem1_bound(t, a, 10.0, likelihoods, pi, 100000, 7);
    const double rho2 = second_eigenvalue_magnitude(a);
    CHECK(b.lambda == rho2);
    CHECK(b.kappa == 0.8);
    CHECK(b.posterior_bound == doctest::Approx(2.0 * 10 * 10 * rho2 * b.sup_expected_linf / (1.0 - 0.8)).epsilon(1e-14));
    CHECK(b.prior_bound == b.kappa * b.posterior_bound);
    CHECK(b.sup_expected_linf <= likelihoods[0]->log_bound());
    CHECK(b.sup_expected_linf_stderr > 0.0);
    CHECK(b.samples == 100000);
    CHECK(theorem1_bound(t, a, 10.0, likelihoods, pi, 100000, 7).posterior_bound == b.posterior_bound);
  }
  SUBCASE("non-ergodic chain is rejected") {
    const TransitionModel id(Eigen::MatrixXd::Identity(2, 2));
    CHECK_THROWS_WITH_AS(theorem1_bound(id, CombinationMatrix::uniform(k), 10.0, likelihoods, pi, 10, 1),
                         doctest::Contains("ergodic"), std::invalid_argument);
  }
}

TEST_CASE("expected sup-norm against an independent sampler") {
  // Rejection sampling from the untruncated Gaussian; log-density from the
  // closed form.
  const std::size_t k = 10;
  const auto t = binary_symmetric_transition(0.1);
  const auto b = theorem1_bound(t, metropolis_weights(load_topology_fixture("reference10")), 10.0,
                                testing::shifted_unit_set(k, 2), stationary_distribution(t), 100000, 3);
  const long double z[2] = {oracle::truncated_mass(1, 1, -1, 2), oracle::truncated_mass(2, 1, -1, 2)};
  std::mt19937_64 gen(99);
  std::normal_distribution<double> normal;
  std::bernoulli_distribution coin(0.5);
  const int n = 100000;
  double sum = 0.0, sq = 0.0;
  for (int s = 0; s < n; ++s) {
    const int theta = coin(gen) ? 1 : 0;
    double worst = 0.0;
    for (std::size_t l = 0; l < k; ++l) {
      double xi;
      do xi = theta + 1.0 + normal(gen);
      while (xi < -1.0 || xi > 2.0);
      for (int th = 0; th < 2; ++th) {
        const double m = th + 1.0;
        const double logl = -0.5 * (xi - m) * (xi - m) - std::log(std::sqrt(2.0 * std::numbers::pi) * static_cast<double>(z[th]));
        worst = std::max(worst, std::abs(logl));
      }
    }
    sum += worst;
    sq += worst * worst;
  }
  const double mean = sum / n;
  const double se = std::sqrt((sq / n - mean * mean) / (n - 1));
  CHECK(std::abs(b.sup_expected_linf - mean) <= 4.0 * std::hypot(se, b.sup_expected_linf_stderr));
}

TEST_CASE("corollary check") {
  const std::size_t runs = 400, k = 3;
  SUBCASE("identical beliefs") {
    TrueStateLogBeliefs s;
    s.centralized = Eigen::VectorXd::Constant(runs, -0.2);
    s.agent = Eigen::MatrixXd::Constant(runs, k, -0.2);
    const std::vector<double> eps{0.5};
    const auto rep = corollary1_check(s, eps, 0.0);
    for (const auto& a : rep.agents) {
      CHECK(a.variance == 0.0);
      CHECK(a.theoretical_p == 1.0);
      CHECK(a.violation_rate == 0.0);
      CHECK(a.satisfied);
    }
    CHECK(rep.all_satisfied());
  }
  SUBCASE("Chebyshev construction") {
    Rng rng(30);
    TrueStateLogBeliefs s;
    s.centralized = Eigen::VectorXd::Zero(runs);
    s.agent = Eigen::MatrixXd(runs, k);
    for (auto& x : s.agent.reshaped()) x = -std::abs(rng.uniform() - 0.3);
    const auto eps = epsilon_from_spread(s, 2.0);
    REQUIRE(eps.size() == k);
    // The guarantee needs B to dominate the mean log ratio.
    double b = 0.0;
    for (Eigen::Index i = 0; i < s.agent.cols(); ++i) b = std::max(b, (s.centralized - s.agent.col(i)).mean());
    const auto rep = corollary1_check(s, eps, b);
    for (const auto& a : rep.agents) {
      CHECK(a.theoretical_p == doctest::Approx(0.75).epsilon(1e-12));
      CHECK(a.empirical_fraction >= 0.75);
      CHECK(a.satisfied);
      CHECK(a.binomial_stderr == doctest::Approx(std::sqrt(0.75 * 0.25 / runs)).epsilon(1e-12));
    }
    const std::vector<double> huge{1e9};
    for (const auto& a : corollary1_check(s, huge, 0.0).agents) {
      CHECK(a.theoretical_p == doctest::Approx(1.0));
      CHECK(a.empirical_fraction == 1.0);
    }
    const std::vector<double> tiny{1e-6};
    CHECK_FALSE(corollary1_check(s, tiny, 0.0).all_informative());
  }
}

}  // TEST_SUITE
