#include <doctest.h>

#include <cmath>
#include <sstream>

#include "helpers.hpp"
#include "hmmgraph/graph.hpp"

using namespace hmmgraph;

namespace {

void check_combination_invariants(const Topology& topo, const CombinationMatrix& a) {
  const auto k = static_cast<Eigen::Index>(topo.num_agents());
  const Eigen::MatrixXd& w = a.weights();
  CHECK((w - w.transpose()).cwiseAbs().maxCoeff() == 0.0);
  for (Eigen::Index i = 0; i < k; ++i) {
    CHECK(std::abs(w.row(i).sum() - 1.0) <= 1e-12);
    CHECK(std::abs(w.col(i).sum() - 1.0) <= 1e-12);
  }
  for (Eigen::Index l = 0; l < k; ++l) {
    for (Eigen::Index j = 0; j < k; ++j) {
      const auto& nb = topo.neighbors(static_cast<AgentIndex>(j));
      const bool neighbor = l == j || std::find(nb.begin(), nb.end(), static_cast<AgentIndex>(l)) != nb.end();
      CHECK((w(l, j) > 0.0) == neighbor);
      CHECK(w(l, j) <= 1.0);
    }
  }
  CHECK(is_primitive(a));
}

}  // namespace

TEST_SUITE("graph") {

TEST_CASE("two-agent path gives one half everywhere") {
  const auto a = metropolis_weights(Topology::path(2));
  CHECK(a.weights().isApprox(Eigen::MatrixXd::Constant(2, 2, 0.5), 0.0));
  CHECK(second_eigenvalue_magnitude(a) == 0.0);
}

TEST_CASE("fully connected network is uniform with rho2 = 0") {
  const auto a = metropolis_weights(Topology::fully_connected(10));
  CHECK((a.weights().array() - 0.1).abs().maxCoeff() < 1e-15);
  CHECK(second_eigenvalue_magnitude(a) == 0.0);
  CHECK(second_eigenvalue_magnitude(CombinationMatrix::uniform(7)) == 0.0);
}

TEST_CASE("two-by-two circulant has rho2 one half") {
  Eigen::MatrixXd w(2, 2);
  w << 0.75, 0.25, 0.25, 0.75;
  CHECK(second_eigenvalue_magnitude(CombinationMatrix::from_weights(w)) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("metropolis on a path of three") {
  // Neighborhood sizes 2, 3, 2.
  Eigen::MatrixXd expected(3, 3);
  expected << 2.0 / 3, 1.0 / 3, 0, 1.0 / 3, 1.0 / 3, 1.0 / 3, 0, 1.0 / 3, 2.0 / 3;
  const auto a = metropolis_weights(Topology::path(3));
  CHECK((a.weights() - expected).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("disconnected topology names an unreachable pair") {
  const Topology t(4, {{0, 1}, {2, 3}});
  CHECK_FALSE(t.is_connected());
  REQUIRE(t.unreachable_pair().has_value());
  CHECK_THROWS_WITH_AS(metropolis_weights(t), doctest::Contains("agent 0 cannot reach agent 2"),
                       std::invalid_argument);
}

TEST_CASE("combination matrix validation") {
  Eigen::MatrixXd asym(2, 2);
  asym << 0.6, 0.4, 0.5, 0.5;
  CHECK_THROWS_AS(CombinationMatrix::from_weights(asym), std::invalid_argument);
  Eigen::MatrixXd sub(2, 2);
  sub << 0.5, 0.4, 0.4, 0.5;
  CHECK_THROWS_AS(CombinationMatrix::from_weights(sub), std::invalid_argument);
  Eigen::MatrixXd neg(2, 2);
  neg << 1.5, -0.5, -0.5, 1.5;
  CHECK_THROWS_AS(CombinationMatrix::from_weights(neg), std::invalid_argument);
}

TEST_CASE("primitivity from the support pattern") {
  CHECK(is_primitive(metropolis_weights(Topology::ring(6))));
  CHECK_FALSE(is_primitive(CombinationMatrix::identity(3)));
  Eigen::MatrixXd swap(2, 2);
  swap << 0, 1, 1, 0;
  CHECK_FALSE(is_primitive(CombinationMatrix::from_weights(swap)));
  CHECK(is_primitive(CombinationMatrix::identity(1)));
}

TEST_CASE("metropolis invariants on random connected graphs") {
  Rng rng(11);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t k = 2 + rng.below(25);
    const double density = 0.05 + 0.9 * rng.uniform();
    const Topology t = random_connected_topology(k, density, rng());
    REQUIRE(t.is_connected());
    const auto a = metropolis_weights(t);
    check_combination_invariants(t, a);
    const double rho2 = second_eigenvalue_magnitude(a);
    CHECK(rho2 >= 0.0);
    CHECK(rho2 < 1.0);
    // Pure function of the topology.
    CHECK(metropolis_weights(t).weights() == a.weights());
  }
}

TEST_CASE("rho2 is invariant under relabeling") {
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t k = 3 + rng.below(20);
    const Topology t = random_connected_topology(k, 0.3, rng());
    const Topology r = t.relabeled(testing::random_permutation(k, rng));
    CHECK(second_eigenvalue_magnitude(metropolis_weights(r)) ==
          doctest::Approx(second_eigenvalue_magnitude(metropolis_weights(t))).epsilon(1e-12));
  }
}

TEST_CASE("random connected topology") {
  CHECK(random_connected_topology(2, 0.01, 3) == Topology::path(2));
  CHECK(random_connected_topology(15, 0.3, 42) == random_connected_topology(15, 0.3, 42));
  CHECK(random_connected_topology(1, 0.5, 1).edges().empty());

  // Expected edge count over many seeds.
  const std::size_t k = 30;
  const double density = 0.4;
  double total = 0.0;
  const int seeds = 200;
  for (int s = 0; s < seeds; ++s) total += static_cast<double>(random_connected_topology(k, density, s).edges().size());
  const double expected = density * k * (k - 1) / 2.0;
  CHECK(total / seeds == doctest::Approx(expected).epsilon(0.02));
  CHECK(random_connected_topology(k, 1.0, 9).edges().size() == k * (k - 1) / 2);
}

TEST_CASE("edge list round trip") {
  const Topology t = random_connected_topology(12, 0.25, 8);
  std::stringstream s;
  write_edge_list(s, t);
  CHECK(read_edge_list(s) == t);

  std::istringstream isolated("# agents 4\n# comment\n0 1\n1 2\n");
  const Topology u = read_edge_list(isolated);
  CHECK(u.num_agents() == 4);
  CHECK_FALSE(u.is_connected());

  std::istringstream bad("0 x\n");
  CHECK_THROWS(read_edge_list(bad));
}

TEST_CASE("shipped fixtures match their spectral targets") {
  struct Target {
    const char* name;
    std::size_t agents;
    double rho2;
  };
  for (const Target& t : {Target{"sparse10", 10, 0.97}, Target{"reference10", 10, 0.86}, Target{"k20", 20, 0.83},
                          Target{"k30", 30, 0.81}, Target{"k40", 40, 0.80}, Target{"k70", 70, 0.77}}) {
    CAPTURE(t.name);
    const Topology topo = load_topology_fixture(t.name);
    CHECK(topo.num_agents() == t.agents);
    CHECK(topo.is_connected());
    CHECK(std::abs(second_eigenvalue_magnitude(metropolis_weights(topo)) - t.rho2) <= 0.02);
  }
  CHECK_THROWS(load_topology_fixture("no_such_fixture"));
}

}  // TEST_SUITE
