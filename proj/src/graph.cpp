#include "hmmgraph/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "hmmgraph/rng.hpp"

namespace hmmgraph {

namespace {

constexpr double kStochasticTolerance = 1e-12;

}  // namespace

Topology::Topology(std::size_t num_agents, std::vector<Edge> edges) : num_agents_(num_agents) {
  if (num_agents == 0) throw std::invalid_argument("topology needs at least one agent");
  for (auto& [a, b] : edges) {
    if (a >= num_agents || b >= num_agents) {
      throw std::invalid_argument(
          fmt::format("edge ({}, {}) references an agent outside [0, {})", a, b, num_agents));
    }
    if (a > b) std::swap(a, b);
  }
  std::erase_if(edges, [](const Edge& e) { return e.first == e.second; });
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  edges_ = std::move(edges);

  adjacency_.assign(num_agents_, {});
  for (const auto& [a, b] : edges_) {
    adjacency_[a].push_back(b);
    adjacency_[b].push_back(a);
  }
  for (auto& list : adjacency_) std::sort(list.begin(), list.end());
}

Topology Topology::fully_connected(std::size_t num_agents) {
  std::vector<Edge> edges;
  for (AgentIndex a = 0; a < num_agents; ++a)
    for (AgentIndex b = a + 1; b < num_agents; ++b) edges.emplace_back(a, b);
  return Topology(num_agents, std::move(edges));
}

Topology Topology::path(std::size_t num_agents) {
  std::vector<Edge> edges;
  for (AgentIndex a = 0; a + 1 < num_agents; ++a) edges.emplace_back(a, a + 1);
  return Topology(num_agents, std::move(edges));
}

Topology Topology::ring(std::size_t num_agents) {
  std::vector<Edge> edges;
  for (AgentIndex a = 0; a < num_agents; ++a) edges.emplace_back(a, (a + 1) % num_agents);
  return Topology(num_agents, std::move(edges));
}

std::optional<Edge> Topology::unreachable_pair() const {
  std::vector<bool> seen(num_agents_, false);
  std::vector<AgentIndex> stack{0};
  seen[0] = true;
  while (!stack.empty()) {
    const AgentIndex k = stack.back();
    stack.pop_back();
    for (AgentIndex l : adjacency_[k]) {
      if (!seen[l]) {
        seen[l] = true;
        stack.push_back(l);
      }
    }
  }
  for (AgentIndex k = 0; k < num_agents_; ++k) {
    if (!seen[k]) return Edge{0, k};
  }
  return std::nullopt;
}

bool Topology::is_connected() const { return !unreachable_pair().has_value(); }

Topology Topology::relabeled(const std::vector<AgentIndex>& perm) const {
  if (perm.size() != num_agents_) throw std::invalid_argument("permutation size mismatch");
  std::vector<Edge> edges;
  edges.reserve(edges_.size());
  for (const auto& [a, b] : edges_) edges.emplace_back(perm.at(a), perm.at(b));
  return Topology(num_agents_, std::move(edges));
}

CombinationMatrix::CombinationMatrix(Eigen::MatrixXd weights) : weights_(std::move(weights)) {
  const auto n = num_agents();
  incoming_.assign(n, {});
  for (AgentIndex k = 0; k < n; ++k) {
    for (AgentIndex l = 0; l < n; ++l) {
      if (weights_(l, k) > 0.0) incoming_[k].push_back({l, weights_(l, k)});
    }
  }
}

CombinationMatrix CombinationMatrix::from_weights(Eigen::MatrixXd weights) {
  if (weights.rows() == 0 || weights.rows() != weights.cols()) {
    throw std::invalid_argument("combination matrix must be square and non-empty");
  }
  if (!weights.allFinite() || (weights.array() < 0.0).any()) {
    throw std::invalid_argument("combination weights must be finite and nonnegative");
  }
  if (weights != weights.transpose()) {
    throw std::invalid_argument("combination matrix must be exactly symmetric");
  }
  const Eigen::VectorXd col_sums = weights.colwise().sum().transpose();
  const Eigen::VectorXd row_sums = weights.rowwise().sum();
  for (Eigen::Index k = 0; k < weights.rows(); ++k) {
    if (std::abs(col_sums(k) - 1.0) > kStochasticTolerance ||
        std::abs(row_sums(k) - 1.0) > kStochasticTolerance) {
      throw std::invalid_argument(
          fmt::format("combination matrix is not doubly stochastic at index {}", k));
    }
  }
  return CombinationMatrix(std::move(weights));
}

CombinationMatrix CombinationMatrix::uniform(std::size_t num_agents) {
  const auto n = static_cast<Eigen::Index>(num_agents);
  return from_weights(Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(num_agents)));
}

CombinationMatrix CombinationMatrix::identity(std::size_t num_agents) {
  const auto n = static_cast<Eigen::Index>(num_agents);
  return from_weights(Eigen::MatrixXd::Identity(n, n));
}

CombinationMatrix metropolis_weights(const Topology& topology) {
  if (auto pair = topology.unreachable_pair()) {
    throw std::invalid_argument(fmt::format(
        "topology is disconnected: agent {} cannot reach agent {}", pair->first, pair->second));
  }
  const auto n = topology.num_agents();
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (const auto& [a, b] : topology.edges()) {
    const double size_a = static_cast<double>(topology.degree(a) + 1);
    const double size_b = static_cast<double>(topology.degree(b) + 1);
    const double weight = 1.0 / std::max(size_a, size_b);
    w(a, b) = weight;
    w(b, a) = weight;
  }
  for (AgentIndex k = 0; k < n; ++k) {
    // Summing in the same order as the symmetric entries keeps row and
    // column sums identical.
    double off = 0.0;
    for (AgentIndex l : topology.neighbors(k)) off += w(l, k);
    w(k, k) = 1.0 - off;
  }
  return CombinationMatrix::from_weights(std::move(w));
}

double second_eigenvalue_magnitude(const CombinationMatrix& combination) {
  const auto n = combination.num_agents();
  if (n == 1) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(combination.weights(), Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw std::runtime_error("symmetric eigen-solver failed");
  std::vector<double> magnitudes(n);
  for (std::size_t i = 0; i < n; ++i) magnitudes[i] = std::abs(solver.eigenvalues()(static_cast<Eigen::Index>(i)));
  std::sort(magnitudes.begin(), magnitudes.end(), std::greater<>());
  if (std::abs(magnitudes[0] - 1.0) > 1e-9) {
    throw std::logic_error(fmt::format("largest eigenvalue magnitude {} differs from 1", magnitudes[0]));
  }
  // Rank-one matrices (complete graph) come back as rounding noise, ~n * eps.
  if (magnitudes[1] < 1e-12) return 0.0;
  return std::min(magnitudes[1], 1.0);
}

bool is_primitive(const CombinationMatrix& combination) {
  const auto n = static_cast<Eigen::Index>(combination.num_agents());
  using BoolMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic>;
  BoolMatrix support = (combination.weights().array() > 0.0).cast<int>();
  // Wielandt: a primitive matrix has A^m > 0 for all m >= (n-1)^2 + 1, and an
  // imprimitive one never does, so squaring until past that bound decides it.
  const long long bound = static_cast<long long>(n - 1) * (n - 1) + 1;
  long long power = 1;
  while (true) {
    if ((support.array() > 0).all()) return true;
    if (power >= bound) return false;
    BoolMatrix next = BoolMatrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index k = 0; k < n; ++k)
        if (support(i, k))
          for (Eigen::Index j = 0; j < n; ++j)
            if (support(k, j)) next(i, j) = 1;
    support = std::move(next);
    power *= 2;
  }
}

Topology random_connected_topology(std::size_t num_agents, double edge_density, std::uint64_t seed) {
  if (num_agents == 0) throw std::invalid_argument("random topology needs at least one agent");
  if (!(edge_density > 0.0 && edge_density <= 1.0)) {
    throw std::invalid_argument("edge density must lie in (0, 1]");
  }
  Rng rng(StreamKey{seed, 0, StreamPurpose::kTopology, num_agents});

  // Random labelled tree: attach each node of a shuffled order to a uniformly
  // chosen earlier node.
  std::vector<AgentIndex> order(num_agents);
  std::iota(order.begin(), order.end(), AgentIndex{0});
  for (std::size_t i = num_agents - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);

  std::vector<Edge> edges;
  for (std::size_t i = 1; i < num_agents; ++i) edges.emplace_back(order[i], order[rng.below(i)]);
  Topology tree(num_agents, edges);

  const double all_pairs = static_cast<double>(num_agents * (num_agents - 1) / 2);
  const double tree_edges = static_cast<double>(num_agents - 1);
  const double remaining = all_pairs - tree_edges;
  const double extra_probability =
      remaining > 0.0 ? std::clamp((edge_density * all_pairs - tree_edges) / remaining, 0.0, 1.0) : 0.0;

  const auto& tree_edges_sorted = tree.edges();
  for (AgentIndex a = 0; a < num_agents; ++a) {
    for (AgentIndex b = a + 1; b < num_agents; ++b) {
      const double u = rng.uniform();
      if (std::binary_search(tree_edges_sorted.begin(), tree_edges_sorted.end(), Edge{a, b})) continue;
      if (u < extra_probability) edges.emplace_back(a, b);
    }
  }
  return Topology(num_agents, std::move(edges));
}

Topology read_edge_list(std::istream& in) {
  std::vector<Edge> edges;
  std::optional<std::size_t> declared;
  std::size_t max_index = 0;
  bool any = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string first;
    if (!(fields >> first)) continue;
    if (first[0] == '#') {
      std::string key;
      std::size_t value = 0;
      if (fields >> key >> value && key == "agents") declared = value;
      continue;
    }
    long long a = 0;
    long long b = 0;
    std::string rest;
    try {
      std::size_t used = 0;
      a = std::stoll(first, &used);
      if (used != first.size()) throw std::invalid_argument(first);
    } catch (const std::exception&) {
      throw std::invalid_argument(fmt::format("edge list line {}: malformed agent index", line_no));
    }
    if (!(fields >> b) || (fields >> rest) || a < 0 || b < 0) {
      throw std::invalid_argument(fmt::format("edge list line {}: expected two nonnegative indices", line_no));
    }
    edges.emplace_back(static_cast<AgentIndex>(a), static_cast<AgentIndex>(b));
    max_index = std::max({max_index, static_cast<std::size_t>(a), static_cast<std::size_t>(b)});
    any = true;
  }
  const std::size_t n = declared.value_or(any ? max_index + 1 : 0);
  return Topology(n, std::move(edges));
}

void write_edge_list(std::ostream& out, const Topology& topology) {
  out << "# agents " << topology.num_agents() << '\n';
  for (const auto& [a, b] : topology.edges()) out << a << ' ' << b << '\n';
}

std::filesystem::path default_fixture_dir() {
  if (const char* env = std::getenv("HMMGRAPH_DATA_DIR"); env != nullptr && *env != '\0') {
    return std::filesystem::path(env) / "topologies" / "v1";
  }
  return std::filesystem::path(HMMGRAPH_DATA_DIR) / "topologies" / "v1";
}

Topology load_topology_fixture(const std::string& name, const std::filesystem::path& dir) {
  const auto file = dir / (name + ".edges");
  std::ifstream in(file);
  if (!in) throw std::invalid_argument(fmt::format("topology fixture '{}' not found at {}", name, file.string()));
  return read_edge_list(in);
}

}  // namespace hmmgraph
