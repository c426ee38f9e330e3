#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace hmmgraph {

using AgentIndex = std::size_t;
using Edge = std::pair<AgentIndex, AgentIndex>;

/// Undirected agent graph. Self-loops are implicit: every agent belongs to
/// its own neighborhood, so they are never stored in the edge list.
class Topology {
 public:
  /// Edges are normalized to (min, max), deduplicated and sorted. Explicit
  /// self-loops are dropped. Throws std::invalid_argument on out-of-range
  /// indices or num_agents == 0. Connectivity is not enforced here; see
  /// is_connected() and metropolis_weights().
  Topology(std::size_t num_agents, std::vector<Edge> edges);

  static Topology fully_connected(std::size_t num_agents);
  static Topology path(std::size_t num_agents);
  static Topology ring(std::size_t num_agents);

  std::size_t num_agents() const { return num_agents_; }
  const std::vector<Edge>& edges() const { return edges_; }

  /// Neighbors of k, excluding k itself, in increasing order.
  const std::vector<AgentIndex>& neighbors(AgentIndex k) const { return adjacency_.at(k); }
  std::size_t degree(AgentIndex k) const { return adjacency_.at(k).size(); }

  bool is_connected() const;

  /// A pair (0, j) with j not reachable from agent 0, if one exists.
  std::optional<Edge> unreachable_pair() const;

  /// The same graph with agent k renamed to perm[k].
  Topology relabeled(const std::vector<AgentIndex>& perm) const;

  bool operator==(const Topology& other) const {
    return num_agents_ == other.num_agents_ && edges_ == other.edges_;
  }

 private:
  std::size_t num_agents_;
  std::vector<Edge> edges_;
  std::vector<std::vector<AgentIndex>> adjacency_;
};

/// Symmetric, doubly-stochastic K x K weight matrix A = [a_{lk}], where a_{lk}
/// weights what agent l sends to agent k.
class CombinationMatrix {
 public:
  struct Weight {
    AgentIndex from;
    double value;
  };

  /// Validates nonnegativity, exact symmetry and unit row/column sums
  /// (tolerance 1e-12). Primitivity is reported by is_primitive() rather than
  /// enforced, so that non-cooperative (identity) matrices stay representable.
  static CombinationMatrix from_weights(Eigen::MatrixXd weights);

  /// a_{lk} = 1/K for every pair.
  static CombinationMatrix uniform(std::size_t num_agents);
  static CombinationMatrix identity(std::size_t num_agents);

  std::size_t num_agents() const { return static_cast<std::size_t>(weights_.rows()); }
  const Eigen::MatrixXd& weights() const { return weights_; }
  double operator()(AgentIndex from, AgentIndex to) const { return weights_(from, to); }

  /// Nonzero entries of column k, i.e. (l, a_{lk}) for l in N_k.
  const std::vector<Weight>& incoming(AgentIndex k) const { return incoming_.at(k); }

 private:
  explicit CombinationMatrix(Eigen::MatrixXd weights);

  Eigen::MatrixXd weights_;
  std::vector<std::vector<Weight>> incoming_;
};

/// Metropolis rule with neighborhood sizes n_k = deg(k) + 1 (self included):
/// a_{lk} = 1/max(n_l, n_k) for neighbors, diagonal takes the remainder.
/// Throws std::invalid_argument naming an unreachable pair if the topology is
/// disconnected.
CombinationMatrix metropolis_weights(const Topology& topology);

/// |lambda_2|: second largest eigenvalue magnitude of a symmetric A.
double second_eigenvalue_magnitude(const CombinationMatrix& combination);

/// Boolean reachability on the support pattern: some power of A is entrywise
/// positive.
bool is_primitive(const CombinationMatrix& combination);

/// Random spanning tree followed by independent extra edges, with expected
/// total edge count density * K(K-1)/2 (never fewer than the K-1 tree edges).
Topology random_connected_topology(std::size_t num_agents, double edge_density, std::uint64_t seed);

// Edge-list text format: one "l k" pair per line, zero-indexed. Lines starting
// with '#' are comments, except "# agents K" which fixes the agent count
// (otherwise it is max index + 1).
Topology read_edge_list(std::istream& in);
void write_edge_list(std::ostream& out, const Topology& topology);

/// Default fixture root: $HMMGRAPH_DATA_DIR/topologies/v1 if the variable is
/// set, otherwise the compiled-in data directory.
std::filesystem::path default_fixture_dir();

/// Loads <dir>/<name>.edges.
Topology load_topology_fixture(const std::string& name,
                               const std::filesystem::path& dir = default_fixture_dir());

}  // namespace hmmgraph
