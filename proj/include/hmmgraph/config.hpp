#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hmmgraph/filters.hpp"
#include "hmmgraph/graph.hpp"
#include "hmmgraph/models.hpp"

namespace hmmgraph {

/// Thrown when a configuration is invalid; carries every problem found, not
/// just the first.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

/// Sectioned key/value text:
///
///   # comment
///   [section]
///   ; comment
///   key = value   # trailing comment
///
/// Sections keep file order, keys keep insertion order. Keys are addressed
/// with dotted paths: "strategy.dhmm.gamma" is key "gamma" of section
/// "strategy.dhmm".
class ConfigDocument {
 public:
  struct Entry {
    std::string key;
    std::string value;
  };
  struct Section {
    std::string name;
    std::vector<Entry> entries;
  };

  static ConfigDocument parse(const std::string& text);
  static ConfigDocument load(const std::filesystem::path& path);

  const std::vector<Section>& sections() const { return sections_; }
  const Section* find_section(const std::string& name) const;
  std::optional<std::string> get(const std::string& section, const std::string& key) const;
  void set(const std::string& section, const std::string& key, std::string value);

  /// Applies "section.key=value"; the key is the text after the last dot.
  void apply_override(const std::string& assignment);

  /// Canonical text rendering; parse(to_text()) reproduces the document.
  std::string to_text() const;

 private:
  std::vector<Section> sections_;
};

struct TopologySpec {
  enum class Kind { kFixture, kFull, kPath, kRing, kRandom, kEdgeFile };
  Kind kind = Kind::kFixture;
  std::string name;      // label used in outputs
  std::string fixture;   // kFixture
  std::filesystem::path file;  // kEdgeFile
  std::size_t agents = 0;      // kFull, kPath, kRing, kRandom
  double density = 0.0;        // kRandom
  std::uint64_t seed = 0;      // kRandom

  /// Parses "fixture:NAME", "full:K", "path:K", "ring:K",
  /// "random:K:DENSITY:SEED" or "edges:PATH".
  static TopologySpec parse(const std::string& text);
  std::string to_text() const;
};

struct PriorSpec {
  /// Empty: uniform. One vector: shared by every agent. Otherwise one vector
  /// per agent.
  std::vector<Eigen::VectorXd> vectors;

  bool uniform() const { return vectors.empty(); }
  std::vector<Belief> materialize(std::size_t num_agents, std::size_t num_hypotheses) const;
};

struct StrategyConfig {
  std::string name;
  StrategyKind kind = StrategyKind::kDiffusion;
  std::optional<double> gamma;  // diffusion; unset means gamma = K
  double delta = 0.1;           // ASL
  PriorSpec prior;

  double gamma_for(std::size_t num_agents) const {
    return gamma.value_or(static_cast<double>(num_agents));
  }
};

struct LikelihoodSpec {
  std::vector<double> means;  // empty: theta + 1
  double sigma = 1.0;
  double lower = -1.0;
  double upper = 2.0;

  LikelihoodSet build(std::size_t num_agents, std::size_t num_hypotheses) const;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::size_t horizon = 500;
  std::size_t runs = 1000;
  std::uint64_t base_seed = 1;
  std::size_t workers = 0;  // 0: hardware concurrency

  Eigen::MatrixXd transition;
  Eigen::VectorXd initial_distribution;  // empty: uniform
  LikelihoodSpec likelihood;
  std::vector<TopologySpec> topologies;
  PriorSpec centralized_prior;
  std::vector<StrategyConfig> strategies;

  std::optional<std::pair<std::size_t, std::size_t>> window;  // unset: final fifth
  std::size_t bound_samples = 100000;
  double corollary_epsilon_factor = 2.0;
  std::vector<double> sweep_gammas;

  std::filesystem::path fixture_dir = default_fixture_dir();

  /// Effective document, including defaults, for manifests and replay.
  ConfigDocument document;

  TransitionModel transition_model() const;
  std::size_t num_hypotheses() const { return static_cast<std::size_t>(transition.rows()); }
};

/// Builds and cross-validates a config. Collects all problems and throws
/// ConfigError listing them. Fixture files are opened to check K consistency.
ExperimentConfig experiment_from_document(const ConfigDocument& doc);

/// Loads a config file, applies "section.key=value" overrides, validates.
ExperimentConfig load_experiment(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

Topology build_topology(const TopologySpec& spec, const std::filesystem::path& fixture_dir);

/// Directory holding the shipped experiment configs.
std::filesystem::path default_config_dir();

}  // namespace hmmgraph
