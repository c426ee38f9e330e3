#include "hmmgraph/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

namespace hmmgraph {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::optional<double> parse_double(const std::string& text) {
  const std::string t = trim(text);
  double value = 0.0;
  const auto* end = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(t.data(), end, value);
  if (ec != std::errc() || ptr != end || t.empty()) return std::nullopt;
  return value;
}

std::optional<std::uint64_t> parse_unsigned(const std::string& text) {
  const std::string t = trim(text);
  std::uint64_t value = 0;
  const auto* end = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(t.data(), end, value);
  if (ec != std::errc() || ptr != end || t.empty()) return std::nullopt;
  return value;
}

std::optional<std::vector<double>> parse_list(const std::string& text, char sep = ',') {
  std::vector<double> values;
  for (const auto& item : split(text, sep)) {
    auto v = parse_double(item);
    if (!v) return std::nullopt;
    values.push_back(*v);
  }
  return values;
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::string format_list(const Eigen::VectorXd& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) out += fmt::format("{}{:.17g}", i ? ", " : "", v(i));
  return out;
}

std::string format_prior(const PriorSpec& prior) {
  if (prior.uniform()) return "uniform";
  std::string out;
  for (std::size_t i = 0; i < prior.vectors.size(); ++i) out += (i ? "; " : "") + format_list(prior.vectors[i]);
  return out;
}

/// Collects problems while walking a document.
class Reader {
 public:
  explicit Reader(const ConfigDocument& doc) : doc_(doc) {}

  std::vector<std::string>& problems() { return problems_; }
  void problem(std::string message) { problems_.push_back(std::move(message)); }

  std::optional<std::string> text(const std::string& section, const std::string& key) {
    used_.insert(section + "." + key);
    return doc_.get(section, key);
  }

  std::string text_or(const std::string& section, const std::string& key, const std::string& fallback) {
    return text(section, key).value_or(fallback);
  }

  template <typename T, typename Parse>
  T value_or(const std::string& section, const std::string& key, T fallback, Parse parse, const char* expected) {
    auto raw = text(section, key);
    if (!raw) return fallback;
    auto parsed = parse(*raw);
    if (!parsed) {
      problem(fmt::format("{}.{}: expected {}, got '{}'", section, key, expected, *raw));
      return fallback;
    }
    return static_cast<T>(*parsed);
  }

  double real(const std::string& section, const std::string& key, double fallback) {
    return value_or<double>(section, key, fallback, parse_double, "a real number");
  }

  std::uint64_t integer(const std::string& section, const std::string& key, std::uint64_t fallback) {
    return value_or<std::uint64_t>(section, key, fallback, parse_unsigned, "a nonnegative integer");
  }

  void report_unknown_keys() {
    for (const auto& section : doc_.sections()) {
      if (section.name == "manifest") continue;
      for (const auto& entry : section.entries) {
        if (!used_.count(section.name + "." + entry.key)) {
          problem(fmt::format("unknown key '{}.{}'", section.name, entry.key));
        }
      }
    }
  }

 private:
  const ConfigDocument& doc_;
  std::vector<std::string> problems_;
  std::set<std::string> used_;
};

std::optional<PriorSpec> parse_prior(const std::string& text) {
  PriorSpec prior;
  if (trim(text) == "uniform") return prior;
  for (const auto& part : split(text, ';')) {
    auto values = parse_list(part);
    if (!values) return std::nullopt;
    prior.vectors.push_back(to_vector(*values));
  }
  return prior;
}

void check_prior(const PriorSpec& prior, const std::string& where, std::size_t h, std::optional<std::size_t> k,
                 std::vector<std::string>& problems) {
  if (prior.uniform()) return;
  if (prior.vectors.size() != 1 && k && prior.vectors.size() != *k) {
    problems.push_back(fmt::format("{}: {} prior vectors given for {} agents", where, prior.vectors.size(), *k));
  }
  for (std::size_t i = 0; i < prior.vectors.size(); ++i) {
    const auto& v = prior.vectors[i];
    if (static_cast<std::size_t>(v.size()) != h) {
      problems.push_back(fmt::format("{}: prior {} has {} entries for {} hypotheses", where, i, v.size(), h));
      continue;
    }
    if (!((v.array() > 0.0).all())) {
      problems.push_back(fmt::format(
          "{}: prior {} must be strictly positive at every hypothesis (initial beliefs may not rule out a state)",
          where, i));
    }
    if (std::abs(v.sum() - 1.0) > 1e-9) {
      problems.push_back(fmt::format("{}: prior {} sums to {:.17g}, not 1", where, i, v.sum()));
    }
  }
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error([&] {
        std::string msg = "invalid configuration:";
        for (const auto& p : problems) msg += "\n  - " + p;
        return msg;
      }()),
      problems_(std::move(problems)) {}

ConfigDocument ConfigDocument::parse(const std::string& text) {
  ConfigDocument doc;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  std::string current;
  std::vector<std::string> problems;
  while (std::getline(in, raw)) {
    ++line_no;
    // ';' separates rows and vectors inside values, so it only starts a
    // comment at the beginning of a line.
    std::string line = raw.substr(0, raw.find('#'));
    if (!trim(line).empty() && trim(line).front() == ';') line.clear();
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        problems.push_back(fmt::format("line {}: unterminated section header", line_no));
        continue;
      }
      current = trim(line.substr(1, line.size() - 2));
      if (current.empty()) problems.push_back(fmt::format("line {}: empty section name", line_no));
      if (!doc.find_section(current)) doc.sections_.push_back({current, {}});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      problems.push_back(fmt::format("line {}: expected 'key = value'", line_no));
      continue;
    }
    if (current.empty()) {
      problems.push_back(fmt::format("line {}: key outside of any section", line_no));
      continue;
    }
    doc.set(current, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return doc;
}

ConfigDocument ConfigDocument::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({fmt::format("cannot read config file '{}'", path.string())});
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

const ConfigDocument::Section* ConfigDocument::find_section(const std::string& name) const {
  for (const auto& s : sections_)
    if (s.name == name) return &s;
  return nullptr;
}

std::optional<std::string> ConfigDocument::get(const std::string& section, const std::string& key) const {
  if (const auto* s = find_section(section)) {
    for (const auto& e : s->entries)
      if (e.key == key) return e.value;
  }
  return std::nullopt;
}

void ConfigDocument::set(const std::string& section, const std::string& key, std::string value) {
  auto it = std::find_if(sections_.begin(), sections_.end(), [&](const Section& s) { return s.name == section; });
  if (it == sections_.end()) {
    sections_.push_back({section, {}});
    it = std::prev(sections_.end());
  }
  for (auto& e : it->entries) {
    if (e.key == key) {
      e.value = std::move(value);
      return;
    }
  }
  it->entries.push_back({key, std::move(value)});
}

void ConfigDocument::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  const std::string path = trim(assignment.substr(0, eq));
  const auto dot = path.rfind('.');
  if (eq == std::string::npos || dot == std::string::npos || dot == 0 || dot + 1 == path.size()) {
    throw ConfigError({fmt::format("override '{}' is not of the form section.key=value", assignment)});
  }
  set(path.substr(0, dot), path.substr(dot + 1), trim(assignment.substr(eq + 1)));
}

std::string ConfigDocument::to_text() const {
  std::string out;
  for (const auto& s : sections_) {
    if (!out.empty()) out += '\n';
    out += "[" + s.name + "]\n";
    for (const auto& e : s.entries) out += e.key + " = " + e.value + '\n';
  }
  return out;
}

TopologySpec TopologySpec::parse(const std::string& text) {
  const auto parts = split(text, ':');
  TopologySpec spec;
  const std::string& kind = parts.front();
  auto agents = [&](std::size_t index) {
    if (parts.size() <= index) throw std::invalid_argument(fmt::format("topology '{}': missing agent count", text));
    auto k = parse_unsigned(parts[index]);
    if (!k || *k == 0) throw std::invalid_argument(fmt::format("topology '{}': bad agent count", text));
    return static_cast<std::size_t>(*k);
  };
  if (kind == "fixture" && parts.size() == 2 && !parts[1].empty()) {
    spec.kind = Kind::kFixture;
    spec.fixture = parts[1];
    spec.name = parts[1];
  } else if ((kind == "full" || kind == "path" || kind == "ring") && parts.size() == 2) {
    spec.kind = kind == "full" ? Kind::kFull : kind == "path" ? Kind::kPath : Kind::kRing;
    spec.agents = agents(1);
    spec.name = kind + std::to_string(spec.agents);
  } else if (kind == "random" && parts.size() == 4) {
    spec.kind = Kind::kRandom;
    spec.agents = agents(1);
    auto density = parse_double(parts[2]);
    auto seed = parse_unsigned(parts[3]);
    if (!density || !seed) throw std::invalid_argument(fmt::format("topology '{}': bad density or seed", text));
    spec.density = *density;
    spec.seed = *seed;
    spec.name = fmt::format("random{}_s{}", spec.agents, spec.seed);
  } else if (kind == "edges" && parts.size() >= 2) {
    spec.kind = Kind::kEdgeFile;
    spec.file = trim(text.substr(text.find(':') + 1));
    spec.name = spec.file.stem().string();
  } else {
    throw std::invalid_argument(fmt::format(
        "topology '{}' not understood (use fixture:NAME, full:K, path:K, ring:K, random:K:DENSITY:SEED or "
        "edges:PATH)",
        text));
  }
  return spec;
}

std::string TopologySpec::to_text() const {
  switch (kind) {
    case Kind::kFixture: return "fixture:" + fixture;
    case Kind::kFull: return fmt::format("full:{}", agents);
    case Kind::kPath: return fmt::format("path:{}", agents);
    case Kind::kRing: return fmt::format("ring:{}", agents);
    case Kind::kRandom: return fmt::format("random:{}:{:.17g}:{}", agents, density, seed);
    case Kind::kEdgeFile: return "edges:" + file.string();
  }
  return {};
}

Topology build_topology(const TopologySpec& spec, const std::filesystem::path& fixture_dir) {
  switch (spec.kind) {
    case TopologySpec::Kind::kFixture: return load_topology_fixture(spec.fixture, fixture_dir);
    case TopologySpec::Kind::kFull: return Topology::fully_connected(spec.agents);
    case TopologySpec::Kind::kPath: return Topology::path(spec.agents);
    case TopologySpec::Kind::kRing: return Topology::ring(spec.agents);
    case TopologySpec::Kind::kRandom: return random_connected_topology(spec.agents, spec.density, spec.seed);
    case TopologySpec::Kind::kEdgeFile: {
      std::ifstream in(spec.file);
      if (!in) throw std::invalid_argument(fmt::format("cannot read edge list '{}'", spec.file.string()));
      return read_edge_list(in);
    }
  }
  throw std::logic_error("unhandled topology kind");
}

std::vector<Belief> PriorSpec::materialize(std::size_t num_agents, std::size_t num_hypotheses) const {
  std::vector<Belief> out;
  out.reserve(num_agents);
  for (std::size_t k = 0; k < num_agents; ++k) {
    if (uniform()) {
      out.push_back(Belief::uniform(num_hypotheses));
    } else {
      out.push_back(Belief::from_probabilities(vectors.size() == 1 ? vectors.front() : vectors.at(k)));
    }
  }
  return out;
}

LikelihoodSet LikelihoodSpec::build(std::size_t num_agents, std::size_t num_hypotheses) const {
  std::vector<double> m = means;
  if (m.empty()) {
    for (std::size_t theta = 0; theta < num_hypotheses; ++theta) m.push_back(static_cast<double>(theta) + 1.0);
  }
  auto shared = std::make_shared<const TruncatedGaussianLikelihood>(m, sigma, lower, upper);
  return LikelihoodSet(num_agents, shared);
}

TransitionModel ExperimentConfig::transition_model() const { return TransitionModel(transition, initial_distribution); }

ExperimentConfig experiment_from_document(const ConfigDocument& doc) {
  Reader r(doc);
  ExperimentConfig cfg;

  cfg.name = r.text_or("experiment", "name", cfg.name);
  cfg.horizon = r.integer("experiment", "horizon", cfg.horizon);
  cfg.runs = r.integer("experiment", "runs", cfg.runs);
  cfg.base_seed = r.integer("experiment", "seed", cfg.base_seed);
  cfg.workers = r.integer("experiment", "workers", cfg.workers);
  if (cfg.runs == 0) r.problem("experiment.runs: at least one Monte Carlo run is required");

  // [chain]
  const std::string chain_kind = r.text_or("chain", "kind", "binary_symmetric");
  if (chain_kind == "binary_symmetric") {
    const double delta = r.real("chain", "delta", 0.1);
    if (!(delta >= 0.0 && delta <= 1.0)) {
      r.problem(fmt::format("chain.delta: flip probability {} outside [0, 1]", delta));
      cfg.transition = binary_symmetric_transition(0.1).matrix();
    } else {
      cfg.transition = binary_symmetric_transition(delta).matrix();
    }
  } else if (chain_kind == "matrix") {
    const auto raw = r.text("chain", "matrix");
    std::vector<std::vector<double>> rows;
    bool ok = raw.has_value();
    if (ok) {
      for (const auto& row_text : split(*raw, ';')) {
        auto row = parse_list(row_text, ' ');
        if (!row) {
          // Allow commas inside rows as well.
          row = parse_list(row_text, ',');
        }
        if (!row) {
          ok = false;
          break;
        }
        rows.push_back(*row);
      }
    }
    const std::size_t h = rows.size();
    if (!ok || h < 2 || std::any_of(rows.begin(), rows.end(), [&](const auto& row) { return row.size() != h; })) {
      r.problem("chain.matrix: expected an H x H matrix with H >= 2, rows separated by ';'");
      cfg.transition = binary_symmetric_transition(0.1).matrix();
    } else {
      cfg.transition.resize(static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(h));
      for (std::size_t a = 0; a < h; ++a)
        for (std::size_t b = 0; b < h; ++b)
          cfg.transition(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = rows[a][b];
    }
  } else {
    r.problem(fmt::format("chain.kind: '{}' is not one of binary_symmetric, matrix", chain_kind));
    cfg.transition = binary_symmetric_transition(0.1).matrix();
  }
  const std::size_t h = static_cast<std::size_t>(cfg.transition.rows());
  if (auto initial = r.text("chain", "initial"); initial && trim(*initial) != "uniform") {
    auto values = parse_list(*initial);
    if (!values) {
      r.problem("chain.initial: expected 'uniform' or a comma-separated probability vector");
    } else {
      cfg.initial_distribution = to_vector(*values);
    }
  }
  try {
    (void)cfg.transition_model();
  } catch (const std::invalid_argument& e) {
    r.problem(fmt::format("chain: {}", e.what()));
  }

  // [likelihood]
  const std::string lik_kind = r.text_or("likelihood", "kind", "truncated_gaussian");
  if (lik_kind != "truncated_gaussian") {
    r.problem(fmt::format("likelihood.kind: '{}' is not supported (truncated_gaussian)", lik_kind));
  }
  if (auto means = r.text("likelihood", "means"); means && trim(*means) != "theta+1") {
    auto values = parse_list(*means);
    if (!values) {
      r.problem("likelihood.means: expected 'theta+1' or a comma-separated list");
    } else {
      cfg.likelihood.means = *values;
    }
  }
  cfg.likelihood.sigma = r.real("likelihood", "sigma", cfg.likelihood.sigma);
  cfg.likelihood.lower = r.real("likelihood", "lower", cfg.likelihood.lower);
  cfg.likelihood.upper = r.real("likelihood", "upper", cfg.likelihood.upper);
  if (!cfg.likelihood.means.empty() && cfg.likelihood.means.size() != h) {
    r.problem(fmt::format("likelihood.means: {} means given for {} hypotheses", cfg.likelihood.means.size(), h));
  }
  try {
    (void)cfg.likelihood.build(1, h);
  } catch (const std::invalid_argument& e) {
    r.problem(fmt::format("likelihood: {}", e.what()));
  }

  // [topology]
  const auto fixture_dir_text = r.text("topology", "fixture_dir");
  if (fixture_dir_text) cfg.fixture_dir = *fixture_dir_text;
  std::vector<std::size_t> agent_counts;
  if (auto items = r.text("topology", "items")) {
    for (const auto& item : split(*items, ',')) {
      try {
        TopologySpec spec = TopologySpec::parse(item);
        const Topology topology = build_topology(spec, cfg.fixture_dir);
        if (auto pair = topology.unreachable_pair()) {
          r.problem(fmt::format("topology '{}' is disconnected: agent {} cannot reach agent {}", spec.name,
                                pair->first, pair->second));
        }
        if (std::find(agent_counts.begin(), agent_counts.end(), topology.num_agents()) == agent_counts.end()) {
          agent_counts.push_back(topology.num_agents());
        }
        cfg.topologies.push_back(std::move(spec));
      } catch (const std::exception& e) {
        r.problem(fmt::format("topology.items: {}", e.what()));
      }
    }
  } else {
    r.problem("topology.items: at least one topology is required");
  }

  // [centralized]
  if (auto prior = r.text("centralized", "prior")) {
    if (auto p = parse_prior(*prior)) {
      cfg.centralized_prior = *p;
      if (p->vectors.size() > 1) r.problem("centralized.prior: the centralized filter takes a single prior");
      check_prior(*p, "centralized.prior", h, std::nullopt, r.problems());
    } else {
      r.problem("centralized.prior: expected 'uniform' or a probability vector");
    }
  }

  // [strategy.*]
  for (const auto& section : doc.sections()) {
    if (section.name.rfind("strategy.", 0) != 0) continue;
    StrategyConfig s;
    s.name = section.name.substr(9);
    const std::string where = "strategy." + s.name;
    if (s.name.empty()) r.problem("strategy section needs a name, e.g. [strategy.dhmm]");
    if (s.name == "chmm") r.problem("strategy name 'chmm' is reserved for the centralized filter");
    const std::string type = r.text_or(where, "type", "diffusion");
    if (type == "diffusion") {
      s.kind = StrategyKind::kDiffusion;
      if (auto g = r.text(where, "gamma"); g && trim(*g) != "K") {
        auto value = parse_double(*g);
        if (!value) {
          r.problem(fmt::format("{}.gamma: expected 'K' or a positive real", where));
        } else if (!(*value > 0.0) || !std::isfinite(*value)) {
          r.problem(fmt::format("{}.gamma: step-size must satisfy gamma > 0 (got {})", where, *g));
        } else {
          s.gamma = *value;
        }
      }
    } else if (type == "asl") {
      s.kind = StrategyKind::kAsl;
      s.delta = r.real(where, "delta", s.delta);
      if (!(s.delta > 0.0 && s.delta < 1.0)) {
        r.problem(fmt::format("{}.delta: ASL step-size must satisfy 0 < delta < 1 (got {})", where, s.delta));
      }
    } else {
      r.problem(fmt::format("{}.type: '{}' is not one of diffusion, asl", where, type));
    }
    if (auto prior = r.text(where, "prior")) {
      if (auto p = parse_prior(*prior)) {
        s.prior = *p;
        for (std::size_t k : agent_counts) check_prior(*p, where + ".prior", h, k, r.problems());
        if (agent_counts.empty()) check_prior(*p, where + ".prior", h, std::nullopt, r.problems());
      } else {
        r.problem(fmt::format("{}.prior: expected 'uniform' or probability vectors separated by ';'", where));
      }
    }
    cfg.strategies.push_back(std::move(s));
  }
  if (cfg.strategies.empty()) r.problem("at least one [strategy.NAME] section is required");

  // [metrics]
  if (auto window = r.text("metrics", "window"); window && trim(*window) != "final_fifth") {
    auto values = parse_list(*window);
    if (!values || values->size() != 2 || (*values)[0] < 1 || (*values)[1] < (*values)[0] ||
        (*values)[0] != std::floor((*values)[0]) || (*values)[1] != std::floor((*values)[1])) {
      r.problem("metrics.window: expected 'final_fifth' or 'FIRST, LAST' with 1 <= FIRST <= LAST");
    } else {
      cfg.window = std::pair{static_cast<std::size_t>((*values)[0]), static_cast<std::size_t>((*values)[1])};
      if (cfg.window->second > cfg.horizon) {
        r.problem(fmt::format("metrics.window: last time {} exceeds the horizon {}", cfg.window->second, cfg.horizon));
      }
    }
  }
  cfg.bound_samples = r.integer("metrics", "bound_samples", cfg.bound_samples);
  if (cfg.bound_samples == 0) r.problem("metrics.bound_samples: at least one sample is required");
  cfg.corollary_epsilon_factor = r.real("metrics", "corollary_epsilon_factor", cfg.corollary_epsilon_factor);
  if (!(cfg.corollary_epsilon_factor > 0.0)) r.problem("metrics.corollary_epsilon_factor: must be positive");

  // [sweep]
  if (auto gammas = r.text("sweep", "gammas")) {
    auto values = parse_list(*gammas);
    if (!values) {
      r.problem("sweep.gammas: expected a comma-separated list");
    } else {
      for (double g : *values) {
        if (!(g > 0.0)) r.problem(fmt::format("sweep.gammas: step-size must satisfy gamma > 0 (got {})", g));
      }
      cfg.sweep_gammas = *values;
    }
  }

  r.report_unknown_keys();
  if (!r.problems().empty()) throw ConfigError(std::move(r.problems()));

  // Canonical effective document.
  ConfigDocument& d = cfg.document;
  d.set("experiment", "name", cfg.name);
  d.set("experiment", "horizon", std::to_string(cfg.horizon));
  d.set("experiment", "runs", std::to_string(cfg.runs));
  d.set("experiment", "seed", std::to_string(cfg.base_seed));
  d.set("experiment", "workers", std::to_string(cfg.workers));
  d.set("chain", "kind", "matrix");
  {
    std::string m;
    for (Eigen::Index a = 0; a < cfg.transition.rows(); ++a) {
      if (a) m += "; ";
      m += format_list(cfg.transition.row(a).transpose());
    }
    d.set("chain", "matrix", m);
  }
  d.set("chain", "initial", cfg.initial_distribution.size() ? format_list(cfg.initial_distribution) : "uniform");
  d.set("likelihood", "kind", "truncated_gaussian");
  d.set("likelihood", "means",
        cfg.likelihood.means.empty() ? "theta+1" : format_list(to_vector(cfg.likelihood.means)));
  d.set("likelihood", "sigma", fmt::format("{:.17g}", cfg.likelihood.sigma));
  d.set("likelihood", "lower", fmt::format("{:.17g}", cfg.likelihood.lower));
  d.set("likelihood", "upper", fmt::format("{:.17g}", cfg.likelihood.upper));
  {
    std::string items;
    for (std::size_t i = 0; i < cfg.topologies.size(); ++i) items += (i ? ", " : "") + cfg.topologies[i].to_text();
    d.set("topology", "items", items);
    if (fixture_dir_text) d.set("topology", "fixture_dir", *fixture_dir_text);
  }
  d.set("centralized", "prior", format_prior(cfg.centralized_prior));
  for (const auto& s : cfg.strategies) {
    const std::string where = "strategy." + s.name;
    if (s.kind == StrategyKind::kDiffusion) {
      d.set(where, "type", "diffusion");
      d.set(where, "gamma", s.gamma ? fmt::format("{:.17g}", *s.gamma) : "K");
    } else {
      d.set(where, "type", "asl");
      d.set(where, "delta", fmt::format("{:.17g}", s.delta));
    }
    d.set(where, "prior", format_prior(s.prior));
  }
  d.set("metrics", "window", cfg.window ? fmt::format("{}, {}", cfg.window->first, cfg.window->second) : "final_fifth");
  d.set("metrics", "bound_samples", std::to_string(cfg.bound_samples));
  d.set("metrics", "corollary_epsilon_factor", fmt::format("{:.17g}", cfg.corollary_epsilon_factor));
  if (!cfg.sweep_gammas.empty()) d.set("sweep", "gammas", format_list(to_vector(cfg.sweep_gammas)));
  return cfg;
}

ExperimentConfig load_experiment(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  ConfigDocument doc = ConfigDocument::load(path);
  std::vector<std::string> problems;
  for (const auto& o : overrides) {
    try {
      doc.apply_override(o);
    } catch (const ConfigError& e) {
      problems.insert(problems.end(), e.problems().begin(), e.problems().end());
    }
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return experiment_from_document(doc);
}

std::filesystem::path default_config_dir() {
  if (const char* env = std::getenv("HMMGRAPH_CONFIG_DIR"); env != nullptr && *env != '\0') return env;
  return HMMGRAPH_CONFIG_DIR;
}

}  // namespace hmmgraph
