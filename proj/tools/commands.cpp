#include "commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "hmmgraph/config.hpp"
#include "hmmgraph/io.hpp"
#include "hmmgraph/metrics.hpp"
#include "hmmgraph/sim.hpp"

namespace hmmgraph::cli {
namespace fs = std::filesystem;

namespace {

struct WrittenFile {
  std::string name;  // relative to the output directory
  std::string sha256;
};

class OutputDir {
 public:
  explicit OutputDir(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }

  const fs::path& root() const { return root_; }

  void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
    const fs::path path = root_ / name;
    fs::create_directories(path.parent_path());
    std::ostringstream text;
    body(text);
    const std::string bytes = text.str();
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
    file.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!file) throw std::runtime_error(fmt::format("write failed: {}", path.string()));
    files_.push_back({name, sha256_hex(bytes)});
  }

  /// Effective config plus a [manifest] section; replaying it with `run`
  /// regenerates every listed file byte for byte.
  void write_manifest(const ExperimentConfig& cfg, const std::string& command) {
    const std::string config_text = cfg.document.to_text();
    ConfigDocument doc = cfg.document;
    doc.set("manifest", "tool", "hmmgraph");
    doc.set("manifest", "version", HMMGRAPH_VERSION);
    doc.set("manifest", "command", command);
    doc.set("manifest", "config_sha256", sha256_hex(config_text));
    doc.set("manifest", "seed", std::to_string(cfg.base_seed));
    doc.set("manifest", "runs", std::to_string(cfg.runs));
    for (const auto& f : files_) doc.set("manifest", "sha256:" + f.name, f.sha256);
    std::ofstream file(root_ / "manifest.cfg", std::ios::binary | std::ios::trunc);
    file << doc.to_text();
    if (!file) throw std::runtime_error(fmt::format("cannot write {}", (root_ / "manifest.cfg").string()));
  }

 private:
  fs::path root_;
  std::vector<WrittenFile> files_;
};

std::string join_reals(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? ", " : "") + format_real(values[i]);
  return out;
}

ExperimentConfig load(const CommandOptions& options) {
  std::vector<std::string> overrides = options.overrides;
  if (options.runs) overrides.push_back(fmt::format("experiment.runs={}", *options.runs));
  if (options.seed) overrides.push_back(fmt::format("experiment.seed={}", *options.seed));
  if (options.workers) overrides.push_back(fmt::format("experiment.workers={}", *options.workers));
  if (!options.gammas.empty()) overrides.push_back("sweep.gammas=" + join_reals(options.gammas));
  return load_experiment(resolve_config_path(options.config), overrides);
}

fs::path output_dir(const CommandOptions& options, const ExperimentConfig& cfg) {
  if (!options.out.empty()) return options.out;
  if (const char* env = std::getenv("HMMGRAPH_OUT"); env && *env) return fs::path(env) / cfg.name;
  return fs::path("out") / cfg.name;
}

RunOptions run_options(const CommandOptions& options, std::ostream& err) {
  RunOptions r;
  if (!options.quiet) {
    r.progress = [&err](std::size_t done, std::size_t total) {
      err << fmt::format("\r  runs {}/{}", done, total);
      if (done == total) err << '\n';
      err.flush();
    };
  }
  return r;
}

/// Topology names made unique for per-topology subdirectories.
std::vector<std::string> unique_names(const ExperimentResult& result) {
  std::vector<std::string> names;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < result.topologies.size(); ++i) {
    std::string name = result.topologies[i].name;
    if (!seen.insert(name).second) {
      name = fmt::format("{}_{}", name, i);
      seen.insert(name);
    }
    names.push_back(name);
  }
  return names;
}

void print_summary(std::ostream& out, const ExperimentResult& result) {
  out << fmt::format("{:<16} {:>6} {:>8} {:<12} {:>22} {:>22} {:>14} {:>14}\n", "topology", "agents", "rho2",
                     "strategy", "J_inf", "Jtilde_inf", "J_bound", "Jtilde_bound");
  for (const auto& t : result.topologies) {
    for (const auto& s : t.strategies) {
      const RiskTrace& r = s.risk;
      const std::string j = r.has_stderr() ? fmt::format("{:.6g} +- {:.2g}", r.asymptotic_j, r.asymptotic_j_stderr)
                                           : fmt::format("{:.6g}", r.asymptotic_j);
      std::string jt = "-";
      if (r.has_prior()) {
        jt = r.has_stderr() ? fmt::format("{:.6g} +- {:.2g}", r.asymptotic_jt, r.asymptotic_jt_stderr)
                            : fmt::format("{:.6g}", r.asymptotic_jt);
      }
      const std::string jb = s.bound ? fmt::format("{:.6g}", s.bound->posterior_bound) : "-";
      const std::string jtb = s.bound ? fmt::format("{:.6g}", s.bound->prior_bound) : "-";
      out << fmt::format("{:<16} {:>6} {:>8.4f} {:<12} {:>22} {:>22} {:>14} {:>14}\n", t.name, t.num_agents, t.rho2,
                         s.name, j, jt, jb, jtb);
    }
  }
  for (const auto& note : result.notes) out << "note: " << note << '\n';
}

int cmd_run(const CommandOptions& options, std::ostream& out, std::ostream& err, bool order_by_rho2) {
  const ExperimentConfig cfg = load(options);
  ExperimentResult result = run_experiment(cfg, run_options(options, err));
  if (order_by_rho2) {
    std::stable_sort(result.topologies.begin(), result.topologies.end(),
                     [](const TopologyOutcome& a, const TopologyOutcome& b) { return a.rho2 < b.rho2; });
  }
  OutputDir dir(output_dir(options, cfg));
  const bool nested = result.topologies.size() > 1;
  const auto names = unique_names(result);
  for (std::size_t i = 0; i < result.topologies.size(); ++i) {
    const TopologyOutcome& t = result.topologies[i];
    const std::string prefix = nested ? names[i] + "/" : "";
    dir.write(prefix + "beliefs.csv", [&](std::ostream& o) { write_beliefs_csv(o, t.sample.histories); });
    dir.write(prefix + "risks.csv", [&](std::ostream& o) { write_risks_csv(o, t.strategies); });
    dir.write(prefix + "trajectory.csv", [&](std::ostream& o) { write_trajectory_csv(o, t.sample.trajectory); });
  }
  dir.write("summary.csv", [&](std::ostream& o) { write_summary_csv(o, result); });
  dir.write("bound.txt", [&](std::ostream& o) { write_bounds_text(o, result); });
  dir.write_manifest(cfg, options.command);
  if (!options.quiet) {
    print_summary(out, result);
    out << "wrote " << dir.root().string() << '\n';
  }
  return kOk;
}

int cmd_sweep_gamma(const CommandOptions& options, std::ostream& out, std::ostream& err) {
  const ExperimentConfig cfg = load(options);
  if (cfg.sweep_gammas.empty()) {
    err << "error: no gamma values; set [sweep] gammas or pass --gamma\n";
    return kUsage;
  }
  const GammaSweepResult sweep = gamma_sweep(cfg, cfg.sweep_gammas, run_options(options, err));
  OutputDir dir(output_dir(options, cfg));

  std::vector<FilterHistory> histories{sweep.centralized_history};
  std::vector<StrategyOutcome> outcomes;
  for (const auto& e : sweep.entries) {
    histories.push_back(e.sample_history);
    outcomes.push_back(e.outcome);
  }
  dir.write("beliefs.csv", [&](std::ostream& o) { write_beliefs_csv(o, histories); });
  dir.write("risks.csv", [&](std::ostream& o) { write_risks_csv(o, outcomes); });
  dir.write("trajectory.csv", [&](std::ostream& o) { write_trajectory_csv(o, sweep.sample_trajectory); });
  dir.write("gamma_sweep.csv", [&](std::ostream& o) {
    o << "topology,agents,rho2,gamma,lambda,J_asymptotic,J_asymptotic_stderr,Jtilde_asymptotic,"
         "Jtilde_asymptotic_stderr,posterior_bound,prior_bound\n";
    for (const auto& e : sweep.entries) {
      const RiskTrace& r = e.outcome.risk;
      o << sweep.topology << ',' << sweep.num_agents << ',' << format_real(sweep.rho2) << ',' << format_real(e.gamma)
        << ',' << format_real(e.lambda) << ',' << format_real(r.asymptotic_j) << ','
        << (r.has_stderr() ? format_real(r.asymptotic_j_stderr) : "") << ',' << format_real(r.asymptotic_jt) << ','
        << (r.has_stderr() ? format_real(r.asymptotic_jt_stderr) : "") << ','
        << (e.outcome.bound ? format_real(e.outcome.bound->posterior_bound) : "") << ','
        << (e.outcome.bound ? format_real(e.outcome.bound->prior_bound) : "") << '\n';
    }
  });
  dir.write_manifest(cfg, options.command);
  if (!options.quiet) {
    out << fmt::format("{} (K={}, rho2={:.4f})\n", sweep.topology, sweep.num_agents, sweep.rho2);
    out << fmt::format("{:>8} {:>8} {:>22} {:>22}\n", "gamma", "lambda", "J_inf", "Jtilde_inf");
    for (const auto& e : sweep.entries) {
      const RiskTrace& r = e.outcome.risk;
      out << fmt::format("{:>8.4g} {:>8.4f} {:>22} {:>22}\n", e.gamma, e.lambda,
                         fmt::format("{:.6g} +- {:.2g}", r.asymptotic_j, r.asymptotic_j_stderr),
                         fmt::format("{:.6g} +- {:.2g}", r.asymptotic_jt, r.asymptotic_jt_stderr));
    }
    out << "wrote " << dir.root().string() << '\n';
  }
  return kOk;
}

int cmd_bound(const CommandOptions& options, std::ostream& out, std::ostream& err) {
  const ExperimentConfig cfg = load(options);
  const TransitionModel transition = cfg.transition_model();
  const double kappa = dobrushin_coefficient(transition);
  if (kappa >= 1.0) {
    err << fmt::format(
        "error: Dobrushin coefficient kappa(T) = {} but the bounds require a geometrically ergodic chain "
        "(kappa(T) < 1)\n",
        kappa);
    return kUsage;
  }
  const Eigen::VectorXd stationary = stationary_distribution(transition);

  std::ostringstream report;
  report << "experiment = " << cfg.name << '\n';
  report << "kappa = " << format_real(kappa) << '\n';
  for (const auto& spec : cfg.topologies) {
    const Topology topology = build_topology(spec, cfg.fixture_dir);
    const CombinationMatrix combination = metropolis_weights(topology);
    const LikelihoodSet likelihoods = cfg.likelihood.build(topology.num_agents(), cfg.num_hypotheses());
    std::vector<StrategyConfig> diffusion;
    for (const auto& s : cfg.strategies) {
      if (s.kind == StrategyKind::kDiffusion) diffusion.push_back(s);
    }
    if (diffusion.empty()) {
      diffusion.emplace_back();
      diffusion.back().name = "dhmm";
    }
    for (const auto& s : diffusion) {
      const TheoremBound b = theorem1_bound(transition, combination, s.gamma_for(topology.num_agents()), likelihoods,
                                            stationary, cfg.bound_samples, cfg.base_seed);
      write_bound(report, b, spec.name + "." + s.name + ".");
    }
  }
  out << report.str();
  if (!options.out.empty()) {
    OutputDir dir(options.out);
    dir.write("bound.txt", [&](std::ostream& o) { o << report.str(); });
    dir.write_manifest(cfg, options.command);
  }
  return kOk;
}

int cmd_validate(const CommandOptions& options, std::ostream& out) {
  const ExperimentConfig cfg = load(options);
  if (!options.quiet) {
    out << fmt::format("{}: ok ({} topologies, {} strategies, N={}, runs={})\n",
                       resolve_config_path(options.config).string(), cfg.topologies.size(), cfg.strategies.size(),
                       cfg.horizon, cfg.runs);
  }
  return kOk;
}

}  // namespace

fs::path resolve_config_path(const fs::path& path) {
  if (fs::exists(path)) return path;
  if (!path.has_parent_path()) {
    const fs::path shipped = default_config_dir() / path;
    if (fs::exists(shipped)) return shipped;
  }
  throw ConfigError({fmt::format("config file not found: {}", path.string())});
}

int execute(const CommandOptions& options, std::ostream& out, std::ostream& err) {
  try {
    if (options.command == "run") return cmd_run(options, out, err, false);
    if (options.command == "sweep-topology") return cmd_run(options, out, err, true);
    if (options.command == "sweep-gamma") return cmd_sweep_gamma(options, out, err);
    if (options.command == "bound") return cmd_bound(options, out, err);
    if (options.command == "validate-config") return cmd_validate(options, out);
    err << "error: unknown command '" << options.command << "'\n";
    return kUsage;
  } catch (const ConfigError& e) {
    err << "config error:\n";
    for (const auto& p : e.problems()) err << "  - " << p << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kRuntime;
  }
}

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"distributed HMM filtering simulator"};
  app.set_version_flag("--version", std::string(HMMGRAPH_VERSION));
  app.require_subcommand(1);

  CommandOptions options;
  std::string config_flag;
  std::string config_positional;
  std::size_t workers = 0;
  std::size_t runs = 0;
  std::uint64_t seed = 0;

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"run", "run every topology and strategy of a config and export CSVs"},
      {"sweep-gamma", "diffusion risk across step-sizes on the first topology"},
      {"sweep-topology", "risk across topologies, reported in order of rho2"},
      {"bound", "evaluate the asymptotic risk bounds without running filters"},
      {"validate-config", "check a config without simulating"},
  };
  std::vector<CLI::App*> subs;
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("path", config_positional, "experiment config (same as --config)");
    sub->add_option("--config", config_flag, "experiment config");
    sub->add_option("--out", options.out, "output directory (default $HMMGRAPH_OUT/<name> or out/<name>)");
    sub->add_option("--set", options.overrides, "override, e.g. strategy.dhmm.gamma=5 (repeatable)")
        ->allow_extra_args(false);
    sub->add_option("--workers", workers, "worker threads (0: all cores)");
    sub->add_option("--runs", runs, "Monte Carlo runs")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "base seed");
    sub->add_flag("-q,--quiet", options.quiet, "suppress progress and summaries");
    if (name == "sweep-gamma") sub->add_option("--gamma", options.gammas, "step-size to sweep (repeatable)");
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    for (CLI::App* sub : subs) {
      if (sub->parsed()) {
        out << sub->help();
        return kOk;
      }
    }
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << HMMGRAPH_VERSION << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  }

  for (CLI::App* sub : subs) {
    if (!sub->parsed()) continue;
    options.command = sub->get_name();
    if (sub->count("--workers")) options.workers = workers;
    if (sub->count("--runs")) options.runs = runs;
    if (sub->count("--seed")) options.seed = seed;
  }
  if (!config_flag.empty() && !config_positional.empty() && config_flag != config_positional) {
    err << "usage error: config given twice\n";
    return kUsage;
  }
  options.config = config_flag.empty() ? config_positional : config_flag;
  if (options.config.empty()) {
    err << "usage error: a config path is required\n";
    return kUsage;
  }
  return execute(options, out, err);
}

}  // namespace hmmgraph::cli
